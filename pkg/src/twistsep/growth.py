"""Growth measurements: congruence-depth growth rows, the Heisenberg
automorphism classifier, the five-dimensional scenario, lower bound
witness families, and exponent fitting.

Depth values entering any row are verified separations: the scan both
finds the separating quotient and exhausts everything smaller, so row
maxima are exact within the congruence family.
"""

import csv
import math
import random
from dataclasses import dataclass

from .errors import BudgetExceededError, ValidationError
from . import lattice as lin
from .malcev import (automorphism_norm, ball_with_distances, compose_with_inner,
                     identity_automorphism, verify_hom, word_length,
                     word_length_upper)
from .groups import dim5, dim5_automorphism, heisenberg, heisenberg_automorphism
from .quotients import (congruence_depth, one_dim_central_quotient)
from .twisted import TwistedWitness, is_twisted_conjugate, twisted_chain

DEFAULT_SEED = 20240214


@dataclass
class ExperimentConfig:
    group: object
    automorphisms: list                    # (name, GroupHom) pairs
    radii: list
    ball_cap: int = 200_000
    order_budget: int = 2000
    mode: str = "exhaustive"               # or "sampled"
    sample_pairs: int = 200
    seed: int = DEFAULT_SEED
    tconj: bool = False                    # filter family by ||phi|| <= n

    def __post_init__(self):
        if any(n < 0 for n in self.radii) or sorted(self.radii) != list(self.radii):
            raise ValidationError("radii must be nonnegative and increasing")
        if self.ball_cap <= 0 or self.order_budget <= 0:
            raise ValidationError("budgets must be positive")


@dataclass
class GrowthRow:
    n: int
    phi_id: str
    depth: int
    witness_x: tuple = None
    witness_y: tuple = None
    moduli: tuple = None
    exhaustive: bool = True
    budget_exhausted: bool = False


def fit_exponent(rows):
    """Least squares slope of log(value) against log(n) plus r^2.
    rows: (n, value) pairs with n >= 1, value >= 1. Needs >= 3 rows."""
    pts = [(math.log(n), math.log(v)) for n, v in rows if n >= 1 and v >= 1]
    if len(pts) < 3:
        raise ValidationError("need at least 3 rows to fit an exponent")
    mx = sum(x for x, _ in pts) / len(pts)
    my = sum(y for _, y in pts) / len(pts)
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    if sxx == 0:
        raise ValidationError("degenerate fit: all radii equal")
    slope = sxy / sxx
    syy = sum((y - my) ** 2 for _, y in pts)
    ss_res = sum((y - (my + slope * (x - mx))) ** 2 for x, y in pts)
    r2 = 1.0 if syy == 0 else 1.0 - ss_res / syy
    return slope, r2


def measure_conj_growth(config):
    """Growth rows: for each radius n and automorphism, the maximal
    congruence depth over non-twisted-conjugate pairs in the n-ball
    (exhaustive, or sampled with the flag recorded)."""
    p = config.group
    gens = p.standard_gens()
    rng = random.Random(config.seed)
    rows = []
    for name, phi in config.automorphisms:
        if config.tconj:
            nphi = automorphism_norm(p, gens, phi)
        for n in config.radii:
            if config.tconj and nphi > n:
                continue
            dist = ball_with_distances(p, gens, n, config.ball_cap)
            elements = sorted(dist)
            if config.mode == "sampled" and len(elements) ** 2 > config.sample_pairs:
                pairs = [(elements[rng.randrange(len(elements))],
                          elements[rng.randrange(len(elements))])
                         for _ in range(config.sample_pairs)]
                exhaustive = False
            else:
                pairs = [(x, y) for x in elements for y in elements if x != y]
                exhaustive = True
            best = None
            exhausted = False
            for x, y in pairs:
                if isinstance(is_twisted_conjugate(p, phi, x, y), TwistedWitness):
                    continue
                res = congruence_depth(p, phi, x, y, config.order_budget,
                                       check_nonconjugate=False)
                if not res.separated:
                    exhausted = True
                    continue
                if best is None or res.order > best[0]:
                    best = (res.order, x, y, res.moduli)
            if best is None:
                rows.append(GrowthRow(n, name, 0, exhaustive=exhaustive,
                                      budget_exhausted=exhausted))
            else:
                rows.append(GrowthRow(n, name, best[0], best[1], best[2], best[3],
                                      exhaustive, exhausted))
    return rows


def growth_rows_to_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "phi", "depth", "x", "y", "moduli", "exhaustive",
                    "budget_exhausted"])
        for r in rows:
            w.writerow([r.n, r.phi_id, r.depth,
                        "" if r.witness_x is None else ";".join(map(str, r.witness_x)),
                        "" if r.witness_y is None else ";".join(map(str, r.witness_y)),
                        "" if r.moduli is None else ";".join(map(str, r.moduli)),
                        int(r.exhaustive), int(r.budget_exhausted)])


def plot_script_for(csv_path, out_path):
    """Emit a small offline plotting script next to the CSV."""
    script = f"""import csv
import matplotlib.pyplot as plt

ns, depths = [], []
with open({csv_path!r}) as fh:
    for row in csv.DictReader(fh):
        if int(row["depth"]) > 0:
            ns.append(int(row["n"]))
            depths.append(int(row["depth"]))
plt.loglog(ns, depths, "o-")
plt.xlabel("n")
plt.ylabel("congruence depth")
plt.savefig("growth.png", dpi=150)
"""
    with open(out_path, "w") as fh:
        fh.write(script)


# -- Heisenberg specifics -----------------------------------------------------


def heisenberg_family(entry_bound, include_shears=True, shear_bound=1):
    """All automorphisms (A, e, f) with |entries| <= entry_bound and
    det A = +-1 (the shear range kept small to bound the family size)."""
    p = heisenberg()
    out = []
    rng = range(-entry_bound, entry_bound + 1)
    shears = range(-shear_bound, shear_bound + 1) if include_shears else (0,)
    for a in rng:
        for b in rng:
            for c in rng:
                for d in rng:
                    if a * d - b * c in (1, -1):
                        for e in shears:
                            for f in shears:
                                name = f"A[{a},{b};{c},{d}]e{e}f{f}"
                                out.append((name, heisenberg_automorphism(
                                    p, [[a, b], [c, d]], e, f)))
    return p, out


def heisenberg_case(pres, phi, samples=50, seed=DEFAULT_SEED):
    """Classify a Heisenberg automorphism by the rank of its second
    twisted centralizer (the eigenvalue-1 eigenspace of the induced
    abelianized matrix) and report the invariants.

    Case 1: rank 1 (no eigenvalue 1), case 2: rank 2, case 3: A = I.
    When the determinant is -1 the uniform witness z^2 in N_{phi_X} is
    checked over sampled X.
    """
    problems = verify_hom(phi, check_automorphism=True)
    if problems:
        raise ValidationError("; ".join(problems))
    A = phi.layer_matrix(1)
    AmI = [[A[i][j] - (1 if i == j else 0) for j in range(2)] for i in range(2)]
    eig1_dim = 2 - lin.rank(AmI)
    case = {0: 1, 1: 2, 2: 3}[eig1_dim]
    D = lin.det(A)
    report = {"case": case, "det": D, "eig1_dim": eig1_dim}
    if case == 2 and D == -1:
        rng = random.Random(seed)
        ok = True
        for _ in range(samples):
            X = tuple(rng.randint(-8, 8) for _ in range(3))
            phi_x = compose_with_inner(pres, phi, X)
            image = twisted_chain(pres, phi_x).level(2).image
            if not image.contains([2]):
                ok = False
                break
        report["uniform_witness_z2"] = ok
    return report


def heisenberg_central_pair_rows(radii, order_budget=200):
    """Case-3 growth rows along the central witness family (x^p, x^p z^-1)
    for primes p: the mechanism behind the cubic growth. A pair enters the
    row at n once both elements fit in the n-ball; its depth is the exact
    congruence depth, scan-verified."""
    p = heisenberg()
    gens = p.standard_gens()
    phi = identity_automorphism(p)
    pairs = []
    for q in (2, 3, 5):
        xq = p.pow(p.gen(0), q)
        y = p.mult(xq, p.inv(p.gen(2)))
        lx = word_length(p, gens, xq)
        ly = word_length(p, gens, y)
        res = congruence_depth(p, phi, xq, y, order_budget)
        if not res.separated:
            raise BudgetExceededError("central pair depth scan exhausted")
        pairs.append((max(lx, ly), res.order, xq, y))
    rows = []
    for n in radii:
        best = 0
        for enter, order, _, _ in pairs:
            if enter <= n:
                best = max(best, order)
        if best:
            rows.append((n, best))
    return rows


def lower_bound_witnesses(primes, translates=3, order_budget=None):
    """The central translate family x^p z^i for each prime: pairwise
    non-conjugate, with the congruence depth of (x^p, x^p z) exactly p^3
    (separation at order p^3, exhaustive non-separation below)."""
    p = heisenberg()
    phi = identity_automorphism(p)
    out = []
    for q in primes:
        xq = p.pow(p.gen(0), q)
        fam = [p.mult(xq, p.pow(p.gen(2), i)) for i in range(translates + 1)]
        for i in range(len(fam)):
            for j in range(i + 1, len(fam)):
                if j - i < q and isinstance(
                        is_twisted_conjugate(p, phi, fam[i], fam[j]), TwistedWitness):
                    raise ValidationError("translate family failed pairwise non-conjugacy")
        budget = order_budget or (q ** 3 + 50)
        res = congruence_depth(p, phi, fam[0], fam[1], budget)
        if not res.separated:
            raise BudgetExceededError(f"no separation within budget for p={q}")
        out.append({"prime": q, "depth": res.order, "moduli": res.moduli,
                    "family": fam})
    return out


# -- five-dimensional scenario ------------------------------------------------


def _random_word_element(pres, gens, length, rng):
    g = pres.identity
    for _ in range(length):
        s = gens[rng.randrange(len(gens))]
        if rng.random() < 0.5:
            s = pres.inv(s)
        g = pres.mult(g, s)
    return g


def dim5_scenario(samples=50, max_norm=40, seed=DEFAULT_SEED, growth_radii=(1, 2, 3)):
    """Reproduce the five-dimensional example: the second twisted
    centralizer, the exact psi values on the central generators, the
    square-root trend of the psi-image norm, the one-dimensional central
    quotients of Hirsch length 3, and a small growth scan."""
    p = dim5()
    phi = dim5_automorphism(p)
    problems = verify_hom(phi, check_automorphism=True)
    if problems:
        raise ValidationError("; ".join(problems))
    rng = random.Random(seed)
    gens = p.standard_gens()
    expected = {0: p.gen(0), 1: p.gen(1), 3: p.gen(3), 4: p.gen(4)}

    n2_ok = True
    for _ in range(samples):
        x = tuple(rng.randint(-6, 6) for _ in range(5))
        chain = twisted_chain(p, compose_with_inner(p, phi, x))
        if chain.subgroup(2).entries != expected:
            n2_ok = False
            break

    x0 = tuple(rng.randint(-4, 4) for _ in range(5))
    phi_x0 = compose_with_inner(p, phi, x0)
    disp_b1 = p.mult(p.gen(3), p.inv(phi_x0.apply(p.gen(3))))
    disp_b2 = p.mult(p.gen(4), p.inv(phi_x0.apply(p.gen(4))))
    psi_b1 = p.layer_coords(disp_b1, 2)
    psi_b2 = p.layer_coords(disp_b2, 2)

    norm_rows = []
    for n in range(2, max_norm + 1, 2):
        # the growth function takes a max over the ball, so extreme
        # straight-line words are sampled alongside random ones
        xs = [p.pow(p.gen(2), n), p.pow(p.gen(0), n),
              p.mult(p.pow(p.gen(2), n - 1), p.gen(1))]
        xs += [_random_word_element(p, gens, n, rng) for _ in range(3)]
        worst = 0
        for x in xs:
            chain = twisted_chain(p, compose_with_inner(p, phi, x))
            image = chain.level(2).image
            bound = 0
            for row in image.rows:
                el = p.from_layer_coords(row, 2)
                bound = max(bound, word_length_upper(p, el))
            worst = max(worst, bound)
        norm_rows.append((n, max(worst, 1)))
    sqrt_exponent, sqrt_r2 = fit_exponent(norm_rows)

    q1, _, _ = one_dim_central_quotient(p, p.gen(3))
    q2, _, _ = one_dim_central_quotient(p, p.gen(4))

    growth = None
    growth_fit = None
    if growth_radii:
        config = ExperimentConfig(p, [("phi", phi)], list(growth_radii),
                                  mode="sampled", sample_pairs=60, seed=seed,
                                  order_budget=3000)
        growth = measure_conj_growth(config)
        usable = [(r.n, r.depth) for r in growth if r.depth > 0]
        if len(usable) >= 3:
            growth_fit = fit_exponent(usable)

    return {
        "n2_matches": n2_ok,
        "psi_b1": psi_b1,
        "psi_b2": psi_b2,
        "norm_rows": norm_rows,
        "sqrt_fit_exponent": sqrt_exponent,
        "sqrt_fit_r2": sqrt_r2,
        "central_quotient_hirsch": (q1.h, q2.h),
        "growth_rows": growth,
        "growth_fit": growth_fit,
        "growth_reference_exponent": 3,
    }
