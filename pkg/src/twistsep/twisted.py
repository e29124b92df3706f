"""Twisted centralizer chains, twisted determinants, the twisted conjugacy
decision procedure, and the constructive p-power solvers.

For an automorphism phi of a class-c group N, the i-th twisted centralizer
is N_i = {x : x phi(x)^-1 in gamma_i(N)}, and psi_i : N_i -> layer_i sends
x to the layer-i coordinates of its displacement x phi(x)^-1. Each psi_i
is a homomorphism with kernel N_{i+1}, so the chain is computed by
iterated integer kernel calculations; the displacement image at the top
layer is the central subgroup controlling twisted conjugacy of centrally
deformed elements.
"""

from dataclasses import dataclass
import math

from .errors import PreconditionError, TwistsepError, ValidationError
from . import lattice as lin
from .malcev import GroupHom, compose_with_inner, inner_automorphism, word_length_upper
from .subgroups import InducedSequence, power_subgroup


@dataclass
class ChainLevel:
    level: int
    seq: InducedSequence          # the twisted centralizer at this level
    psi_rows: list                # psi values of the sequence generators
    image: lin.Lattice            # image lattice of psi in the layer
    determinant: int              # isolator index of the image


class TwistedChain:
    """The descending chain N_1 >= N_2 >= ... >= N_{c+1} for one or several
    automorphisms (several maps give joint displacement chains, used for
    centralizers and centers; determinants are per-map only for a single
    automorphism)."""

    def __init__(self, pres, maps):
        if isinstance(maps, GroupHom):
            maps = [maps]
        self.pres = pres
        self.maps = maps
        self.levels = []
        self._build()

    def _displacement(self, g):
        p = self.pres
        return [p.mult(g, p.inv(m.apply(g))) for m in self.maps]

    def _build(self):
        p = self.pres
        c = p.nilpotency_class
        seq = InducedSequence(p, {i: p.gen(i) for i in range(p.h)})
        for level in range(1, c + 1):
            gens = seq.generators()
            r = p.layer_rank(level)
            rows = []
            for g in gens:
                row = []
                for d in self._displacement(g):
                    w = p.weight_of(d)
                    if w is not None and w < level:
                        raise TwistsepError(
                            "chain generator displacement is too shallow")
                    row.extend(p.layer_coords(d, level))
                rows.append(row)
            image = lin.Lattice.from_rows(r, [row[:r] for row in rows]) if len(self.maps) == 1 \
                else lin.Lattice.from_rows(r * len(self.maps), rows)
            D = lin.isolator_index(image)
            self.levels.append(ChainLevel(level, seq, rows, image, D))
            # kernel of the stacked psi map gives the next level
            t = len(gens)
            M = lin.transpose(rows) if rows else []
            kern = lin.kernel_basis(M) if t else lin.Lattice(0, [])
            new_gens = []
            for v in kern.rows:
                g = p.identity
                for gen, e in zip(gens, v):
                    if e:
                        g = p.mult(g, p.pow(gen, e))
                new_gens.append(g)
            for a in range(t):
                for b in range(a + 1, t):
                    cgen = p.comm(gens[a], gens[b])
                    if any(cgen):
                        new_gens.append(cgen)
            seq = InducedSequence.from_generators(p, new_gens, conjugators=gens)
        self.fixed = seq  # N_{c+1}: common fixed subgroup

    def level(self, i):
        if not 1 <= i <= self.pres.nilpotency_class:
            raise ValidationError("chain level out of range")
        return self.levels[i - 1]

    def subgroup(self, i):
        """N_i as an induced sequence; i may be c+1 for the fixed subgroup."""
        if i == self.pres.nilpotency_class + 1:
            return self.fixed
        return self.level(i).seq

    def determinants(self):
        if len(self.maps) != 1:
            raise ValidationError("determinants need a single automorphism")
        ds = [lv.determinant for lv in self.levels]
        return ds, math.prod(ds)

    def norm_report(self):
        """Constructive word-length upper bounds for each level's
        generating sequence (the labelled upper bound for ||N_i||)."""
        out = []
        for lv in self.levels:
            gens = lv.seq.generators()
            bound = max((word_length_upper(self.pres, g) for g in gens), default=0)
            out.append({"level": lv.level, "num_gens": len(gens), "norm_upper": bound})
        return out


def twisted_chain(pres, phi):
    """The chain for a single automorphism, cached on the presentation by
    the tuple of generator images (chains are pure functions of those)."""
    cache = pres.__dict__.setdefault("_chain_cache", {})
    key = tuple(phi.images)
    hit = cache.get(key)
    if hit is None:
        hit = TwistedChain(pres, phi)
        if len(cache) < 512:
            cache[key] = hit
    return hit


def centralizer_chain(pres, x):
    return twisted_chain(pres, inner_automorphism(pres, x))


def center(pres):
    """Z(N) as an induced sequence, via the joint chain of all inner
    automorphisms of basis generators."""
    maps = [inner_automorphism(pres, pres.gen(i)) for i in range(pres.h)]
    return TwistedChain(pres, maps).fixed


def fixed_subgroup(pres, phi):
    return twisted_chain(pres, phi).fixed


def psi(pres, phi, i, x):
    """psi_{phi,i}(x): layer-i coordinates of x phi(x)^-1. Raises when x is
    not in the i-th twisted centralizer."""
    chain = twisted_chain(pres, phi)
    if not chain.subgroup(i).contains(x):
        raise PreconditionError("element is not in the i-th twisted centralizer",
                                reason="membership")
    d = pres.mult(x, pres.inv(phi.apply(x)))
    return pres.layer_coords(d, i)


def twisted_subgroup(pres, phi):
    """N_phi: the image of psi at the top layer, as a lattice in the
    layer-c coordinates."""
    chain = twisted_chain(pres, phi)
    return chain.level(pres.nilpotency_class).image


def twisted_determinant(pres, phi):
    return twisted_chain(pres, phi).determinants()


@dataclass
class TwistedWitness:
    z: tuple
    x: tuple
    y: tuple

    def verify(self, pres, phi):
        return pres.mult(pres.mult(self.z, self.x), pres.inv(phi.apply(self.z))) == self.y


@dataclass
class NotTwistedConjugate:
    level: int
    obstruction: tuple   # layer coordinates that escaped the psi image
    image_rows: list


def is_twisted_conjugate(pres, phi, x, y):
    """Decide x ~_phi y. Returns a TwistedWitness (verified exactly) or a
    NotTwistedConjugate certificate.

    Works down the lower central series: at each stage the difference
    y x^-1 lies ever deeper, and solvability at its layer is an exact
    integer lattice condition on the psi image of the composed
    automorphism Inn(x) o phi. Choices at one stage never affect deeper
    solvability because conjugacy is re-based at every stage.
    """
    p = pres
    x = p.check_element(x)
    y = p.check_element(y)
    x_cur = x
    witness = p.identity
    for _ in range(p.nilpotency_class + 1):
        d = p.mult(y, p.inv(x_cur))
        if d == p.identity:
            w = TwistedWitness(witness, x, y)
            if not w.verify(p, phi):
                raise TwistsepError("internal witness verification failed")
            return w
        wt = p.weight_of(d)
        phi_x = compose_with_inner(p, phi, x_cur)
        chain = twisted_chain(p, phi_x)
        lv = chain.level(wt)
        target = list(p.layer_coords(d, wt))
        M = lin.transpose(lv.psi_rows) if lv.psi_rows else []
        v = lin.solve(M, target) if lv.psi_rows else (None if any(target) else [])
        if v is None:
            return NotTwistedConjugate(wt, tuple(target), lv.image.rows)
        z = p.identity
        for gen, e in zip(lv.seq.generators(), v):
            if e:
                z = p.mult(z, p.pow(gen, e))
        x_cur = p.mult(p.mult(z, x_cur), p.inv(phi.apply(z)))
        witness = p.mult(z, witness)
    raise TwistsepError("twisted conjugacy recursion did not terminate")


def bounded_witness(pres, phi, y):
    """A witness x with x phi(x)^-1 = y, plus a constructive norm report.
    Raises when y is not a twisted displacement at all."""
    res = is_twisted_conjugate(pres, phi, pres.identity, y)
    if isinstance(res, NotTwistedConjugate):
        raise PreconditionError("y is not of the form x phi(x)^-1",
                                reason="membership")
    x = res.z
    report = {
        "witness": x,
        "norm_upper": word_length_upper(pres, x),
        "y_norm_upper": word_length_upper(pres, y),
    }
    return x, report


# -- Blackburn machinery ------------------------------------------------------


def _is_prime(n):
    if n < 2:
        return False
    for d in range(2, int(math.isqrt(n)) + 1):
        if n % d == 0:
            return False
    return True


def blackburn_constants(p, c):
    """k(p,c) = sum over i <= c of the largest e with p^e <= i, and
    k*(p,c) = (c-1) k(p,c). Also certifies p^k(p,c) <= c!."""
    if not _is_prime(p):
        raise ValidationError(f"{p} is not prime")
    k = 0
    for i in range(1, c + 1):
        e = 0
        while p ** (e + 1) <= i:
            e += 1
        k += e
    k_star = (c - 1) * k
    if p ** k > math.factorial(c):
        raise TwistsepError("certified bound p^k <= c! failed")
    return k, k_star


def _vp(n, p):
    if n == 0:
        return None
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _vector_valuation(g, p):
    """min p-adic valuation over nonzero coordinates; None for identity."""
    vals = [_vp(e, p) for e in g if e]
    return min(vals) if vals else None


def blackburn_root(pres, p, k, x):
    """The p^k-th root of x, for x in the level-p^(k+k(p,c)) congruence
    kernel. Membership is the precondition; existence of the root then
    follows and the returned equation is verified exactly."""
    from .malcev import root as nth_root
    kc, _ = blackburn_constants(p, pres.nilpotency_class)
    level = p ** (k + kc)
    member = power_subgroup(pres, level).contains(x)
    if not member:
        raise PreconditionError(
            f"x is not in the congruence kernel of level p^(k + k(p,c)) = {level}",
            reason="membership")
    y = nth_root(pres, x, p ** k)
    if y is None:
        raise TwistsepError("guaranteed root does not exist; arithmetic bug")
    if pres.pow(y, p ** k) != x:
        raise TwistsepError("root verification failed")
    return y


def _realize_class(pres, gens, coeffs):
    g = pres.identity
    for gen, e in zip(gens, coeffs):
        if e:
            g = pres.mult(g, pres.pow(gen, e))
    return g


def _deepen_into_congruence(pres, u, next_seq, level, budget=200_000):
    """Find eta in next_seq with u*eta in the level-congruence kernel, by a
    breadth-first search over the finite quotient. Returns u*eta or None."""
    K = power_subgroup(pres, level)
    if K.contains(u):
        return u
    target = K.coset_rep(pres.inv(u))
    gens = next_seq.generators()
    if not gens:
        return None
    seen = {K.coset_rep(pres.identity): pres.identity}
    frontier = [pres.identity]
    steps = gens + [pres.inv(g) for g in gens]
    while frontier:
        nxt = []
        for e in frontier:
            for s in steps:
                t = pres.mult(e, s)
                c = K.coset_rep(t)
                if c not in seen:
                    seen[c] = t
                    nxt.append(t)
                    if len(seen) > budget:
                        return None
        if target in seen:
            return pres.mult(u, seen[target])
        frontier = nxt
    return pres.mult(u, seen[target]) if target in seen else None


def solve_power_twisted(pres, phi, p, k, x):
    """Find y in the level-p^k congruence kernel with the same displacement
    as x, assuming the displacement of x lies in the congruence kernel of
    level p^(k + k*(p,c) + v_p(D_phi)).

    Follows the inductive proof shape but lifts by coordinates: at each
    layer the displacement's p-depth is measured, one determinant's worth
    of p-valuation is spent to pull the class back with p-power control,
    and the class is realised inside the twisted centralizer with a
    repair step that pushes the realisation into the congruence kernel
    without changing its psi value.
    """
    pres.check_element(x)
    c = pres.nilpotency_class
    kc, k_star = blackburn_constants(p, c)
    chain = twisted_chain(pres, phi)
    _, D = chain.determinants()
    vD = _vp(D, p)
    budget = k + k_star + vD
    disp = pres.mult(x, pres.inv(phi.apply(x)))
    val = _vector_valuation(disp, p)
    if val is not None and val < budget:
        raise PreconditionError(
            f"displacement valuation {val} is below k + k*(p,c) + v_p(D) = {budget}",
            reason=f"divisibility at level p^{budget}")
    target_seq = power_subgroup(pres, p ** k)
    x_cur = x
    parts = []
    for _ in range(c + 1):
        w = pres.mult(x_cur, pres.inv(phi.apply(x_cur)))
        if w == pres.identity:
            break
        wt = pres.weight_of(w)
        lv = chain.level(wt)
        b = list(pres.layer_coords(w, wt))
        depth = _vector_valuation(w, p)
        vd = _vp(lv.determinant, p)
        j = max(depth - vd, 0)
        scaled = [e // p ** j for e in b]
        M = lin.transpose(lv.psi_rows) if lv.psi_rows else []
        vv = lin.solve(M, scaled) if lv.psi_rows else (None if any(scaled) else [])
        if vv is None:
            raise TwistsepError("psi class pullback failed; displacement escaped the image")
        coeffs = [p ** j * e for e in vv]
        u = _realize_class(pres, lv.seq.generators(), coeffs)
        if not target_seq.contains(u):
            next_seq = chain.subgroup(wt + 1)
            fixed = _deepen_into_congruence(pres, u, next_seq, p ** k)
            if fixed is None:
                raise TwistsepError(
                    "could not realise the pullback class inside the congruence kernel")
            u = fixed
        parts.append(u)
        x_cur = pres.mult(pres.inv(u), x_cur)
    else:
        raise TwistsepError("power twisted solver did not terminate")
    y = pres.identity
    for u in parts:
        y = pres.mult(y, u)
    if pres.mult(y, pres.inv(phi.apply(y))) != disp:
        raise TwistsepError("solver output failed the displacement equation")
    if not target_seq.contains(y):
        raise TwistsepError("solver output escaped the level-p^k congruence kernel")
    return y
