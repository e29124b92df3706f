"""Finite congruence quotients, induced automorphisms, twisted classes by
orbit enumeration, depth scanning, the central pullback reduction, and
central-subgroup separation.

Two power-subgroup notions coexist deliberately. The congruence kernel of
level m (subgroups.power_subgroup) is generated by basis m-th powers; it
is normal of index m^h and drives the depth scans, but it is not
characteristic in general. The full power subgroup N^m (generated by all
m-th powers) is characteristic and is what the pullback reduction needs;
it is recovered exactly as the preimage of the m-th power subgroup of the
finite quotient by the congruence kernel.
"""

from dataclasses import dataclass
import itertools
import math

from .errors import BudgetExceededError, PreconditionError, ValidationError
from . import lattice as lin
from .malcev import MalcevPresentation, GroupHom, compose_with_inner, verify_presentation
from .subgroups import InducedSequence, diagonal_kernel, power_subgroup
from .twisted import (TwistedWitness, blackburn_constants, center,
                      is_twisted_conjugate, twisted_chain, _vp)

DEFAULT_ORDER_BUDGET = 5000


class FiniteQuotient:
    """N/K for a full-rank kernel K, with canonical coset representatives
    computed on the fly by sifting (no multiplication tables)."""

    def __init__(self, pres, kernel, order_budget=None):
        self.pres = pres
        self.kernel = kernel
        order = kernel.index()
        if order is None:
            raise ValidationError("quotient kernel does not have finite index")
        if order_budget is not None and order > order_budget:
            raise BudgetExceededError(
                f"quotient order {order} exceeds the budget {order_budget}")
        self.order = order

    def canon(self, g):
        return self.kernel.coset_rep(g)

    def mult(self, a, b):
        return self.canon(self.pres.mult(a, b))

    def inv(self, a):
        return self.canon(self.pres.inv(a))

    def elements(self):
        ranges = [range(self.kernel.entries[i][i]) for i in range(self.pres.h)]
        for vec in itertools.product(*ranges):
            yield tuple(vec)

    def subgroup_image(self, gens):
        """The subgroup of the quotient generated by images of gens, as a
        set of canonical forms."""
        p = self.pres
        images = [self.canon(g) for g in gens]
        seen = {self.canon(p.identity)}
        frontier = [self.canon(p.identity)]
        steps = images + [self.inv(g) for g in images]
        while frontier:
            nxt = []
            for e in frontier:
                for s in steps:
                    t = self.mult(e, s)
                    if t not in seen:
                        seen.add(t)
                        nxt.append(t)
            frontier = nxt
        return seen


def congruence_quotient(pres, m, order_budget=None):
    """N modulo the level-m congruence kernel; order m^h, with the
    CRT-style per-prime factorization checked."""
    q = FiniteQuotient(pres, power_subgroup(pres, m), order_budget)
    check = 1
    mm = m
    d = 2
    while mm > 1:
        if mm % d == 0:
            pk = 1
            while mm % d == 0:
                mm //= d
                pk *= d
            check *= pk ** pres.h
        d += 1
    if m > 1 and check != q.order:
        raise ValidationError("per-prime order factorization failed")
    return q


def induced_automorphism(q, phi):
    """The automorphism induced on the quotient, as a callable on
    canonical forms. Requires the kernel to be phi-invariant; the induced
    map is verified to be a bijection."""
    for g in q.kernel.generators():
        if not q.kernel.contains(phi.apply(g)):
            raise ValidationError("kernel is not invariant under the automorphism")

    def bar(el):
        return q.canon(phi.apply(el))

    if q.order <= 20000:
        seen = set()
        for el in q.elements():
            seen.add(bar(el))
        if len(seen) != q.order:
            raise ValidationError("induced map is not a bijection")
    return bar


def twisted_class(q, phi_bar, xbar):
    """The twisted conjugacy class of xbar in the finite quotient, by
    orbit enumeration under z . xi = z xi phi(z)^-1 over quotient
    generators."""
    p = q.pres
    gens = [p.gen(i) for i in range(p.h)]
    moves = []
    for g in gens:
        moves.append((q.canon(g), q.inv(phi_bar(q.canon(g)))))
        moves.append((q.inv(g), phi_bar(q.canon(g))))
    start = q.canon(xbar)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for e in frontier:
            for u, v in moves:
                t = q.mult(q.mult(u, e), v)
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return seen


def projected_class(q, phi, x):
    """The image of the twisted class [x]_phi in the quotient, computed
    through the graph moves xi -> pi(a) xi pi(phi(a))^-1. This never needs
    the kernel to be phi-invariant."""
    p = q.pres
    moves = []
    for i in range(p.h):
        a = p.gen(i)
        fa = phi.apply(a)
        moves.append((q.canon(a), q.canon(p.inv(fa))))
        moves.append((q.canon(p.inv(a)), q.canon(fa)))
    start = q.canon(x)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for e in frontier:
            for u, v in moves:
                t = q.mult(q.mult(u, e), v)
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return seen


def separates(q, phi, x, y):
    """Whether the quotient separates y from the twisted class of x."""
    return q.canon(y) not in projected_class(q, phi, x)


def _ordered_factorizations(n, h):
    """All h-tuples of positive integers with the given product, in
    lexicographic order."""
    if h == 1:
        yield (n,)
        return
    d = 1
    while d <= n:
        if n % d == 0:
            for rest in _ordered_factorizations(n // d, h - 1):
                yield (d,) + rest
        d += 1


def congruence_kernels(pres, max_order):
    """Stable diagonal congruence kernels in increasing quotient order
    (ties by moduli vector), as a lazy iterator of (order, moduli, seq).
    Validity results are cached per presentation by diagonal_kernel."""
    for order in range(2, max_order + 1):
        for vec in _ordered_factorizations(order, pres.h):
            seq = diagonal_kernel(pres, vec)
            if seq is not None:
                yield order, vec, seq


@dataclass
class DepthResult:
    separated: bool
    order: int = None
    moduli: tuple = None
    budget_exhausted: bool = False


def congruence_depth(pres, phi, x, y, order_budget=DEFAULT_ORDER_BUDGET,
                     check_nonconjugate=True, modulus_budget=None):
    """The smallest congruence quotient order separating y from [x]_phi,
    scanning stable diagonal kernels in increasing order. The result is
    exact among congruence quotients when the scan is exhaustive below the
    found order; separation is re-verified before reporting. An optional
    modulus budget additionally caps every individual modulus."""
    if check_nonconjugate:
        res = is_twisted_conjugate(pres, phi, x, y)
        if isinstance(res, TwistedWitness):
            raise PreconditionError("x and y are twisted conjugate", reason="conjugate")
    for order, vec, kernel in congruence_kernels(pres, order_budget):
        if modulus_budget is not None and max(vec) > modulus_budget:
            continue
        q = FiniteQuotient(pres, kernel)
        if separates(q, phi, x, y):
            if not separates(q, phi, x, y):
                raise ValidationError("separation re-check failed")
            return DepthResult(True, order, vec)
    return DepthResult(False, budget_exhausted=True)


def full_power_subgroup(pres, m, order_budget=200_000):
    """The subgroup generated by all m-th powers, exactly: the preimage of
    the m-th power subgroup of N modulo the level-m congruence kernel.
    Characteristic, so induced automorphisms always exist."""
    base = power_subgroup(pres, m)
    q = FiniteQuotient(pres, base, order_budget)
    gens = list(base.generators())
    seen = set()
    for el in q.elements():
        w = q.canon(pres.pow(el, m))
        if any(w) and w not in seen:
            seen.add(w)
            gens.append(w)
    return InducedSequence.from_generators(
        pres, gens, conjugators=[pres.gen(i) for i in range(pres.h)])


def quotient_twisted_subgroup(q, phi_bar):
    """X_c of the finite quotient: displacements u phibar(u)^-1 that land
    in the top lower-central-series layer of the quotient."""
    p = q.pres
    c = p.nilpotency_class
    gamma_c = q.subgroup_image([p.gen(i) for i in p.layer_indices(c)])
    out = set()
    for el in q.elements():
        d = q.mult(el, q.inv(phi_bar(el)))
        if d in gamma_c:
            out.add(d)
    return out


def verify_pullback_reduction(pres, phi, x, p, k, order_budget=200_000):
    """Check the central pullback reduction: with k0 = v_p(D_{phi_x}) +
    k*(p, c-1), the twisted subgroup of N/N^(p^(k+k0)) projects onto the
    image of N_{phi_x} in N/N^(p^k). Uses full (characteristic) power
    subgroups and exhaustive set computation."""
    c = pres.nilpotency_class
    phi_x = compose_with_inner(pres, phi, x)
    chain = twisted_chain(pres, phi_x)
    _, D = chain.determinants()
    _, k_star = blackburn_constants(p, max(c - 1, 1))
    k0 = (_vp(abs(D), p) or 0) + k_star
    big = FiniteQuotient(pres, full_power_subgroup(pres, p ** (k + k0), order_budget),
                         order_budget)
    small = FiniteQuotient(pres, full_power_subgroup(pres, p ** k, order_budget),
                           order_budget)
    bar = induced_automorphism(big, phi_x)
    lhs = {small.canon(d) for d in quotient_twisted_subgroup(big, bar)}
    n_phi = chain.level(c).image
    central_gens = [pres.from_layer_coords(row, c) for row in n_phi.rows]
    rhs = small.subgroup_image(central_gens)
    return lhs == rhs


# -- quotients by central subgroups -------------------------------------------


class CentralQuotientError(ValidationError):
    """The adapted quotient construction failed; carries the reason."""


def _center_lattice(pres, center_seq=None):
    zc = center_seq or center(pres)
    rows = [list(g) for g in zc.generators()]
    return zc, lin.Lattice.from_rows(pres.h, rows)


def central_quotient(pres, c_entries):
    """Quotient by a central isolated subgroup whose induced entries are
    each supported in a single weight layer. Returns (quotient, project)
    where project maps old exponent vectors to new ones.

    Raises CentralQuotientError when the entries mix layers, are not
    saturated layerwise, or the resulting presentation fails verification.
    """
    p = pres
    by_layer = {}
    for g in c_entries:
        w = p.weight_of(g)
        if w is None:
            continue
        support_weights = {p.weights[i] for i, e in enumerate(g) if e}
        if support_weights != {w}:
            raise CentralQuotientError("central entry mixes weight layers")
        by_layer.setdefault(w, []).append(list(p.layer_coords(g, w)))

    complements = {}
    kill = {}
    new_index = []
    for w in range(1, p.nilpotency_class + 1):
        r = p.layer_rank(w)
        S = lin.Lattice.from_rows(r, by_layer.get(w, []))
        if lin.saturation(S).rows != S.rows:
            raise CentralQuotientError(f"layer {w} part is not saturated")
        if S.rows:
            _, _, V = lin.snf(S.rows)
            vinv = lin.inverse_unimodular(V)
            comp = vinv[S.rank:]
        else:
            comp = lin.identity_matrix(r)
        complements[w] = comp
        kill[w] = S.rows
        for t in range(len(comp)):
            new_index.append((w, t))

    section = []
    for w, t in new_index:
        section.append(p.from_layer_coords(complements[w][t], w))

    def project(g):
        g = p.check_element(g)
        coords = []
        residual = g
        for w in range(1, p.nilpotency_class + 1):
            # residual is supported on weight >= w by induction
            t = [residual[i] for i in p.layer_indices(w)]
            basis = complements[w] + kill[w]
            M = lin.transpose(basis) if basis else []
            sol = lin.solve(M, t) if basis else ([] if not any(t) else None)
            if sol is None:
                raise CentralQuotientError("layer split failed; quotient has torsion")
            beta = sol[:len(complements[w])]
            coords.extend(beta)
            prefix = p.identity
            for vec, e in zip(complements[w] + kill[w], sol):
                if e:
                    prefix = p.mult(prefix, p.pow(p.from_layer_coords(vec, w), e))
            residual = p.mult(p.inv(prefix), residual)
        if any(residual):
            raise CentralQuotientError("projection residual is nontrivial")
        return tuple(coords)

    new_h = len(new_index)
    new_weights = [w for w, _ in new_index]
    names = []
    counters = {}
    for w, _ in new_index:
        counters[w] = counters.get(w, 0) + 1
        names.append(f"g{w}_{counters[w]}")
    commutators = {}
    for j in range(new_h):
        for i in range(j):
            cvec = p.comm(section[j], section[i])
            img = project(cvec)
            if any(img):
                commutators[(j, i)] = img
    # a collapsed or non-adapted quotient fails construction or
    # verification here and is reported, never approximated
    quotient = MalcevPresentation(names, new_weights, commutators)
    problems = verify_presentation(quotient)
    if problems:
        raise CentralQuotientError("; ".join(problems))
    hom = GroupHom(p, quotient, [project(p.gen(i)) for i in range(p.h)])
    for g in c_entries:
        if any(hom.apply(g)):
            raise CentralQuotientError("kernel generator does not die in the quotient")
    return quotient, hom


def one_dim_central_quotient(pres, z, extra_kill=None, max_steps=20):
    """A torsion-free quotient whose center is generated by the image of
    the primitive central element z. Returns (quotient, hom, steps).

    Iterates: complement the direction of z inside the center, quotient,
    recompute. extra_kill lists central elements the first complement must
    contain (used by separate_central to keep a chosen splitting).
    """
    current = pres
    hom = GroupHom(pres, pres, [pres.gen(i) for i in range(pres.h)])
    z_cur = pres.check_element(z)
    steps = 0
    extra = [pres.check_element(g) for g in (extra_kill or [])]
    for _ in range(max_steps):
        zc, zlat = _center_lattice(current)
        coords = zlat.coordinates(z_cur)
        if coords is None:
            raise CentralQuotientError("z is not central")
        g = math.gcd(*[abs(c) for c in coords]) if any(coords) else 0
        if g != 1:
            raise CentralQuotientError("z is not primitive in the center")
        if zlat.rank == 1:
            return current, hom, steps
        # complement of z inside the center lattice, over center coordinates
        k = zlat.rank
        rows = [list(coords)]
        for e in extra:
            ec = zlat.coordinates(e)
            if ec is None:
                raise CentralQuotientError("extra kill element is not central")
            rows.append(list(ec))
        L = lin.Lattice.from_rows(k, rows)
        if lin.isolator_index(L) != 1 or L.rank != len(rows):
            raise CentralQuotientError("kill set is not a saturated independent family")
        _, _, V = lin.snf(rows)
        vinv = lin.inverse_unimodular(V)
        comp_center_coords = vinv[len(rows):]
        kill_center_coords = [list(zlat.coordinates(e)) for e in extra] + comp_center_coords
        kill_elements = []
        zc_gens = zc.generators()
        for cc in kill_center_coords:
            el = current.identity
            for gen, e in zip(zc_gens, cc):
                if e:
                    el = current.mult(el, current.pow(gen, e))
            kill_elements.append(el)
        kill_seq = InducedSequence.from_generators(current, kill_elements)
        quotient, proj = central_quotient(current, kill_seq.generators())
        hom = proj.compose(hom)
        z_cur = proj.apply(z_cur)
        current = quotient
        extra = []
        steps += 1
    raise CentralQuotientError("central quotient iteration did not stabilize")


def separate_central(pres, h_gens, x, order_budget=DEFAULT_ORDER_BUDGET):
    """Separate x from a central subgroup H in a verified finite quotient.

    Two branches: x inside the isolator of H reduces to a one dimensional
    central quotient plus a cyclic prime-power separation expanded to a
    congruence quotient; x outside the isolator is separated from the
    identity in the torsion-free quotient by the isolator.

    Returns (description dict, order).
    """
    p = pres
    x = p.check_element(x)
    zc, zlat = _center_lattice(p)
    h_rows = []
    for g in h_gens:
        g = p.check_element(g)
        if zlat.coordinates(g) is None:
            raise ValidationError("H is not a central subgroup")
        h_rows.append(list(g))
    H = lin.Lattice.from_rows(p.h, h_rows)
    if H.contains(x):
        raise PreconditionError("x lies in H", reason="membership")
    Hsat = lin.saturation(H)

    if Hsat.contains(x):
        # work inside sqrt(H) with an SNF-adapted basis
        B = [Hsat.coordinates(row) for row in H.rows]
        S, _, V = lin.snf(B)
        dvals = [S[i][i] for i in range(len(B))]
        # rows f_i of V^-1 form a basis of sqrt(H) with H = <d_i f_i>
        f_rows = lin.inverse_unimodular(V)
        xcoords = Hsat.coordinates(x)
        x_f = lin.mat_vec(lin.transpose(V), xcoords)
        pick = None
        for i, d in enumerate(dvals):
            if x_f[i] % d != 0:
                pick = i
                break
        if pick is None:
            raise ValidationError("x escaped H but matched all invariant factors")
        def realize(coords_in_sat):
            amb = [0] * p.h
            for c, row in zip(coords_in_sat, Hsat.rows):
                for t, e in enumerate(row):
                    amb[t] += c * e
            return tuple(amb)
        z0 = realize(f_rows[pick])
        others = [realize(f_rows[i]) for i in range(len(dvals)) if i != pick]
        quotient, hom, _ = one_dim_central_quotient(p, z0, extra_kill=others)
        d_i = dvals[pick]
        e_i = x_f[pick]
        # prime power p0^k dividing d_i that e_i misses
        p0, kk = None, None
        d = 2
        dd = d_i
        while dd > 1:
            if dd % d == 0:
                v = 0
                while dd % d == 0:
                    dd //= d
                    v += 1
                if e_i % d ** v != 0:
                    p0, kk = d, v
                    # lower k while separation still holds
                    while kk > 1 and e_i % d ** (kk - 1) != 0:
                        kk -= 1
                    break
            d += 1
        if p0 is None:
            raise ValidationError("no separating prime power found")
        q = congruence_quotient(quotient, p0 ** kk, order_budget)
        himg = [hom.apply(g) for g in h_gens]
        hset = q.subgroup_image(himg)
        if q.canon(hom.apply(x)) in hset:
            raise ValidationError("constructed quotient failed to separate")
        desc = {"branch": "isolator", "prime": p0, "exponent": kk,
                "quotient_hirsch": quotient.h, "order": q.order}
        return desc, q.order

    # x outside sqrt(H): quotient by the isolator, then find the smallest
    # congruence level where the image of x survives
    sat_seq = InducedSequence.from_generators(
        p, [tuple(r) for r in Hsat.rows]) if Hsat.rows else None
    if sat_seq is not None and Hsat.rows:
        quotient, hom = central_quotient(p, sat_seq.generators())
    else:
        quotient, hom = p, GroupHom(p, p, [p.gen(i) for i in range(p.h)])
    xq = hom.apply(x)
    m = 2
    while m ** quotient.h <= order_budget:
        if any(e % m != 0 for e in xq):
            q = congruence_quotient(quotient, m, order_budget)
            himg = [hom.apply(g) for g in h_gens]
            hset = q.subgroup_image(himg)
            if q.canon(xq) not in hset:
                desc = {"branch": "outside", "level": m,
                        "quotient_hirsch": quotient.h, "order": q.order}
                return desc, q.order
        m += 1
    raise BudgetExceededError("no separating congruence quotient within budget")
