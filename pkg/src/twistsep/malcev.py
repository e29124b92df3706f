"""Mal'cev presentations and exact arithmetic in finitely generated
torsion-free nilpotent groups.

Elements are exponent vectors (tuples of ints): the vector (e_1, ..., e_h)
is the normal form a_1^e_1 ... a_h^e_h over the weighted basis. The group
law is evaluated by collection from the left. For every pair j > i the
presentation stores the normal form of [a_j, a_i] = a_j a_i a_j^-1 a_i^-1,
supported on generators of strictly larger weight; from these the
constructor bootstraps conjugation tables a_j^(a_i^+-1), processing j from
the deepest generator upward so each step only needs tables already built.

Nilpotency class at most 2 gets a closed-form fast path (vector addition
plus a bilinear correction), cross-checked against generic collection in
the test suite.
"""

from dataclasses import dataclass
import math

from .errors import BudgetExceededError, ValidationError
from . import lattice as lin

DEFAULT_BALL_CAP = 10_000_000

Element = tuple  # exponent vector over the Mal'cev basis


class MalcevPresentation:
    """A weighted polycyclic presentation of a torsion-free nilpotent group.

    basis: generator names a_1..a_h, sorted by nondecreasing weight.
    weights: weight (lower central series layer) per generator.
    commutators: {(j, i): exponent vector of [a_j, a_i]} for j > i; missing
        pairs commute.
    """

    def __init__(self, basis, weights, commutators, nilpotency_class=None):
        self.basis = list(basis)
        self.h = len(self.basis)
        if isinstance(weights, dict):
            self.weights = [weights[name] for name in self.basis]
        else:
            self.weights = list(weights)
        if len(self.weights) != self.h:
            raise ValidationError("one weight per basis generator required")
        if any(w < 1 for w in self.weights):
            raise ValidationError("weights must be positive")
        if any(a > b for a, b in zip(self.weights, self.weights[1:])):
            raise ValidationError("basis must be sorted by nondecreasing weight")
        self.nilpotency_class = nilpotency_class or (max(self.weights) if self.weights else 1)
        if self.weights and self.nilpotency_class != max(self.weights):
            raise ValidationError("declared class must equal the maximal weight")
        self.commutators = {}
        for (j, i), vec in commutators.items():
            if not (0 <= i < j < self.h):
                raise ValidationError(f"commutator pair ({j},{i}) out of range")
            v = tuple(vec)
            if len(v) != self.h:
                raise ValidationError("commutator vectors must have full length")
            w = max(self.weights[i], self.weights[j])
            for t, e in enumerate(v):
                if e and self.weights[t] <= w:
                    raise ValidationError(
                        f"[{self.basis[j]},{self.basis[i]}] has support of weight <= max")
            if any(v):
                self.commutators[(j, i)] = v
        self.identity = (0,) * self.h
        self._is_two_step = self.nilpotency_class <= 2
        self._build_tables()

    # -- construction of conjugation tables -------------------------------

    def _build_tables(self):
        h = self.h
        unit = lambda i: tuple(1 if t == i else 0 for t in range(h))
        self._conj_pow_cache = {}
        self._cplus = {}   # (j, i) -> a_i^-1 a_j a_i
        self._cminus = {}  # (j, i) -> a_i a_j a_i^-1
        for j in range(h - 1, -1, -1):
            for i in range(j):
                v = self.commutators.get((j, i))
                if v is None:
                    self._cplus[(j, i)] = unit(j)
                    self._cminus[(j, i)] = unit(j)
                    continue
                # a_i^-1 a_j a_i = (a_i^-1 [a_j,a_i] a_i) * a_j
                conj_v = self._conj(v, i, 1)
                self._cplus[(j, i)] = self._rmul_gen(conj_v, j, 1)
                # a_i a_j a_i^-1 = [a_j,a_i]^-1 * a_j
                self._cminus[(j, i)] = self._rmul_gen(self._inv_generic(v), j, 1)

    # -- generic collection ------------------------------------------------

    def _conj_single(self, vec, i, eps):
        """a_i^-eps * vec * a_i^eps for eps in {1, -1}; vec supported on
        indices > i."""
        table = self._cplus if eps == 1 else self._cminus
        out = self.identity
        for j in range(self.h - 1, -1, -1):
            e = vec[j]
            if not e:
                continue
            if j <= i:
                raise ValidationError("conjugation support error")
            key = (j, i, eps, e)
            cached = self._conj_pow_cache.get(key)
            if cached is None:
                cached = self._pow_generic(table[(j, i)], e)
                if len(self._conj_pow_cache) < 200_000:
                    self._conj_pow_cache[key] = cached
            out = self._mul_generic(cached, out)
        return out

    def _conj(self, vec, i, t):
        """a_i^-t * vec * a_i^t by binary splitting on t."""
        if t == 0 or not any(vec):
            return tuple(vec)
        if t == 1 or t == -1:
            return self._conj_single(vec, i, t)
        half = t // 2
        return self._conj(self._conj(vec, i, half), i, t - half)

    def _rmul_gen(self, g, i, t):
        """g * a_i^t in normal form."""
        if t == 0:
            return tuple(g)
        prefix = list(g[:i])
        tail = tuple(0 if k <= i else g[k] for k in range(self.h))
        conj_tail = self._conj(tail, i, t)
        out = prefix + [g[i] + t] + list(conj_tail[i + 1:])
        return tuple(out)

    def _mul_generic(self, g, hvec):
        out = tuple(g)
        for i in range(self.h):
            e = hvec[i]
            if e:
                out = self._rmul_gen(out, i, e)
        return out

    def _inv_generic(self, g):
        out = self.identity
        for i in range(self.h - 1, -1, -1):
            e = g[i]
            if e:
                out = self._rmul_gen(out, i, -e)
        return out

    def _pow_generic(self, g, n):
        if n == 0:
            return self.identity
        if n < 0:
            return self._inv_generic(self._pow_generic(g, -n))
        result = self.identity
        base = tuple(g)
        while n:
            if n & 1:
                result = self._mul_generic(result, base)
            base = self._mul_generic(base, base)
            n >>= 1
        return result

    # -- public arithmetic (fast path for class <= 2) ----------------------

    def check_element(self, g):
        if len(g) != self.h:
            raise ValidationError("exponent vector has the wrong length")
        return tuple(g)

    def mult(self, g, hvec):
        if self._is_two_step:
            out = [a + b for a, b in zip(g, hvec)]
            for (j, i), v in self.commutators.items():
                c = g[j] * hvec[i]
                if c:
                    for t, e in enumerate(v):
                        if e:
                            out[t] += c * e
            return tuple(out)
        return self._mul_generic(g, hvec)

    def inv(self, g):
        if self._is_two_step:
            out = [-x for x in g]
            for (j, i), v in self.commutators.items():
                c = g[j] * g[i]
                if c:
                    for t, e in enumerate(v):
                        if e:
                            out[t] += c * e
            return tuple(out)
        return self._inv_generic(g)

    def pow(self, g, n):
        if self._is_two_step:
            out = [n * x for x in g]
            c2 = n * (n - 1) // 2
            if c2:
                for (j, i), v in self.commutators.items():
                    c = c2 * g[j] * g[i]
                    if c:
                        for t, e in enumerate(v):
                            if e:
                                out[t] += c * e
            return tuple(out)
        return self._pow_generic(g, n)

    def comm(self, g, hvec):
        return self.mult(self.mult(g, hvec), self.inv(self.mult(hvec, g)))

    def conjugate(self, g, by):
        """by * g * by^-1."""
        return self.mult(self.mult(by, g), self.inv(by))

    def gen(self, i):
        return tuple(1 if t == i else 0 for t in range(self.h))

    def standard_gens(self):
        """The weight-1 basis generators, the default generating set."""
        return [self.gen(i) for i in range(self.h) if self.weights[i] == 1]

    # -- layers -------------------------------------------------------------

    def layer_indices(self, w):
        return [i for i in range(self.h) if self.weights[i] == w]

    def layer_rank(self, w):
        return len(self.layer_indices(w))

    def weight_of(self, g):
        """The largest w with g in gamma_w, or None for the identity."""
        for i in range(self.h):
            if g[i]:
                return self.weights[i]
        return None

    def layer_coords(self, g, w):
        """Coordinates of g in gamma_w / gamma_{w+1}; g must lie in gamma_w."""
        for i in range(self.h):
            if g[i] and self.weights[i] < w:
                raise ValidationError("element is not in the requested layer")
        return tuple(g[i] for i in self.layer_indices(w))

    def from_layer_coords(self, coords, w):
        out = [0] * self.h
        for i, c in zip(self.layer_indices(w), coords):
            out[i] = c
        return tuple(out)

    def abelianized(self, g):
        """Coordinates of g in the torsion-free abelianization N/gamma_2."""
        return tuple(g[i] for i in self.layer_indices(1))


def multiply(p, g, h):
    return p.mult(p.check_element(g), p.check_element(h))


def inverse(p, g):
    return p.inv(p.check_element(g))


def commutator(p, g, h):
    return p.comm(p.check_element(g), p.check_element(h))


def power(p, g, n):
    return p.pow(p.check_element(g), n)


def lower_central_series(p):
    """Layer description: for each weight w, the basis indices of gamma_w
    modulo gamma_{w+1}, its rank, and the canonical generating set of
    left-normed commutators of length w in the weight-1 generators."""
    out = []
    gens1 = [p.gen(i) for i in p.layer_indices(1)]
    current = list(gens1)
    for w in range(1, p.nilpotency_class + 1):
        if w > 1:
            nxt = []
            for g in current:
                for a in gens1:
                    c = p.comm(a, g)
                    if any(c):
                        nxt.append(c)
            current = nxt
        out.append({
            "weight": w,
            "indices": p.layer_indices(w),
            "rank": p.layer_rank(w),
            "commutator_gens": list(current),
        })
    return out


def verify_presentation(p):
    """Check the adaptedness invariants constructively. Returns a list of
    violation strings, empty when the presentation passes."""
    problems = []
    if p.nilpotency_class != (max(p.weights) if p.weights else 1):
        problems.append("class does not equal the maximal weight")
    # commutator supports were checked at construction; re-verify
    for (j, i), v in p.commutators.items():
        w = max(p.weights[i], p.weights[j])
        for t, e in enumerate(v):
            if e and p.weights[t] <= w:
                problems.append(f"commutator ({j},{i}) support too shallow")
    # each layer w >= 2 must be spanned by commutators [a_k, a_m] with
    # weight(a_k) = 1 and weight(a_m) = w - 1, with index one
    for w in range(2, p.nilpotency_class + 1):
        rows = []
        for k in p.layer_indices(1):
            for m in range(p.h):
                if p.weights[m] == w - 1:
                    c = p.comm(p.gen(k), p.gen(m))
                    if p.weight_of(c) is not None and p.weight_of(c) >= w:
                        rows.append(list(p.layer_coords(c, w)))
        L = lin.Lattice.from_rows(p.layer_rank(w), rows)
        if L.rank != p.layer_rank(w):
            problems.append(f"layer {w} is not spanned by commutators (rank)")
        elif lin.isolator_index(L) != 1:
            problems.append(f"layer {w} commutator span has index {lin.isolator_index(L)}")
    return problems


class GroupHom:
    """A homomorphism determined by generator images, with the induced
    integer matrix on each lower central series layer."""

    def __init__(self, domain, codomain, images):
        self.domain = domain
        self.codomain = codomain
        self.images = [codomain.check_element(g) for g in images]
        if len(self.images) != domain.h:
            raise ValidationError("one image per basis generator required")

    def apply(self, g):
        out = self.codomain.identity
        for i, e in enumerate(g):
            if e:
                out = self.codomain.mult(out, self.codomain.pow(self.images[i], e))
        return out

    def layer_matrix(self, w):
        """Matrix of the induced map on gamma_w/gamma_{w+1}, acting on
        column vectors of layer coordinates."""
        cols = []
        for i in self.domain.layer_indices(w):
            img = self.apply(self.domain.gen(i))
            iw = self.codomain.weight_of(img)
            if img != self.codomain.identity and (iw is None or iw < w):
                raise ValidationError("image does not respect the layer filtration")
            cols.append(list(self.codomain.layer_coords(img, w)))
        return lin.transpose(cols) if cols else []

    def compose(self, other):
        """self after other."""
        return GroupHom(other.domain, self.codomain,
                        [self.apply(g) for g in other.images])

    def __eq__(self, other):
        return (isinstance(other, GroupHom) and self.domain is other.domain
                and self.codomain is other.codomain and self.images == other.images)


def identity_automorphism(p):
    return GroupHom(p, p, [p.gen(i) for i in range(p.h)])


def inner_automorphism(p, x):
    return GroupHom(p, p, [p.conjugate(p.gen(i), x) for i in range(p.h)])


def compose_with_inner(p, phi, x):
    """Inn(x) o phi, the twist entering nearly-twisted-conjugacy reductions."""
    return GroupHom(p, p, [p.conjugate(phi.apply(p.gen(i)), x) for i in range(p.h)])


def verify_hom(f, check_automorphism=False):
    """Check relation preservation, layer filtration, and (optionally) that
    every layer matrix is unimodular. Returns a list of violations."""
    problems = []
    dom, cod = f.domain, f.codomain
    for (j, i), v in dom.commutators.items():
        lhs = f.apply(tuple(v))
        rhs = cod.comm(f.images[j], f.images[i])
        if lhs != rhs:
            problems.append(
                f"relation [{dom.basis[j]},{dom.basis[i]}] is not preserved")
    for w in range(1, dom.nilpotency_class + 1):
        try:
            M = f.layer_matrix(w)
        except ValidationError as exc:
            problems.append(str(exc))
            continue
        if check_automorphism:
            if dom is not cod:
                problems.append("automorphism must be an endomorphism")
                break
            d = lin.det(M) if M else 1
            if d not in (1, -1):
                problems.append(f"layer {w} matrix has determinant {d}, not +-1")
    return problems


def is_automorphism(f):
    return not verify_hom(f, check_automorphism=True)


# -- balls and word metrics --------------------------------------------------


def ball(p, gens, n, cap=DEFAULT_BALL_CAP):
    """All elements of word length <= n over gens united with their
    inverses, as a sorted list. Raises BudgetExceededError at the cap."""
    dist = ball_with_distances(p, gens, n, cap)
    return sorted(dist)


def ball_with_distances(p, gens, n, cap=DEFAULT_BALL_CAP):
    steps = []
    seen_steps = set()
    for g in gens:
        for s in (p.check_element(g), p.inv(g)):
            if s != p.identity and s not in seen_steps:
                seen_steps.add(s)
                steps.append(s)
    dist = {p.identity: 0}
    frontier = [p.identity]
    for radius in range(1, n + 1):
        nxt = []
        for g in frontier:
            for s in steps:
                e = p.mult(g, s)
                if e not in dist:
                    dist[e] = radius
                    nxt.append(e)
                    if len(dist) > cap:
                        raise BudgetExceededError(
                            f"ball enumeration exceeded the cap of {cap} elements")
        frontier = nxt
        if not frontier:
            break
    return dist


def word_length(p, gens, g, cap=64, count_cap=DEFAULT_BALL_CAP):
    """Exact word length of g by breadth-first search; raises
    BudgetExceededError when the radius or element cap is hit."""
    g = p.check_element(g)
    if g == p.identity:
        return 0
    steps = []
    seen_steps = set()
    for s0 in gens:
        for s in (p.check_element(s0), p.inv(s0)):
            if s != p.identity and s not in seen_steps:
                seen_steps.add(s)
                steps.append(s)
    dist = {p.identity: 0}
    frontier = [p.identity]
    for radius in range(1, cap + 1):
        nxt = []
        for e in frontier:
            for s in steps:
                t = p.mult(e, s)
                if t == g:
                    return radius
                if t not in dist:
                    dist[t] = radius
                    nxt.append(t)
                    if len(dist) > count_cap:
                        raise BudgetExceededError("word length search exceeded the element cap")
        frontier = nxt
        if not frontier:
            break
    raise BudgetExceededError(f"word length of {g} exceeds the cap {cap}")


def word_length_upper(p, g):
    """A constructive upper bound on the word length over the standard
    (weight-1 basis) generators, with no search.

    The weight-1 part contributes the sum of absolute exponents. For class
    exactly 2 the central part b^m with b a commutator of two weight-1
    generators is realised as [u^s, w^s] * [u^r, w] with s = isqrt(|m|),
    giving the 8*sqrt + 2 bound; central coordinates are first expressed
    over the available commutator vectors. Deeper layers (class > 2) fall
    back to a linear per-coordinate bound, which stays a true upper bound.
    """
    g = p.check_element(g)
    total = 0
    for i in p.layer_indices(1):
        total += abs(g[i])
    if p.nilpotency_class == 1:
        return total
    if p.nilpotency_class == 2:
        coords = [g[i] for i in p.layer_indices(2)]
        if any(coords):
            total += _central_norm_upper_two_step(p, coords)
        return total
    # conservative fallback for deeper groups
    for w in range(2, p.nilpotency_class + 1):
        word_cost = 3 * (2 ** w)
        for i in p.layer_indices(w):
            total += abs(g[i]) * word_cost
    return total


def _two_step_commutator_table(p):
    """Pairs ((j, i), layer-2 vector of [a_j, a_i]) over weight-1 j > i."""
    pairs = []
    for (j, i), v in p.commutators.items():
        if p.weights[i] == 1 and p.weights[j] == 1:
            pairs.append(((j, i), list(p.layer_coords(v, 2))))
    return pairs


def _central_norm_upper_two_step(p, coords):
    pairs = _two_step_commutator_table(p)
    if not pairs:
        raise ValidationError("no commutator relations span the central layer")
    M = lin.transpose([vec for _, vec in pairs])
    combo = lin.solve(M, list(coords))
    if combo is None:
        raise ValidationError("central element is not spanned by commutators")
    bound = 0
    for c in combo:
        if c:
            m = abs(c)
            s = math.isqrt(m)
            r = m - s * s
            bound += 4 * s + (2 * r + 2 if r else 0)
    return bound


def subgroup_norm_upper(p, gens, subgroup_gens, cap=64, count_cap=DEFAULT_BALL_CAP):
    """Upper bound for the subgroup norm: max exact word length over the
    supplied generators (the true minimum over all generating sets is out
    of scope)."""
    best = 0
    for g in subgroup_gens:
        if p.check_element(g) == p.identity:
            continue
        best = max(best, word_length(p, gens, g, cap, count_cap))
    return best


def automorphism_norm(p, gens, phi, cap=64, count_cap=DEFAULT_BALL_CAP):
    """max word length of phi(s) over s in gens."""
    best = 0
    for s in gens:
        img = phi.apply(p.check_element(s))
        ln = 0 if img == p.identity else word_length(p, gens, img, cap, count_cap)
        best = max(best, ln)
    return best


def generating_set_spans(p, gens, cap=6, count_cap=200_000):
    """Check that gens generate the whole group by locating every basis
    generator inside a ball of the given radius."""
    try:
        d = ball_with_distances(p, gens, cap, count_cap)
    except BudgetExceededError:
        return False
    return all(p.gen(i) in d for i in range(p.h))


def root(p, g, m):
    """The unique y with y^m = g, or None.

    Solved layer by layer: the weight-w coordinates of y are forced by
    divisibility once the shallower coordinates are fixed, and the final
    candidate is verified exactly, so a failed verification proves no root
    exists (roots in torsion-free nilpotent groups are unique).
    """
    if m < 1:
        raise ValidationError("root exponent must be >= 1")
    g = p.check_element(g)
    if m == 1:
        return g
    partial = [0] * p.h
    for w in range(1, p.nilpotency_class + 1):
        t = p.pow(tuple(partial), m)
        for i in p.layer_indices(w):
            delta = g[i] - t[i]
            if delta % m != 0:
                return None
            partial[i] = delta // m
    y = tuple(partial)
    return y if p.pow(y, m) == g else None
