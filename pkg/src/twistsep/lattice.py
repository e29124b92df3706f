"""Exact integer linear algebra: Hermite/Smith normal forms, kernels,
saturation, and the constructive preimage routines used everywhere else.

Matrices are plain lists of rows of Python ints, so every computation is
exact at arbitrary precision. A matrix M with m rows and n columns
represents the homomorphism Z^n -> Z^m, a |-> M a (column-vector action).
Lattices are stored as Hermite-reduced row bases, which makes equality of
sublattices a plain list comparison.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math
import random

from .errors import PreconditionError, ValidationError


def xgcd(a, b):
    # Maintain x*a + y*b == g alongside the Euclidean algorithm.
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    if g < 0:
        x, y, g = -x, -y, -g
    return x, y, g


def identity_matrix(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(A, B):
    if not A:
        return []
    n = len(B[0]) if B else 0
    out = []
    for row in A:
        acc = [0] * n
        for a, brow in zip(row, B):
            if a:
                for j, b in enumerate(brow):
                    if b:
                        acc[j] += a * b
        out.append(acc)
    return out


def mat_vec(M, v):
    return [sum(a * b for a, b in zip(row, v)) for row in M]


def transpose(M):
    return [list(col) for col in zip(*M)] if M else []


def mat_eq(A, B):
    return A == B


def det(M):
    """Exact determinant by fraction-free Gaussian elimination (Bareiss)."""
    n = len(M)
    if n == 0:
        return 1
    if any(len(row) != n for row in M):
        raise ValidationError("determinant of a non-square matrix")
    a = [row[:] for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def hnf(M):
    """Row Hermite normal form.

    Returns (H, U) with U unimodular and U*M == H. H has one pivot per
    nonzero row, pivots positive, entries above each pivot reduced into
    [0, pivot). This is the canonical basis used for lattice equality.
    """
    m = len(M)
    H = [row[:] for row in M]
    U = identity_matrix(m)
    n = len(M[0]) if m else 0
    pivot_row = 0
    for col in range(n):
        # find a row with a nonzero entry in this column
        row = None
        for i in range(pivot_row, m):
            if H[i][col] != 0:
                row = i
                break
        if row is None:
            continue
        H[pivot_row], H[row] = H[row], H[pivot_row]
        U[pivot_row], U[row] = U[row], U[pivot_row]
        # clear below with gcd row operations
        for i in range(pivot_row + 1, m):
            while H[i][col] != 0:
                a, b = H[pivot_row][col], H[i][col]
                if abs(a) > abs(b) or (b != 0 and a % b == 0 and abs(a) >= abs(b)):
                    q = a // b
                    H[pivot_row] = [x - q * y for x, y in zip(H[pivot_row], H[i])]
                    U[pivot_row] = [x - q * y for x, y in zip(U[pivot_row], U[i])]
                    H[pivot_row], H[i] = H[i], H[pivot_row]
                    U[pivot_row], U[i] = U[i], U[pivot_row]
                else:
                    q = b // a
                    H[i] = [x - q * y for x, y in zip(H[i], H[pivot_row])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[pivot_row])]
        if H[pivot_row][col] < 0:
            H[pivot_row] = [-x for x in H[pivot_row]]
            U[pivot_row] = [-x for x in U[pivot_row]]
        # reduce entries above the pivot
        p = H[pivot_row][col]
        for i in range(pivot_row):
            q = H[i][col] // p
            if q:
                H[i] = [x - q * y for x, y in zip(H[i], H[pivot_row])]
                U[i] = [x - q * y for x, y in zip(U[i], U[pivot_row])]
        pivot_row += 1
        if pivot_row == m:
            break
    return H, U


def snf(M):
    """Smith normal form. Returns (S, U, V) with U*M*V == S, S diagonal
    with nonnegative entries and the divisibility chain s1 | s2 | ...

    Row and column eliminations use 2x2 unimodular gcd blocks, so every
    proper step strictly divides the working pivot and the divisibility
    repair pass restarts cleanly; both loops terminate along divisor
    chains.
    """
    m = len(M)
    n = len(M[0]) if m else 0
    S = [row[:] for row in M]
    U = identity_matrix(m)
    V = identity_matrix(n)

    def swap_rows(i, j):
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in S:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def gcd_rows(t, i):
        # make S[t][t] = gcd, S[i][t] = 0 with one unimodular 2x2 block
        a, b = S[t][t], S[i][t]
        if b == 0:
            return
        if a != 0 and b % a == 0:
            q = b // a
            S[i] = [x - q * y for x, y in zip(S[i], S[t])]
            U[i] = [x - q * y for x, y in zip(U[i], U[t])]
            return
        x, y, g = xgcd(a, b)
        p1, p2 = -(b // g), a // g
        S[t], S[i] = ([x * u + y * v for u, v in zip(S[t], S[i])],
                      [p1 * u + p2 * v for u, v in zip(S[t], S[i])])
        U[t], U[i] = ([x * u + y * v for u, v in zip(U[t], U[i])],
                      [p1 * u + p2 * v for u, v in zip(U[t], U[i])])

    def gcd_cols(t, j):
        a, b = S[t][t], S[t][j]
        if b == 0:
            return
        if a != 0 and b % a == 0:
            q = b // a
            for row in S:
                row[j] -= q * row[t]
            for row in V:
                row[j] -= q * row[t]
            return
        x, y, g = xgcd(a, b)
        p1, p2 = -(b // g), a // g
        for row in S:
            row[t], row[j] = x * row[t] + y * row[j], p1 * row[t] + p2 * row[j]
        for row in V:
            row[t], row[j] = x * row[t] + y * row[j], p1 * row[t] + p2 * row[j]

    t = 0
    while t < min(m, n):
        pivot = None
        for i in range(t, m):
            for j in range(t, n):
                if S[i][j] != 0 and (pivot is None
                                     or abs(S[i][j]) < abs(S[pivot[0]][pivot[1]])):
                    pivot = (i, j)
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])
        while True:
            while any(S[i][t] for i in range(t + 1, m)) or \
                    any(S[t][j] for j in range(t + 1, n)):
                for i in range(t + 1, m):
                    gcd_rows(t, i)
                for j in range(t + 1, n):
                    gcd_cols(t, j)
            violation = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if S[i][j] % S[t][t] != 0:
                        violation = i
                        break
                if violation is not None:
                    break
            if violation is None:
                break
            S[t] = [x + y for x, y in zip(S[t], S[violation])]
            U[t] = [x + y for x, y in zip(U[t], U[violation])]
        if S[t][t] < 0:
            S[t] = [-x for x in S[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return S, U, V


def invariant_factors(M):
    S, _, _ = snf(M)
    diag = [S[i][i] for i in range(min(len(S), len(S[0]) if S else 0))]
    return [d for d in diag if d != 0]


def rank(M):
    return len(invariant_factors(M))


def solve(M, b):
    """One integer solution a of M a = b, or None. M acts on column vectors."""
    m = len(M)
    n = len(M[0]) if m else 0
    if len(b) != m:
        raise ValidationError("dimension mismatch in solve")
    if n == 0:
        return [] if all(x == 0 for x in b) else None
    S, U, V = snf(M)
    ub = mat_vec(U, b)
    y = [0] * n
    r = min(m, n)
    for i in range(r):
        s = S[i][i]
        if s == 0:
            if ub[i] != 0:
                return None
        else:
            if ub[i] % s != 0:
                return None
            y[i] = ub[i] // s
    for i in range(r, m):
        if ub[i] != 0:
            return None
    return mat_vec(V, y)


def inverse_unimodular(M):
    """Inverse of a unimodular integer matrix, exact."""
    n = len(M)
    cols = []
    for j in range(n):
        e = [1 if i == j else 0 for i in range(n)]
        col = solve(M, e)
        if col is None:
            raise ValidationError("matrix is not unimodular")
        cols.append(col)
    return transpose(cols)


@dataclass
class Lattice:
    """A sublattice of Z^ambient given by a Hermite-reduced row basis."""

    ambient: int
    rows: list = field(default_factory=list)

    @classmethod
    def from_rows(cls, ambient, rows):
        reduced, _ = hnf([list(r) for r in rows]) if rows else ([], None)
        reduced = [r for r in reduced if any(r)]
        return cls(ambient, reduced)

    @property
    def rank(self):
        return len(self.rows)

    def contains(self, v):
        v = list(v)
        for row in self.rows:
            p = next((j for j, x in enumerate(row) if x), None)
            if p is None:
                continue
            if v[p] % row[p] == 0:
                q = v[p] // row[p]
                if q:
                    v = [x - q * y for x, y in zip(v, row)]
            elif v[p] != 0:
                return False
        return not any(v)

    def coordinates(self, v):
        """Coefficients of v over the basis rows, or None."""
        coeffs = []
        v = list(v)
        for row in self.rows:
            p = next(j for j, x in enumerate(row) if x)
            if v[p] % row[p] != 0:
                return None
            q = v[p] // row[p]
            coeffs.append(q)
            v = [x - q * y for x, y in zip(v, row)]
        return coeffs if not any(v) else None

    def __eq__(self, other):
        return isinstance(other, Lattice) and self.ambient == other.ambient and self.rows == other.rows


def saturation(L):
    """The isolator lattice: rational span of L intersected with Z^ambient."""
    if not L.rows:
        return Lattice(L.ambient, [])
    S, U, V = snf(L.rows)
    r = len([1 for i in range(min(len(S), len(S[0]))) if S[i][i] != 0])
    vinv = inverse_unimodular(V)
    return Lattice.from_rows(L.ambient, vinv[:r])


def isolator_index(L):
    """[sqrt(L) : L], the product of the nonzero invariant factors."""
    if not L.rows:
        return 1
    return math.prod(invariant_factors(L.rows))


@dataclass
class AbelianGroup:
    """Z^rank x Z/d1 x ... with the invariant-factor divisibility chain."""

    rank: int
    torsion: list = field(default_factory=list)

    def __post_init__(self):
        for d in self.torsion:
            if d < 2:
                raise ValidationError("invariant factors must be >= 2")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a != 0:
                raise ValidationError("invariant factors must form a divisibility chain")

    @property
    def dim(self):
        return self.rank + len(self.torsion)

    def reduce(self, v):
        """Componentwise reduction of a raw vector into canonical form."""
        out = list(v)
        for k, d in enumerate(self.torsion):
            out[self.rank + k] %= d
        return out


class AbelianHom:
    """A homomorphism between f.g. abelian groups, given by an integer matrix
    acting on column vectors of domain coordinates."""

    def __init__(self, domain, codomain, matrix):
        self.domain = domain
        self.codomain = codomain
        self.matrix = [list(r) for r in matrix]
        if len(self.matrix) != codomain.dim:
            raise ValidationError("matrix rows must match codomain dimension")
        if self.matrix and any(len(r) != domain.dim for r in self.matrix):
            raise ValidationError("matrix columns must match domain dimension")
        # well-defined on torsion: the image of d_i * e_i must vanish
        for k, d in enumerate(domain.torsion):
            col = [row[domain.rank + k] for row in self.matrix]
            img = [d * x for x in col]
            if not self._is_zero(img):
                raise ValidationError("map is not well defined on torsion")

    def _is_zero(self, v):
        for i in range(self.codomain.rank):
            if v[i] != 0:
                return False
        for k, d in enumerate(self.codomain.torsion):
            if v[self.codomain.rank + k] % d != 0:
                return False
        return True

    def apply(self, v):
        return self.codomain.reduce(mat_vec(self.matrix, v))

    def image_lattice(self):
        """Image as a lattice in the free part coordinates (torsion-free
        codomain assumed for the lattice picture)."""
        if self.codomain.torsion:
            raise ValidationError("image_lattice needs a torsion-free codomain")
        return Lattice.from_rows(self.codomain.dim, transpose(self.matrix))

    def det(self):
        """det in the subgroup sense: [sqrt(image) : image] of the image."""
        return isolator_index(self.image_lattice())


def kernel_basis(matrix):
    """Row basis of {v : M v = 0}."""
    m = len(matrix)
    n = len(matrix[0]) if m else 0
    if n == 0:
        return Lattice(0, [])
    S, U, V = snf(matrix)
    r = len(invariant_factors(matrix))
    gens = [[row[j] for row in V] for j in range(r, n)]
    return Lattice.from_rows(n, gens)


def kernel_with_construction(matrix):
    """Kernel generators built the explicit way: for a map with independent
    first-k columns and minor determinant D, each tail coordinate j yields
    v_j = iota(x_j) - D * e_{k+j} where x_j solves M x_j = D * M e_{k+j}.

    Returns (generators, max_abs_entry). The generators span a finite-index
    sublattice of the kernel; the max entry feeds the norm experiments.
    """
    m = len(matrix)
    n = len(matrix[0]) if m else 0
    cols = transpose(matrix)
    # greedily pick a maximal independent set of columns
    chosen = []
    chosen_idx = []
    for j, col in enumerate(cols):
        trial = chosen + [col]
        if rank(trial) == len(trial):
            chosen.append(col)
            chosen_idx.append(j)
    k = len(chosen)
    if k == 0:
        gens = identity_matrix(n)
        return gens, 1
    sub = transpose(chosen)  # m x k
    if k == m:
        D = det(sub)
    else:
        # rectangular: fall back to the product of invariant factors
        D = math.prod(invariant_factors(sub))
    tail = [j for j in range(n) if j not in chosen_idx]
    gens = []
    max_entry = 0
    for j in tail:
        target = [D * x for x in mat_vec(matrix, [1 if t == j else 0 for t in range(n)])]
        x = solve(sub, target)
        if x is None:
            raise ValidationError("construction column solve failed")
        v = [0] * n
        for idx, val in zip(chosen_idx, x):
            v[idx] = val
        v[j] -= D
        gens.append(v)
        max_entry = max(max_entry, max(abs(t) for t in v))
    return gens, max_entry


def image_membership(f, b):
    """Some preimage a with f(a) = b, or None. Accepts AbelianHom or matrix."""
    M = f.matrix if isinstance(f, AbelianHom) else f
    return solve(M, list(b))


def p_power_preimage(f, b, p, k):
    """Given b in image(f) and b in p^(k + v_p(det f)) * B, return a preimage
    a in p^k * A. Raises PreconditionError naming the failed condition."""
    M = f.matrix if isinstance(f, AbelianHom) else f
    b = list(b)
    d = f.det() if isinstance(f, AbelianHom) else isolator_index(Lattice.from_rows(len(M), transpose(M)))
    vp = 0
    dd = d
    while dd % p == 0:
        dd //= p
        vp += 1
    depth = p ** (k + vp)
    if any(x % depth != 0 for x in b):
        raise PreconditionError(
            "b is not in p^(k + v_p(det)) * B", reason="divisibility")
    g = [x // depth for x in b]
    target = [(p ** vp) * x for x in g]
    atilde = solve(M, target)
    if atilde is None:
        # distinguish: maybe b itself is not in the image at all
        if solve(M, b) is None:
            raise PreconditionError("b is not in the image of f", reason="membership")
        raise PreconditionError(
            "p^v_p(det) * (b / p^(k+v)) escaped the image", reason="membership")
    return [(p ** k) * x for x in atilde]


def cramer_preimage(M, b):
    """Unique preimage of b under an injective square matrix, with the
    certified coefficient bound k! * max(|M|, |b|)^k / |det M|.

    Returns (a, bound) where a is None when the rational solution is not
    integral. Raises on a singular matrix.
    """
    n = len(M)
    if any(len(r) != n for r in M):
        raise ValidationError("cramer_preimage needs a square matrix")
    d = det(M)
    if d == 0:
        raise ValidationError("singular matrix")
    xs = []
    for i in range(n):
        Mi = [row[:] for row in M]
        for r in range(n):
            Mi[r][i] = b[r]
        xs.append(Fraction(det(Mi), d))
    entry_bound = max([abs(x) for row in M for x in row] + [abs(x) for x in b] + [1])
    bound = math.factorial(n) * entry_bound ** n // abs(d)
    if all(x.denominator == 1 for x in xs):
        return [int(x) for x in xs], bound
    return None, bound


def det_norm_experiment(ambient_rank, samples, seed=20240214, entry_bound=30,
                        sub_rank=2, threshold=None):
    """Sample random sublattices, compare det (isolator index) against the
    max-entry norm proxy raised to the rank. Returns a list of report rows
    (sample_id, rank, norm, det, ratio) and asserts boundedness when a
    threshold is supplied."""
    rng = random.Random(seed)
    rows_out = []
    for sid in range(samples):
        while True:
            gens = [[rng.randint(-entry_bound, entry_bound) for _ in range(ambient_rank)]
                    for _ in range(sub_rank)]
            L = Lattice.from_rows(ambient_rank, gens)
            if L.rank == sub_rank:
                break
        norm = max(abs(x) for row in gens for x in row)
        d = isolator_index(L)
        ratio = Fraction(d, norm ** sub_rank) if norm else Fraction(0)
        rows_out.append((sid, sub_rank, norm, d, ratio))
        if threshold is not None and ratio > threshold:
            raise AssertionError(
                f"sample {sid}: det/norm^rank ratio {ratio} exceeds threshold {threshold}")
    return rows_out
