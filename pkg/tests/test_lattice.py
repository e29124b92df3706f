import random

import pytest
from hypothesis import given, settings, strategies as st

from twistsep.errors import PreconditionError, ValidationError
from twistsep.lattice import (AbelianGroup, AbelianHom, Lattice, cramer_preimage,
                              det, det_norm_experiment, hnf, identity_matrix,
                              image_membership, invariant_factors, isolator_index,
                              kernel_basis, kernel_with_construction, mat_mul,
                              mat_vec, p_power_preimage, saturation, snf, xgcd)

SEED = 20240214


def random_matrix(rng, m, n, bound=9):
    return [[rng.randint(-bound, bound) for _ in range(n)] for _ in range(m)]


def test_snf_diagonal_examples():
    S, U, V = snf([[2, 0], [0, 3]])
    assert [S[0][0], S[1][1]] == [1, 6]
    S, U, V = snf([[5, 0], [0, 5]])
    assert [S[0][0], S[1][1]] == [5, 5]


def test_hnf_identity_for_unimodular():
    H, U = hnf(identity_matrix(3))
    assert H == identity_matrix(3)


@settings(max_examples=60, deadline=None)
@given(st.integers(-40, 40), st.integers(-40, 40))
def test_xgcd_invariant(a, b):
    x, y, g = xgcd(a, b)
    assert x * a + y * b == g
    assert g >= 0


def test_snf_hnf_roundtrip_random():
    rng = random.Random(SEED)
    for _ in range(100):
        m, n = rng.randint(1, 6), rng.randint(1, 8)
        M = random_matrix(rng, m, n)
        H, U = hnf(M)
        assert mat_mul(U, M) == H
        assert det(U) in (1, -1)
        S, Us, Vs = snf(M)
        assert mat_mul(mat_mul(Us, M), Vs) == S
        diag = [S[i][i] for i in range(min(m, n))]
        for a, b in zip(diag, diag[1:]):
            if a != 0 and b != 0:
                assert b % a == 0
        for i in range(m):
            for j in range(n):
                if i != j:
                    assert S[i][j] == 0


def test_kernel_prime_columns_example():
    K = kernel_basis([[2, 0, 1], [0, 3, 1]])
    assert K.rank == 1
    v = K.rows[0]
    assert v in ([3, 2, -6], [-3, -2, 6])
    gens, max_entry = kernel_with_construction([[2, 0, 1], [0, 3, 1]])
    assert gens == [[3, 2, -6]]
    assert max_entry == 6


def test_kernel_is_nullspace_random():
    rng = random.Random(SEED + 1)
    for _ in range(100):
        m, n = rng.randint(1, 6), rng.randint(1, 8)
        M = random_matrix(rng, m, n)
        K = kernel_basis(M)
        for row in K.rows:
            assert all(v == 0 for v in mat_vec(M, row))
        # rank-nullity over Q
        r = len(invariant_factors(M))
        assert K.rank == n - r


def test_zero_map_kernel_is_everything():
    K = kernel_basis([[0, 0], [0, 0]])
    assert K.rows == identity_matrix(2)


def test_saturation_examples():
    assert isolator_index(Lattice.from_rows(1, [(7,)])) == 7
    assert isolator_index(Lattice.from_rows(2, [(1, 12)])) == 1
    assert isolator_index(Lattice.from_rows(2, [(2, 0), (0, 3)])) == 6


def test_saturation_idempotent_random():
    rng = random.Random(SEED + 2)
    for _ in range(100):
        n = rng.randint(1, 5)
        k = rng.randint(0, n)
        L = Lattice.from_rows(n, random_matrix(rng, k, n, 6))
        S = saturation(L)
        assert saturation(S) == S
        assert isolator_index(S) == 1
        for row in L.rows:
            assert S.contains(row)


def test_image_membership():
    assert image_membership([[2, 0], [0, 3]], (4, 3)) == [2, 1]
    assert image_membership([[2, 0], [0, 2]], (1, 0)) is None
    assert image_membership([[1, 0], [0, 1]], (0, 0)) == [0, 0]


def test_p_power_preimage_examples():
    Z1 = AbelianGroup(1)
    f = AbelianHom(Z1, Z1, [[2]])
    a = p_power_preimage(f, (2 ** 3,), 2, 2)
    assert f.apply(a) == [8]
    assert a[0] % 4 == 0

    Z2 = AbelianGroup(2)
    f = AbelianHom(Z2, Z2, [[1, 0], [0, 2]])
    a = p_power_preimage(f, (4, 4), 2, 1)
    assert f.apply(a) == [4, 4]
    assert all(v % 2 == 0 for v in a)

    uni = AbelianHom(Z2, Z2, [[1, 1], [0, 1]])
    a = p_power_preimage(uni, (12, 4), 2, 2)
    assert uni.apply(a) == [12, 4]
    assert all(v % 4 == 0 for v in a)


def test_p_power_preimage_distinguishes_errors():
    Z1 = AbelianGroup(1)
    f = AbelianHom(Z1, Z1, [[2]])
    with pytest.raises(PreconditionError) as err:
        p_power_preimage(f, (3,), 2, 0)
    assert err.value.reason == "divisibility"
    Z2 = AbelianGroup(2)
    g = AbelianHom(Z2, Z2, [[2, 0], [0, 0]])
    # (0, 2) is 2-divisible but never in the image of g
    with pytest.raises(PreconditionError) as err:
        p_power_preimage(g, (0, 2), 2, 0)
    assert err.value.reason == "membership"


def test_p_power_preimage_random_property():
    rng = random.Random(SEED + 3)
    Z2 = AbelianGroup(2)
    for _ in range(60):
        M = random_matrix(rng, 2, 2, 4)
        if det(M) == 0:
            continue
        f = AbelianHom(Z2, Z2, M)
        p, k = rng.choice([(2, 1), (2, 2), (3, 1)])
        vp = 0
        d = f.det()
        while d % p == 0:
            d //= p
            vp += 1
        src = [rng.randint(-5, 5) * p ** (k + vp) for _ in range(2)]
        b = f.apply(src)
        if any(v % p ** (k + vp) for v in b):
            continue
        a = p_power_preimage(f, b, p, k)
        assert f.apply(a) == b
        assert all(v % p ** k == 0 for v in a)


def test_cramer_preimage():
    a, bound = cramer_preimage([[1, 0], [0, 1]], [7, -3])
    assert a == [7, -3]
    a, bound = cramer_preimage([[2, 0], [0, 2]], [2, 4])
    assert a == [1, 2]
    a, bound = cramer_preimage([[2, 0], [0, 2]], [1, 0])
    assert a is None
    with pytest.raises(ValidationError):
        cramer_preimage([[1, 1], [1, 1]], [1, 1])


def test_cramer_roundtrip_and_bound():
    rng = random.Random(SEED + 4)
    for _ in range(60):
        # unimodular times a known vector recovers it exactly
        U = identity_matrix(3)
        for _ in range(6):
            i, j = rng.sample(range(3), 2)
            q = rng.randint(-2, 2)
            for t in range(3):
                U[i][t] += q * U[j][t]
        x = [rng.randint(-9, 9) for _ in range(3)]
        b = mat_vec(U, x)
        a, bound = cramer_preimage(U, b)
        assert a == x
        assert all(abs(v) <= bound for v in a)


def test_cramer_agrees_with_image_membership():
    rng = random.Random(SEED + 5)
    for _ in range(80):
        M = random_matrix(rng, 3, 3, 5)
        if det(M) == 0:
            continue
        b = [rng.randint(-20, 20) for _ in range(3)]
        a, _ = cramer_preimage(M, b)
        s = image_membership(M, b)
        assert (a is None) == (s is None)
        if a is not None:
            assert mat_vec(M, a) == b


def test_det_norm_experiment_bounded():
    rows = det_norm_experiment(3, 100, seed=SEED, sub_rank=2)
    assert len(rows) == 100
    # det(H) <= C * norm^rank with C = rank! for max-entry norms
    for _, rank, norm, d, ratio in rows:
        assert ratio <= 2
    # the nZ <= Z instance has ratio exactly 1
    assert isolator_index(Lattice.from_rows(1, [(9,)])) == 9
