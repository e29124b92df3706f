import random

import pytest

from twistsep.errors import ValidationError
from twistsep.groups import dim5, free_abelian, heisenberg
from twistsep.malcev import multiply, power
from twistsep.subgroups import (InducedSequence, diagonal_kernel,
                                enumerate_finite_index_subgroups,
                                intersect_finite_index, power_subgroup)

SEED = 20240214
H3 = heisenberg()
D5 = dim5()


def random_word(pres, gens, rng, length=6):
    g = pres.identity
    for _ in range(length):
        s = rng.choice(gens)
        g = pres.mult(g, s if rng.random() < 0.5 else pres.inv(s))
    return g


def test_power_subgroup_examples():
    assert power_subgroup(H3, 1).index() == 1
    L2 = power_subgroup(H3, 2)
    assert L2.index() == 8
    assert [L2.entries[i][i] for i in range(3)] == [2, 2, 2]
    assert power_subgroup(H3, 6).index() == 216
    assert power_subgroup(free_abelian(4), 3).index() == 3 ** 4
    assert power_subgroup(D5, 2).index() == 2 ** 5


def test_power_subgroup_membership_is_divisibility():
    rng = random.Random(SEED)
    for m in (2, 3, 5):
        L = power_subgroup(H3, m)
        for _ in range(200):
            g = tuple(rng.randint(-12, 12) for _ in range(3))
            assert L.contains(g) == all(e % m == 0 for e in g)


def test_membership_against_word_closure():
    # <x^2, y^2>: commutator closure makes the z-part 4Z
    S = InducedSequence.from_generators(H3, [(2, 0, 0), (0, 2, 0)])
    assert S.index() == 16
    rng = random.Random(SEED + 1)
    gens = [(2, 0, 0), (0, 2, 0)]
    for _ in range(100):
        w = random_word(H3, gens, rng, 8)
        assert S.contains(w)
    assert not S.contains((0, 0, 2))
    assert S.contains((0, 0, 4))


def test_insert_with_gcd_combination():
    S = InducedSequence.from_generators(free_abelian(2), [(4, 0), (6, 1)])
    # leads combine: gcd(4, 6) = 2 at index 0
    assert S.entries[0][0] == 2
    assert S.index() is None or S.index() > 0


def test_coset_reps():
    L2 = power_subgroup(H3, 2)
    reps = set()
    rng = random.Random(SEED + 2)
    for _ in range(400):
        g = tuple(rng.randint(-9, 9) for _ in range(3))
        r = L2.coset_rep(g)
        reps.add(r)
        assert L2.coset_rep(r) == r
        # same coset: g * r^-1 ... left coset K g, so r in K g
        assert L2.contains(multiply(H3, g, H3.inv(r))) or \
            L2.contains(multiply(H3, r, H3.inv(g)))
    assert len(reps) == 8


def test_canonical_form_is_homomorphic():
    L = power_subgroup(H3, 3)
    rng = random.Random(SEED + 3)
    for _ in range(200):
        g = tuple(rng.randint(-9, 9) for _ in range(3))
        h = tuple(rng.randint(-9, 9) for _ in range(3))
        lhs = L.coset_rep(multiply(H3, g, h))
        rhs = L.coset_rep(multiply(H3, L.coset_rep(g), L.coset_rep(h)))
        assert lhs == rhs


def test_diagonal_kernel_stability():
    assert diagonal_kernel(H3, (2, 2, 2)) is not None
    assert diagonal_kernel(H3, (2, 2, 4)) is None
    assert diagonal_kernel(H3, (4, 2, 2)) is not None
    assert diagonal_kernel(H3, (2, 1, 1)) is not None
    assert diagonal_kernel(H3, (1, 3, 1)) is not None
    assert diagonal_kernel(H3, (3, 1, 3)) is None
    with pytest.raises(ValidationError):
        diagonal_kernel(H3, (2, 2))


def test_diagonal_kernel_fast_path_matches_generic():
    rng = random.Random(SEED + 4)

    def generic(pres, vec):
        gens = [power(pres, pres.gen(i), m) for i, m in enumerate(vec)]
        seq = InducedSequence.from_generators(
            pres, gens, conjugators=[pres.gen(i) for i in range(pres.h)])
        for i in range(pres.h):
            e = seq.entries.get(i)
            if e is None or e[i] != vec[i] or any(e[j] for j in range(pres.h) if j != i):
                return None
        return seq

    for _ in range(150):
        vec = tuple(rng.randint(1, 6) for _ in range(3))
        fast = diagonal_kernel(H3, vec)
        slow = generic(H3, vec)
        assert (fast is None) == (slow is None)
        if fast is not None:
            assert fast.entries == slow.entries
    for _ in range(60):
        vec = tuple(rng.randint(1, 4) for _ in range(5))
        fast = diagonal_kernel(D5, vec)
        slow = generic(D5, vec)
        assert (fast is None) == (slow is None)


def test_schreier_intersection():
    L2, L3 = power_subgroup(H3, 2), power_subgroup(H3, 3)
    inter = intersect_finite_index(H3, [L2, L3])
    assert inter == power_subgroup(H3, 6)
    # intersecting with itself is idempotent
    again = intersect_finite_index(H3, [L2, L2])
    assert again == L2


def test_congruence_subgroup_lemma_at_small_index():
    # every subgroup of index p^alpha contains the level-p^alpha congruence
    # kernel generators
    subs = enumerate_finite_index_subgroups(H3, 8)
    assert len(subs) > 10
    checked = 0
    for H in subs:
        idx = H.index()
        for p in (2, 3, 5, 7):
            alpha = 0
            n = idx
            while n % p == 0:
                n //= p
                alpha += 1
            if n == 1 and alpha > 0:
                K = power_subgroup(H3, p ** alpha)
                for g in K.generators():
                    assert H.contains(g)
                checked += 1
    assert checked > 5


def test_conjugated_subgroup():
    from twistsep.groups import heisenberg_automorphism
    phi = heisenberg_automorphism(H3, [[0, 1], [1, 0]])
    L2 = power_subgroup(H3, 2)
    assert L2.conjugated(phi) == L2
