import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addcomb import InvalidArgument, PreconditionViolation, ResourceLimit, make_group
from addcomb.configs import (
    behrend_set,
    check_embedding,
    clique_counts,
    count_k_configurations,
    count_k_configurations_naive,
    degenerate_bound_check,
    embed_interval,
    find_nondegenerate_configuration,
    has_3ap,
    midpoint_graph,
    random_set,
    stirling2,
)

Z5, Z7 = make_group(5), make_group(7)


def test_midpoint_graph_examples():
    g = midpoint_graph(range(7), Z7)
    assert all(len(g.neighbours(v)) == 6 for v in range(7))
    assert midpoint_graph([0, 1, 2], Z5).edges() == [(0, 2)]
    single = midpoint_graph([0], Z5)
    assert single.vertices == (0,) and single.edges() == []
    with pytest.raises(PreconditionViolation):
        midpoint_graph([0, 1], make_group(4))


def test_count_examples():
    for k in (2, 3):
        r = count_k_configurations(range(7), k, Z7)
        assert r.count == 7**k and r.probability == 1
    r = count_k_configurations([0], 2, Z5)
    assert (r.count, r.probability) == (1, Fraction(1, 25))
    r = count_k_configurations([0, 1, 2], 2, Z5)
    assert (r.count, r.probability) == (5, Fraction(1, 5))
    assert r.nondegenerate_ordered == 2
    with pytest.raises(InvalidArgument):
        count_k_configurations([0], 1, Z5)


def test_count_cap():
    G = make_group(31)
    with pytest.raises(ResourceLimit):
        count_k_configurations(range(31), 6, G, cap=10)


def test_find_config_examples():
    assert find_nondegenerate_configuration([0, 1, 2], 2, Z5) == (0, 2)
    assert find_nondegenerate_configuration([0], 3, Z5) is None
    hit = find_nondegenerate_configuration(range(7), 5, Z7)
    assert hit is not None and len(set(hit)) == 5


def test_degenerate_bound_examples():
    assert degenerate_bound_check([0], 2, Z5).passed
    r = degenerate_bound_check([0], 3, Z7)
    assert r.probability == Fraction(1, 343) and r.bound == Fraction(3, 7) and r.passed
    with pytest.raises(PreconditionViolation):
        degenerate_bound_check([0, 1, 2], 2, Z5)


def test_degenerate_bound_on_searched_free_set():
    G = make_group(101)
    rng = np.random.default_rng(4)
    found = False
    for _ in range(200):
        A = [int(a) for a in rng.choice(101, size=int(rng.integers(3, 12)), replace=False)]
        if find_nondegenerate_configuration(A, 3, G) is None:
            assert degenerate_bound_check(A, 3, G).passed
            found = True
    assert found


def test_behrend_examples():
    assert behrend_set(1) == [1]
    ten = behrend_set(10)
    assert not has_3ap(ten) and set(ten) <= set(range(1, 11)) and len(ten) >= 3
    big = behrend_set(10_000)
    assert not has_3ap(big) and max(big) <= 10_000
    assert not has_3ap([1, 2, 4, 5, 10])
    with pytest.raises(InvalidArgument):
        behrend_set(0)


def test_behrend_sizes_nondecreasing():
    sizes = [len(behrend_set(n)) for n in (100, 1000, 10000)]
    assert sizes == sorted(sizes)


def test_has_3ap_matches_brute_force():
    for bits in range(1 << 10):
        A = [i + 1 for i in range(10) if bits >> i & 1]
        brute = any(a + c == 2 * b for a, b, c in itertools.combinations(A, 3))
        assert has_3ap(A) == brute


def test_embed_examples():
    G, image = embed_interval([1, 2, 3], 3)
    assert G.order == 7 and image == [1, 2, 3]
    eq = check_embedding([1, 2, 3], 3, 2)
    assert eq.agree and eq.integer_side == (1, 3)
    eq = check_embedding([1], 5, 2)
    assert eq.agree and eq.integer_side is None and eq.group_side is None
    with pytest.raises(InvalidArgument):
        embed_interval([0, 2], 3)


def test_embedding_equivalence_random():
    for seed in range(60):
        A = random_set(30, 0.25, seed)
        for k in (2, 3):
            assert check_embedding(A, 30, k).agree


def test_random_set_examples():
    G = make_group([3, 5])
    assert random_set(G, 0, 1) == []
    assert random_set(G, 1, 1) == list(range(15))
    assert random_set(G, 0.4, 9) == random_set(G, 0.4, 9)
    assert random_set(20, 1, 0) == list(range(1, 21))
    with pytest.raises(InvalidArgument):
        random_set(G, 1.5, 0)


def test_stirling_numbers():
    assert [stirling2(4, s) for s in range(5)] == [0, 1, 7, 6, 1]
    for k in range(1, 7):
        assert sum(stirling2(k, s) * math.perm(5, s) for s in range(k + 1)) == 5**k


def test_clique_counts_complete_graph():
    n = 6
    adj = [((1 << n) - 1) & ~(1 << v) for v in range(n)]
    assert clique_counts(adj, 4) == [math.comb(n, s) for s in range(5)]


def test_oracle_all_subsets_z7_k3():
    for bits in range(1 << 7):
        A = [i for i in range(7) if bits >> i & 1]
        assert count_k_configurations(A, 3, Z7).count == count_k_configurations_naive(A, 3, Z7)


def test_k2_count_is_3ap_count():
    G = make_group(11)
    rng = np.random.default_rng(0)
    for _ in range(30):
        A = set(random_set(G, float(rng.uniform(0.1, 0.9)), int(rng.integers(1 << 30))))
        # ordered 3APs (x, m, y) inside A, counted by their end points
        direct = sum(1 for x in A for y in A if ((x + y) * 6) % 11 in A)
        assert count_k_configurations(A, 2, G).count == direct


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 4]), st.floats(0.1, 0.9))
def test_oracle_on_product_group(seed, k, density):
    G = make_group([3, 5])
    A = random_set(G, density, seed)
    assert count_k_configurations(A, k, G).count == count_k_configurations_naive(A, k, G)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([7, 9, 15]), st.integers(0, 2**32 - 1), st.data())
def test_translation_and_dilation_invariance(N, seed, data):
    G = make_group(N)
    A = random_set(G, 0.5, seed)
    base = count_k_configurations(A, 3, G).count
    t = data.draw(st.integers(0, N - 1))
    lam = data.draw(st.sampled_from([u for u in range(1, N) if math.gcd(u, N) == 1]))
    assert count_k_configurations([(a + t) % N for a in A], 3, G).count == base
    assert count_k_configurations([(lam * a) % N for a in A], 3, G).count == base


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3000))
def test_behrend_always_3ap_free(N):
    S = behrend_set(N)
    assert S and not has_3ap(S) and min(S) >= 1 and max(S) <= N
