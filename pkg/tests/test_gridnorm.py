import itertools
import json
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addcomb import InvalidArgument, PreconditionViolation, ResourceLimit
from addcomb.gridnorm import (
    CountingInstance,
    OrientedGraph,
    counting_dichotomy,
    delta_of,
    delta_tilde,
    deviation_test,
    find_dense_rectangle,
    find_low_degree_set,
    grid_norm,
    grid_norm_naive,
    homomorphism_count,
    homomorphism_count_naive,
    homomorphism_density,
    homomorphism_density_sampled,
    kappa,
    verify_technical_witness,
    verify_witness,
)

K3 = OrientedGraph.transitive_complete(3)
EYE = np.eye(2, dtype=bool)


def diagonal_triangle():
    return CountingInstance(K3, (2, 2, 2), {e: EYE for e in K3.edges})


def test_kappa_examples():
    assert kappa(OrientedGraph(2, ((1, 2),))) == 0
    assert kappa(OrientedGraph.path(3)) == 2
    assert kappa(K3) == 6


def test_oriented_graph_rejects_bad_edges():
    with pytest.raises(InvalidArgument):
        OrientedGraph(3, ((2, 1),))
    with pytest.raises(InvalidArgument):
        OrientedGraph(3, ((1, 2), (1, 2)))


def test_delta_values():
    assert delta_of(Fraction(1, 2), 1) == Fraction(1, 64000)
    assert delta_tilde(1, K3) == Fraction(1, 36000)
    assert delta_tilde(Fraction(1, 2), OrientedGraph.path(3)) == Fraction(1, 16000)
    assert delta_tilde(Fraction(1, 10**6), K3) < Fraction(1, 10**12)
    with pytest.raises(InvalidArgument):
        delta_tilde(1, OrientedGraph(2, ((1, 2),)))


def test_grid_norm_examples():
    assert grid_norm(np.full((3, 4), 0.3), 2, 3) == pytest.approx(0.3)
    f = np.array([[0.5, -1.0], [2.0, 0.25]])
    assert grid_norm(f, 1, 1) == abs(f.mean())
    g = np.array([[1.0, 1.0], [0.0, 0.0]])
    assert grid_norm(g, 2, 2) == pytest.approx(2**-0.5, abs=1e-12)
    with pytest.raises(ResourceLimit):
        grid_norm(np.ones((50, 50)), 6, 6)
    with pytest.raises(InvalidArgument):
        grid_norm(g, 0, 1)


def test_homomorphism_density_examples():
    assert homomorphism_density(diagonal_triangle()) == Fraction(1, 4)
    ones = CountingInstance(K3, (2, 3, 2), {e: np.ones((s, t), bool) for e, (s, t) in
                                            zip(K3.edges, [(2, 3), (2, 2), (3, 2)])})
    assert homomorphism_density(ones) == 1
    H = OrientedGraph(2, ((1, 2),))
    t = np.array([[1, 0, 1], [0, 0, 1]], dtype=bool)
    assert homomorphism_density(CountingInstance(H, (2, 3), {(1, 2): t})) == Fraction(3, 6)


def test_count_cap():
    with pytest.raises(ResourceLimit):
        homomorphism_count(diagonal_triangle(), cap=7)


def test_sampled_density_close():
    est, err = homomorphism_density_sampled(diagonal_triangle(), 20000, seed=1)
    assert abs(est - 0.25) <= 5 * err + 1e-9


def test_deviation_examples():
    dev = deviation_test(diagonal_triangle(), 1)
    assert dev.fired and dev.density == Fraction(1, 4) and dev.expected == Fraction(1, 8)
    H = OrientedGraph(2, ((1, 2),))
    rect = np.zeros((3, 4), bool)
    rect[np.ix_([0, 2], [1, 2, 3])] = True
    assert not deviation_test(CountingInstance(H, (3, 4), {(1, 2): rect}), Fraction(1, 100)).fired


def test_rectangle_examples():
    assert find_dense_rectangle(np.ones((3, 3), bool), Fraction(1, 10)) is None
    r = find_dense_rectangle(EYE, Fraction(1, 2))
    assert r is not None and r.mean == 1 and len(r.S) == len(r.T) == 1
    single = np.zeros((4, 4), bool)
    single[0, 0] = True
    r = find_dense_rectangle(single, 1)
    # the larger-rectangle preference may beat the singleton {0} x {0}; both qualify
    assert r.mean >= 2 * Fraction(1, 16)
    assert int(single[np.ix_(r.S, r.T)].sum()) == r.mean * len(r.S) * len(r.T)
    assert min(len(r.S), len(r.T)) >= 1


def test_rectangle_peeling_flagged():
    t = np.zeros((20, 20), bool)
    t[:5, :5] = True
    r = find_dense_rectangle(t, Fraction(1, 2))
    assert r is not None and r.heuristic and r.mean >= Fraction(3, 2) * Fraction(25, 400)


def test_low_degree_examples():
    assert find_low_degree_set(np.ones((3, 3), bool), Fraction(1, 10)) is None
    t = np.array([[1, 1], [0, 0]], dtype=bool)
    assert find_low_degree_set(t, Fraction(1, 2)) == (1,)
    padded = np.vstack([EYE, np.zeros((2, 2), bool)])
    assert {2, 3} <= set(find_low_degree_set(padded, Fraction(9, 10)))


def test_dichotomy_examples():
    w = counting_dichotomy(diagonal_triangle(), 1)
    assert w.variant == "rectangle" and verify_witness(diagonal_triangle(), w)
    assert w.mean >= (1 + w.delta) * Fraction(1, 2)
    with pytest.raises(PreconditionViolation):
        counting_dichotomy(CountingInstance(K3, (2, 2, 2), {e: np.ones((2, 2), bool) for e in K3.edges}), 1)


def test_tampered_witness_rejected():
    inst = diagonal_triangle()
    w = counting_dichotomy(inst, 1)
    assert not verify_witness(inst, replace(w, S=(0, 1), T=(0, 1)))


def test_technical_witness_examples():
    assert not verify_technical_witness(np.ones((3, 3)), {"kind": "grid", "r": 2, "p": 2, "delta": 0.01}).passed
    c = verify_technical_witness(EYE.astype(float), {"kind": "grid", "r": 2, "p": 2, "delta": 0.18})
    assert c.passed and c.lhs == pytest.approx((2 / 16) ** 0.25)
    assert not verify_technical_witness(EYE.astype(float), {"kind": "grid", "r": 2, "p": 2, "delta": 0.19}).passed
    assert not verify_technical_witness(EYE.astype(float), {"kind": "row", "p": 2, "delta": 0.01}).passed
    with pytest.raises(InvalidArgument):
        verify_technical_witness(EYE, {"kind": "other"})


def test_instance_serialization():
    inst = diagonal_triangle()
    back = CountingInstance.from_dict(json.loads(json.dumps(inst.to_dict())))
    assert back.graph == inst.graph and homomorphism_count(back) == homomorphism_count(inst)


def test_kappa_matches_degree_sum_sampled():
    rng = np.random.default_rng(8)
    pairs = list(itertools.combinations(range(1, 9), 2))
    for _ in range(2000):
        k = int(rng.integers(2, 9))
        avail = [e for e in pairs if e[1] <= k]
        edges = tuple(e for e in avail if rng.random() < 0.4)
        H = OrientedGraph(k, edges)
        assert kappa(H) == sum(d for d in H.degrees() if d > 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_grid_norm_factored_matches_naive(nx, ny, p, q, seed):
    f = np.random.default_rng(seed).normal(size=(nx, ny))
    assert abs(grid_norm(f, p, q) - grid_norm_naive(f, p, q)) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_homomorphism_count_matches_naive(k, seed):
    rng = np.random.default_rng(seed)
    edges = tuple(e for e in itertools.combinations(range(1, k + 1), 2) if rng.random() < 0.7)
    H = OrientedGraph(k, edges)
    sizes = tuple(int(s) for s in rng.integers(1, 5, size=k))
    tables = {(i, j): rng.random((sizes[i - 1], sizes[j - 1])) < 0.5 for i, j in edges}
    inst = CountingInstance(H, sizes, tables)
    assert homomorphism_count(inst) == homomorphism_count_naive(inst)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([Fraction(1, 2), Fraction(1, 4), Fraction(1)]))
def test_every_witness_reverifies(seed, eps):
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in rng.integers(1, 5, size=3))
    tables = {(i, j): rng.random((sizes[i - 1], sizes[j - 1])) < 0.5 for i, j in K3.edges}
    inst = CountingInstance(K3, sizes, tables)
    if deviation_test(inst, eps).fired:
        w = counting_dichotomy(inst, eps)
        assert w.variant == "none" or verify_witness(inst, w)
