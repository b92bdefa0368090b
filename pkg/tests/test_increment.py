from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addcomb import (
    DenseFunction,
    InvalidArgument,
    PreconditionViolation,
    bohr_build,
    convolve,
    diff_convolve,
    dilate,
    make_group,
    normalized_indicator,
)
from addcomb.bohr import regular_dilate
from addcomb.configs import random_set
from addcomb.harmonic import convolution_power, point_mass, uniform
from addcomb.increment import (
    IncrementConfig,
    L,
    SiftInstance,
    averaging_shift,
    build_translate_family,
    fourier_sum_bound_check,
    holder_lifting_scan,
    increment_search,
    level_set_S,
    overlap_counts,
    sift,
    translate_dichotomy,
    verify_increment,
    verify_sift,
    verify_translate_verdict,
)

G63 = make_group(63)


def test_L():
    assert L(2) == 0
    assert L(0.5) == pytest.approx(np.log(4))


def test_overlap_counts_brute_force():
    G = make_group([3, 7])
    S = random_set(G, 0.4, 1)
    T = random_set(G, 0.6, 2)
    c = overlap_counts(G, S, T)
    for x in range(G.order):
        shifted = {int(G.add_idx(t, x)) for t in T}
        assert c[x] == len(set(S) & shifted)


def test_level_set_full_group():
    G = make_group(9)
    full = range(9)
    lev = level_set_S(SiftInstance(G, full, full, full, full, 3, 0.25, 1.0))
    assert lev.norm == pytest.approx(1) and lev.S.tolist() == list(range(9))


def test_level_set_small_example():
    G = make_group(9)
    A, full = [0, 1, 3], range(9)
    # p = 2 would violate p >= log(2/delta)/eps at eps = 1/4, so use p = 3 with delta = 1
    inst = SiftInstance(G, A, A, full, full, 3, 0.25, 1.0)
    lev = level_set_S(inst)
    direct = diff_convolve(normalized_indicator(G, A), normalized_indicator(G, A)).values
    assert np.allclose(lev.values, direct)
    norm = np.mean(direct**3) ** (1 / 3)
    assert lev.norm == pytest.approx(norm)
    assert lev.S.tolist() == [x for x in range(9) if direct[x] >= 0.75 * norm - 1e-12]


def test_level_set_near_one_covers_support():
    G = make_group(15)
    A = [0, 2, 3, 7]
    inst = SiftInstance(G, A, A, range(15), range(15), 10**6, 0.999999, 1.0)
    lev = level_set_S(inst)
    assert set(np.flatnonzero(lev.values > 0)) <= set(lev.S.tolist())


def test_sift_full_group():
    full = range(63)
    inst = SiftInstance(G63, full, full, full, full, 6, 0.25, 0.5)
    out = sift(inst)
    assert out.accepted and out.trials == 1 and out.alpha1p == 1 and out.s_mass == 1
    assert verify_sift(inst, out)


def test_sift_precondition_and_validation():
    with pytest.raises(PreconditionViolation):
        SiftInstance(G63, [1], [1], range(63), range(63), 5, 0.25, 0.5)
    with pytest.raises(InvalidArgument):
        SiftInstance(G63, [], [1], range(63), range(63), 6, 0.25, 0.5)
    with pytest.raises(InvalidArgument):
        SiftInstance(G63, [1], [1], range(63), range(63), 6, 0, 0.5)


def test_sift_random_seeds_verify():
    full = range(63)
    for seed in range(5):
        inst = SiftInstance(G63, random_set(G63, 0.5, 2 * seed), random_set(G63, 0.5, 2 * seed + 1),
                            full, full, 6, 0.25, 0.5, seed)
        out = sift(inst)
        assert out.accepted and verify_sift(inst, out)
        assert out.alpha1p >= Fraction(out.floor1) and out.s_mass >= Fraction(1, 2)


def test_verify_sift_rejects_tampering():
    full = range(63)
    inst = SiftInstance(G63, random_set(G63, 0.5, 0), random_set(G63, 0.5, 1), full, full, 6, 0.25, 0.5)
    out = sift(inst)
    assert not verify_sift(inst, replace(out, A1p=out.A1p[1:]))


def test_averaging_examples():
    G = make_group(15)
    rng = np.random.default_rng(3)
    f = DenseFunction(G, rng.normal(size=15))
    u = uniform(G)
    r = averaging_shift(f, 2, u, u, u, 1)
    assert r.passed and r.achieved == pytest.approx(r.target)
    r = averaging_shift(f, 3, u, point_mass(G, 0), u, 1)
    assert r.achieved == pytest.approx(np.abs(f.values).max()) and r.passed
    with pytest.raises(PreconditionViolation):
        averaging_shift(f, 2, point_mass(G, 0), u, u, 1)


def test_averaging_with_bohr_domination():
    G = make_group(15)
    B = regular_dilate(bohr_build([G.character(1)], 1.5))
    delta = 0.01
    mu = B.measure()
    nu = convolution_power(dilate(B, delta).measure(), 1)
    eta = dilate(B, 1 + delta).measure()
    rng = np.random.default_rng(6)
    for _ in range(10):
        f = DenseFunction(G, rng.normal(size=15))
        assert averaging_shift(f, 2, mu, nu, eta, 2).passed


def test_lifting_examples():
    G = make_group(15)
    full = range(15)
    r = holder_lifting_scan(G, full, full, full, full, [3, 4], 0.1)
    assert r.alt_i and r.deviation == pytest.approx(0, abs=1e-12)
    sub = [0, 5, 10]
    r = holder_lifting_scan(G, sub, sub, sub, full, [0, 5], 0.1)
    assert r.alt_i and r.deviation == pytest.approx(0, abs=1e-9)


def test_lifting_scan_finds_p():
    full = range(63)
    r = holder_lifting_scan(G63, random_set(G63, 0.5, 0), random_set(G63, 0.5, 1), full, full, [0], 0.25)
    assert not r.alt_i and r.p is not None and r.p <= 32
    assert r.norms[-1] >= r.target and all(v < r.target for v in r.norms[:-1])


def test_lifting_point_mass_small_p():
    G = make_group(31)
    A = [0, 1, 2]
    conv = convolve(normalized_indicator(G, A), normalized_indicator(G, A)).values
    peak = int(np.argmax(conv))
    r = holder_lifting_scan(G, A, A, range(31), range(31), [peak], 0.5)
    assert not r.alt_i and r.p is not None and r.p <= 3


def test_fourier_sum_examples():
    G = make_group(15)
    full = range(15)
    r = fourier_sum_bound_check(G, full, full, full, full, full)
    assert r.lhs == pytest.approx(1) and r.rhs == pytest.approx(1) and r.passed
    r = fourier_sum_bound_check(G, [1], [2], [3], [4], full)
    assert r.passed and r.lhs <= G.order + 1e-9
    with pytest.raises(PreconditionViolation):
        fourier_sum_bound_check(G, [1], [1], [1], [2], [1])


def test_translate_examples():
    G = make_group(15)
    B = bohr_build([G.character(1)], 1.0)
    fam = [B, dilate(B, 0.5)]
    v = translate_dichotomy(G, [], fam, 0.125, 2)
    assert (v.x, v.verdict, v.alpha) == (0, "uniform", 0)
    whole = bohr_build([G.trivial_character], 2.0)
    v = translate_dichotomy(G, range(15), [whole, dilate(whole, 0.5)], 0.125, 2)
    assert v.verdict == "uniform" and all(d == 1 for d in v.densities)
    with pytest.raises(InvalidArgument):
        translate_dichotomy(G, [1], [], 0.1, 2)


def test_translate_on_z101():
    G = make_group(101)
    B = regular_dilate(bohr_build([G.character(1)], 1.5))
    rng = np.random.default_rng(11)
    A = [int(b) for b in B.members if rng.random() < 1 / 3]
    fam = build_translate_family(B, 2, 0.5).members
    assert len(fam) == 4
    v = translate_dichotomy(G, A, fam, 0.125, 2, ambient=B)
    assert v.verdict in ("uniform", "increment") and verify_translate_verdict(G, A, fam, 0.125, 2, v)


def test_translate_family_shape():
    G = make_group(101)
    B = regular_dilate(bohr_build([G.character(1), G.character(7)], 1.8))
    fam = build_translate_family(B, 3, 0.5)
    assert fam.lambdas[-1] == 1 and len(fam.lambdas) == 4
    for lo, hi in zip(fam.lambdas, fam.lambdas[1:]):
        assert 0.25 * hi - 1e-12 <= lo <= 0.5 * hi + 1e-12


def test_increment_on_progression_like_set():
    G = make_group(401)
    B = regular_dilate(bohr_build([G.character(1)], 1.0))
    A = [int(b) for b in B.members if b < 200]  # the non-negative half of an interval
    rep = increment_search(A, B, 3)
    assert rep.witness is not None and rep.verified
    assert verify_increment(G, A, rep.alpha, rep.delta_target, rep.witness)
    assert rep.witness.density >= (1 + Fraction(rep.delta_target)) * rep.alpha


def test_increment_full_set_has_none():
    G = make_group(401)
    B = regular_dilate(bohr_build([G.character(1)], 1.0))
    rep = increment_search(B.members, B, 3)
    assert rep.alpha == 1 and rep.witness is None and rep.proportion is not None


def test_increment_sparse_set_reports_shape():
    G = make_group(401)
    B = regular_dilate(bohr_build([G.character(1)], 1.0))
    A = [int(b) for b in B.members[::5]]
    rep = increment_search(A, B, 3, IncrementConfig(width_steps=4))
    assert rep.threshold_shape >= 0 and rep.proportion is not None
    assert "heuristic" in rep.notes


def test_increment_preconditions():
    G = make_group(401)
    B = regular_dilate(bohr_build([G.character(1)], 1.0))
    outside = [int(x) for x in range(401) if x not in set(B.members.tolist())][:3]
    with pytest.raises(PreconditionViolation):
        increment_search(outside, B, 3)
    with pytest.raises(PreconditionViolation):
        increment_search([0], bohr_build([make_group(8).character(1)], 1.0), 3)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(15,), (63,), (3, 5, 7), (101,), (999,)]), st.integers(0, 2**32 - 1))
def test_fourier_sum_bound_random(moduli, seed):
    G = make_group(moduli)
    rng = np.random.default_rng(seed)
    B = rng.choice(G.order, int(rng.integers(1, G.order + 1)), replace=False)
    A1 = rng.choice(B, int(rng.integers(1, len(B) + 1)), replace=False)
    A2 = rng.choice(B, int(rng.integers(1, len(B) + 1)), replace=False)
    A1p = rng.choice(A1, int(rng.integers(1, len(A1) + 1)), replace=False)
    A2p = rng.choice(A2, int(rng.integers(1, len(A2) + 1)), replace=False)
    assert fourier_sum_bound_check(G, A1p, A2p, A1, A2, B).passed


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.02, 0.5), st.integers(1, 4))
def test_translate_verdicts_reverify(seed, gamma, k):
    G = make_group(45)
    rng = np.random.default_rng(seed)
    A = [int(a) for a in np.flatnonzero(rng.random(45) < 0.4)]
    B = bohr_build([G.character(int(rng.integers(1, 45)))], float(rng.uniform(0.5, 2)))
    fam = [dilate(B, s) for s in (1, 0.75, 0.5)]
    v = translate_dichotomy(G, A, fam, gamma, k)
    if v.verdict != "none":
        assert verify_translate_verdict(G, A, fam, gamma, k, v)
