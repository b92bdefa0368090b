"""The release gate: fourteen criteria, each with its tolerance and time budget.

Each criterion returns a :class:`CriterionResult` whose ``row`` holds only
deterministic quantities, so its CSV rendering can be compared byte for byte
across runs (criterion 14).
"""

from __future__ import annotations

import io
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bohr, configs, gridnorm, harmonic, increment, sumfree
from .group import make_group
from .report import to_csv


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = 0.0
    row: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.2f}s / {self.budget:g}s)"


# 1 ------------------------------------------------------------------------------


def crit_harmonic(seed: int = 1, trials: int = 100, convolve=None, diff_convolve=None) -> dict:
    convolve = convolve or harmonic.convolve
    diff_convolve = diff_convolve or harmonic.diff_convolve
    worst = {"adjoint": 0.0, "convolution": 0.0, "parseval": 0.0}
    for moduli in ([101], [4, 9], [2, 3, 5]):
        G = make_group(moduli)
        rng = np.random.default_rng([seed, G.order])
        for _ in range(trials):
            f, g, h = (harmonic.DenseFunction(G, rng.normal(size=G.order) + 1j * rng.normal(size=G.order))
                       for _ in range(3))
            a = harmonic.inner(convolve(f, g), h)
            b = harmonic.inner(f, diff_convolve(h, g))
            worst["adjoint"] = max(worst["adjoint"], abs(a - b))
            lhs = harmonic.fourier(convolve(f, g)).values
            rhs = harmonic.fourier(f).values * harmonic.fourier(g).values
            worst["convolution"] = max(worst["convolution"], float(np.max(np.abs(lhs - rhs))))
            pars = float(np.sum(np.abs(harmonic.fourier(f).values) ** 2))
            worst["parseval"] = max(worst["parseval"], abs(pars - harmonic.lp_norm(f, 2) ** 2))
    return worst


def criterion_1(seed: int = 1) -> CriterionResult:
    worst = crit_harmonic(seed)
    ok = all(v <= 1e-10 for v in worst.values())
    detail = ", ".join(f"{k} err {v:.2e}" for k, v in worst.items())
    return CriterionResult(1, "harmonic identities", ok, detail, row={k: v <= 1e-10 for k, v in worst.items()})


# 2 ------------------------------------------------------------------------------


def _random_freqs(G, d, rng):
    return [G.character(int(rng.integers(0, G.order))) for _ in range(d)]


def criterion_2(seed: int = 2) -> CriterionResult:
    checked = failures = 0
    rhos = [round(0.1 * i, 10) for i in range(1, 21)]
    for N in (101, 1009):
        G = make_group(N)
        for d in (1, 2, 3):
            rng = np.random.default_rng([seed, N, d])
            for _ in range(50):
                base = bohr.bohr_build(_random_freqs(G, d, rng), 1.0, G)
                for rho in rhos:
                    B = bohr.dilate(base, rho)
                    checked += 1
                    failures += not bohr.size_bound_check(B).passed
    return CriterionResult(2, "Bohr size bound", failures == 0, f"{checked} sets, {failures} violations",
                           row={"checked": checked, "failures": failures})


# 3 ------------------------------------------------------------------------------


def criterion_3(seed: int = 3) -> CriterionResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(100):
        N = int(rng.integers(5, 5001))
        G = make_group(N)
        d = int(rng.integers(1, 5))
        B = bohr.bohr_build(_random_freqs(G, d, rng), float(rng.uniform(0.05, 2.0)), G)
        try:
            lam = bohr.find_regular_dilate(B)
        except Exception:
            failures += 1
            continue
        if not (0.5 <= lam <= 1 and bohr.is_regular(bohr.dilate(B, lam))):
            failures += 1
    return CriterionResult(3, "regular dilate", failures == 0, f"100 Bohr sets, {failures} failures",
                           row={"failures": failures})


# 4 ------------------------------------------------------------------------------


def criterion_4(seed: int = 4) -> CriterionResult:
    mismatches = 0
    G7 = make_group(7)
    for mask in range(128):
        A = [i for i in range(7) if mask >> i & 1]
        mismatches += configs.count_k_configurations(A, 3, G7).count != configs.count_k_configurations_naive(A, 3, G7)
    G15 = make_group([3, 5])
    rng = np.random.default_rng(seed)
    for _ in range(200):
        A = configs.random_set(G15, float(rng.uniform(0.2, 0.9)), int(rng.integers(0, 2**31)))
        for k in (3, 4):
            mismatches += configs.count_k_configurations(A, k, G15).count != configs.count_k_configurations_naive(A, k, G15)
    return CriterionResult(4, "configuration-count oracle", mismatches == 0, f"528 comparisons, {mismatches} mismatches",
                           row={"mismatches": mismatches})


# 5 ------------------------------------------------------------------------------


def criterion_5() -> CriterionResult:
    bad = checked = 0
    for n in (7, 9):
        G = make_group(n)
        units = [u for u in range(1, n) if math.gcd(u, n) == 1]
        for mask in range(1 << n):
            A = np.array([i for i in range(n) if mask >> i & 1], dtype=np.int64)
            ref = configs.count_k_configurations(A, 3, G).count
            for t in range(1, n):
                checked += 1
                bad += configs.count_k_configurations((A + t) % n, 3, G).count != ref
            for u in units[1:]:
                checked += 1
                bad += configs.count_k_configurations((A * u) % n, 3, G).count != ref
    return CriterionResult(5, "translation/dilation invariance", bad == 0, f"{checked} comparisons, {bad} mismatches",
                           row={"checked": checked, "mismatches": bad})


# 6 ------------------------------------------------------------------------------


def criterion_6(seed: int = 6) -> CriterionResult:
    disagree = 0
    free = 0
    for s in range(100):
        density = 0.1 + 0.1 * (s % 5)
        A = configs.random_set(30, density, seed * 1000 + s) or [1]
        for k in (2, 3):
            eq = configs.check_embedding(A, 30, k)
            disagree += not eq.agree
            free += eq.integer_side is None
    return CriterionResult(6, "interval embedding", disagree == 0,
                           f"200 checks, {disagree} disagreements, {free} configuration-free",
                           row={"disagreements": disagree, "free": free})


# 7 ------------------------------------------------------------------------------


def criterion_7(seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    exact = True
    for _ in range(500):
        nx, ny = (int(v) for v in rng.integers(1, 5, size=2))
        f = (rng.random((nx, ny)) < 0.5).astype(float)
        for p, q in itertools.product((1, 2, 3), repeat=2):
            worst = max(worst, abs(gridnorm.grid_norm(f, p, q) - grid_norm_vectorised(f, p, q)))
        exact &= gridnorm.grid_norm(f, 1, 1) == abs(f.mean())
    ok = worst <= 1e-10 and exact
    return CriterionResult(7, "grid-norm oracle", ok, f"max error {worst:.2e}, U(1,1) exact: {exact}",
                           row={"within_tol": worst <= 1e-10, "u11_exact": exact})


def grid_norm_vectorised(f, p: int, q: int) -> float:
    """Full average of prod_{i,j} f(x_i, y_j) over X^p x Y^q, without factoring."""
    f = np.asarray(f, dtype=float)
    nx, ny = f.shape
    xs = np.array(list(itertools.product(range(nx), repeat=p)), dtype=np.int64)
    ys = np.array(list(itertools.product(range(ny), repeat=q)), dtype=np.int64)
    prod = np.ones((len(xs), len(ys)))
    for i in range(p):
        for j in range(q):
            prod *= f[xs[:, i]][:, ys[:, j]]
    return float(abs(prod.mean()) ** (1.0 / (p * q)))


# 8 ------------------------------------------------------------------------------


def criterion_8() -> CriterionResult:
    H = gridnorm.OrientedGraph.transitive_complete(3)
    tables = list(gridnorm.all_tables(2, 2))
    fired = unverified = 0
    variants = {"rectangle": 0, "low_degree": 0, "none": 0}
    for combo in itertools.product(range(16), repeat=3):
        inst = gridnorm.CountingInstance(H, (2, 2, 2), {e: tables[c] for e, c in zip(H.edges, combo)})
        if not gridnorm.deviation_test(inst, Fraction(1, 2)).fired:
            continue
        fired += 1
        w = gridnorm.counting_dichotomy(inst, Fraction(1, 2))
        variants[w.variant] += 1
        unverified += not gridnorm.verify_witness(inst, w)
    detail = f"{fired} fired, {unverified} without a verified witness ({variants})"
    return CriterionResult(8, "counting dichotomy", unverified == 0, detail, row={"fired": fired, "unverified": unverified, **variants})


# 9 ------------------------------------------------------------------------------


def criterion_9(seed: int = 9) -> CriterionResult:
    G = make_group(63)
    failures = 0
    total_trials = 0
    for s in range(20):
        rng = np.random.default_rng([seed, s])
        A1 = np.flatnonzero(rng.random(63) < 0.5)
        A2 = np.flatnonzero(rng.random(63) < 0.5)
        inst = increment.SiftInstance(G, A1, A2, range(63), range(63), 6, 0.25, 0.5, seed * 100 + s)
        out = increment.sift(inst, 100_000)
        total_trials += out.trials
        failures += not (out.accepted and increment.verify_sift(inst, out))
    return CriterionResult(9, "sifting", failures == 0, f"20 instances, {failures} failures, {total_trials} trials in total",
                           row={"failures": failures, "trials": total_trials})


# 10 -----------------------------------------------------------------------------


def criterion_10(seed: int = 10) -> CriterionResult:
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    shapes = ([1000], [999], [10, 100], [3, 5, 7], [8, 125], [2, 2, 250], [97], [31, 31])
    for i in range(100):
        G = make_group(shapes[i % len(shapes)])
        n = G.order

        def subset(pool, dens):
            pick = pool[rng.random(len(pool)) < dens]
            return pick if pick.size else pool[:1]

        B = subset(np.arange(n), float(rng.uniform(0.05, 1.0)))
        A1, A2 = subset(B, float(rng.uniform(0.05, 1.0))), subset(B, float(rng.uniform(0.05, 1.0)))
        A1p, A2p = subset(np.arange(n), float(rng.uniform(0.01, 1.0))), subset(np.arange(n), float(rng.uniform(0.01, 1.0)))
        chk = increment.fourier_sum_bound_check(G, A1p, A2p, A1, A2, B)
        failures += not chk.passed
        worst = max(worst, chk.lhs / chk.rhs)
    return CriterionResult(10, "Fourier-sum bound", failures == 0, f"100 instances, {failures} failures, max lhs/rhs {worst:.6f}",
                           row={"failures": failures})


# 11 -----------------------------------------------------------------------------


def criterion_11(seed: int = 11) -> CriterionResult:
    mism = 0
    for mask in range(1 << 10):
        A = [i + 1 for i in range(10) if mask >> i & 1]
        mism += sumfree.exact_M(A).value != sumfree.exact_M_bruteforce(A)
    for n in range(1, 13):
        A = list(range(1, n + 1))
        mism += sumfree.exact_M(A).value != sumfree.exact_M_bruteforce(A)
    rng = np.random.default_rng(seed)
    not_free = below = 0
    for _ in range(1000):
        n = int(round(math.exp(rng.uniform(math.log(8), math.log(1024)))))
        A = sorted(int(a) + 1 for a in rng.choice(4 * n, size=n, replace=False))
        B = sumfree.greedy_sumfree(A)
        not_free += not sumfree.is_sumfree_wrt(B, A)
        below += len(B) < math.floor(math.log2(len(A)))
    ok = mism == 0 and not_free == 0 and below == 0
    detail = f"{mism} exact-M mismatches, {not_free} greedy outputs not sum-free, {below} below floor(log2 n)"
    return CriterionResult(11, "sum-free exactness", ok, detail, row={"mismatches": mism, "not_free": not_free, "below": below})


# 12 -----------------------------------------------------------------------------


def criterion_12(seed: int = 12) -> CriterionResult:
    failures = 0
    for s in range(50):
        rng = np.random.default_rng([seed, s])
        n = int(rng.integers(1, 11))
        A = sorted(int(a) + 1 for a in rng.choice(200, size=n, replace=False))
        r = sumfree.ruzsa_embed(A, trials=10_000, seed=s)
        ok = (r.ok and 2 * len(r.A_prime) >= len(A) and r.N > 4 * sumfree.doubling_stats(A).diffset
              and sumfree.verify_freiman(r.A_prime, r.mapping, r.N)[0])
        failures += not ok
    return CriterionResult(12, "Freiman embedding", failures == 0, f"50 sets, {failures} failures", row={"failures": failures})


# 13 -----------------------------------------------------------------------------


def criterion_13() -> CriterionResult:
    sizes = []
    ok = True
    for N in (100, 1000, 10000):
        S = configs.behrend_set(N)
        ok &= not configs.has_3ap(S) and all(1 <= a <= N for a in S)
        sizes.append(len(S))
    ok &= sizes == sorted(sizes)
    return CriterionResult(13, "Behrend generator", ok, f"sizes {sizes}", row={"sizes": sizes})


# 14 -----------------------------------------------------------------------------


def _csv_of(fn: Callable[[], CriterionResult]) -> str:
    r = fn()
    return to_csv([{"criterion": r.number, "passed": r.passed, **r.row}])


def criterion_14() -> CriterionResult:
    from .cli import main

    def cli_bytes(argv):
        buf = io.StringIO()
        main(argv + ["--csv", "-"], stdout=buf)
        return buf.getvalue().encode()

    runs = {
        "criterion 1": lambda: _csv_of(criterion_1).encode(),
        "criterion 6": lambda: _csv_of(criterion_6).encode(),
        "criterion 13": lambda: _csv_of(criterion_13).encode(),
        "cli sift": lambda: cli_bytes(["sift", "--group", "63", "--density", "0.5", "--eps", "0.25",
                                       "--delta", "0.5", "--p", "6", "--trials", "100000", "--seed", "1"]),
        "cli count-configs": lambda: cli_bytes(["count-configs", "--group", "3,5", "--density", "0.6",
                                                "--seed", "3", "--k", "3"]),
        "cli embed-freiman": lambda: cli_bytes(["embed-freiman", "--interval", "200", "--density", "0.04",
                                                "--seed", "5", "--trials", "1000"]),
        "cli sumfree-greedy": lambda: cli_bytes(["sumfree-greedy", "--interval", "300", "--density", "0.3", "--seed", "2"]),
    }
    differing = [name for name, fn in runs.items() if fn() != fn()]
    return CriterionResult(14, "determinism", not differing,
                           f"{len(runs)} runs repeated, differing: {differing or 'none'}", row={"differing": len(differing)})


CRITERIA: dict[int, tuple[Callable[[], CriterionResult], float, tuple[str, ...]]] = {
    1: (criterion_1, 10, ("group", "harmonic")),
    2: (criterion_2, 30, ("bohr",)),
    3: (criterion_3, 120, ("bohr",)),
    4: (criterion_4, 120, ("configs",)),
    5: (criterion_5, 60, ("configs",)),
    6: (criterion_6, 60, ("configs",)),
    7: (criterion_7, 60, ("gridnorm",)),
    8: (criterion_8, 120, ("gridnorm",)),
    9: (criterion_9, 300, ("increment",)),
    10: (criterion_10, 120, ("increment",)),
    11: (criterion_11, 300, ("sumfree",)),
    12: (criterion_12, 300, ("sumfree",)),
    13: (criterion_13, 60, ("configs",)),
    14: (criterion_14, 60, ("cli",)),
}

MODULES = ("group", "harmonic", "bohr", "gridnorm", "configs", "increment", "sumfree", "cli")


def run_criterion(number: int) -> CriterionResult:
    fn, budget, _ = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        res = fn()
    except Exception as exc:  # a crash is a failure, reported on one line
        res = CriterionResult(number, "crashed", False, f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    res.budget = budget
    if res.seconds > budget:
        res.passed = False
        res.detail += " [over time budget]"
    return res


def select(scope: list[str] | None) -> list[int]:
    if not scope or scope == ["all"]:
        return sorted(CRITERIA)
    unknown = [s for s in scope if s not in MODULES and not s.isdigit()]
    if unknown:
        from .errors import InvalidArgument

        raise InvalidArgument(f"unknown scope {unknown}; choose from {MODULES} or criterion numbers")
    out = []
    for n, (_, _, mods) in CRITERIA.items():
        if str(n) in scope or any(m in scope for m in mods):
            out.append(n)
    return out
