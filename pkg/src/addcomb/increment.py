"""Sifting, averaging and density-increment tools on a finite abelian group.

Sets are arrays of element indices.  Wherever a convolution of indicator
functions feeds a yes/no decision it is first turned into an integer count
(``|S ∩ (T + x)|``) so the decision is exact.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bohr import BohrSet, bohr_build, dilate, find_regular_dilate, image_under, intersect, is_regular
from .configs import count_k_configurations
from .errors import InvalidArgument, NumericalAnomaly, PreconditionViolation, ResourceLimit
from .group import Character, FiniteAbelianGroup, psi2_power
from .harmonic import (
    DenseFunction,
    Measure,
    convolve,
    diff_convolve,
    fourier,
    indicator,
    lp_norm,
    members,
    normalized_indicator,
)

log = logging.getLogger(__name__)

MEASURE_SLACK = 1e-9
DEFAULT_C = 1 / 100
DEFAULT_BIG_C = 100


def L(t: float) -> float:
    """log(2/t), natural logarithm."""
    return math.log(2 / t)


def _mask(G: FiniteAbelianGroup, S) -> np.ndarray:
    m = np.zeros(G.order, dtype=bool)
    m[members(G, S)] = True
    return m


def overlap_counts(G: FiniteAbelianGroup, S, T) -> np.ndarray:
    """c(x) = |S ∩ (T + x)| for every x, as exact integers."""
    f = indicator(G, S)
    g = indicator(G, T)
    vals = np.real(diff_convolve(f, g).values) * G.order
    out = np.rint(vals).astype(np.int64)
    if np.max(np.abs(vals - out), initial=0.0) > 1e-6:  # pragma: no cover - numerical guard
        raise NumericalAnomaly("overlap counts are not close to integers")
    return out


def _members_of(B) -> np.ndarray:
    return B.members if isinstance(B, BohrSet) else np.asarray(B)


# sifting -----------------------------------------------------------------------


@dataclass(frozen=True)
class SiftInstance:
    group: FiniteAbelianGroup
    A1: tuple[int, ...]
    A2: tuple[int, ...]
    B1: tuple[int, ...]
    B2: tuple[int, ...]
    p: int
    eps: float
    delta: float
    seed: int = 0

    def __post_init__(self):
        G = self.group
        for name in ("A1", "A2", "B1", "B2"):
            s = tuple(int(i) for i in members(G, getattr(self, name)))
            if not s:
                raise InvalidArgument(f"{name} must be non-empty")
            object.__setattr__(self, name, s)
        if not (0 < self.eps <= 1 and 0 < self.delta <= 1):
            raise InvalidArgument("eps and delta must lie in (0, 1]")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidArgument("p must be a positive integer")
        need = L(self.delta) / self.eps
        if self.p < need:
            raise PreconditionViolation(f"p = {self.p} is below log(2/delta)/eps = {need:.6g}")

    @property
    def alpha1(self) -> Fraction:
        return Fraction(len(self.A1), self.group.order)

    @property
    def alpha2(self) -> Fraction:
        return Fraction(len(self.A2), self.group.order)


@dataclass(frozen=True)
class LevelSet:
    S: np.ndarray
    values: np.ndarray  # (mu_A1 o mu_A2)(x) for every x
    norm: float  # ||mu_A1 o mu_A2||_{L^p(mu)}
    threshold: float


def level_set_S(inst: SiftInstance) -> LevelSet:
    G = inst.group
    n = G.order
    c = overlap_counts(G, inst.A1, inst.A2)
    f = n * c / (len(inst.A1) * len(inst.A2))
    mu = n * overlap_counts(G, inst.B1, inst.B2) / (len(inst.B1) * len(inst.B2))
    top = float(f.max())
    # scaled so that large p cannot overflow
    norm = top * float(np.mean((f / top) ** inst.p * mu) ** (1 / inst.p)) if top > 0 else 0.0
    thr = (1 - inst.eps) * norm
    return LevelSet(np.flatnonzero(f >= thr), f, norm, thr)


@dataclass(frozen=True)
class SiftOutcome:
    accepted: bool
    trials: int
    t: tuple[int, ...] | None = None
    A1p: tuple[int, ...] = ()
    A2p: tuple[int, ...] = ()
    alpha1p: Fraction | None = None
    alpha2p: Fraction | None = None
    floor1: float = 0.0
    floor2: float = 0.0
    s_mass: Fraction | None = None
    rates: dict = field(default_factory=dict)


def _sifted(G: FiniteAbelianGroup, A: np.ndarray, B: np.ndarray, t: Sequence[int]) -> np.ndarray:
    keep = B.copy()
    idx = np.arange(G.order)
    for tk in t:
        keep &= A[G.add_idx(idx, int(tk))]  # x in A - t_k  iff  x + t_k in A
    return np.flatnonzero(keep)


def _s_mass(G: FiniteAbelianGroup, A1p, A2p, S_mask: np.ndarray) -> Fraction:
    c = overlap_counts(G, A1p, A2p)
    return Fraction(int(c[S_mask].sum()), len(A1p) * len(A2p))


def sift(inst: SiftInstance, max_trials: int = 100_000) -> SiftOutcome:
    """Random translates t in G^p until both conclusions hold for the sifted sets."""
    G = inst.group
    lev = level_set_S(inst)
    S_mask = np.zeros(G.order, dtype=bool)
    S_mask[lev.S] = True
    floors = [0.25 * (float(a) * lev.norm) ** inst.p for a in (inst.alpha1, inst.alpha2)]
    A = [_mask(G, inst.A1), _mask(G, inst.A2)]
    B = [_mask(G, inst.B1), _mask(G, inst.B2)]
    sizes = [len(inst.B1), len(inst.B2)]
    rng = np.random.default_rng(inst.seed)
    hits_e = hits_s = 0
    for trial in range(1, max_trials + 1):
        t = rng.integers(0, G.order, size=inst.p)
        sub = [_sifted(G, A[j], B[j], t) for j in range(2)]
        dens = [Fraction(len(sub[j]), sizes[j]) for j in range(2)]
        if not all(sub[j].size and dens[j] >= Fraction(floors[j]) for j in range(2)):
            continue
        hits_e += 1
        mass = _s_mass(G, sub[0], sub[1], S_mask)
        if mass < 1 - Fraction(inst.delta):
            continue
        hits_s += 1
        return SiftOutcome(True, trial, tuple(int(x) for x in t), tuple(map(int, sub[0])), tuple(map(int, sub[1])),
                           dens[0], dens[1], floors[0], floors[1], mass,
                           {"event_rate": hits_e / trial, "accept_rate": hits_s / trial})
    return SiftOutcome(False, max_trials, floor1=floors[0], floor2=floors[1],
                       rates={"event_rate": hits_e / max_trials, "accept_rate": 0.0})


def verify_sift(inst: SiftInstance, out: SiftOutcome) -> bool:
    """Rebuild A_j' from t and re-check both conclusions from scratch."""
    if not out.accepted:
        return False
    G = inst.group
    lev = level_set_S(inst)
    S_mask = np.zeros(G.order, dtype=bool)
    S_mask[lev.S] = True
    subs = [_sifted(G, _mask(G, a), _mask(G, b), out.t) for a, b in ((inst.A1, inst.B1), (inst.A2, inst.B2))]
    if tuple(map(int, subs[0])) != out.A1p or tuple(map(int, subs[1])) != out.A2p:
        return False
    for sub, B, a in ((subs[0], inst.B1, inst.alpha1), (subs[1], inst.B2, inst.alpha2)):
        floor = 0.25 * (float(a) * lev.norm) ** inst.p
        if not sub.size or Fraction(len(sub), len(B)) < Fraction(floor):
            return False
    return _s_mass(G, subs[0], subs[1], S_mask) >= 1 - Fraction(inst.delta)


# averaging ------------------------------------------------------------------------


@dataclass(frozen=True)
class AveragingResult:
    x: int
    achieved: float
    target: float
    passed: bool


def averaging_shift(f: DenseFunction, p: float, mu: Measure, nu: Measure, eta: Measure, gamma: float) -> AveragingResult:
    """Best x for ||f||_{L^p(tau_x nu)}, compared with gamma^{-1/p} ||f||_{L^p(mu)}."""
    if p < 1:
        raise InvalidArgument("p must be at least 1")
    if gamma <= 0:
        raise InvalidArgument("gamma must be positive")
    dom = gamma * convolve(eta, nu).values
    if np.any(mu.values > dom + MEASURE_SLACK * max(1.0, float(dom.max()))):
        raise PreconditionViolation("mu is not dominated by gamma (eta * nu)")
    G = f.group
    fp = DenseFunction(G, np.abs(f.values) ** p)
    # (|f|^p o nu)(x) = E_y |f(y)|^p nu(y - x) = ||f||^p in L^p(tau_x nu)
    vals = np.real(diff_convolve(fp, nu).values)
    x = int(np.argmax(vals))
    achieved = float(max(vals[x], 0.0) ** (1 / p))
    target = gamma ** (-1 / p) * lp_norm(f, p, mu)
    return AveragingResult(x, achieved, target, achieved >= target * (1 - 1e-12))


# statement-level verifiers ------------------------------------------------------------


@dataclass(frozen=True)
class LiftingReport:
    inner: float
    deviation: float
    alt_i: bool
    p: int | None
    norms: tuple[float, ...]
    target: float


def holder_lifting_scan(G: FiniteAbelianGroup, A1, A2, B, Bprime, C, eps: float, p_cap: int = 32) -> LiftingReport:
    """Evaluate alternative (i); if it fails, find the least p with the L^p lower bound."""
    Bm = _members_of(B)
    if not len(members(G, A1)) or not len(members(G, A2)) or not len(members(G, C)) or not len(members(G, Bprime)):
        raise InvalidArgument("all sets must be non-empty")
    muB_mass = len(members(G, Bm)) / G.order
    mA1, mA2 = normalized_indicator(G, A1), normalized_indicator(G, A2)
    muC = normalized_indicator(G, C)
    conv = convolve(mA1, mA2)
    inner_val = float(np.mean(conv.values * muC.values))
    dev = abs(inner_val - 1 / muB_mass)
    alt_i = dev < eps / muB_mass
    target = 0.5 * eps / muB_mass
    if alt_i:
        return LiftingReport(inner_val, dev, True, None, (), target)
    muB = normalized_indicator(G, Bm)
    h = convolve(DenseFunction(G, mA1.values - muB.values), DenseFunction(G, mA2.values - muB.values))
    weight = normalized_indicator(G, Bprime)
    norms = []
    for p in range(1, p_cap + 1):
        v = lp_norm(h, p, weight)
        norms.append(v)
        if v >= target:
            return LiftingReport(inner_val, dev, False, p, tuple(norms), target)
    return LiftingReport(inner_val, dev, False, None, tuple(norms), target)


@dataclass(frozen=True)
class FourierSumCheck:
    lhs: float
    rhs: float
    passed: bool


def fourier_sum_bound_check(G: FiniteAbelianGroup, A1p, A2p, A1, A2, B, tol: float = 1e-9) -> FourierSumCheck:
    """sum |F^| <= (alpha1 alpha2)^{-1/2} mu(B)^{-1}, F = (mu_A1' o mu_A2') o (mu_A1 o mu_A2)."""
    Bset = set(int(b) for b in members(G, _members_of(B)))
    a1, a2 = members(G, A1), members(G, A2)
    if not Bset or not a1.size or not a2.size:
        raise InvalidArgument("sets must be non-empty")
    if not set(map(int, a1)) <= Bset or not set(map(int, a2)) <= Bset:
        raise PreconditionViolation("A1 and A2 must lie inside B")
    mags = [np.abs(fourier(normalized_indicator(G, S)).values) for S in (A1p, A2p, A1, A2)]
    lhs = float(np.sum(mags[0] * mags[1] * mags[2] * mags[3]))
    alpha1, alpha2 = a1.size / len(Bset), a2.size / len(Bset)
    rhs = (alpha1 * alpha2) ** -0.5 * G.order / len(Bset)
    return FourierSumCheck(lhs, rhs, lhs <= rhs * (1 + tol))


# translate dichotomy -------------------------------------------------------------------


@dataclass(frozen=True)
class TranslateVerdict:
    x: int | None
    verdict: str  # "uniform", "increment" or "none"
    alpha: Fraction
    densities: tuple[Fraction, ...] = ()
    member: int | None = None  # index into the family for an increment


def _family_members(G, family) -> list[np.ndarray]:
    return [members(G, _members_of(B)) for B in family]


def translate_dichotomy(G: FiniteAbelianGroup, A, family: Sequence, gamma: float, k: int,
                        ambient=None) -> TranslateVerdict:
    """Scan x in G for uniform densities on every family member or a (1 + gamma/4k) increment.

    alpha is the density of A in ``ambient`` (the whole group by default).
    At a given x the uniform verdict is tested first.
    """
    if not family:
        raise InvalidArgument("family must be non-empty")
    A_idx = members(G, A)
    amb = G.order if ambient is None else len(members(G, _members_of(ambient)))
    alpha = Fraction(A_idx.size, amb)
    g = Fraction(gamma)
    fam = _family_members(G, family)
    if any(m.size == 0 for m in fam):
        raise InvalidArgument("family members must be non-empty")
    # |(A - x) ∩ B'| = #{b in B' : b + x in A} = |A ∩ (B' + x)|
    counts = [overlap_counts(G, A_idx, m) for m in fam]
    inc = (1 + g / (4 * k)) * alpha
    for x in range(G.order):
        dens = tuple(Fraction(int(c[x]), m.size) for c, m in zip(counts, fam))
        if all(abs(d - alpha) <= g * alpha for d in dens):
            return TranslateVerdict(x, "uniform", alpha, dens)
        for i, d in enumerate(dens):
            if d >= inc:
                return TranslateVerdict(x, "increment", alpha, dens, i)
    log.info("translate dichotomy: no x gives either verdict")
    return TranslateVerdict(None, "none", alpha)


def verify_translate_verdict(G: FiniteAbelianGroup, A, family, gamma: float, k: int, v: TranslateVerdict) -> bool:
    if v.verdict == "none" or v.x is None:
        return False
    A_set = set(int(a) for a in members(G, A))
    g = Fraction(gamma)
    dens = []
    for m in _family_members(G, family):
        hit = sum(1 for b in m if int(G.add_idx(int(b), v.x)) in A_set)
        dens.append(Fraction(hit, m.size))
    if v.verdict == "uniform":
        return all(abs(d - v.alpha) <= g * v.alpha for d in dens)
    return dens[v.member] >= (1 + g / (4 * k)) * v.alpha


@dataclass(frozen=True)
class TranslateFamily:
    base: BohrSet  # B ∩ (2·B)
    lambdas: tuple[float, ...]  # lambda_1..lambda_{k+1}
    members: tuple[BohrSet, ...]  # B^(1..k) then (1/2)·B^(1..k)


def build_translate_family(B: BohrSet, k: int, lam: float) -> TranslateFamily:
    """Regular dilates B~_{lambda_j} with lambda_{k+1} = 1 and lambda_j in [lam/2, lam]·lambda_{j+1}."""
    G = B.group
    tilde = intersect(B, image_under(B, 2))
    lambdas = [1.0]
    for _ in range(k):
        top = lam * lambdas[-1]
        lambdas.append(top * find_regular_dilate(dilate(tilde, top)))
    lambdas = lambdas[::-1]  # lambda_1 first
    dil = [dilate(tilde, lj) for lj in lambdas[:k]]
    half = G.half_multiplier()
    return TranslateFamily(tilde, tuple(lambdas), tuple(dil) + tuple(image_under(D, half) for D in dil))


# heuristic increment search ----------------------------------------------------------------


@dataclass
class IncrementConfig:
    c: float = DEFAULT_C
    delta_target: float | None = None  # default c * k^-5
    spectrum_threshold: float = 0.5
    pool_size: int = 4
    max_delta: int = 2
    shrink: float = 0.8
    width_steps: int = 16
    config_cap: int = 2 * 10**6


@dataclass(frozen=True)
class IncrementWitness:
    x: int
    sigma: int
    delta_set: tuple[Character, ...]
    frequencies: tuple[Character, ...]
    width: float
    density: Fraction
    bohr_size: int


@dataclass
class IncrementReport:
    alpha: Fraction
    proportion: Fraction | None
    threshold_shape: float
    delta_target: float
    witness: IncrementWitness | None
    verified: bool
    candidates_tried: int
    best_ratio: float
    notes: str = ("heuristic search: only the witness format and its exact verification are "
                  "reproduced; the multi-scale pipelines behind the increment step are not implemented")


def _candidate_pool(G: FiniteAbelianGroup, A_idx: np.ndarray, cfg: IncrementConfig) -> list[Character]:
    mags = np.abs(fourier(indicator(G, A_idx)).values)
    mags[0] = -1.0  # drop the trivial character
    order = np.argsort(-mags, kind="stable")
    top = mags[order[0]] if order.size else 0.0
    pool: list[Character] = []
    for i in order:
        if mags[i] < cfg.spectrum_threshold * max(top, 1e-300) or len(pool) >= cfg.pool_size:
            break
        pool.append(G.character(int(i)))
    for j in range(G.rank):  # low frequencies along each factor
        unit = [0] * G.rank
        unit[j] = 1
        ch = G.character(unit)
        if ch not in pool and not ch.is_trivial:
            pool.append(ch)
    return pool


def increment_search(A, B: BohrSet, k: int, cfg: IncrementConfig | None = None) -> IncrementReport:
    cfg = cfg or IncrementConfig()
    G = B.group
    G.half_multiplier()
    if not is_regular(B):
        raise PreconditionViolation("the ambient Bohr set must be regular")
    A_idx = members(G, A)
    Bm = set(int(b) for b in B.members)
    if not set(map(int, A_idx)) <= Bm:
        raise PreconditionViolation("A must lie inside B")
    alpha = Fraction(A_idx.size, len(Bm))
    d, rho = B.rank, B.width
    try:
        proportion = count_k_configurations(A_idx, k, G, cfg.config_cap).probability
    except ResourceLimit:
        proportion = None
    a = float(alpha)
    shape = math.exp(-(k * k * math.log(k)) * d * L(a / d)) * rho ** (2 * k * d) if a > 0 else 0.0
    dt = cfg.delta_target if cfg.delta_target is not None else cfg.c * k**-5
    goal = (1 + Fraction(dt)) * alpha
    report = IncrementReport(alpha, proportion, shape, dt, None, False, 0, 0.0)
    if A_idx.size == 0:
        return report

    pool = _candidate_pool(G, A_idx, cfg)
    deltas: list[tuple[Character, ...]] = [()]
    for r in range(1, cfg.max_delta + 1):
        deltas.extend(itertools.combinations(pool, r))
    tried = 0
    for delta_set in deltas:
        for sigma in (1, -1):
            freqs = list(B.frequencies) + [psi2_power(g, sigma) for g in B.frequencies] + list(delta_set)
            width = rho
            for _ in range(cfg.width_steps):
                width *= cfg.shrink
                trial = bohr_build(freqs, width, G)
                try:
                    Bp = dilate(trial, find_regular_dilate(trial))
                except NumericalAnomaly:
                    continue
                tried += 1
                c = overlap_counts(G, A_idx, Bp.members)
                x = int(np.argmax(c))
                dens = Fraction(int(c[x]), Bp.size)
                report.best_ratio = max(report.best_ratio, float(dens / alpha))
                if dens >= goal:
                    w = IncrementWitness(x, sigma, tuple(delta_set), tuple(freqs), Bp.width, dens, Bp.size)
                    report.witness = w
                    report.candidates_tried = tried
                    report.verified = verify_increment(G, A_idx, alpha, dt, w)
                    return report
    report.candidates_tried = tried
    return report


def verify_increment(G: FiniteAbelianGroup, A, alpha: Fraction, delta_target: float, w: IncrementWitness) -> bool:
    """Rebuild B' from scratch and recount mu_{B'}(A - x) by brute force."""
    Bp = bohr_build(w.frequencies, w.width, G)
    if not is_regular(Bp) or Bp.size != w.bohr_size:
        return False
    A_set = set(int(a) for a in members(G, A))
    hit = sum(1 for b in Bp.members if int(G.add_idx(int(b), w.x)) in A_set)
    dens = Fraction(hit, Bp.size)
    return dens == w.density and dens >= (1 + Fraction(delta_target)) * alpha
