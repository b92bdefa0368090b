"""Bohr sets as formal pairs (frequency set, width).

Every Bohr set carries a radius profile r(x) = max_gamma |gamma(x) - 1|,
cached once per frequency set and shared by all dilates. Sizes, membership
and the regularity test are all read off that one cached array, so they are
exact relative to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import GroupMismatch, InvalidArgument, NumericalAnomaly, PreconditionViolation
from .group import Character, FiniteAbelianGroup, MultiplicationMap, chord, psi2_power
from .harmonic import (
    Measure,
    convolution_power,
    convolve,
    iterated_sumset,
    normalized_indicator,
    sumset,
)

REGULARITY_GRID = 1e-4
DOMINATION_C = 1 / 100


class RadiusProfile:
    """r(x) for every element, plus a sorted copy for counting."""

    def __init__(self, group: FiniteAbelianGroup, frequencies: Sequence[Character]):
        self.group = group
        r = np.zeros(group.order)
        for gamma in frequencies:
            n = group.phase_numerators(gamma.coeffs)
            np.maximum(r, chord(n, group.exponent), out=r)
        r.flags.writeable = False
        self.radii = r
        self.sorted = np.sort(r)

    def count_at_most(self, t) -> np.ndarray | int:
        out = np.searchsorted(self.sorted, t, side="right")
        return out if np.ndim(out) else int(out)

    def count_below(self, t) -> np.ndarray | int:
        out = np.searchsorted(self.sorted, t, side="left")
        return out if np.ndim(out) else int(out)


@dataclass(frozen=True, eq=False)
class BohrSet:
    group: FiniteAbelianGroup
    frequencies: tuple[Character, ...]
    width: float
    profile: RadiusProfile = field(repr=False)

    def __repr__(self):
        return f"Bohr({list(self.frequencies)}; {self.width:.6g}) in {self.group!r}"

    @property
    def rank(self) -> int:
        return len(self.frequencies)

    @cached_property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.profile.radii <= self.width)

    @property
    def size(self) -> int:
        return self.profile.count_at_most(self.width)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, x) -> bool:
        i = x if isinstance(x, (int, np.integer)) else self.group.index_of(x)
        return bool(self.profile.radii[int(i)] <= self.width)

    def mask(self) -> np.ndarray:
        return self.profile.radii <= self.width

    def dilate_size(self, lam: float) -> int:
        return self.profile.count_at_most(lam * self.width)

    def dilate(self, delta: float) -> "BohrSet":
        return dilate(self, delta)

    def density(self) -> float:
        """mu(B) = |B| / |G|."""
        return self.size / self.group.order

    def measure(self) -> Measure:
        return normalized_indicator(self.group, self.members)

    def same_members(self, other: "BohrSet") -> bool:
        return self.group == other.group and np.array_equal(self.members, other.members)

    def to_dict(self) -> dict:
        return {
            "group": self.group.to_dict(),
            "frequencies": [list(g.coeffs) for g in self.frequencies],
            "width": self.width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BohrSet":
        G = FiniteAbelianGroup.from_dict(d["group"])
        return bohr_build([G.character(c) for c in d["frequencies"]], d["width"])


def bohr_build(frequencies: Iterable[Character], width: float, group: FiniteAbelianGroup | None = None) -> BohrSet:
    freqs = list(frequencies)
    if not freqs:
        raise InvalidArgument("a Bohr set needs a non-empty frequency set")
    if group is None:
        if not isinstance(freqs[0], Character):
            raise InvalidArgument("pass group= when giving raw coefficient tuples")
        group = freqs[0].group
    freqs = tuple(group.character(g) for g in freqs)
    if not width >= 0:
        raise InvalidArgument(f"width must be >= 0, got {width}")
    return BohrSet(group, freqs, float(width), RadiusProfile(group, freqs))


def dilate(B: BohrSet, delta: float) -> BohrSet:
    if not delta >= 0:
        raise InvalidArgument(f"dilation factor must be >= 0, got {delta}")
    return BohrSet(B.group, B.frequencies, delta * B.width, B.profile)


def image_under(B: BohrSet, psi: MultiplicationMap | int) -> BohrSet:
    """psi(B) = Bohr({gamma psi^{-1}}; rho)."""
    if isinstance(psi, int):
        psi = MultiplicationMap(B.group, psi)
    inv = psi.inverse().k
    freqs = [B.group.character([c * inv for c in g.coeffs]) for g in B.frequencies]
    return bohr_build(freqs, B.width, B.group)


def intersect(B: BohrSet, C: BohrSet) -> BohrSet:
    """Formal intersection: frequencies concatenated (duplicates kept), min width."""
    if B.group != C.group:
        raise GroupMismatch(f"{B.group!r} vs {C.group!r}")
    return bohr_build(B.frequencies + C.frequencies, min(B.width, C.width), B.group)


# size and regularity -------------------------------------------------------


@dataclass(frozen=True)
class SizeBound:
    size: int
    lower_bound: float
    passed: bool


def size_bound_check(B: BohrSet) -> SizeBound:
    """|B| >= (rho/8)^d |G| for widths in [0, 2]."""
    if not 0 <= B.width <= 2:
        raise PreconditionViolation(f"size bound needs width in [0, 2], got {B.width}")
    bound = (B.width / 8) ** B.rank * B.group.order
    return SizeBound(B.size, bound, B.size >= bound)


@dataclass(frozen=True)
class Regularity:
    regular: bool
    witness: float | None = None
    side: str | None = None

    def __bool__(self):
        return self.regular


def _regularity(sorted_r: np.ndarray, rho: float, d: int) -> Regularity:
    if rho == 0:
        return Regularity(True)
    size = int(np.searchsorted(sorted_r, rho, side="right"))
    dmax = 1.0 / (100 * d)

    # |B_{1+delta}| is a right-continuous step function of delta and the bound grows
    # linearly, so only the jump points need checking.
    lo = size
    hi = int(np.searchsorted(sorted_r, rho * (1 + dmax), side="right"))
    if hi > lo:
        r = np.unique(sorted_r[lo:hi])
        deltas = r / rho - 1
        counts = np.searchsorted(sorted_r, r, side="right")
        bad = np.flatnonzero(counts > (1 + 100 * deltas * d) * size)
        if bad.size:
            i = int(bad[0])
            crit = (counts[i] / size - 1) / (100 * d)
            nxt = deltas[i + 1] if i + 1 < len(deltas) else dmax
            return Regularity(False, float(_inside(deltas[i], min(nxt, dmax, crit))), "upper")

    # |B_{1-delta}| drops just after delta = 1 - r/rho for each radius r <= rho; the
    # bound decreases, so the infimum on each constant piece sits at its left end.
    lo = int(np.searchsorted(sorted_r, rho * (1 - dmax), side="left"))
    if size > lo:
        r = np.unique(sorted_r[lo:size])[::-1]
        deltas = 1 - r / rho
        counts = np.searchsorted(sorted_r, r, side="left")
        ok_range = deltas < dmax
        bad = np.flatnonzero(ok_range & (counts < (1 - 100 * deltas * d) * size))
        if bad.size:
            i = int(bad[0])
            crit = (1 - counts[i] / size) / (100 * d)
            nxt = deltas[i + 1] if i + 1 < len(deltas) else dmax
            return Regularity(False, float(_inside(deltas[i], min(nxt, dmax, crit))), "lower")
    return Regularity(True)


def _inside(a: float, b: float) -> float:
    return a if b <= a else (a + b) / 2


def is_regular(B: BohrSet) -> Regularity:
    """Exact check of (1 -+ 100 delta d)|B| bounds for all delta in (0, 1/(100d)]."""
    return _regularity(B.profile.sorted, B.width, B.rank)


def regularity_violated_at(B: BohrSet, delta: float) -> bool:
    """Direct evaluation of the regularity inequalities at a single delta."""
    d, size = B.rank, B.size
    lower = B.dilate_size(1 - delta)
    upper = B.dilate_size(1 + delta)
    return lower < (1 - 100 * delta * d) * size or upper > (1 + 100 * delta * d) * size


def find_regular_dilate(B: BohrSet, resolution: float = REGULARITY_GRID) -> float:
    """Some delta in [1/2, 1] with B_delta regular; smallest candidate first."""
    candidates = [np.arange(0.5, 1.0 + resolution / 2, resolution)]
    if B.width > 0:
        r = B.profile.sorted
        lo = np.searchsorted(r, 0.5 * B.width, side="left")
        hi = np.searchsorted(r, B.width, side="right")
        breaks = np.unique(np.concatenate([[0.5], r[lo:hi] / B.width, [1.0]]))
        candidates.append(breaks)
        candidates.append((breaks[:-1] + breaks[1:]) / 2)
    cand = np.unique(np.clip(np.concatenate(candidates), 0.5, 1.0))
    for delta in cand:
        if _regularity(B.profile.sorted, float(delta) * B.width, B.rank):
            return float(delta)
    raise NumericalAnomaly(f"no regular dilate of {B!r} found in [1/2, 1]")


def regular_dilate(B: BohrSet, resolution: float = REGULARITY_GRID) -> BohrSet:
    return dilate(B, find_regular_dilate(B, resolution))


@dataclass(frozen=True)
class SumsetCheck:
    sumset_size: int
    bound: int
    passed: bool


def sumset_growth_check(B: BohrSet, delta: float) -> SumsetCheck:
    """|B + B_delta| <= 2|B| for regular B and delta in (0, 1/(100d)]."""
    if not 0 < delta <= 1 / (100 * B.rank):
        raise PreconditionViolation(f"delta must lie in (0, 1/(100d)], got {delta}")
    if not is_regular(B):
        raise PreconditionViolation("sumset growth bound needs a regular Bohr set")
    s = sumset(B.group, B.members, dilate(B, delta).members)
    return SumsetCheck(int(s.size), 2 * B.size, int(s.size) <= 2 * B.size)


@dataclass(frozen=True)
class DominationCheck:
    passed: bool
    worst_slack: float


def domination_check(B: BohrSet, k: int, delta: float, nu: Measure, c: float = DOMINATION_C) -> DominationCheck:
    """Pointwise mu_B <= 2 (mu_{B_{1+k delta}} * nu)."""
    if k < 1 or not 0 < delta <= c / (k * B.rank):
        raise PreconditionViolation(f"need k >= 1 and 0 < delta <= c/(kd), got k={k}, delta={delta}")
    if not is_regular(B):
        raise PreconditionViolation("domination needs a regular Bohr set")
    support = np.flatnonzero(nu.values > 1e-12 * nu.values.max())
    allowed = np.zeros(B.group.order, dtype=bool)
    allowed[iterated_sumset(B.group, dilate(B, delta).members, k)] = True
    if not allowed[support].all():
        raise PreconditionViolation("nu is not supported on the k-fold sumset of B_delta")
    return _dominates(B, k, delta, nu)


def _dominates(B: BohrSet, k: int, delta: float, nu: Measure) -> DominationCheck:
    lhs = B.measure().values
    rhs = 2 * convolve(dilate(B, 1 + k * delta).measure(), nu).values
    slack = rhs - lhs
    tol = 1e-9 * max(1.0, float(lhs.max()))
    return DominationCheck(bool((slack >= -tol).all()), float(slack.min()))


def max_domination_delta(B: BohrSet, k: int, deltas: Iterable[float]) -> float | None:
    """Largest tested delta for which mu_B <= 2(mu_{B_{1+k delta}} * mu_{B_delta}^(k)).

    No cap on delta is imposed; this measures how far the unspecified constant
    can be pushed on the given instance.
    """
    best = None
    for delta in sorted(set(deltas), reverse=True):
        nu = convolution_power(dilate(B, delta).measure(), k)
        if _dominates(B, k, delta, nu).passed:
            best = float(delta)
            break
    return best


# frequency-set bookkeeping -------------------------------------------------


def grow_frequency_sets(history: Sequence[tuple[Sequence[Character], int | None]]) -> list[list[Character]]:
    """Gamma_0 = Delta_0; Gamma_s = Gamma_{s-1} + Gamma_{s-1} psi_2^{sigma_s} + Delta_s (as lists)."""
    if not history:
        raise InvalidArgument("history needs at least the initial step")
    out = [list(history[0][0])]
    for delta, sigma in history[1:]:
        prev = out[-1]
        if sigma not in (1, -1):
            raise InvalidArgument(f"sigma must be +1 or -1, got {sigma}")
        out.append(prev + [psi2_power(g, sigma) for g in prev] + list(delta))
    return out


@dataclass(frozen=True)
class FrequencyCertificate:
    frequencies: tuple[Character, ...]
    rank: int
    rank_bound: int
    covered: bool
    origins: dict = field(repr=False)


def canonical_frequency_set(gamma: Sequence[Character], history) -> FrequencyCertificate:
    """Deduplicate gamma and certify it lies in the union of psi_2-orbit windows.

    The window for step r is {delta psi_2^a : delta in Delta_r, |a| <= s - r},
    where s = len(history) - 1; the union has at most sum_r (2(s-r)+1)|Delta_r|
    elements, which is the quadratic rank bound.
    """
    seen: dict[Character, None] = {}
    for g in gamma:
        seen.setdefault(g, None)
    freqs = tuple(seen)
    s = len(history) - 1
    origins: dict[Character, tuple[int, Character, int]] = {}
    bound = 0
    for r, (delta, _sigma) in enumerate(history):
        delta = list(delta)
        bound += (2 * (s - r) + 1) * len(delta)
        for base in delta:
            for a in range(-(s - r), s - r + 1):
                if a < 0 and not base.group.is_odd:
                    continue
                origins.setdefault(psi2_power(base, a), (r, base, a))
    covered = all(g in origins for g in freqs)
    return FrequencyCertificate(freqs, len(freqs), bound, covered, {g: origins.get(g) for g in freqs})


def bohr_members_brute(G: FiniteAbelianGroup, frequencies: Sequence[Character], width: float) -> set[int]:
    """Membership straight from the definition; used as an oracle."""
    out = set()
    for x in G.elements():
        if all(abs(g(x) - 1) <= width for g in frequencies):
            out.add(x.index)
    return out

