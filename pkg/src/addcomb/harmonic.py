"""Functions and probability measures on a finite abelian group.

Normalisation: averages over G, counting measure on the dual group. So
``<f, g> = E_x f(x) conj(g(x))`` and ``fhat(gamma) = E_x f(x) conj(gamma(x))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import GroupMismatch, InvalidArgument
from .group import Character, ElementLike, FiniteAbelianGroup

# Convolutions below this group order are summed directly.
DIRECT_CUTOFF = 512
MEASURE_TOL = 1e-9


class DenseFunction:
    """A complex (or real) valued table over a group, indexed by element index."""

    __slots__ = ("group", "values")

    def __init__(self, group: FiniteAbelianGroup, values):
        values = np.asarray(values)
        if values.shape != (group.order,):
            raise InvalidArgument(f"table of shape {values.shape} does not fit {group!r}")
        self.group = group
        self.values = values

    def __repr__(self):
        return f"{type(self).__name__}({self.group!r}, {np.array2string(self.values, precision=4)})"

    def __len__(self):
        return self.group.order

    def __getitem__(self, x: ElementLike):
        i = x if isinstance(x, (int, np.integer)) else self.group.index_of(x)
        return self.values[i]

    def _check(self, other: "DenseFunction"):
        if self.group != other.group:
            raise GroupMismatch(f"{self.group!r} vs {other.group!r}")

    def _lift(self, other):
        if isinstance(other, DenseFunction):
            self._check(other)
            return other.values
        return other

    def __add__(self, other):
        return DenseFunction(self.group, self.values + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return DenseFunction(self.group, self.values - self._lift(other))

    def __rsub__(self, other):
        return DenseFunction(self.group, self._lift(other) - self.values)

    def __mul__(self, other):
        return DenseFunction(self.group, self.values * self._lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return DenseFunction(self.group, -self.values)

    def conj(self) -> "DenseFunction":
        return DenseFunction(self.group, np.conj(self.values))

    def abs(self) -> "DenseFunction":
        return DenseFunction(self.group, np.abs(self.values))

    def reflect(self) -> "DenseFunction":
        """x -> f(-x)."""
        return DenseFunction(self.group, self.values[self.group.neg_idx(np.arange(self.group.order))])

    def mean(self):
        return self.values.mean()

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values != 0)

    def allclose(self, other: "DenseFunction", atol: float = 1e-9) -> bool:
        self._check(other)
        return bool(np.allclose(self.values, other.values, rtol=0, atol=atol))

    def to_json(self) -> dict:
        vals = np.asarray(self.values, dtype=complex)
        return {"group": self.group.to_dict(), "values": [[float(v.real), float(v.imag)] for v in vals]}

    @classmethod
    def from_json(cls, d: dict) -> "DenseFunction":
        G = FiniteAbelianGroup.from_dict(d["group"])
        return cls(G, np.array([complex(re, im) for re, im in d["values"]]))


class Measure(DenseFunction):
    """Nonnegative density with E_x mu(x) = 1."""

    __slots__ = ()

    def __init__(self, group: FiniteAbelianGroup, values):
        values = np.asarray(values)
        if np.iscomplexobj(values):
            if np.max(np.abs(values.imag), initial=0.0) > MEASURE_TOL:
                raise InvalidArgument("a measure must be real valued")
            values = values.real
        values = np.asarray(values, dtype=float)
        if values.size and values.min() < -MEASURE_TOL:
            raise InvalidArgument("a measure must be nonnegative")
        values = np.clip(values, 0.0, None)
        m = values.mean() if values.size else 0.0
        if abs(m - 1.0) > MEASURE_TOL:
            raise InvalidArgument(f"measure has mass {m}, expected 1")
        super().__init__(group, values / m)

    def of(self, S) -> float:
        """mu(S) = E_x 1_S(x) mu(x)."""
        idx = _as_indices(self.group, S)
        return float(self.values[idx].sum() / self.group.order)

    def to_json(self) -> dict:
        return {"group": self.group.to_dict(), "values": [float(v) for v in self.values]}

    @classmethod
    def from_json(cls, d: dict) -> "Measure":
        return cls(FiniteAbelianGroup.from_dict(d["group"]), np.array(d["values"], dtype=float))


def _as_indices(G: FiniteAbelianGroup, S) -> np.ndarray:
    if isinstance(S, np.ndarray) and S.dtype == bool:
        return np.flatnonzero(S)
    if isinstance(S, np.ndarray) and np.issubdtype(S.dtype, np.integer):
        return np.unique(S % G.order)
    S = list(S)
    if all(isinstance(s, (int, np.integer)) for s in S):
        return np.unique(np.array(S, dtype=np.int64).reshape(-1) % G.order)
    return G.indices(S)


def indicator(G: FiniteAbelianGroup, S) -> DenseFunction:
    v = np.zeros(G.order)
    v[_as_indices(G, S)] = 1.0
    return DenseFunction(G, v)


def constant(G: FiniteAbelianGroup, c=1.0) -> DenseFunction:
    return DenseFunction(G, np.full(G.order, c))


def uniform(G: FiniteAbelianGroup) -> Measure:
    return Measure(G, np.ones(G.order))


def normalized_indicator(G: FiniteAbelianGroup, S) -> Measure:
    """mu_S = mu(S)^{-1} 1_S."""
    idx = _as_indices(G, S)
    if idx.size == 0:
        raise InvalidArgument("normalised indicator of an empty set")
    v = np.zeros(G.order)
    v[idx] = G.order / idx.size
    return Measure(G, v)


def point_mass(G: FiniteAbelianGroup, x: ElementLike = 0) -> Measure:
    i = x if isinstance(x, (int, np.integer)) else G.index_of(x)
    return normalized_indicator(G, np.array([i]))


# transforms ---------------------------------------------------------------


@dataclass(frozen=True)
class FourierTable:
    """A function on the dual group, indexed like the group itself."""

    group: FiniteAbelianGroup
    values: np.ndarray

    def __getitem__(self, gamma) -> complex:
        return complex(self.values[self.group.character(gamma).index])

    def items(self):
        for i, v in enumerate(self.values):
            yield self.group.character(i), complex(v)


def fourier(f: DenseFunction) -> FourierTable:
    G = f.group
    arr = np.asarray(f.values, dtype=complex).reshape(G.moduli)
    return FourierTable(G, np.fft.fftn(arr).reshape(-1) / G.order)


def inverse_fourier(F: FourierTable) -> DenseFunction:
    G = F.group
    arr = np.asarray(F.values, dtype=complex).reshape(G.moduli)
    return DenseFunction(G, np.fft.ifftn(arr).reshape(-1) * G.order)


def _result(f: DenseFunction, g: DenseFunction, values) -> DenseFunction:
    if not (np.iscomplexobj(f.values) or np.iscomplexobj(g.values)):
        values = np.real(values)
    if isinstance(f, Measure) and isinstance(g, Measure):
        return Measure(f.group, np.real(values))
    return DenseFunction(f.group, values)


def _use_direct(G: FiniteAbelianGroup, method: str) -> bool:
    if method not in ("auto", "direct", "fourier"):
        raise InvalidArgument(f"unknown convolution method {method!r}")
    return method == "direct" or (method == "auto" and G.order <= DIRECT_CUTOFF)


def convolve(f: DenseFunction, g: DenseFunction, method: str = "auto") -> DenseFunction:
    """(f * g)(x) = E_y f(y) g(x - y)."""
    f._check(g)
    G = f.group
    if _use_direct(G, method):
        # sub_table[x, y] = x - y
        vals = (g.values[G.sub_table] * f.values[None, :]).mean(axis=1)
    else:
        vals = inverse_fourier(FourierTable(G, fourier(f).values * fourier(g).values)).values
    return _result(f, g, vals)


def diff_convolve(f: DenseFunction, g: DenseFunction, method: str = "auto") -> DenseFunction:
    """(f o g)(x) = E_y f(y) conj(g(y - x))."""
    f._check(g)
    G = f.group
    if _use_direct(G, method):
        # sub_table[y, x] = y - x, so row y holds g(y - x) for all x
        vals = (np.conj(g.values[G.sub_table]) * f.values[:, None]).mean(axis=0)
    else:
        vals = inverse_fourier(FourierTable(G, fourier(f).values * np.conj(fourier(g).values))).values
    return _result(f, g, vals)


def convolution_power(mu: Measure, k: int) -> Measure:
    if k < 1:
        raise InvalidArgument("convolution power needs k >= 1")
    if k == 1:
        return mu
    F = fourier(mu)
    vals = np.real(inverse_fourier(FourierTable(mu.group, F.values ** k)).values)
    # drop FFT rounding so the support is exact
    vals = np.where(np.abs(vals) > 1e-12 * np.abs(vals).max(), vals, 0.0)
    return Measure(mu.group, vals)


def translate(f: DenseFunction, x: ElementLike) -> DenseFunction:
    """(tau_x f)(y) = f(y - x)."""
    G = f.group
    i = x if isinstance(x, (int, np.integer)) else G.index_of(x)
    vals = f.values[G.sub_idx(np.arange(G.order), int(i))]
    return type(f)(G, vals)


# norms --------------------------------------------------------------------


def lp_norm(f: DenseFunction, p: float, weight: Measure | None = None) -> float:
    if p != np.inf and not p >= 1:
        raise InvalidArgument(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(np.asarray(f.values))
    if weight is not None:
        f._check(weight)
    if p == np.inf:
        if weight is None:
            return float(a.max())
        return float(a[weight.values > 0].max())
    w = 1.0 if weight is None else weight.values
    top = float(a.max()) if a.size else 0.0
    if top == 0:
        return 0.0
    # scaled so that large p cannot overflow
    return top * float(np.mean((a / top) ** p * w) ** (1.0 / p))


def inner(f: DenseFunction, g: DenseFunction, weight: Measure | None = None) -> complex:
    f._check(g)
    w = 1.0 if weight is None else weight.values
    return complex(np.mean(f.values * np.conj(g.values) * w))


def spectrum(mu: DenseFunction, threshold: float) -> list[Character]:
    """Characters with |muhat(gamma)| >= threshold (relative to mass 1)."""
    if not 0 < threshold <= 1:
        raise InvalidArgument("spectrum threshold must lie in (0, 1]")
    mags = np.abs(fourier(mu).values)
    # absorb FFT rounding at exact ties such as |muhat(0)| = 1
    hits = np.flatnonzero(mags >= threshold - 1e-12)
    return [mu.group.character(int(i)) for i in hits]


def measure_of(G: FiniteAbelianGroup, S) -> float:
    """mu(S) for the uniform measure, i.e. |S| / |G|."""
    return _as_indices(G, S).size / G.order


def members(G: FiniteAbelianGroup, S: Iterable) -> np.ndarray:
    return _as_indices(G, S)


def sumset(G: FiniteAbelianGroup, S, T) -> np.ndarray:
    """Sorted element indices of S + T."""
    s, t = _as_indices(G, S), _as_indices(G, T)
    if s.size == 0 or t.size == 0:
        return np.array([], dtype=np.int64)
    if s.size * t.size <= 4 * G.order or G.order <= DIRECT_CUTOFF:
        return np.unique(G.add_idx(s[:, None], t[None, :]))
    # representation counts are integers >= 1 on the sumset, so 0.5 separates exactly
    counts = convolve(indicator(G, s), indicator(G, t), method="fourier").values * G.order
    return np.flatnonzero(np.real(counts) > 0.5)


def iterated_sumset(G: FiniteAbelianGroup, S, k: int) -> np.ndarray:
    """The k-fold sumset S + ... + S."""
    if k < 1:
        raise InvalidArgument("k-fold sumset needs k >= 1")
    out = _as_indices(G, S)
    base = out
    for _ in range(k - 1):
        out = sumset(G, out, base)
    return out
