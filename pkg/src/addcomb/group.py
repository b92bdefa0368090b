"""Finite abelian groups as products of cyclic groups.

Elements are addressed by a mixed-radix index in ``[0, order)`` whose first
coordinate is the most significant digit (C order, as in ``numpy.ravel``).
Characters are integer coefficient tuples, so they compare exactly; their
values all come from :func:`unit_root` and :func:`chord`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import GroupMismatch, InvalidArgument, PreconditionViolation

ElementLike = Union["GroupElement", int, Sequence[int]]


def _fold(n, L):
    n = np.asarray(n, dtype=np.int64) % L
    flipped = n > L - n
    return np.where(flipped, L - n, n), flipped


def unit_root(n, L):
    """exp(2*pi*i*n/L), computed so that conjugate pairs are bit-identical."""
    m, flipped = _fold(n, L)
    theta = (2.0 * np.pi) * (m / L)
    out = np.cos(theta) + 1j * np.sin(theta)
    out = np.where(flipped, np.conj(out), out)
    return out if out.ndim else complex(out)


def chord(n, L):
    """|exp(2*pi*i*n/L) - 1| = 2 sin(pi * min(n, L-n) / L)."""
    m, _ = _fold(n, L)
    out = 2.0 * np.sin(np.pi * (m / L))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FiniteAbelianGroup:
    moduli: tuple[int, ...]

    def __post_init__(self):
        mods = tuple(int(m) for m in self.moduli)
        if not mods:
            raise InvalidArgument("a group needs at least one cyclic factor")
        if any(m < 1 for m in mods):
            raise InvalidArgument(f"moduli must be >= 1, got {mods}")
        object.__setattr__(self, "moduli", mods)

    def __repr__(self):
        return "Z/" + " x Z/".join(str(m) for m in self.moduli)

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    def __len__(self) -> int:
        return self.order

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @cached_property
    def exponent(self) -> int:
        return reduce(math.lcm, self.moduli, 1)

    @property
    def is_odd(self) -> bool:
        return self.order % 2 == 1

    @cached_property
    def coords(self) -> np.ndarray:
        """(order, rank) array of coordinates of every element, by index."""
        grid = np.indices(self.moduli).reshape(self.rank, -1).T
        grid = np.ascontiguousarray(grid, dtype=np.int64)
        grid.flags.writeable = False
        return grid

    @cached_property
    def _mods(self) -> np.ndarray:
        return np.array(self.moduli, dtype=np.int64)

    @cached_property
    def _scale(self) -> np.ndarray:
        return np.array([self.exponent // m for m in self.moduli], dtype=np.int64)

    # index arithmetic -------------------------------------------------

    def ravel(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64) % self._mods
        if self.rank == 1:
            return coords[..., 0]
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.moduli)

    def unravel(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return self.coords[idx]

    def add_idx(self, a, b) -> np.ndarray:
        if self.rank == 1:
            return (np.asarray(a) + np.asarray(b)) % self.order
        return self.ravel(self.unravel(a) + self.unravel(b))

    def neg_idx(self, a) -> np.ndarray:
        if self.rank == 1:
            return (-np.asarray(a)) % self.order
        return self.ravel(-self.unravel(a))

    def sub_idx(self, a, b) -> np.ndarray:
        if self.rank == 1:
            return (np.asarray(a) - np.asarray(b)) % self.order
        return self.ravel(self.unravel(a) - self.unravel(b))

    def mul_idx(self, k: int, a) -> np.ndarray:
        if self.rank == 1:
            return (int(k) * np.asarray(a)) % self.order
        return self.ravel(int(k) * self.unravel(a))

    def half_multiplier(self) -> int:
        if not self.is_odd:
            raise PreconditionViolation(f"halving needs odd order, {self!r} has order {self.order}")
        return (self.order + 1) // 2

    def halve_idx(self, a) -> np.ndarray:
        return self.mul_idx(self.half_multiplier(), a)

    @cached_property
    def add_table(self) -> np.ndarray:
        """Full |G| x |G| addition table; only sensible for small groups."""
        idx = np.arange(self.order)
        tab = self.add_idx(idx[:, None], idx[None, :])
        tab.flags.writeable = False
        return tab

    @cached_property
    def sub_table(self) -> np.ndarray:
        idx = np.arange(self.order)
        tab = self.sub_idx(idx[:, None], idx[None, :])
        tab.flags.writeable = False
        return tab

    # elements and characters -------------------------------------------

    def element(self, x: ElementLike) -> "GroupElement":
        if isinstance(x, GroupElement):
            _same(self, x.group)
            return x
        if isinstance(x, (int, np.integer)):
            if self.rank == 1:
                return GroupElement(self, (int(x) % self.order,))
            return GroupElement(self, tuple(int(c) for c in self.coords[int(x) % self.order]))
        coords = tuple(int(c) for c in x)
        if len(coords) != self.rank:
            raise InvalidArgument(f"expected {self.rank} coordinates, got {coords}")
        return GroupElement(self, tuple(c % m for c, m in zip(coords, self.moduli)))

    @property
    def zero(self) -> "GroupElement":
        return GroupElement(self, (0,) * self.rank)

    def elements(self) -> Iterator["GroupElement"]:
        for i in range(self.order):
            yield self.element(i)

    def character(self, coeffs: ElementLike) -> "Character":
        if isinstance(coeffs, Character):
            _same(self, coeffs.group)
            return coeffs
        if isinstance(coeffs, (int, np.integer)):
            return Character(self, self.element(int(coeffs)).coords)
        return Character(self, self.element(coeffs).coords)

    @property
    def trivial_character(self) -> "Character":
        return Character(self, (0,) * self.rank)

    def characters(self) -> Iterator["Character"]:
        for i in range(self.order):
            yield self.character(i)

    def phase_numerators(self, coeffs: Sequence[int]) -> np.ndarray:
        """n(x) with gamma(x) = exp(2 pi i n(x) / exponent), for every element x."""
        c = np.asarray(coeffs, dtype=np.int64) * self._scale
        return (self.coords @ c) % self.exponent

    def index_of(self, x: ElementLike) -> int:
        return self.element(x).index

    def indices(self, xs) -> np.ndarray:
        """Element indices for an iterable of element-likes (ints are indices)."""
        out = [self.index_of(x) for x in xs]
        return np.array(sorted(set(out)), dtype=np.int64)

    def to_dict(self) -> dict:
        return {"moduli": list(self.moduli)}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteAbelianGroup":
        return make_group(d["moduli"])


def _same(g: FiniteAbelianGroup, h: FiniteAbelianGroup):
    if g != h:
        raise GroupMismatch(f"{g!r} vs {h!r}")


@dataclass(frozen=True)
class GroupElement:
    group: FiniteAbelianGroup
    coords: tuple[int, ...]

    def __repr__(self):
        if self.group.rank == 1:
            return f"{self.coords[0]}"
        return f"{self.coords}"

    @property
    def index(self) -> int:
        return int(self.group.ravel(self.coords))

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return add(self, other)

    def __neg__(self) -> "GroupElement":
        return neg(self)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return add(self, neg(other))

    def __rmul__(self, k: int) -> "GroupElement":
        return psi_apply(k, self)

    def to_json(self):
        return self.coords[0] if self.group.rank == 1 else list(self.coords)


@dataclass(frozen=True)
class Character:
    group: FiniteAbelianGroup
    coeffs: tuple[int, ...]

    def __repr__(self):
        return f"chi{self.coeffs}"

    @property
    def index(self) -> int:
        return int(self.group.ravel(self.coeffs))

    @property
    def is_trivial(self) -> bool:
        return not any(self.coeffs)

    def __call__(self, x: ElementLike) -> complex:
        return eval_character(self, self.group.element(x))

    def __mul__(self, other: "Character") -> "Character":
        _same(self.group, other.group)
        return self.group.character([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def conj(self) -> "Character":
        return self.group.character([-a for a in self.coeffs])

    def values(self) -> np.ndarray:
        return unit_root(self.group.phase_numerators(self.coeffs), self.group.exponent)

    def chords(self) -> np.ndarray:
        """|gamma(x) - 1| for every element x, by index."""
        return chord(self.group.phase_numerators(self.coeffs), self.group.exponent)


@dataclass(frozen=True)
class MultiplicationMap:
    group: FiniteAbelianGroup
    k: int

    @property
    def invertible(self) -> bool:
        return math.gcd(self.k, self.group.order) == 1

    def inverse(self) -> "MultiplicationMap":
        if not self.invertible:
            raise InvalidArgument(f"multiplication by {self.k} is not invertible on {self.group!r}")
        # one integer inverting k modulo every factor at once
        return MultiplicationMap(self.group, pow(self.k, -1, self.group.order) if self.group.order > 1 else 1)

    def __call__(self, x: ElementLike) -> GroupElement:
        return psi_apply(self.k, self.group.element(x))


def make_group(moduli: Sequence[int] | int) -> FiniteAbelianGroup:
    if isinstance(moduli, (int, np.integer)):
        moduli = [int(moduli)]
    return FiniteAbelianGroup(tuple(moduli))


def add(x: GroupElement, y: GroupElement) -> GroupElement:
    _same(x.group, y.group)
    return GroupElement(x.group, tuple((a + b) % m for a, b, m in zip(x.coords, y.coords, x.group.moduli)))


def neg(x: GroupElement) -> GroupElement:
    return GroupElement(x.group, tuple((-a) % m for a, m in zip(x.coords, x.group.moduli)))


def eval_character(gamma: Character, x: GroupElement) -> complex:
    _same(gamma.group, x.group)
    G = gamma.group
    n = sum(c * a * (G.exponent // m) for c, a, m in zip(gamma.coeffs, x.coords, G.moduli))
    return unit_root(n, G.exponent)


def psi_apply(k: int, x: GroupElement) -> GroupElement:
    return GroupElement(x.group, tuple((k * a) % m for a, m in zip(x.coords, x.group.moduli)))


def halve(x: GroupElement) -> GroupElement:
    return psi_apply(x.group.half_multiplier(), x)


def compose_character_with_psi(gamma: Character, k: int) -> Character:
    """The character x -> gamma(k x)."""
    return gamma.group.character([c * k for c in gamma.coeffs])


def psi2_power(gamma: Character, a: int) -> Character:
    """gamma composed with psi_2^a; negative a uses the inverse of doubling."""
    if a >= 0:
        return compose_character_with_psi(gamma, pow(2, a))
    return compose_character_with_psi(gamma, pow(gamma.group.half_multiplier(), -a))
