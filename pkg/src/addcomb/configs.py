"""k-configurations: ordered counts through the midpoint graph, non-degenerate
search, Behrend-type progression-free sets and the interval embedding.

A k-configuration in A is a tuple (x_1..x_k) with (x_i + x_j)/2 in A for all
i <= j.  Taking i = j forces every x_i into A, so ordered configurations are
exactly ordered k-tuples of vertices of the midpoint graph that are pairwise
adjacent or equal.  If the midpoint graph has c_s cliques of size s, a tuple
whose set of distinct entries is a fixed s-clique is a surjection [k] -> clique,
hence

    count = sum_s c_s * s! * S(k, s)

with S the Stirling numbers of the second kind.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionViolation, ResourceLimit
from .group import FiniteAbelianGroup, make_group
from .harmonic import members

CLIQUE_NODE_CAP = 5 * 10**6


@dataclass(frozen=True)
class MidpointGraph:
    group: FiniteAbelianGroup
    vertices: tuple[int, ...]  # element indices of A, ascending
    adjacency: tuple[int, ...]  # bitset over positions in ``vertices``; no loops stored

    @property
    def n(self) -> int:
        return len(self.vertices)

    def neighbours(self, v: int) -> list[int]:
        return [u for u in range(self.n) if self.adjacency[v] >> u & 1]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as pairs of element indices, smaller first."""
        out = []
        for a in range(self.n):
            for b in self.neighbours(a):
                if a < b:
                    out.append((self.vertices[a], self.vertices[b]))
        return out


def midpoint_graph(A, G: FiniteAbelianGroup) -> MidpointGraph:
    G.half_multiplier()  # raises on even order
    idx = members(G, A)
    in_A = np.zeros(G.order, dtype=bool)
    in_A[idx] = True
    if idx.size == 0:
        return MidpointGraph(G, (), ())
    mids = G.halve_idx(G.add_idx(idx[:, None], idx[None, :]))
    adj = in_A[mids]
    np.fill_diagonal(adj, False)
    masks = []
    weights = 1 << np.arange(idx.size, dtype=object) if idx.size else None
    for row in adj:
        masks.append(int(sum(weights[row])) if row.any() else 0)
    return MidpointGraph(G, tuple(int(i) for i in idx), tuple(masks))


# clique counting -------------------------------------------------------------


def _degeneracy_order(adj: Sequence[int]) -> list[int]:
    n = len(adj)
    alive = (1 << n) - 1
    order = []
    while alive:
        v = min((u for u in range(n) if alive >> u & 1), key=lambda u: ((adj[u] & alive).bit_count(), u))
        order.append(v)
        alive &= ~(1 << v)
    return order


def clique_counts(adj: Sequence[int], kmax: int, cap: int = CLIQUE_NODE_CAP) -> list[int]:
    """counts[s] = number of s-cliques for s = 0..kmax (pivot-based counting).

    Each branch keeps ``held`` vertices that are in every clique below it and
    ``piv`` pivot vertices any subset of which may be added, so a leaf stands
    for C(piv, j) cliques of size held + j.
    """
    counts = [0] * (kmax + 1)
    nodes = 0

    def rec(P: int, held: int, piv: int):
        nonlocal nodes
        nodes += 1
        if nodes > cap:
            raise ResourceLimit(f"clique search exceeded {cap} nodes")
        if held > kmax:
            return
        if P == 0 or held == kmax:
            for j in range(0, min(piv, kmax - held) + 1):
                counts[held + j] += math.comb(piv, j)
            return
        best, best_deg, rest = -1, -1, P
        while rest:
            low = rest & -rest
            u = low.bit_length() - 1
            d = (adj[u] & P).bit_count()
            if d > best_deg:
                best, best_deg = u, d
            rest ^= low
        branch = P & ~adj[best]
        while branch:
            low = branch & -branch
            v = low.bit_length() - 1
            branch ^= low
            if v == best:
                rec(P & adj[v], held, piv + 1)
            else:
                rec(P & adj[v], held + 1, piv)
            P &= ~low

    # roots in degeneracy order; each vertex only sees later neighbours
    order = _degeneracy_order(adj)
    pos = {v: i for i, v in enumerate(order)}
    later = [0] * len(adj)
    for v in range(len(adj)):
        for u in range(len(adj)):
            if adj[v] >> u & 1 and pos[u] > pos[v]:
                later[v] |= 1 << u
    counts[0] = 1
    for v in order:
        if kmax >= 1:
            rec(later[v], 1, 0)
    return counts


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


@dataclass(frozen=True)
class ConfigurationCount:
    count: int
    probability: Fraction
    clique_counts: tuple[int, ...]

    @property
    def nondegenerate_ordered(self) -> int:
        """Ordered tuples with pairwise distinct entries: k! times the k-cliques."""
        k = len(self.clique_counts) - 1
        return math.factorial(k) * self.clique_counts[k]


def count_k_configurations(A, k: int, G: FiniteAbelianGroup, cap: int = CLIQUE_NODE_CAP) -> ConfigurationCount:
    if k < 2:
        raise InvalidArgument("k must be at least 2")
    g = midpoint_graph(A, G)
    c = clique_counts(g.adjacency, k, cap)
    total = sum(c[s] * math.factorial(s) * stirling2(k, s) for s in range(1, k + 1))
    return ConfigurationCount(total, Fraction(total, G.order**k), tuple(c))


def count_k_configurations_naive(A, k: int, G: FiniteAbelianGroup) -> int:
    """Direct enumeration of G^k; an oracle for tiny groups."""
    idx = members(G, A)
    in_A = np.zeros(G.order, dtype=bool)
    in_A[idx] = True
    ok = in_A[G.halve_idx(G.add_table)]
    n = G.order
    acc = np.ones((n,) * k, dtype=bool)
    for i in range(k):
        for j in range(i, k):
            shape = [1] * k
            if i == j:
                shape[i] = n
                acc &= np.diagonal(ok).reshape(shape)
            else:
                shape[i] = n
                shape[j] = n
                acc &= ok.reshape(shape)
    return int(acc.sum())


def find_nondegenerate_configuration(A, k: int, G: FiniteAbelianGroup,
                                     cap: int = CLIQUE_NODE_CAP) -> tuple[int, ...] | None:
    """First k-clique of the midpoint graph in lexicographic order of element index."""
    if k < 2:
        raise InvalidArgument("k must be at least 2")
    g = midpoint_graph(A, G)
    nodes = 0

    def rec(chosen: list[int], cand: int) -> list[int] | None:
        nonlocal nodes
        nodes += 1
        if nodes > cap:
            raise ResourceLimit(f"configuration search exceeded {cap} nodes")
        if len(chosen) == k:
            return chosen
        if cand.bit_count() < k - len(chosen):
            return None
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            # only later vertices, so each clique is met once
            found = rec(chosen + [v], cand & g.adjacency[v])
            if found:
                return found
        return None

    hit = rec([], (1 << g.n) - 1)
    if hit is None:
        return None
    return tuple(g.vertices[v] for v in hit)


@dataclass(frozen=True)
class DegenerateBound:
    probability: Fraction
    bound: Fraction
    passed: bool


def degenerate_bound_check(A, k: int, G: FiniteAbelianGroup) -> DegenerateBound:
    if find_nondegenerate_configuration(A, k, G) is not None:
        raise PreconditionViolation("A contains a non-degenerate configuration")
    prob = count_k_configurations(A, k, G).probability
    bound = Fraction(math.comb(k, 2), G.order)
    return DegenerateBound(prob, bound, prob <= bound)


# progression-free sets ---------------------------------------------------------


def has_3ap(A: Iterable[int]) -> bool:
    """True when A holds a < b < c with a + c = 2b."""
    s = sorted(set(int(a) for a in A))
    present = set(s)
    for i, a in enumerate(s):
        for c in s[i + 1:]:
            if (a + c) % 2 == 0 and (a + c) // 2 in present:
                return True
    return False


def _behrend_candidates(N: int, n: int, m: int) -> list[int]:
    base = 2 * m - 1
    vals = np.arange(N, dtype=np.int64)  # encoded values v, set element v + 1
    digits = np.empty((n, N), dtype=np.int64)
    rest = vals.copy()
    for i in range(n):
        digits[i] = rest % base
        rest //= base
    ok = (rest == 0) & np.all(digits < m, axis=0)
    if not ok.any():
        return []
    norms = (digits[:, ok] ** 2).sum(axis=0)
    vs = vals[ok]
    uniq, counts = np.unique(norms, return_counts=True)
    # largest sphere, ties broken towards the smallest norm
    target = uniq[int(np.argmax(counts))]
    return [int(v) + 1 for v in vs[norms == target]]


def behrend_set(N: int) -> list[int]:
    """A 3AP-free subset of [N] from digit vectors on a common sphere.

    Digits below m written in base 2m - 1 add without carries, so three
    encoded values in progression give three digit vectors in progression;
    vectors on one sphere admit none.  The pair (dimension n, digit bound m)
    is scanned over n >= 1 and m >= 2 with m^n <= 4N and (2m-1)^(n-1) < N;
    for n = 1 every sphere is a single point, so only m = 2 is tried.
    """
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    best = [1]
    n = 1
    while 3 ** (n - 1) < N:
        m = 2
        while m**n <= 4 * N and (2 * m - 1) ** (n - 1) < N and (n > 1 or m == 2):
            cand = _behrend_candidates(N, n, m)
            if len(cand) > len(best):
                best = cand
            m += 1
        n += 1
    if has_3ap(best):  # pragma: no cover - guards the construction
        raise AssertionError("Behrend construction produced a 3AP")
    return best


# interval embedding -------------------------------------------------------------


def embed_interval(A: Iterable[int], N: int) -> tuple[FiniteAbelianGroup, list[int]]:
    """Reduce A, a subset of [N], modulo 2N + 1."""
    A = sorted(set(int(a) for a in A))
    if A and (A[0] < 1 or A[-1] > N):
        raise InvalidArgument(f"A must lie in [1, {N}]")
    G = make_group([2 * N + 1])
    return G, [a % G.order for a in A]


def integer_nondegenerate_configuration(A: Iterable[int], k: int) -> tuple[int, ...] | None:
    """Brute force over k-subsets of the integers in A."""
    A = sorted(set(int(a) for a in A))
    present = set(A)
    for combo in itertools.combinations(A, k):
        if all((x + y) % 2 == 0 and (x + y) // 2 in present for x, y in itertools.combinations(combo, 2)):
            return combo
    return None


@dataclass(frozen=True)
class EmbeddingEquivalence:
    integer_side: tuple[int, ...] | None
    group_side: tuple[int, ...] | None

    @property
    def agree(self) -> bool:
        return (self.integer_side is None) == (self.group_side is None)


def check_embedding(A: Iterable[int], N: int, k: int) -> EmbeddingEquivalence:
    A = list(A)
    G, image = embed_interval(A, N)
    group_side = None
    for combo in itertools.combinations(sorted(image), k):
        if all(int(G.halve_idx(G.add_idx(x, y))) in set(image) for x, y in itertools.combinations(combo, 2)):
            group_side = combo
            break
    return EmbeddingEquivalence(integer_nondegenerate_configuration(A, k), group_side)


# random sets ---------------------------------------------------------------------


def random_set(universe: FiniteAbelianGroup | int, density: float, seed: int) -> list[int]:
    """Independent inclusion with the given probability.

    A group gives element indices; an integer N gives a subset of [N].
    """
    if not 0 <= density <= 1:
        raise InvalidArgument("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    if isinstance(universe, FiniteAbelianGroup):
        keep = rng.random(universe.order) < density
        return [int(i) for i in np.flatnonzero(keep)]
    keep = rng.random(int(universe)) < density
    return [int(i) + 1 for i in np.flatnonzero(keep)]
