"""Sum-free-with-respect-to predicates, exact and greedy extraction, Freiman
2-isomorphic embeddings into cyclic groups and the desk-scale pipeline."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionViolation, ResourceLimit

MIS_CAP = 40
NODE_CAP = 10**7
ENUM_CAP = 2 * 10**5
QUAD_CAP = 10**8
FULL_TRIALS = 32


class IntegerSet(tuple):
    """Sorted tuple of distinct integers."""

    def __new__(cls, items: Iterable[int] = ()):
        return super().__new__(cls, sorted(set(int(a) for a in items)))

    def __repr__(self):
        return "{" + ", ".join(map(str, self)) + "}"

    def sumset(self, other: "IntegerSet | None" = None) -> "IntegerSet":
        other = self if other is None else other
        return IntegerSet(a + b for a in self for b in other)

    def difference(self, other: "IntegerSet | None" = None) -> "IntegerSet":
        other = self if other is None else other
        return IntegerSet(a - b for a in self for b in other)

    def dilate(self, k: int) -> "IntegerSet":
        return IntegerSet(k * a for a in self)


def as_set(A) -> IntegerSet:
    return A if isinstance(A, IntegerSet) else IntegerSet(A)


def is_sumfree_wrt(B, A) -> bool:
    """No two distinct elements of B sum into A."""
    B, A = as_set(B), as_set(A)
    if len(B) > 64:
        b = np.array(B, dtype=np.int64)
        i, j = np.triu_indices(len(b), k=1)
        return not np.isin(b[i] + b[j], np.array(A, dtype=np.int64)).any()
    A = set(A)
    return not any(a + b in A for a, b in itertools.combinations(B, 2))


def conflict_graph(X: IntegerSet, Y: set[int]) -> list[int]:
    """Bitset adjacency on positions of X: i ~ j iff X[i] + X[j] in Y (i != j)."""
    n = len(X)
    adj = [0] * n
    for i, j in itertools.combinations(range(n), 2):
        if X[i] + X[j] in Y:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    return adj


def _max_independent(adj: Sequence[int], n: int, target: int | None = None,
                     node_cap: int = NODE_CAP) -> int:
    """Maximum independent set bitmask by branch and bound.

    The bound colours the candidate set greedily in the complement graph: each
    colour class is a clique of the conflict graph, so it holds at most one
    vertex of any independent set.  With ``target`` set the search stops at
    the first independent set of that size.
    """
    full = (1 << n) - 1
    # greedy start: repeatedly take a minimum-degree vertex
    best, cand = 0, full
    while cand:
        v = min(_bits(cand), key=lambda u: ((adj[u] & cand).bit_count(), u))
        best |= 1 << v
        cand &= ~(adj[v] | 1 << v)
    if target is not None and best.bit_count() >= target:
        return _trim(best, target)
    nodes = 0

    def bound(cand: int) -> int:
        colours = 0
        rest = cand
        while rest:
            colours += 1
            # a clique of the conflict graph, grown greedily
            low = rest & -rest
            v = low.bit_length() - 1
            clique = 1 << v
            common = adj[v] & rest
            while common:
                lw = common & -common
                u = lw.bit_length() - 1
                clique |= lw
                common &= adj[u]
            rest &= ~clique
        return colours

    def rec(chosen: int, cand: int):
        nonlocal best, nodes
        nodes += 1
        if nodes > node_cap:
            raise ResourceLimit(f"independent-set search exceeded {node_cap} nodes")
        if not cand:
            if chosen.bit_count() > best.bit_count():
                best = chosen
            return
        if chosen.bit_count() + bound(cand) <= best.bit_count():
            return
        if target is not None and best.bit_count() >= target:
            return
        # branch on the highest-degree candidate: take it, or drop it
        v = max(_bits(cand), key=lambda u: ((adj[u] & cand).bit_count(), -u))
        rec(chosen | 1 << v, cand & ~(adj[v] | 1 << v))
        rec(chosen, cand & ~(1 << v))

    rec(0, full)
    if target is not None:
        return _trim(best, target) if best.bit_count() >= target else 0
    return best


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _trim(mask: int, size: int) -> int:
    # keep the largest positions so witnesses prefer large elements
    bits = _bits(mask)[::-1][:size]
    return sum(1 << b for b in bits)


@dataclass(frozen=True)
class MResult:
    value: int
    witness: IntegerSet


def exact_M(A, cap: int = MIS_CAP) -> MResult:
    A = as_set(A)
    if len(A) > cap:
        raise ResourceLimit(f"|A| = {len(A)} exceeds the branch-and-bound cap {cap}")
    if not A:
        return MResult(0, IntegerSet())
    adj = conflict_graph(A, set(A))
    best = _max_independent(adj, len(A))
    B = IntegerSet(A[i] for i in _bits(best))
    return MResult(len(B), B)


def exact_M_bruteforce(A) -> int:
    """Largest sum-free subset by enumerating all subsets; an oracle."""
    A = as_set(A)
    n = len(A)
    best = 0
    for mask in range(1 << n):
        size = mask.bit_count()
        if size > best and is_sumfree_wrt([A[i] for i in range(n) if mask >> i & 1], A):
            best = size
    return best


def greedy_sumfree(A) -> IntegerSet:
    """Take the maximum, drop every y with x + y in A, repeat."""
    A = as_set(A)
    if not A:
        raise InvalidArgument("greedy extraction needs a non-empty set")
    members_ = set(A)
    C = list(A)
    B = []
    while C:
        x = C.pop()  # C stays sorted, so the last element is the maximum
        B.append(x)
        C = [y for y in C if x + y not in members_]
    return IntegerSet(B)


# Freiman embedding -------------------------------------------------------------


@dataclass(frozen=True)
class DoublingStats:
    sumset: int
    diffset: int  # |2A - 2A|
    doubling: float
    ratio_2a2a: float


def doubling_stats(A) -> DoublingStats:
    A = as_set(A)
    if not A:
        return DoublingStats(0, 0, 0.0, 0.0)
    s = A.sumset()
    d = s.difference(s)
    return DoublingStats(len(s), len(d), len(s) / len(A), len(d) / len(A))


@dataclass(frozen=True)
class EmbeddingResult:
    ok: bool
    A_prime: IntegerSet
    N: int
    mapping: dict = field(default_factory=dict)
    trials: int = 0
    quadruples_checked: int = 0
    best_size: int = 0


def next_odd_above(x: int) -> int:
    n = x + 1
    return n if n % 2 else n + 1


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            return False
    return True


def _next_prime(n: int) -> int:
    while not _is_prime(n):
        n += 1
    return n


def verify_freiman(A_prime: Sequence[int], phi: dict, N: int, cap: int = QUAD_CAP) -> tuple[bool, int]:
    """Exhaustive check of a1+a2 = b1+b2 <=> phi(a1)+phi(a2) = phi(b1)+phi(b2) mod N.

    Every ordered quadruple is covered by comparing all ordered pair sums.
    Returns (verdict, number of quadruples covered).
    """
    A_prime = list(A_prime)
    n = len(A_prime)
    if n**4 > cap:
        raise ResourceLimit(f"{n}^4 quadruples exceed the verification cap {cap}")
    a = np.array(A_prime, dtype=np.int64)
    f = np.array([phi[x] for x in A_prime], dtype=np.int64)
    s_int = (a[:, None] + a[None, :]).reshape(-1)
    s_mod = ((f[:, None] + f[None, :]) % N).reshape(-1)
    same_int = s_int[:, None] == s_int[None, :]
    same_mod = s_mod[:, None] == s_mod[None, :]
    return bool(np.array_equal(same_int, same_mod)), n**4


def ruzsa_embed(A, trials: int = 10_000, seed: int = 0, N: int | None = None) -> EmbeddingResult:
    """Randomised search for a large A' ⊆ A Freiman 2-isomorphic to a subset of Z/N.

    The first ``FULL_TRIALS`` trials, and every odd trial after them, try all
    of A under x -> l (x - min A)/g mod N, with g the gcd of the differences
    and l = 1 first.  The rest use a prime P > 4(max A - min A): x goes to
    z = (l x + u) mod P, the more populated half of [0, P) is kept and
    survivors map to z mod N.  Sums inside one half window cannot wrap
    modulo P, which gives the forward implication; the random multiplier
    makes the converse likely.  Every candidate is verified exhaustively.
    """
    A = as_set(A)
    if not A:
        raise InvalidArgument("A must be non-empty")
    stats = doubling_stats(A)
    if N is None:
        N = next_odd_above(4 * stats.diffset)
    elif N <= 4 * stats.diffset:
        raise InvalidArgument(f"N must exceed 4|2A-2A| = {4 * stats.diffset}")
    span = A[-1] - A[0]
    P = _next_prime(max(4 * span + 1, 3))
    rng = np.random.default_rng(seed)
    need = (len(A) + 1) // 2
    best = 0
    checked = 0
    lo = A[0]
    g = math.gcd(*(x - lo for x in A)) or 1
    for trial in range(1, trials + 1):
        if trial <= FULL_TRIALS or trial % 2 == 1:
            lam = 1 if trial == 1 else int(rng.integers(1, N))
            phi = {x: lam * ((x - lo) // g) % N for x in A}
            ok, q = verify_freiman(A, phi, N)
            checked += q
            if ok:
                return EmbeddingResult(True, A, N, phi, trial, checked, len(A))
            continue
        lam = int(rng.integers(1, P))
        u = int(rng.integers(0, P))
        z = {x: (lam * x + u) % P for x in A}
        low = [x for x in A if z[x] < P / 2]
        high = [x for x in A if z[x] >= P / 2]
        keep = low if len(low) >= len(high) else high
        best = max(best, len(keep))
        if len(keep) < need:
            continue
        phi = {x: z[x] % N for x in keep}
        ok, q = verify_freiman(keep, phi, N)
        checked += q
        if ok:
            return EmbeddingResult(True, IntegerSet(keep), N, phi, trial, checked, len(keep))
    return EmbeddingResult(False, IntegerSet(), N, {}, trials, checked, best)


# verifiers and pipeline ------------------------------------------------------------


@dataclass(frozen=True)
class DilateCheck:
    size_ok: bool
    doubling_ok: bool
    disjoint_ok: bool
    size_ratio: float
    doubling: float

    @property
    def passed(self) -> bool:
        return self.size_ok and self.doubling_ok and self.disjoint_ok


def verify_disjoint_dilate(Xp, X, Y, doubling_cap: float, size_floor: float) -> DilateCheck:
    """Checks |X'| >= size_floor |X|, |X'+X'| <= doubling_cap |X'| and (2·X') ∩ Y = ∅."""
    Xp, X, Y = as_set(Xp), as_set(X), as_set(Y)
    if not set(Xp) <= set(X) or not set(X) <= set(Y):
        raise PreconditionViolation("need X' ⊆ X ⊆ Y")
    ratio = len(Xp) / len(X) if X else 0.0
    size_ok = bool(Xp) and len(Xp) >= size_floor * len(X)
    doubling = len(Xp.sumset()) / len(Xp) if Xp else 0.0
    doubling_ok = doubling <= doubling_cap
    disjoint_ok = not (set(Xp.dilate(2)) & set(Y))
    return DilateCheck(size_ok, doubling_ok, disjoint_ok, ratio, doubling)


def pipeline_extract(X, Y, k: int, node_cap: int = NODE_CAP) -> IntegerSet | None:
    """Some S ⊆ X of size k, sum-free with respect to Y, or None."""
    X, Y = as_set(X), as_set(Y)
    if not set(X) <= set(Y):
        raise PreconditionViolation("need X ⊆ Y")
    if k < 1:
        raise InvalidArgument("k must be positive")
    if k > len(X):
        return None
    adj = conflict_graph(X, set(Y))
    hit = _max_independent(adj, len(X), target=k, node_cap=node_cap)
    if not hit:
        return None
    return IntegerSet(X[i] for i in _bits(hit))


@dataclass(frozen=True)
class UniverseMin:
    value: int
    argmin: IntegerSet
    exhaustive: bool
    sets_examined: int


def min_M_over_universe(n: int, m: int, cap: int = ENUM_CAP, samples: int | None = None,
                        seed: int = 0) -> UniverseMin:
    """min M(A) over A ⊆ [m] with |A| = n; an upper bound for the true minimum over all integer sets.

    Exhaustive unless ``samples`` is given, in which case that many random
    n-subsets are examined.
    """
    if not 1 <= n <= m:
        raise InvalidArgument("need 1 <= n <= m")
    best: UniverseMin | None = None
    if samples is None:
        total = math.comb(m, n)
        if total > cap:
            raise ResourceLimit(f"C({m},{n}) = {total} subsets exceed the cap {cap}")
        source = itertools.combinations(range(1, m + 1), n)
        count = total
    else:
        rng = np.random.default_rng(seed)
        source = (sorted(int(v) + 1 for v in rng.choice(m, size=n, replace=False)) for _ in range(samples))
        count = samples
    for combo in source:
        v = exact_M(combo).value
        if best is None or v < best.value:
            best = UniverseMin(v, IntegerSet(combo), samples is None, count)
    return best
