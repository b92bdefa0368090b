"""Grid semi-norms, homomorphism densities of oriented graphs, and the
rectangle / low-degree dichotomy for deviating counts.

Densities are exact :class:`fractions.Fraction` values throughout; floats
only appear in grid norms and L^p deviations.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionViolation, ResourceLimit

log = logging.getLogger(__name__)

GRID_COST_CAP = 10**8
TUPLE_SPACE_CAP = 10**9
EXHAUSTIVE_SIDE = 12

Edge = tuple[int, int]


@dataclass(frozen=True)
class OrientedGraph:
    """Vertices 1..k; every edge (i, j) has i < j."""

    k: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        if len(set(edges)) != len(edges):
            raise InvalidArgument("parallel edges are not allowed")
        for i, j in edges:
            if not 1 <= i < j <= self.k:
                raise InvalidArgument(f"edge {(i, j)} must satisfy 1 <= i < j <= k={self.k}")
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * (self.k + 1)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg[1:]

    @classmethod
    def transitive_complete(cls, k: int) -> "OrientedGraph":
        return cls(k, tuple(itertools.combinations(range(1, k + 1), 2)))

    @classmethod
    def path(cls, k: int) -> "OrientedGraph":
        return cls(k, tuple((i, i + 1) for i in range(1, k)))


def kappa(H: OrientedGraph) -> int:
    """2|E| minus the number of degree-one vertices."""
    return 2 * H.m - sum(1 for d in H.degrees() if d == 1)


def delta_of(eps, m: int) -> Fraction:
    """delta(eps, m) = eps^2 m^-2 / 16000."""
    eps = Fraction(eps)
    return eps * eps / (16000 * m * m)


def delta_tilde(eps, H: OrientedGraph) -> Fraction:
    """eps^2 kappa(H)^-2 / 1000."""
    kap = kappa(H)
    if kap == 0:
        raise InvalidArgument("delta_tilde is undefined when kappa(H) = 0")
    eps = Fraction(eps)
    return eps * eps / (1000 * kap * kap)


# grid norms ----------------------------------------------------------------


def grid_norm(f, p: int, q: int, cap: int = GRID_COST_CAP) -> float:
    """||f||_{U(p,q)}: x ranges over rows (p copies), y over columns (q copies)."""
    f = np.asarray(f, dtype=float)
    if p < 1 or q < 1:
        raise InvalidArgument("grid norm needs p, q >= 1")
    nx, ny = f.shape
    if p == 1 and q == 1:
        return float(abs(f.mean()))
    # E_{y in Y^q} (E_x prod_j f(x, y_j))^p, or the transposed factorisation
    cost_cols = ny**q * nx * q
    cost_rows = nx**p * ny * p
    if min(cost_cols, cost_rows) > cap:
        raise ResourceLimit(f"U({p},{q}) on a {nx}x{ny} table costs {min(cost_cols, cost_rows)} > cap {cap}")
    if cost_rows < cost_cols:
        f, p, q = f.T, q, p
    total = 0.0
    for ys in _tuples(f.shape[1], q):
        inner = np.prod(f[:, ys], axis=1).mean()
        total += inner**p
    val = abs(total / f.shape[1] ** q)
    return float(val ** (1.0 / (p * q)))


def _tuples(n: int, q: int):
    for ys in itertools.product(range(n), repeat=q):
        yield list(ys)


def grid_norm_naive(f, p: int, q: int) -> float:
    """Full average over X^p x Y^q; an oracle for small tables."""
    f = np.asarray(f, dtype=float)
    nx, ny = f.shape
    total = 0.0
    for xs in itertools.product(range(nx), repeat=p):
        for ys in itertools.product(range(ny), repeat=q):
            prod = 1.0
            for x in xs:
                for y in ys:
                    prod *= f[x, y]
            total += prod
    return abs(total / (nx**p * ny**q)) ** (1.0 / (p * q))


# counting instances ---------------------------------------------------------


@dataclass
class CountingInstance:
    graph: OrientedGraph
    set_sizes: tuple[int, ...]
    tables: dict[Edge, np.ndarray] = field(repr=False)

    def __post_init__(self):
        self.set_sizes = tuple(int(s) for s in self.set_sizes)
        if len(self.set_sizes) != self.graph.k or min(self.set_sizes, default=1) < 1:
            raise InvalidArgument("need one positive set size per vertex")
        tabs = {}
        for e in self.graph.edges:
            t = np.asarray(self.tables[e], dtype=bool)
            i, j = e
            if t.shape != (self.set_sizes[i - 1], self.set_sizes[j - 1]):
                raise InvalidArgument(f"table for edge {e} has shape {t.shape}")
            tabs[e] = t
        self.tables = tabs

    def density(self, e: Edge) -> Fraction:
        t = self.tables[e]
        return Fraction(int(t.sum()), t.size)

    def densities(self) -> dict[Edge, Fraction]:
        return {e: self.density(e) for e in self.graph.edges}

    def product_density(self) -> Fraction:
        return math.prod(self.densities().values(), start=Fraction(1))

    def to_dict(self) -> dict:
        return {
            "k": self.graph.k,
            "edges": [list(e) for e in self.graph.edges],
            "sizes": list(self.set_sizes),
            "tables": {f"{i},{j}": t.astype(int).tolist() for (i, j), t in self.tables.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CountingInstance":
        H = OrientedGraph(d["k"], tuple(tuple(e) for e in d["edges"]))
        tables = {}
        for key, rows in d["tables"].items():
            i, j = (int(s) for s in key.split(","))
            tables[(i, j)] = np.array(rows, dtype=bool)
        return cls(H, tuple(d["sizes"]), tables)


def _row_masks(t: np.ndarray) -> list[int]:
    out = []
    for row in t:
        m = 0
        for y in np.flatnonzero(row):
            m |= 1 << int(y)
        out.append(m)
    return out


def homomorphism_count(inst: CountingInstance, cap: int = TUPLE_SPACE_CAP) -> int:
    """Number of tuples in X_1 x ... x X_k satisfying every edge table."""
    space = math.prod(inst.set_sizes)
    if space > cap:
        raise ResourceLimit(f"tuple space {space} exceeds cap {cap}")
    k = inst.graph.k
    into: list[list[tuple[int, list[int]]]] = [[] for _ in range(k)]
    has_later = [False] * k
    for (i, j), t in inst.tables.items():
        into[j - 1].append((i - 1, _row_masks(t)))
        has_later[i - 1] = True
    full = [(1 << n) - 1 for n in inst.set_sizes]
    assign = [0] * k

    # vertices are assigned in order 1..k, so every in-neighbour is already fixed
    def rec(v: int) -> int:
        if v == k:
            return 1
        cand = full[v]
        for u, rows in into[v]:
            cand &= rows[assign[u]]
            if not cand:
                return 0
        if not has_later[v]:
            return cand.bit_count() * rec(v + 1) if cand else 0
        total = 0
        while cand:
            low = cand & -cand
            assign[v] = low.bit_length() - 1
            total += rec(v + 1)
            cand ^= low
        return total

    return rec(0)


def homomorphism_density(inst: CountingInstance, cap: int = TUPLE_SPACE_CAP) -> Fraction:
    return Fraction(homomorphism_count(inst, cap), math.prod(inst.set_sizes))


def homomorphism_density_sampled(inst: CountingInstance, samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate and its standard error."""
    rng = np.random.default_rng(seed)
    xs = [rng.integers(0, n, size=samples) for n in inst.set_sizes]
    hit = np.ones(samples, dtype=bool)
    for (i, j), t in inst.tables.items():
        hit &= t[xs[i - 1], xs[j - 1]]
    est = float(hit.mean())
    return est, float(math.sqrt(max(est * (1 - est), 0.0) / samples))


def homomorphism_count_naive(inst: CountingInstance) -> int:
    count = 0
    for xs in itertools.product(*(range(n) for n in inst.set_sizes)):
        if all(t[xs[i - 1], xs[j - 1]] for (i, j), t in inst.tables.items()):
            count += 1
    return count


# the dichotomy ---------------------------------------------------------------


@dataclass(frozen=True)
class Deviation:
    fired: bool
    density: Fraction
    expected: Fraction
    lhs: Fraction
    rhs: Fraction
    delta: Fraction


def deviation_test(inst: CountingInstance, eps) -> Deviation:
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise InvalidArgument("eps must lie in (0, 1]")
    dens = homomorphism_density(inst)
    expected = inst.product_density()
    lhs = abs(dens - expected)
    rhs = eps * expected
    return Deviation(lhs >= rhs, dens, expected, lhs, rhs, delta_of(eps, inst.graph.m))


@dataclass(frozen=True)
class Rectangle:
    S: tuple[int, ...]
    T: tuple[int, ...]
    mean: Fraction
    heuristic: bool = False


def _rect_ok(hits: int, s: int, t: int, total: int, nx: int, ny: int, delta: Fraction) -> bool:
    # hits / (s t) >= (1 + delta) * total / (nx ny), cross-multiplied
    return hits * delta.denominator * nx * ny >= (delta.denominator + delta.numerator) * total * s * t


def find_dense_rectangle(table, delta, exhaustive_side: int = EXHAUSTIVE_SIDE) -> Rectangle | None:
    """S x T with mean >= (1 + delta) * (mean of table), preferring large rectangles.

    Exhaustive when both sides have at most ``exhaustive_side`` elements: for every
    row set S the best column set of each size is the top columns by count. Among
    valid rectangles the one maximising min(|S|/|X|, |T|/|Y|), then |S||T|, wins.
    Larger tables fall back to greedy peeling, flagged as heuristic.
    """
    t = np.asarray(table, dtype=bool)
    delta = Fraction(delta)
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    nx, ny = t.shape
    total = int(t.sum())
    if nx <= exhaustive_side and ny <= exhaustive_side:
        return _rectangle_exhaustive(t, delta, total)
    return _rectangle_peeling(t, delta, total)


def _rectangle_exhaustive(t: np.ndarray, delta: Fraction, total: int) -> Rectangle | None:
    nx, ny = t.shape
    masks = np.arange(1, 1 << nx)
    rows = ((masks[:, None] >> np.arange(nx)[None, :]) & 1).astype(np.int64)
    col_counts = rows @ t.astype(np.int64)
    order = np.argsort(-col_counts, axis=1, kind="stable")
    prefix = np.cumsum(np.take_along_axis(col_counts, order, axis=1), axis=1)
    sizes = rows.sum(axis=1)
    best_key, best = None, None
    for a in range(len(masks)):
        s = int(sizes[a])
        for tt in range(ny, 0, -1):
            if _rect_ok(int(prefix[a, tt - 1]), s, tt, total, nx, ny, delta):
                key = (min(Fraction(s, nx), Fraction(tt, ny)), s * tt)
                if best_key is None or key > best_key:
                    best_key = key
                    S = tuple(int(x) for x in np.flatnonzero(rows[a]))
                    T = tuple(sorted(int(y) for y in order[a, :tt]))
                    best = Rectangle(S, T, Fraction(int(prefix[a, tt - 1]), s * tt))
                break
    return best


def _rectangle_peeling(t: np.ndarray, delta: Fraction, total: int) -> Rectangle | None:
    nx, ny = t.shape
    S, T = list(range(nx)), list(range(ny))
    while S and T:
        sub = t[np.ix_(S, T)]
        hits = int(sub.sum())
        if _rect_ok(hits, len(S), len(T), total, nx, ny, delta):
            return Rectangle(tuple(S), tuple(T), Fraction(hits, len(S) * len(T)), heuristic=True)
        row_d = sub.mean(axis=1)
        col_d = sub.mean(axis=0)
        if row_d.min() <= col_d.min() and len(S) > 1 or len(T) == 1:
            del S[int(np.argmin(row_d))]
        else:
            del T[int(np.argmin(col_d))]
    return None


def find_low_degree_set(table, delta) -> tuple[int, ...] | None:
    """Rows whose mean is at most (1 - delta) times the table mean."""
    t = np.asarray(table, dtype=bool)
    delta = Fraction(delta)
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    nx, ny = t.shape
    total = int(t.sum())
    rows = t.sum(axis=1)
    # row / ny <= (1 - delta) total / (nx ny)
    S = tuple(
        int(x) for x in range(nx)
        if int(rows[x]) * nx * delta.denominator <= (delta.denominator - delta.numerator) * total
    )
    return S or None


@dataclass(frozen=True)
class DichotomyWitness:
    variant: str  # "rectangle", "low_degree" or "none"
    edge: Edge | None = None
    S: tuple[int, ...] = ()
    T: tuple[int, ...] = ()
    mean: Fraction | None = None
    delta: Fraction | None = None
    heuristic: bool = False
    row_density: Fraction | None = None
    col_density: Fraction | None = None


def counting_dichotomy(inst: CountingInstance, eps) -> DichotomyWitness:
    dev = deviation_test(inst, eps)
    if not dev.fired:
        raise PreconditionViolation("the count does not deviate by eps; the dichotomy does not apply")
    delta = dev.delta
    for e in inst.graph.edges:
        t = inst.tables[e]
        nx, ny = t.shape
        rect = find_dense_rectangle(t, delta)
        if rect is not None:
            w = DichotomyWitness("rectangle", e, rect.S, rect.T, rect.mean, delta, rect.heuristic,
                                 Fraction(len(rect.S), nx), Fraction(len(rect.T), ny))
            if verify_witness(inst, w):
                return w
        S = find_low_degree_set(t, delta)
        if S is not None:
            worst = max(Fraction(int(t[x].sum()), ny) for x in S)
            w = DichotomyWitness("low_degree", e, S, (), worst, delta, False, Fraction(len(S), nx))
            if verify_witness(inst, w):
                return w
    log.info("no dichotomy witness found for a deviating instance")
    return DichotomyWitness("none", delta=delta)


def verify_witness(inst: CountingInstance, w: DichotomyWitness) -> bool:
    """Re-check a witness against the raw table with integer arithmetic."""
    if w.variant == "none" or w.edge not in inst.tables:
        return False
    t = inst.tables[w.edge]
    nx, ny = t.shape
    total = int(t.sum())
    delta = w.delta
    if w.variant == "rectangle":
        if not w.S or not w.T:
            return False
        hits = int(t[np.ix_(list(w.S), list(w.T))].sum())
        return _rect_ok(hits, len(w.S), len(w.T), total, nx, ny, delta)
    if w.variant == "low_degree":
        if not w.S:
            return False
        return all(
            int(t[x].sum()) * nx * delta.denominator <= (delta.denominator - delta.numerator) * total
            for x in w.S
        )
    return False


# technical witnesses ------------------------------------------------------------


@dataclass(frozen=True)
class TechnicalCheck:
    passed: bool
    lhs: float
    rhs: float


def verify_grid_claim(f, r: int, p: int, delta_t, cap: int = GRID_COST_CAP) -> TechnicalCheck:
    """||f||_{U(r,p)} >= (1 + delta_t) * mean(f)."""
    f = np.asarray(f, dtype=float)
    lhs = grid_norm(f, r, p, cap)
    rhs = (1 + float(delta_t)) * float(f.mean())
    return TechnicalCheck(lhs >= rhs, lhs, rhs)


def verify_row_deviation_claim(f, p: float, delta_t) -> TechnicalCheck:
    """||E_y f(., y) - alpha||_p >= delta_t * alpha."""
    f = np.asarray(f, dtype=float)
    alpha = float(f.mean())
    dev = f.mean(axis=1) - alpha
    lhs = float(np.mean(np.abs(dev) ** p) ** (1.0 / p))
    rhs = float(delta_t) * alpha
    return TechnicalCheck(lhs >= rhs, lhs, rhs)


def verify_technical_witness(f, claim: dict) -> TechnicalCheck:
    """Dispatch on ``claim["kind"]``: ``"grid"`` (r, p, delta) or ``"row"`` (p, delta)."""
    kind = claim.get("kind")
    if kind == "grid":
        return verify_grid_claim(f, claim["r"], claim["p"], claim["delta"], claim.get("cap", GRID_COST_CAP))
    if kind == "row":
        return verify_row_deviation_claim(f, claim["p"], claim["delta"])
    raise InvalidArgument(f"unknown claim kind {kind!r}")


def all_tables(nx: int, ny: int) -> Iterable[np.ndarray]:
    for bits in range(1 << (nx * ny)):
        yield ((bits >> np.arange(nx * ny)) & 1).astype(bool).reshape(nx, ny)


def instance(graph: OrientedGraph, sizes: Sequence[int], tables: dict) -> CountingInstance:
    return CountingInstance(graph, tuple(sizes), dict(tables))
