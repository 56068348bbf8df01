"""Graph construction, degree statistics, and binomial concentration checks.

Graphs are directed in general: an edge i -> j means vertex j appears in
row i, and it is row i's neighbors that feed the interaction sum of
particle i.  Adjacency is stored in compressed sparse row form (indptr /
indices), vertices are 0-based internally and 1-based in the text file
format.

Self-loop conventions differ by generator and are chosen so the exact
degree identities hold:

* ``gen_complete`` and ``gen_two_clique`` include the diagonal, making
  every degree exactly n (resp. the clique size), hence ``b_n == 0``.
* ``gen_erdos_renyi`` and ``gen_random_regular`` never produce self-loops
  (erasing the diagonal does not affect the concentration statements).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .rng import STREAM_GRAPH, uniform_field

# exact tails are summed directly only up to this n
EXACT_TAIL_MAX_N = 10_000

_ER_ROW_BLOCK = 512  # rows per Bernoulli block when materializing ER graphs


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed graph in CSR form with an interaction scaling alpha_n >= 1.

    ``clique_blocks`` is optional structure metadata: when set, the graph is
    the disjoint union of complete-with-diagonal blocks ``[start, end)``,
    which unlocks the O(n) interaction fast path in the SDE engine.
    """

    n: int
    alpha_n: float
    indptr: np.ndarray
    indices: np.ndarray
    self_loops_allowed: bool
    clique_blocks: tuple[tuple[int, int], ...] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("graph must have at least one vertex")
        if not self.alpha_n >= 1.0:
            raise ValueError(f"alpha_n must be >= 1, got {self.alpha_n}")
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ValueError("malformed CSR index pointer")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("CSR index pointer must be nondecreasing")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n):
            raise ValueError("neighbor index out of range")
        # strictly increasing inside each row <=> sorted and duplicate-free
        inner = np.ones(len(indices), dtype=bool)
        starts = indptr[1:-1]
        inner[starts[starts < len(indices)]] = False
        if np.any(np.diff(indices)[inner[1:]] <= 0):
            raise ValueError("neighbor lists must be sorted without duplicates")
        if not self.self_loops_allowed:
            rows = np.repeat(np.arange(self.n), np.diff(indptr))
            if np.any(indices == rows):
                raise ValueError("self-loop present but self_loops_allowed=False")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.indptr[-1])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def with_alpha(self, alpha_n: float) -> "Graph":
        """Same adjacency with a different interaction scaling."""
        return Graph(self.n, float(alpha_n), self.indptr, self.indices,
                     self.self_loops_allowed, self.clique_blocks)


@dataclass(frozen=True, eq=False)
class DegreeReport:
    """Degree statistics against a target edge density p.

    b_n = max_i |alpha_n * d_i / n - p| is the uniform-degree deviation and
    a_n = max_i alpha_n * d_i / n the normalized maximum degree; n and
    alpha_n are carried along so bound prefactors can be formed directly.
    """

    degrees: np.ndarray
    b_n: float
    a_n: float
    p: float
    n: int
    alpha_n: float


def _csr_from_rows(n: int, rows: list[np.ndarray], alpha_n: float,
                   self_loops: bool,
                   blocks: tuple[tuple[int, int], ...] | None = None) -> Graph:
    counts = np.fromiter((len(r) for r in rows), dtype=np.int64, count=n)
    indptr = np.concatenate(([0], np.cumsum(counts)))
    indices = np.concatenate(rows) if len(rows) else np.empty(0, dtype=np.int64)
    return Graph(n, alpha_n, indptr, indices.astype(np.int64), self_loops, blocks)


def gen_complete(n: int) -> Graph:
    """Complete graph with the diagonal included, so every degree is exactly n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    indptr = np.arange(n + 1, dtype=np.int64) * n
    indices = np.tile(np.arange(n, dtype=np.int64), n)
    return Graph(n, 1.0, indptr, indices, True, clique_blocks=((0, n),))


def gen_two_clique(half: int) -> Graph:
    """Disjoint union of two complete graphs on ``half`` vertices each.

    Both cliques include the diagonal, so all 2*half degrees equal ``half``
    and the uniform-degree deviation vanishes at p = 1/2.
    """
    if half < 1:
        raise ValueError("clique size must be >= 1")
    n = 2 * half
    indptr = np.arange(n + 1, dtype=np.int64) * half
    first = np.tile(np.arange(half, dtype=np.int64), half)
    second = np.tile(np.arange(half, n, dtype=np.int64), half)
    indices = np.concatenate([first, second])
    return Graph(n, 1.0, indptr, indices, True,
                 clique_blocks=((0, half), (half, n)))


def gen_erdos_renyi(n: int, q: float, symmetric: bool = False,
                    seed: int = 0) -> Graph:
    """Erdos-Renyi graph: each off-diagonal entry is Bernoulli(q).

    The asymmetric variant draws every ordered pair independently; the
    symmetric variant draws unordered pairs i < j and mirrors them.  The
    diagonal is always excluded.  Output is bit-identical for a given seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {q}")
    if symmetric:
        upper: list[np.ndarray] = []
        for i in range(n - 1):
            u = uniform_field(seed, STREAM_GRAPH, i, n - 1 - i)
            upper.append(np.nonzero(u < q)[0].astype(np.int64) + i + 1)
        upper.append(np.empty(0, dtype=np.int64))
        # mirror: column lists of the upper triangle, built by counting sort
        src = np.repeat(np.arange(n, dtype=np.int64),
                        np.fromiter((len(r) for r in upper), np.int64, n))
        dst = np.concatenate(upper)
        order = np.argsort(dst, kind="stable")
        lower_by_row = np.split(src[order], np.searchsorted(dst[order], np.arange(1, n)))
        rows = [np.concatenate([lower_by_row[i], upper[i]]) for i in range(n)]
        return _csr_from_rows(n, rows, 1.0, False)
    rows = []
    cols = np.arange(n, dtype=np.int64)
    for start in range(0, n, _ER_ROW_BLOCK):
        stop = min(start + _ER_ROW_BLOCK, n)
        u = uniform_field(seed, STREAM_GRAPH, start, (stop - start) * n)
        hit = u.reshape(stop - start, n) < q
        hit[np.arange(stop - start), np.arange(start, stop)] = False
        for r in range(stop - start):
            rows.append(cols[hit[r]])
    return _csr_from_rows(n, rows, 1.0, False)


def gen_random_regular(n: int, d: int, seed: int = 0) -> Graph:
    """Simple undirected d-regular graph via the pairing (configuration) model.

    Stubs are shuffled and paired; pairs that would create a self-loop or a
    repeated edge are rejected and their stubs re-paired, restarting from
    scratch when no valid completion exists.  Dense degrees (d above half)
    are sampled as the complement of a sparse (n-1-d)-regular graph, where
    the pairing converges quickly.  alpha_n defaults to n/d so the
    uniform-degree deviation is exactly zero at p = 1.
    """
    if d * n % 2 != 0:
        raise ValueError(f"d*n must be even, got d={d}, n={n}")
    if not 3 <= d < n:
        raise ValueError(f"degree must satisfy 3 <= d < n, got d={d}, n={n}")

    rng = np.random.default_rng(np.random.Philox(key=np.array([seed, STREAM_GRAPH],
                                                              dtype=np.uint64)))
    co_degree = n - 1 - d
    if co_degree < d:
        rows = _complement_rows(_regular_rows(n, co_degree, rng), n)
    else:
        rows = _regular_rows(n, d, rng)
    return _csr_from_rows(n, rows, n / d, False)


def _regular_rows(n: int, d: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Sorted neighbor rows of a random simple d-regular graph (d >= 0)."""
    if d == 0:
        return [np.empty(0, dtype=np.int64) for _ in range(n)]
    max_restarts = 1000
    for _ in range(max_restarts):
        edges = _pair_stubs(n, d, rng)
        if edges is not None:
            break
    else:
        raise RuntimeError(f"regular graph sampling did not converge "
                           f"for n={n}, d={d}")
    rows: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        rows[a].append(b)
        rows[b].append(a)
    return [np.sort(np.asarray(r, dtype=np.int64)) for r in rows]


def _complement_rows(rows: list[np.ndarray], n: int) -> list[np.ndarray]:
    """Neighbor rows of the loop-free complement graph."""
    everyone = np.arange(n, dtype=np.int64)
    out = []
    for i, row in enumerate(rows):
        keep = np.ones(n, dtype=bool)
        keep[row] = False
        keep[i] = False
        out.append(everyone[keep])
    return out


def _pair_stubs(n: int, d: int, rng: np.random.Generator):
    """One pairing attempt; returns the edge set or None if it got stuck."""
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d)
    while len(stubs):
        rng.shuffle(stubs)
        clashed: list[int] = []
        for a, b in zip(stubs[::2], stubs[1::2]):
            a, b = int(a), int(b)
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                clashed.extend((a, b))
        # give up only when no admissible edge remains among leftover stubs
        leftover = sorted(set(clashed))
        if clashed and not any(
            (a, b) not in edges
            for i, a in enumerate(leftover) for b in leftover[i + 1 :]
        ):
            return None
        stubs = np.asarray(clashed, dtype=np.int64)
    return edges


def degree_stats(graph: Graph, p: float) -> DegreeReport:
    """Uniform-degree deviation b_n and normalized max degree a_n at density p."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    degrees = graph.degrees
    scaled = graph.alpha_n * degrees / graph.n
    return DegreeReport(
        degrees=degrees,
        b_n=float(np.abs(scaled - p).max()),
        a_n=float(scaled.max()),
        p=p,
        n=graph.n,
        alpha_n=graph.alpha_n,
    )


def degree_report_from_degrees(degrees: np.ndarray, n: int, alpha_n: float,
                               p: float) -> DegreeReport:
    """degree_stats for a bare degree sequence (no materialized adjacency)."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    degrees = np.asarray(degrees)
    scaled = alpha_n * degrees / n
    return DegreeReport(degrees, float(np.abs(scaled - p).max()),
                        float(scaled.max()), p, n, alpha_n)


def kl_bernoulli(x: float, y: float) -> float:
    """KL divergence between Bernoulli(x) and Bernoulli(y), arguments in (0, 1)."""
    if not (0.0 < x < 1.0 and 0.0 < y < 1.0):
        raise ValueError(f"arguments must lie strictly inside (0, 1), got {x}, {y}")
    return x * math.log(x / y) + (1.0 - x) * math.log((1.0 - x) / (1.0 - y))


def binomial_tail(n: int, q: float, eps: float) -> tuple[float, float | None]:
    """Chernoff bound and exact tail for a Binomial(n, q) deviation of size eps.

    For eps >= 0 the tail is P(X > (q+eps)n); for eps < 0 the direction is
    reversed, P(X < (q+eps)n).  Both are bounded by exp(-n * D(q+eps || q)).
    The exact tail is accumulated in log space and returned only for
    n <= EXACT_TAIL_MAX_N (None above the threshold).
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must be in (0, 1), got {q}")
    x = q + eps
    if not 0.0 < x < 1.0:
        raise ValueError(f"q + eps must lie strictly inside (0, 1), got {x}")
    bound = math.exp(-n * kl_bernoulli(x, q)) if eps != 0.0 else 1.0
    if n > EXACT_TAIL_MAX_N:
        return bound, None

    threshold = x * n
    nearest = round(threshold)
    if math.isclose(threshold, nearest, rel_tol=1e-9, abs_tol=1e-9):
        threshold = nearest
    if eps >= 0.0:
        k = np.arange(math.floor(threshold) + 1, n + 1)
    else:
        k = np.arange(0, math.ceil(threshold))
    if len(k) == 0:
        return bound, 0.0
    log_terms = (
        gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        + k * math.log(q) + (n - k) * math.log1p(-q)
    )
    return bound, float(np.exp(logsumexp(log_terms)))


def save_graph(graph: Graph, path) -> None:
    """Plain-text format: header ``n alpha_n``, then one 1-based neighbor line per vertex."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{graph.n} {graph.alpha_n!r}\n")
        for i in range(graph.n):
            fh.write(" ".join(str(j + 1) for j in graph.neighbors(i)))
            fh.write("\n")


def load_graph(path) -> Graph:
    """Inverse of save_graph; the self-loop flag is inferred from the content."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("graph file header must be 'n alpha_n'")
        n, alpha_n = int(header[0]), float(header[1])
        rows = []
        for i in range(n):
            line = fh.readline()
            if not line:
                raise ValueError(f"graph file ended before row {i + 1}")
            rows.append(np.asarray([int(t) - 1 for t in line.split()], dtype=np.int64))
    has_loops = any((r == i).any() for i, r in enumerate(rows))
    return _csr_from_rows(n, rows, alpha_n, has_loops)
