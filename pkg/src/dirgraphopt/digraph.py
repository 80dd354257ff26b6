"""Directed communication topologies and their column-stochastic mixing matrices.

A :class:`Digraph` is a strongly-connected-checkable directed graph on nodes
``0..n-1``.  Edges are ``(sender, receiver)`` pairs; every node always hears
itself, so self-loops are implicit and never listed explicitly.  From a graph
we build the uniform column-stochastic mixing matrix, its Perron vector and
limit matrix, the deviation norms of the mixing step, and a weighted norm in
which the consensus-deviation map is a strict contraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "Digraph",
    "WeightMatrix",
    "SpectralData",
    "PowerIterationError",
    "is_strongly_connected",
    "uniform_weights",
    "perron_limit",
    "tau_eps",
    "contraction_norm",
    "spectral_data",
    "load_graph",
    "save_graph",
    "builtin_graph",
    "fig1",
    "ring_digraph",
    "complete_digraph",
    "random_digraph",
    "nested_chain",
]

#: push-sum iterates and mixing powers are compared at this tolerance
COLUMN_SUM_TOL = 1e-12


class PowerIterationError(RuntimeError):
    """Dominant-eigenvector iteration failed to settle within its budget."""


class Digraph:
    """Directed graph on ``0..n-1`` with implicit self-loops.

    Parameters
    ----------
    n : int
        Number of nodes, at least 1.
    edges : iterable of (int, int)
        ``(sender, receiver)`` pairs.  Self-loops are implied for every node
        and must not be listed; duplicates are rejected.
    """

    __slots__ = ("n", "edges", "_out", "_in")

    def __init__(self, n: int, edges=()) -> None:
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"need at least one node, got n={n!r}")
        self.n = int(n)
        seen: set[tuple[int, int]] = set()
        for e in edges:
            j, i = e
            j, i = int(j), int(i)
            if not (0 <= j < n and 0 <= i < n):
                raise ValueError(f"edge {e!r} out of range for n={n}")
            if j == i:
                raise ValueError(
                    f"self-loop {e!r} is implicit and must not be listed"
                )
            if (j, i) in seen:
                raise ValueError(f"duplicate edge {e!r}")
            seen.add((j, i))
        self.edges = tuple(sorted(seen))
        out: list[list[int]] = [[v] for v in range(self.n)]
        inn: list[list[int]] = [[v] for v in range(self.n)]
        for j, i in self.edges:
            out[j].append(i)
            inn[i].append(j)
        self._out = tuple(tuple(sorted(vs)) for vs in out)
        self._in = tuple(tuple(sorted(vs)) for vs in inn)

    def out_neighbors(self, j: int) -> tuple[int, ...]:
        """Nodes that receive from ``j`` (always includes ``j`` itself)."""
        return self._out[j]

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        """Nodes that send to ``i`` (always includes ``i`` itself)."""
        return self._in[i]

    def out_degree(self, j: int) -> int:
        return len(self._out[j])

    @property
    def edge_count(self) -> int:
        """Number of explicit (non-self-loop) edges."""
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``adj[i, j]`` true iff ``j`` sends to ``i``."""
        adj = np.eye(self.n, dtype=bool)
        for j, i in self.edges:
            adj[i, j] = True
        return adj

    def __eq__(self, other) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, edges={len(self.edges)})"


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every node can reach every other along directed edges."""

    def reaches_all(neighbors) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in neighbors(v):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == g.n

    return reaches_all(g.out_neighbors) and reaches_all(g.in_neighbors)


@dataclass(frozen=True)
class WeightMatrix:
    """Column-stochastic mixing matrix; ``entries[i, j]`` weights j's send to i."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"mixing matrix must be square, got {a.shape}")
        if np.any(a < 0):
            raise ValueError("mixing weights must be nonnegative")
        colsums = a.sum(axis=0)
        if np.max(np.abs(colsums - 1.0)) > COLUMN_SUM_TOL:
            raise ValueError(
                f"columns must sum to 1 within {COLUMN_SUM_TOL}, "
                f"worst deviation {np.max(np.abs(colsums - 1.0)):.3e}"
            )
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def uniform_weights(g: Digraph) -> WeightMatrix:
    """Equal-split column-stochastic weights: each sender divides by out-degree.

    Requires strong connectivity so every downstream spectral quantity is
    well defined.
    """
    if not is_strongly_connected(g):
        raise ValueError("graph is not strongly connected")
    a = np.zeros((g.n, g.n))
    for j in range(g.n):
        share = 1.0 / g.out_degree(j)
        for i in g.out_neighbors(j):
            a[i, j] = share
    return WeightMatrix(a)


def perron_limit(
    w: WeightMatrix, tol: float = 1e-13, max_iters: int = 100_000
) -> tuple[np.ndarray, np.ndarray]:
    """Stationary column vector ``pi`` and the rank-one limit of mixing powers.

    Power iteration on the mixing matrix; falls back to a dense eigensolver
    for modest sizes if the iteration does not settle.  Returns ``(pi,
    a_inf)`` with ``a_inf = pi @ ones.T``, ``sum(pi) == 1`` and ``pi > 0``.
    """
    a = w.entries
    n = w.n
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        nxt = a @ pi
        if np.max(np.abs(nxt - pi)) <= tol:
            pi = nxt
            break
        pi = nxt
    else:
        if n <= 200:
            vals, vecs = np.linalg.eig(a)
            idx = int(np.argmin(np.abs(vals - 1.0)))
            vec = np.real(vecs[:, idx])
            pi = vec / vec.sum()
        else:
            raise PowerIterationError(
                f"stationary vector did not settle in {max_iters} iterations"
            )
    pi = pi / pi.sum()
    if np.any(pi <= 0):
        raise PowerIterationError("stationary vector is not strictly positive")
    return pi, np.outer(pi, np.ones(n))


def tau_eps(w: WeightMatrix, a_inf: np.ndarray | None = None) -> tuple[float, float]:
    """Deviation norms of one mixing step: ``(|A - I|_2, |I - A_inf|_2)``."""
    a = w.entries
    n = w.n
    if a_inf is None:
        _, a_inf = perron_limit(w)
    tau = float(np.linalg.norm(a - np.eye(n), 2))
    eps = float(np.linalg.norm(np.eye(n) - a_inf, 2))
    return tau, eps


def contraction_norm(
    w: WeightMatrix,
    slack: float | None = None,
    a_inf: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Weighted norm in which the consensus-deviation map strictly contracts.

    Builds an invertible ``S`` such that ``|A - A_inf|_S := |S^-1 (A -
    A_inf) S|_2`` is at most ``rho(A - A_inf) + slack`` and strictly below 1.
    Construction: Schur-triangularize ``A - A_inf`` and damp the
    off-diagonal part with a geometric diagonal scaling, chosen as mild as
    possible (the damping factor is found by bisection) so the norm
    equivalence constants stay small.  ``slack=None`` targets the midpoint
    of the spectral gap, which balances a small contraction factor against
    a well-conditioned transform.

    Returns ``(sigma, S)`` where ``sigma = |A - A_inf|_S`` and ``S`` is
    normalized to ``|S|_2 = 1``.
    """
    if slack is not None and slack <= 0:
        raise ValueError(f"slack must be positive, got {slack}")
    a = w.entries
    n = w.n
    if a_inf is None:
        _, a_inf = perron_limit(w)
    m = a - a_inf
    rho = float(np.max(np.abs(np.linalg.eigvals(m)))) if n > 1 else 0.0
    if rho >= 1.0:
        raise ValueError(
            f"consensus-deviation spectral radius {rho:.6f} is not below 1"
        )
    # Keep the certified norm strictly inside the unit ball even when the
    # requested slack would overshoot it.
    gap = 0.5 * (1.0 - rho) if slack is None else min(slack, 0.5 * (1.0 - rho))
    plain = float(np.linalg.norm(m, 2))
    if plain <= rho + gap:
        return plain, np.eye(n)
    t_mat, q_mat = scipy.linalg.schur(m, output="complex")
    powers = np.arange(1, n + 1, dtype=float)

    def damped_norm(t: float) -> float:
        diag = t**powers
        return float(np.linalg.norm(t_mat * np.outer(1.0 / diag, diag), 2))

    # The damped norm grows monotonically with t and tends to rho as t -> 0;
    # bisect for the largest damping factor that meets the target.
    lo, hi = 1e-8, 1.0
    if damped_norm(lo) > rho + gap:
        raise ValueError(
            f"slack {slack} too small: diagonal scaling exceeds numeric range"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if damped_norm(mid) <= rho + gap:
            lo = mid
        else:
            hi = mid
    diag = lo**powers
    s_mat = q_mat @ np.diag(diag)
    # scale so |S|_2 = 1: the induced matrix norm is unchanged and the
    # norm-equivalence constant c becomes exactly 1
    return damped_norm(lo), s_mat / np.linalg.norm(s_mat, 2)


@dataclass(frozen=True)
class SpectralData:
    """Spectral summary of a mixing matrix.

    ``transform`` is the change of basis defining the contraction norm
    ``|v|_S = |S^-1 v|_2``; ``c`` and ``d`` are the certified equivalence
    constants ``|v|_2 <= c |v|_S`` and ``|v|_S <= d |v|_2``.
    """

    pi: np.ndarray
    a_inf: np.ndarray
    tau: float
    eps: float
    sigma: float
    transform: np.ndarray
    transform_inv: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.pi.shape[0]

    @property
    def c(self) -> float:
        return float(np.linalg.norm(self.transform, 2))

    @property
    def d(self) -> float:
        return float(np.linalg.norm(self.transform_inv, 2))

    def vector_norm(self, v: np.ndarray) -> float:
        """Contraction norm of a vector, or of per-node rows stacked as (n, p)."""
        return float(np.linalg.norm(self.transform_inv @ v))

    def matrix_norm(self, m: np.ndarray) -> float:
        """Induced contraction norm of an (n, n) operator."""
        return float(np.linalg.norm(self.transform_inv @ m @ self.transform, 2))


def spectral_data(w: WeightMatrix, slack: float | None = None) -> SpectralData:
    """Bundle Perron limit, deviation norms and contraction norm for ``w``."""
    pi, a_inf = perron_limit(w)
    tau, eps = tau_eps(w, a_inf)
    sigma, s_mat = contraction_norm(w, slack, a_inf)
    return SpectralData(
        pi=pi,
        a_inf=a_inf,
        tau=tau,
        eps=eps,
        sigma=sigma,
        transform=s_mat,
        transform_inv=np.linalg.inv(s_mat),
    )


# ---------------------------------------------------------------------------
# graph files: first non-comment line is the node count, every following
# line "j i" is an edge j -> i (sender, receiver); '#' starts a comment.
# ---------------------------------------------------------------------------


def save_graph(g: Digraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# directed graph: first line n, then one 'sender receiver' per line\n")
        fh.write(f"{g.n}\n")
        for j, i in g.edges:
            fh.write(f"{j} {i}\n")


def load_graph(path) -> Digraph:
    tokens: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                tokens.append(line.split())
    if not tokens:
        raise ValueError(f"{path}: no node count found")
    if len(tokens[0]) != 1:
        raise ValueError(f"{path}: first line must be the node count")
    n = int(tokens[0][0])
    edges = []
    for parts in tokens[1:]:
        if len(parts) != 2:
            raise ValueError(f"{path}: edge lines must be 'sender receiver', got {parts}")
        edges.append((int(parts[0]), int(parts[1])))
    return Digraph(n, edges)


# ---------------------------------------------------------------------------
# built-in topologies
# ---------------------------------------------------------------------------

# Fixed 10-node strongly-connected example network used throughout the docs,
# the CLI and the test-suite.  Frozen so results are reproducible.
_FIG1_EDGES = (
    (0, 1), (0, 6), (1, 2), (1, 5), (2, 3), (3, 1), (3, 4), (3, 7),
    (4, 0), (4, 1), (4, 5), (4, 9), (5, 4), (5, 6), (5, 7), (5, 8),
    (6, 7), (7, 8), (8, 0), (8, 2), (8, 5), (8, 9), (9, 0), (9, 6), (9, 8),
)


def fig1() -> Digraph:
    """Built-in 10-node strongly-connected example network."""
    return Digraph(10, _FIG1_EDGES)


def ring_digraph(n: int) -> Digraph:
    """Directed cycle 0 -> 1 -> ... -> n-1 -> 0 (sparsest strongly-connected graph)."""
    if n < 2:
        return Digraph(n)
    return Digraph(n, [(v, (v + 1) % n) for v in range(n)])


def complete_digraph(n: int) -> Digraph:
    """All ordered pairs of distinct nodes."""
    return Digraph(n, [(j, i) for j in range(n) for i in range(n) if i != j])


def _candidate_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    cycle = {(v, (v + 1) % n) for v in range(n)}
    rest = [
        (j, i)
        for j in range(n)
        for i in range(n)
        if i != j and (j, i) not in cycle
    ]
    order = rng.permutation(len(rest))
    return [rest[k] for k in order]


def random_digraph(n: int, extra_edges: int, seed: int) -> Digraph:
    """Directed cycle plus ``extra_edges`` distinct random edges.

    Strongly connected by construction and deterministic in ``seed``.
    """
    if n < 2:
        raise ValueError("random digraph needs at least 2 nodes")
    rng = np.random.default_rng(seed)
    pool = _candidate_edges(n, rng)
    if extra_edges > len(pool):
        raise ValueError(
            f"at most {len(pool)} extra edges available on {n} nodes, "
            f"got {extra_edges}"
        )
    edges = [(v, (v + 1) % n) for v in range(n)] + pool[:extra_edges]
    return Digraph(n, edges)


def nested_chain(n: int, extra_counts: tuple[int, ...], seed: int) -> list[Digraph]:
    """Chain of graphs with identical cycle backbone and nested edge sets.

    ``extra_counts`` must be nondecreasing; graph ``k`` holds the first
    ``extra_counts[k]`` entries of one shuffled candidate pool, so each graph
    contains all edges of the previous one.
    """
    if any(b < a for a, b in zip(extra_counts, extra_counts[1:])):
        raise ValueError(f"extra edge counts must be nondecreasing: {extra_counts}")
    rng = np.random.default_rng(seed)
    pool = _candidate_edges(n, rng)
    if extra_counts and extra_counts[-1] > len(pool):
        raise ValueError(
            f"at most {len(pool)} extra edges available on {n} nodes, "
            f"got {extra_counts[-1]}"
        )
    cycle = [(v, (v + 1) % n) for v in range(n)]
    return [Digraph(n, cycle + pool[:count]) for count in extra_counts]


_BUILTINS = {
    "fig1": fig1,
}


def builtin_graph(name: str) -> Digraph:
    """Look up a named built-in topology (currently: ``fig1``)."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown builtin graph {name!r}; available: {sorted(_BUILTINS)}"
        ) from None
    return factory()
