"""Decentralized first-order methods over column-stochastic mixing matrices.

Three engines share one state container and one driver:

* ``addopt`` -- push-sum consensus plus gradient tracking with a constant
  step; per iteration, with mixing matrix A and tracker w::

      x <- A x - alpha * w
      y <- A y
      z <- x / y            (entrywise de-biasing, row by row)
      w <- A w + grad(z_new) - grad(z_old)

* ``dextra`` -- a two-step corrected scheme over the same push-sum ratio::

      x <- (I + A) x - (theta I + (1-theta) A) x_prev
             - alpha * (grad(z) - grad(z_prev))

* ``gradient_push`` -- plain push-sum mixing with a (typically diminishing)
  subgradient correction and no tracker; baseline quality only.

All engines are synchronous, deterministic, and operate on row-stacked
states: row ``i`` of every array belongs to agent ``i``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .digraph import WeightMatrix
from .objectives import stacked_gradient

__all__ = [
    "OVERFLOW_GUARD",
    "DivergenceError",
    "AgentSwarm",
    "Trace",
    "addopt_init",
    "addopt_step",
    "dextra_tilde",
    "dextra_init",
    "dextra_step",
    "gradient_push_init",
    "gradient_push_step",
    "run",
    "inv_sqrt_steps",
    "write_trace_csv",
    "read_trace_csv",
]

#: any |x| entry beyond this signals divergence
OVERFLOW_GUARD = 1e150


class DivergenceError(RuntimeError):
    """An iterate left the overflow guard; carries the iteration index."""

    def __init__(self, iteration: int, message: str | None = None) -> None:
        super().__init__(message or f"iterate diverged at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class AgentSwarm:
    """Joint state of all agents at one synchronous iteration.

    ``x`` are raw push-sum states, ``y`` the positive de-biasing scalars
    (summing to n for column-stochastic mixing), ``z = x / y`` the estimates,
    ``w`` the gradient tracker (engines without tracking leave it ``None``).
    ``grad`` caches each agent's gradient at its current ``z``; two-step
    engines also keep the previous ``x`` and gradient.
    """

    objectives: tuple
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray | None
    grad: np.ndarray | None
    k: int
    x_prev: np.ndarray | None = None
    grad_prev: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def _check_finite(x: np.ndarray, k: int) -> None:
    if not np.all(np.abs(x) <= OVERFLOW_GUARD):
        raise DivergenceError(k)


def _default_z0(objectives, z0) -> np.ndarray:
    n = len(objectives)
    p = objectives[0].dim
    if z0 is None:
        return np.zeros((n, p))
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (n, p):
        raise ValueError(f"z0 must have shape {(n, p)}, got {z0.shape}")
    return z0.copy()


def addopt_init(objectives, z0=None) -> AgentSwarm:
    """Start state: x = z0, unit de-biasing scalars, tracker seeded with grad(z0)."""
    objectives = tuple(objectives)
    x = _default_z0(objectives, z0)
    y = np.ones(len(objectives))
    z = x.copy()
    grad = stacked_gradient(objectives, z)
    return AgentSwarm(objectives, x, y, z, grad.copy(), grad, k=0)


def addopt_step(s: AgentSwarm, weights: WeightMatrix, alpha: float) -> AgentSwarm:
    """One tracked push-sum iteration; all updates read the pre-step state."""
    a = weights.entries
    x = a @ s.x - alpha * s.w
    _check_finite(x, s.k + 1)
    y = a @ s.y
    z = x / y[:, None]
    grad = stacked_gradient(s.objectives, z)
    w = a @ s.w + grad - s.grad
    return AgentSwarm(s.objectives, x, y, z, w, grad, s.k + 1)


def dextra_tilde(weights: WeightMatrix, theta: float) -> WeightMatrix:
    """Corrector matrix ``theta I + (1-theta) A`` for the two-step engine."""
    if not 0.0 < theta <= 0.5:
        raise ValueError(f"theta must lie in (0, 0.5], got {theta}")
    n = weights.n
    return WeightMatrix(theta * np.eye(n) + (1.0 - theta) * weights.entries)


def dextra_init(
    objectives, weights: WeightMatrix, alpha: float, z0=None
) -> AgentSwarm:
    """Bootstrap the two-step engine with one tracked-style step from z0."""
    objectives = tuple(objectives)
    x0 = _default_z0(objectives, z0)
    y0 = np.ones(len(objectives))
    grad0 = stacked_gradient(objectives, x0)
    a = weights.entries
    x1 = a @ x0 - alpha * grad0
    _check_finite(x1, 1)
    y1 = a @ y0
    z1 = x1 / y1[:, None]
    return AgentSwarm(
        objectives, x1, y1, z1, w=None, grad=None, k=1, x_prev=x0, grad_prev=grad0
    )


def dextra_step(
    s: AgentSwarm, weights: WeightMatrix, tilde: WeightMatrix, alpha: float
) -> AgentSwarm:
    """One corrected two-step iteration; needs the retained previous iterate."""
    if s.x_prev is None or s.grad_prev is None:
        raise ValueError("two-step state requires x_prev and grad_prev")
    a = weights.entries
    grad = stacked_gradient(s.objectives, s.z)
    x = s.x + a @ s.x - tilde.entries @ s.x_prev - alpha * (grad - s.grad_prev)
    _check_finite(x, s.k + 1)
    y = a @ s.y
    z = x / y[:, None]
    return AgentSwarm(
        s.objectives, x, y, z, w=None, grad=None, k=s.k + 1,
        x_prev=s.x, grad_prev=grad,
    )


def gradient_push_init(objectives, z0=None) -> AgentSwarm:
    objectives = tuple(objectives)
    x = _default_z0(objectives, z0)
    y = np.ones(len(objectives))
    return AgentSwarm(objectives, x, y, x.copy(), w=None, grad=None, k=0)


def gradient_push_step(
    s: AgentSwarm, weights: WeightMatrix, alpha_k: float
) -> AgentSwarm:
    """Plain push-sum mix, then a subgradient correction at the de-biased point."""
    a = weights.entries
    mixed = a @ s.x
    y = a @ s.y
    z = mixed / y[:, None]
    x = mixed - alpha_k * stacked_gradient(s.objectives, z)
    _check_finite(x, s.k + 1)
    return AgentSwarm(s.objectives, x, y, z, w=None, grad=None, k=s.k + 1)


def inv_sqrt_steps(k: int) -> float:
    """Diminishing schedule 1/sqrt(k) for the k-th step (k >= 1)."""
    return 1.0 / np.sqrt(k)


@dataclass
class Trace:
    """Per-iteration diagnostics of one run.

    ``residual`` is ``|z_k - z*| / |z0 - z*|`` over the stacked states;
    ``consensus_err`` and ``tracking_err`` measure distance of x (resp. the
    tracker w) from its weighted-average ray; ``gap`` is the distance of the
    network average from the optimum.  One record per iteration, including
    the initial state.
    """

    algorithm: str
    alpha_label: str
    z_star: np.ndarray
    ks: np.ndarray
    residual: np.ndarray
    consensus_err: np.ndarray
    tracking_err: np.ndarray
    gap: np.ndarray
    states: list[AgentSwarm] | None = None

    @property
    def records(self) -> int:
        return len(self.ks)

    @property
    def iterations(self) -> int:
        return int(self.ks[-1])

    @property
    def final_residual(self) -> float:
        return float(self.residual[-1])


_ENGINES = ("addopt", "dextra", "gradient_push")
_ALIASES = {"gp": "gradient_push"}


def run(
    algorithm: str,
    weights: WeightMatrix,
    objectives,
    alpha,
    max_iters: int,
    stop_tol: float = 0.0,
    *,
    z0=None,
    theta: float = 0.5,
    z_star: np.ndarray | None = None,
    pi: np.ndarray | None = None,
    retain_states: bool = False,
) -> Trace:
    """Drive one engine for ``max_iters`` iterations (or until ``stop_tol``).

    ``alpha`` is a constant step for the tracked engines; the baseline also
    accepts a callable ``k -> alpha_k`` or the string ``"1/sqrt(k)"``.
    Residuals are measured against ``z_star`` (computed by the centralized
    solver when not supplied).  Deterministic: same inputs, same trace.
    """
    algorithm = _ALIASES.get(algorithm, algorithm)
    if algorithm not in _ENGINES:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {_ENGINES}")
    objectives = tuple(objectives)
    if z_star is None:
        from .objectives import centralized_solve

        z_star = centralized_solve(objectives).z_star
    if pi is None:
        from .digraph import perron_limit

        pi, _ = perron_limit(weights)

    if callable(alpha):
        alpha_fn = alpha
        alpha_label = getattr(alpha, "__name__", "callable")
    elif isinstance(alpha, str):
        if alpha.replace(" ", "") != "1/sqrt(k)":
            raise ValueError(f"unrecognized step-size spec {alpha!r}")
        alpha_fn, alpha_label = inv_sqrt_steps, "1/sqrt(k)"
    else:
        const = float(alpha)
        alpha_fn, alpha_label = (lambda k: const), repr(const)
    if algorithm != "gradient_push" and (callable(alpha) or isinstance(alpha, str)):
        raise ValueError(f"{algorithm} requires a constant step size")

    n = len(objectives)
    y_inf = n * pi
    target = np.tile(z_star, (n, 1))

    if algorithm == "addopt":
        swarm = addopt_init(objectives, z0)
        stepper = lambda s, k: addopt_step(s, weights, alpha_fn(k))
    elif algorithm == "dextra":
        tilde = dextra_tilde(weights, theta)
        swarm = gradient_push_init(objectives, z0)  # record the k=0 state too
        stepper = lambda s, k: (
            dextra_init(s.objectives, weights, alpha_fn(k), z0=s.x)
            if s.k == 0
            else dextra_step(s, weights, tilde, alpha_fn(k))
        )
    else:
        swarm = gradient_push_init(objectives, z0)
        stepper = lambda s, k: gradient_push_step(s, weights, alpha_fn(k))

    denom = float(np.linalg.norm(swarm.z - target))
    if denom == 0.0:
        denom = 1.0

    ks, residual, consensus, tracking, gap = [], [], [], [], []
    states: list[AgentSwarm] | None = [] if retain_states else None

    def record(s: AgentSwarm) -> float:
        res = float(np.linalg.norm(s.z - target)) / denom
        xbar = s.x.mean(axis=0)
        ks.append(s.k)
        residual.append(res)
        consensus.append(float(np.linalg.norm(s.x - np.outer(y_inf, xbar))))
        if s.w is not None and s.grad is not None:
            gbar = s.grad.mean(axis=0)
            tracking.append(float(np.linalg.norm(s.w - np.outer(y_inf, gbar))))
        else:
            tracking.append(float("nan"))
        gap.append(np.sqrt(n) * float(np.linalg.norm(xbar - z_star)))
        if states is not None:
            states.append(s)
        return res

    res = record(swarm)
    for k in range(1, max_iters + 1):
        if res <= stop_tol:
            break
        swarm = stepper(swarm, k)
        res = record(swarm)

    return Trace(
        algorithm=algorithm,
        alpha_label=alpha_label,
        z_star=z_star,
        ks=np.array(ks),
        residual=np.array(residual),
        consensus_err=np.array(consensus),
        tracking_err=np.array(tracking),
        gap=np.array(gap),
        states=states,
    )


def write_trace_csv(trace: Trace, path) -> None:
    """Write ``k,residual,consensus_err,tracking_err,gap`` rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "residual", "consensus_err", "tracking_err", "gap"])
        for row in zip(
            trace.ks, trace.residual, trace.consensus_err,
            trace.tracking_err, trace.gap,
        ):
            writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])


def read_trace_csv(path) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols: dict[str, list[float]] = {name: [] for name in header}
        for parts in reader:
            for name, v in zip(header, parts):
                cols[name].append(float(v))
    return {name: np.array(vals) for name, vals in cols.items()}
