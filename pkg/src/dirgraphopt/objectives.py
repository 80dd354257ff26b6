"""Per-agent convex objectives, synthetic datasets, and a centralized solver.

Each agent holds a private smooth strongly-convex function; the network's
goal is to minimize the sum.  Two families are provided: separable
quadratics, and L2-regularized logistic losses over per-agent example sets.
Every objective reports its own smoothness and strong-convexity constants so
the analysis layer can build certified step-size bounds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "Objective",
    "Quadratic",
    "Logistic",
    "LogisticData",
    "Optimum",
    "quadratic_objective",
    "logistic_objective",
    "generate_dataset",
    "save_dataset_csv",
    "load_dataset_csv",
    "centralized_solve",
    "network_constants",
    "stacked_gradient",
    "total_value",
    "total_gradient",
]


class Objective:
    """Smooth strongly-convex function with certified curvature bounds.

    Subclasses must set ``dim``, the gradient-Lipschitz constant
    ``lipschitz`` and the strong-convexity constant ``strong_convexity``,
    and implement ``value`` / ``gradient``.
    """

    dim: int
    lipschitz: float
    strong_convexity: float

    def value(self, z: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Quadratic(Objective):
    """``0.5 * (z - center)' diag(curvature) (z - center)``."""

    center: np.ndarray
    curvature: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.center, dtype=float)
        q = np.asarray(self.curvature, dtype=float)
        if b.ndim != 1 or q.shape != b.shape:
            raise ValueError("center and curvature must be equal-length vectors")
        if np.any(q <= 0):
            raise ValueError("curvature must be strictly positive")
        object.__setattr__(self, "center", b)
        object.__setattr__(self, "curvature", q)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def lipschitz(self) -> float:
        return float(np.max(self.curvature))

    @property
    def strong_convexity(self) -> float:
        return float(np.min(self.curvature))

    def value(self, z: np.ndarray) -> float:
        diff = z - self.center
        return 0.5 * float(diff @ (self.curvature * diff))

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return self.curvature * (z - self.center)


@dataclass(frozen=True)
class Logistic(Objective):
    """Regularized logistic loss over one agent's examples.

    ``value(z) = reg/(2*share) |z|^2 + sum_j log(1 + exp(-label_j f_j' z))``
    where ``share`` is the number of agents splitting the global ridge term.
    The curvature bounds are ``s = reg/share`` and
    ``l = reg/share + sum_j |f_j|^2 / 4``.
    """

    features: np.ndarray
    labels: np.ndarray
    reg: float
    share: int

    def __post_init__(self) -> None:
        f = np.asarray(self.features, dtype=float)
        b = np.asarray(self.labels, dtype=float)
        if f.ndim != 2 or b.shape != (f.shape[0],):
            raise ValueError("features must be (m, p) with one label per row")
        if not np.all(np.isin(b, (-1.0, 1.0))):
            raise ValueError("labels must be +/-1")
        if self.reg <= 0 or self.share < 1:
            raise ValueError("need reg > 0 and share >= 1")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", b)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def lipschitz(self) -> float:
        return self.reg / self.share + 0.25 * float(np.sum(self.features**2))

    @property
    def strong_convexity(self) -> float:
        return self.reg / self.share

    def value(self, z: np.ndarray) -> float:
        margins = self.labels * (self.features @ z)
        # log(1 + exp(-m)) evaluated without overflow for large |m|
        losses = np.logaddexp(0.0, -margins)
        return 0.5 * self.reg / self.share * float(z @ z) + float(losses.sum())

    def gradient(self, z: np.ndarray) -> np.ndarray:
        margins = self.labels * (self.features @ z)
        weights = self.labels * expit(-margins)
        return self.reg / self.share * z - self.features.T @ weights


def quadratic_objective(center, curvature) -> Quadratic:
    return Quadratic(np.asarray(center, float), np.asarray(curvature, float))


@dataclass(frozen=True)
class LogisticData:
    """Per-agent example sets with +/-1 labels and a shared ridge weight."""

    features: tuple[np.ndarray, ...]
    labels: tuple[np.ndarray, ...]
    reg: float

    def __post_init__(self) -> None:
        if len(self.features) != len(self.labels) or not self.features:
            raise ValueError("need one (features, labels) pair per agent")
        dims = {f.shape[1] for f in self.features}
        if len(dims) != 1:
            raise ValueError("all agents must share the feature dimension")
        for f, b in zip(self.features, self.labels):
            if f.shape[0] != b.shape[0] or f.shape[0] < 1:
                raise ValueError("each agent needs >= 1 labeled example")
        if self.reg <= 0:
            raise ValueError("reg must be positive")

    @property
    def n_agents(self) -> int:
        return len(self.features)

    @property
    def dim(self) -> int:
        return self.features[0].shape[1]


def logistic_objective(data: LogisticData) -> tuple[Logistic, ...]:
    """One regularized logistic objective per agent of ``data``."""
    n = data.n_agents
    return tuple(
        Logistic(features=f, labels=b, reg=data.reg, share=n)
        for f, b in zip(data.features, data.labels)
    )


def generate_dataset(
    n: int, m: int, p: int, seed: int, flip: float = 0.1, reg: float = 1.0
) -> LogisticData:
    """Synthetic classification data split across ``n`` agents.

    Features are standard normal; labels come from a planted random
    hyperplane with ``flip`` label-noise probability.  Deterministic in
    ``seed``.
    """
    if n < 1 or m < 1 or p < 1:
        raise ValueError("need n, m, p >= 1")
    rng = np.random.default_rng(seed)
    normal = rng.standard_normal(p)
    normal /= np.linalg.norm(normal)
    features, labels = [], []
    for _ in range(n):
        f = rng.standard_normal((m, p))
        b = np.where(f @ normal >= 0, 1.0, -1.0)
        flips = rng.random(m) < flip
        b[flips] *= -1.0
        features.append(f)
        labels.append(b)
    return LogisticData(tuple(features), tuple(labels), reg)


def save_dataset_csv(data: LogisticData, path) -> None:
    """Write ``agent,label,f1..fp`` rows."""
    p = data.dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "label"] + [f"f{j + 1}" for j in range(p)])
        for agent, (f, b) in enumerate(zip(data.features, data.labels)):
            for row, label in zip(f, b):
                writer.writerow([agent, int(label)] + [repr(float(v)) for v in row])


def load_dataset_csv(path, reg: float = 1.0) -> LogisticData:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["agent", "label"]:
            raise ValueError(f"{path}: expected header 'agent,label,f1..fp'")
        p = len(header) - 2
        rows: dict[int, list[tuple[float, list[float]]]] = {}
        for parts in reader:
            if not parts:
                continue
            agent = int(parts[0])
            rows.setdefault(agent, []).append(
                (float(parts[1]), [float(v) for v in parts[2 : 2 + p]])
            )
    agents = sorted(rows)
    if agents != list(range(len(agents))):
        raise ValueError(f"{path}: agent ids must be 0..n-1 without gaps")
    features = tuple(np.array([f for _, f in rows[a]]) for a in agents)
    labels = tuple(np.array([b for b, _ in rows[a]]) for a in agents)
    return LogisticData(features, labels, reg)


# ---------------------------------------------------------------------------
# network-level helpers
# ---------------------------------------------------------------------------


def network_constants(objectives) -> tuple[float, float]:
    """Uniform curvature bounds across agents: ``(max l_i, min s_i)``."""
    return (
        max(o.lipschitz for o in objectives),
        min(o.strong_convexity for o in objectives),
    )


def stacked_gradient(objectives, z_rows: np.ndarray) -> np.ndarray:
    """Row ``i`` is agent ``i``'s gradient at its own point ``z_rows[i]``."""
    return np.array([o.gradient(z) for o, z in zip(objectives, z_rows)])


def total_value(objectives, z: np.ndarray) -> float:
    return sum(o.value(z) for o in objectives)


def total_gradient(objectives, z: np.ndarray) -> np.ndarray:
    out = np.zeros(objectives[0].dim)
    for o in objectives:
        out += o.gradient(z)
    return out


@dataclass(frozen=True)
class Optimum:
    """Minimizer of the network objective together with solve diagnostics."""

    z_star: np.ndarray
    f_star: float
    method: str
    residual_norm: float
    converged: bool
    iterations: int


def centralized_solve(
    objectives, tol_scale: float = 1e-12, max_iters: int = 500_000
) -> Optimum:
    """Gradient descent on the summed objective with step ``1/(n*l)``.

    Stops once ``|grad F(z)| <= tol_scale * max(1, |z|)``; if the iteration
    budget runs out the best iterate seen is reported with its residual.
    """
    objectives = tuple(objectives)
    l, _ = network_constants(objectives)
    n = len(objectives)
    step = 1.0 / (n * l)
    z = np.zeros(objectives[0].dim)
    best_z, best_res = z, np.inf
    converged = False
    iterations = 0
    for iterations in range(max_iters + 1):
        grad = total_gradient(objectives, z)
        res = float(np.linalg.norm(grad))
        if res < best_res:
            best_z, best_res = z, res
        if res <= tol_scale * max(1.0, float(np.linalg.norm(z))):
            converged = True
            break
        z = z - step * grad
    return Optimum(
        z_star=best_z,
        f_star=total_value(objectives, best_z),
        method=f"gradient descent, step 1/(n*l) = {step:.3e}",
        residual_norm=best_res,
        converged=converged,
        iterations=iterations,
    )
