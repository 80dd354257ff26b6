"""Config-driven experiment drivers: algorithm comparison, step-size study,
sparsity study.

Configs are flat key-value text files with INI-style sections (parsed by
:mod:`configparser`).  Outputs are plain CSV files; every driver is
deterministic, so re-running a config reproduces its outputs byte for byte.
The environment variable ``DIRGRAPH_OPT_THREADS`` caps worker threads for
the embarrassingly parallel step-size sweep (default: serial).
"""

from __future__ import annotations

import configparser
import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import algorithms, analysis, digraph, objectives

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TraceSummary",
    "StepsizeRow",
    "SparsityRow",
    "ComparisonReport",
    "load_config",
    "thread_cap",
    "cmd_compare",
    "cmd_stepsize_study",
    "cmd_sparsity_study",
]

THREADS_ENV = "DIRGRAPH_OPT_THREADS"


class ConfigError(ValueError):
    """A config file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description.

    ``graph`` is one of ``("builtin", name)``, ``("file", path)`` or
    ``("random", n, extra_edges, seed)``; ``alpha`` is a constant, the
    string ``"1/sqrt(k)"``, or ``("sweep", lo, hi, steps)``.
    """

    graph: tuple
    algorithms: tuple[str, ...]
    alpha: object
    objective: str
    reg: float
    seed: int
    seeds: tuple[int, ...]
    n_examples: int
    dim: int
    iters: int
    stop_tol: float
    theta: float
    slack: float | None
    out_dir: Path
    prefix: str
    chain_extra: tuple[int, ...] = ()
    strict_nesting: bool = False
    graph_files: tuple[str, ...] = ()

    @property
    def sweep(self) -> tuple[float, float, int] | None:
        if isinstance(self.alpha, tuple) and self.alpha[0] == "sweep":
            return self.alpha[1:]
        return None


def _parse_alpha(text: str):
    text = text.strip()
    if text.replace(" ", "") == "1/sqrt(k)":
        return "1/sqrt(k)"
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"sweep spec must be lo:hi:steps, got {text!r}")
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
        if steps < 1 or not 0 < lo <= hi:
            raise ConfigError(f"sweep range {text!r} is empty or inverted")
        return ("sweep", lo, hi, steps)
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse step size {text!r}") from None


def _parse_graph(section) -> tuple:
    source = section.get("source", "fig1").strip()
    if source == "random":
        return (
            "random",
            section.getint("nodes", 10),
            section.getint("extra_edges", 10),
            section.getint("seed", 0),
        )
    if source.startswith("file:"):
        return ("file", source[len("file:"):].strip())
    return ("builtin", source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    graph_sec = parser["graph"] if parser.has_section("graph") else {}
    obj_sec = parser["objective"] if parser.has_section("objective") else {}
    run_sec = parser["run"] if parser.has_section("run") else {}
    out_sec = parser["output"] if parser.has_section("output") else {}
    sparsity_sec = parser["sparsity"] if parser.has_section("sparsity") else {}

    graph = _parse_graph(graph_sec)
    if graph[0] == "file" and not Path(graph[1]).exists():
        raise ConfigError(f"graph file not found: {graph[1]}")

    objective = str(obj_sec.get("kind", "logistic")).strip()
    if objective not in ("logistic", "quadratic"):
        raise ConfigError(f"objective kind must be logistic or quadratic, got {objective!r}")

    algs = tuple(
        a.strip() for a in str(run_sec.get("algorithms", "addopt")).split(",") if a.strip()
    )
    for a in algs:
        if algorithms._ALIASES.get(a, a) not in algorithms._ENGINES:
            raise ConfigError(f"unknown algorithm {a!r}")
    if len(set(algs)) != len(algs):
        raise ConfigError(f"algorithm list has duplicates: {algs}")

    seeds_text = str(sparsity_sec.get("seeds", run_sec.get("seeds", ""))).strip()
    seeds = tuple(int(v) for v in seeds_text.split(",") if v.strip()) if seeds_text else ()

    chain_text = str(sparsity_sec.get("chain_extra", "")).strip()
    chain = tuple(int(v) for v in chain_text.split(",") if v.strip()) if chain_text else ()

    files_text = str(sparsity_sec.get("graphs", "")).strip()
    graph_files = tuple(v.strip() for v in files_text.split(",") if v.strip())
    for f in graph_files:
        if not Path(f).exists():
            raise ConfigError(f"graph file not found: {f}")

    return ExperimentConfig(
        graph=graph,
        algorithms=algs,
        alpha=_parse_alpha(str(run_sec.get("alpha", "0.1"))),
        objective=objective,
        reg=float(obj_sec.get("reg", 1.0)),
        seed=int(obj_sec.get("seed", 0)),
        seeds=seeds,
        n_examples=int(obj_sec.get("examples", 10)),
        dim=int(obj_sec.get("dim", 3)),
        iters=int(run_sec.get("iters", 500)),
        stop_tol=float(run_sec.get("stop_tol", 0.0)),
        theta=float(run_sec.get("theta", 0.5)),
        slack=(
            None
            if str(run_sec.get("slack", "auto")).strip() == "auto"
            else float(run_sec.get("slack"))
        ),
        out_dir=Path(out_sec.get("dir", ".")),
        prefix=str(out_sec.get("prefix", "study")),
        chain_extra=chain,
        strict_nesting=str(sparsity_sec.get("strict_nesting", "false")).lower()
        in ("1", "true", "yes"),
        graph_files=graph_files,
    )


def thread_cap() -> int:
    """Worker-thread budget from ``DIRGRAPH_OPT_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, value)


def resolve_graph(cfg: ExperimentConfig) -> digraph.Digraph:
    kind = cfg.graph[0]
    if kind == "builtin":
        return digraph.builtin_graph(cfg.graph[1])
    if kind == "file":
        return digraph.load_graph(cfg.graph[1])
    _, n, extra, seed = cfg.graph
    return digraph.random_digraph(n, extra, seed)


def build_objectives(cfg: ExperimentConfig, n: int, seed: int | None = None):
    """Instantiate the per-agent objectives described by ``cfg`` for ``n`` agents."""
    seed = cfg.seed if seed is None else seed
    if cfg.objective == "logistic":
        data = objectives.generate_dataset(
            n, cfg.n_examples, cfg.dim, seed, reg=cfg.reg
        )
        return objectives.logistic_objective(data)
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n, cfg.dim))
    return tuple(
        objectives.quadratic_objective(centers[i], np.ones(cfg.dim))
        for i in range(n)
    )


@dataclass(frozen=True)
class TraceSummary:
    algorithm: str
    alpha_label: str
    iterations: int
    final_residual: float
    slope: float
    r2: float
    diverged: bool


@dataclass(frozen=True)
class StepsizeRow:
    alpha: float
    rho: float
    converged: bool
    residual_200: float


@dataclass(frozen=True)
class SparsityRow:
    label: str
    edge_count: int
    seed: int
    slope: float


@dataclass
class ComparisonReport:
    """Shared result container for the three experiment drivers."""

    summaries: dict[str, TraceSummary] = field(default_factory=dict)
    alpha_bar: float | None = None
    stepsize_table: list[StepsizeRow] = field(default_factory=list)
    sparsity_rows: list[SparsityRow] = field(default_factory=list)

    @property
    def any_diverged(self) -> bool:
        return any(s.diverged for s in self.summaries.values())


def _summarize(trace: algorithms.Trace, diverged: bool = False) -> TraceSummary:
    try:
        fit = analysis.residual_slope(trace)
        slope, r2 = fit.slope, fit.r2
    except ValueError:
        slope, r2 = float("nan"), float("nan")
    return TraceSummary(
        algorithm=trace.algorithm,
        alpha_label=trace.alpha_label,
        iterations=trace.iterations,
        final_residual=trace.final_residual,
        slope=slope,
        r2=r2,
        diverged=diverged,
    )


def cmd_compare(cfg: ExperimentConfig) -> ComparisonReport:
    """Run each configured algorithm once; write per-algorithm traces + a summary.

    The tracked engines use the configured constant step size.  Plain
    gradient-push always runs with the diminishing rule ``1/sqrt(k)``: with a
    constant step it stalls at a bias floor instead of converging, so the
    diminishing rule is the only meaningful baseline in a comparison.
    """
    if cfg.sweep is not None:
        raise ConfigError("compare needs a single step size, not a sweep")
    graph = resolve_graph(cfg)
    weights = digraph.uniform_weights(graph)
    objs = build_objectives(cfg, graph.n)
    opt = objectives.centralized_solve(objs)
    pi, _ = digraph.perron_limit(weights)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    report = ComparisonReport()
    for alg in cfg.algorithms:
        name = algorithms._ALIASES.get(alg, alg)
        alpha = "1/sqrt(k)" if name == "gradient_push" else cfg.alpha
        diverged = False
        try:
            trace = algorithms.run(
                name, weights, objs, alpha, cfg.iters, cfg.stop_tol,
                theta=cfg.theta, z_star=opt.z_star, pi=pi,
            )
        except algorithms.DivergenceError as exc:
            trace = algorithms.run(
                name, weights, objs, alpha, max(exc.iteration - 1, 0), 0.0,
                theta=cfg.theta, z_star=opt.z_star, pi=pi,
            )
            diverged = True
        algorithms.write_trace_csv(trace, cfg.out_dir / f"{cfg.prefix}_{name}.csv")
        report.summaries[name] = _summarize(trace, diverged)

    with open(cfg.out_dir / f"{cfg.prefix}_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "alpha", "iterations", "final_residual", "slope", "r2", "diverged"]
        )
        for name in (algorithms._ALIASES.get(a, a) for a in cfg.algorithms):
            s = report.summaries[name]
            writer.writerow(
                [s.algorithm, s.alpha_label, s.iterations,
                 repr(s.final_residual), repr(s.slope), repr(s.r2), int(s.diverged)]
            )
    return report


def _sweep_point(weights, objs, alpha, iters, theta, z_star, pi, profile):
    rho = analysis.spectral_radius(analysis.build_G(profile, alpha))
    try:
        trace = algorithms.run(
            "addopt", weights, objs, alpha, iters, 0.0,
            theta=theta, z_star=z_star, pi=pi,
        )
        residual = trace.final_residual
    except algorithms.DivergenceError:
        residual = float("inf")
    converged = bool(np.isfinite(residual) and residual < 1.0)
    return StepsizeRow(alpha=alpha, rho=rho, converged=converged, residual_200=residual)


def cmd_stepsize_study(cfg: ExperimentConfig) -> ComparisonReport:
    """Sweep constant step sizes for the tracked engine.

    Per grid point: the recursion radius ``rho(G(alpha))``, a convergence
    flag, and the residual after the configured iteration count (200 by
    convention).  Rows are written in increasing alpha order.
    """
    sweep = cfg.sweep
    if sweep is None:
        raise ConfigError("stepsize study needs alpha = lo:hi:steps")
    lo, hi, steps = sweep
    grid = np.linspace(lo, hi, steps)
    graph = resolve_graph(cfg)
    weights = digraph.uniform_weights(graph)
    objs = build_objectives(cfg, graph.n)
    l, s = objectives.network_constants(objs)
    profile = analysis.build_profile(weights, l, s, cfg.slack)
    opt = objectives.centralized_solve(objs)

    workers = thread_cap()
    args = [
        (weights, objs, float(a), cfg.iters, cfg.theta, opt.z_star,
         profile.spectral.pi, profile)
        for a in grid
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _sweep_point(*t), args))
    else:
        rows = [_sweep_point(*t) for t in args]

    report = ComparisonReport(
        alpha_bar=analysis.alpha_upper_bound(profile), stepsize_table=rows
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with open(cfg.out_dir / f"{cfg.prefix}_stepsize.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "rho", "converged", f"residual_{cfg.iters}"])
        for row in rows:
            writer.writerow(
                [repr(row.alpha), repr(row.rho), int(row.converged), repr(row.residual_200)]
            )
    return report


def _sparsity_graphs(cfg: ExperimentConfig) -> list[tuple[str, digraph.Digraph]]:
    if cfg.graph_files:
        graphs = [(Path(f).name, digraph.load_graph(f)) for f in cfg.graph_files]
    else:
        chain = cfg.chain_extra or (0, 20, 60)
        nodes = cfg.graph[1] if cfg.graph[0] == "random" else 10
        graphs = [
            (f"chain{idx}", g)
            for idx, g in enumerate(digraph.nested_chain(nodes, chain, cfg.seed))
        ]
    if cfg.strict_nesting:
        for (_, a), (_, b) in zip(graphs, graphs[1:]):
            if a.n != b.n or not set(a.edges) <= set(b.edges):
                raise ConfigError("sparsity chain is not nested")
    return graphs


def cmd_sparsity_study(cfg: ExperimentConfig) -> ComparisonReport:
    """Fit per-graph decay slopes across a chain of increasingly dense graphs.

    Each graph is run with every configured data seed at the fixed step
    size; the per-run slope comes from the standard fit window (residual in
    (1e-12, 1e-1]).
    """
    if not isinstance(cfg.alpha, float):
        raise ConfigError("sparsity study needs a constant step size")
    seeds = cfg.seeds or (cfg.seed,)
    graphs = _sparsity_graphs(cfg)
    rows: list[SparsityRow] = []
    for label, g in graphs:
        weights = digraph.uniform_weights(g)
        pi, _ = digraph.perron_limit(weights)
        for seed in seeds:
            objs = build_objectives(cfg, g.n, seed=seed)
            opt = objectives.centralized_solve(objs)
            trace = algorithms.run(
                "addopt", weights, objs, cfg.alpha, cfg.iters, 0.0,
                z_star=opt.z_star, pi=pi,
            )
            fit = analysis.residual_slope(trace, lo=1e-12, hi=1e-1)
            rows.append(
                SparsityRow(label=label, edge_count=g.edge_count, seed=seed,
                            slope=fit.slope)
            )
    report = ComparisonReport(sparsity_rows=rows)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with open(cfg.out_dir / f"{cfg.prefix}_sparsity.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["graph", "edges", "seed", "slope"])
        for row in rows:
            writer.writerow([row.label, row.edge_count, row.seed, repr(row.slope)])
    return report
