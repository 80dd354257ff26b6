"""Config parsing and the three experiment drivers."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from dirgraphopt import digraph, experiments, objectives
from dirgraphopt.experiments import (
    ConfigError,
    ExperimentConfig,
    build_objectives,
    cmd_compare,
    cmd_sparsity_study,
    cmd_stepsize_study,
    load_config,
    resolve_graph,
    thread_cap,
)


def make_config(tmp_path: Path, **overrides) -> ExperimentConfig:
    base = dict(
        graph=("builtin", "fig1"),
        algorithms=("addopt",),
        alpha=0.05,
        objective="quadratic",
        reg=1.0,
        seed=0,
        seeds=(),
        n_examples=10,
        dim=3,
        iters=200,
        stop_tol=0.0,
        theta=0.5,
        slack=None,
        out_dir=tmp_path,
        prefix="study",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def read_csv(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

FULL_INI = """
[graph]
source = random
nodes = 8
extra_edges = 5
seed = 3

[objective]
kind = quadratic
reg = 0.5      # inline comment
seed = 11
examples = 4
dim = 2

[run]
algorithms = addopt, dextra
alpha = 0.07
iters = 321
stop_tol = 1e-8
theta = 0.4
slack = 0.02

[sparsity]
chain_extra = 0, 5, 10
seeds = 1, 2
strict_nesting = yes

[output]
dir = {out}
prefix = demo
"""


def test_load_config_full_roundtrip(tmp_path):
    path = tmp_path / "full.ini"
    path.write_text(FULL_INI.format(out=tmp_path / "results"))
    cfg = load_config(path)
    assert cfg.graph == ("random", 8, 5, 3)
    assert cfg.algorithms == ("addopt", "dextra")
    assert cfg.alpha == 0.07
    assert cfg.objective == "quadratic"
    assert cfg.reg == 0.5
    assert cfg.seed == 11
    assert cfg.n_examples == 4 and cfg.dim == 2
    assert cfg.iters == 321 and cfg.stop_tol == 1e-8 and cfg.theta == 0.4
    assert cfg.slack == 0.02
    assert cfg.seeds == (1, 2)
    assert cfg.chain_extra == (0, 5, 10)
    assert cfg.strict_nesting is True
    assert cfg.out_dir == tmp_path / "results"
    assert cfg.prefix == "demo"
    assert cfg.sweep is None


def test_load_config_defaults(tmp_path):
    path = tmp_path / "minimal.ini"
    path.write_text("[run]\nalpha = 0.1\n")
    cfg = load_config(path)
    assert cfg.graph == ("builtin", "fig1")
    assert cfg.algorithms == ("addopt",)
    assert cfg.objective == "logistic"
    assert cfg.reg == 1.0 and cfg.seed == 0
    assert cfg.iters == 500 and cfg.stop_tol == 0.0 and cfg.theta == 0.5
    assert cfg.slack is None  # "auto"
    assert cfg.out_dir == Path(".") and cfg.prefix == "study"
    assert cfg.seeds == () and cfg.chain_extra == ()
    assert cfg.strict_nesting is False and cfg.graph_files == ()


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.ini")


def test_load_config_bad_algorithm(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[run]\nalgorithms = addopt, sgd\n")
    with pytest.raises(ConfigError, match="unknown algorithm"):
        load_config(path)


def test_load_config_duplicate_algorithms(tmp_path):
    path = tmp_path / "dup.ini"
    path.write_text("[run]\nalgorithms = addopt, addopt\n")
    with pytest.raises(ConfigError, match="duplicates"):
        load_config(path)


def test_load_config_alpha_forms(tmp_path):
    for text, expected in (
        ("0.25", 0.25),
        ("1/sqrt(k)", "1/sqrt(k)"),
        ("0.1:0.5:5", ("sweep", 0.1, 0.5, 5)),
    ):
        path = tmp_path / "a.ini"
        path.write_text(f"[run]\nalpha = {text}\n")
        assert load_config(path).alpha == expected
    sweep_cfg = load_config(path)
    assert sweep_cfg.sweep == (0.1, 0.5, 5)


def test_load_config_alpha_errors(tmp_path):
    for text, msg in (
        ("huge", "cannot parse"),
        ("0.1:0.5", "lo:hi:steps"),
        ("0.5:0.1:5", "empty or inverted"),
        ("0:0.5:5", "empty or inverted"),
    ):
        path = tmp_path / "a.ini"
        path.write_text(f"[run]\nalpha = {text}\n")
        with pytest.raises(ConfigError, match=msg):
            load_config(path)


def test_load_config_graph_file_checked(tmp_path):
    g_path = tmp_path / "g.txt"
    digraph.save_graph(digraph.ring_digraph(4), g_path)
    path = tmp_path / "c.ini"
    path.write_text(f"[graph]\nsource = file:{g_path}\n[run]\nalpha = 0.1\n")
    cfg = load_config(path)
    assert cfg.graph == ("file", str(g_path))
    assert resolve_graph(cfg) == digraph.ring_digraph(4)

    path.write_text(f"[graph]\nsource = file:{tmp_path / 'missing.txt'}\n")
    with pytest.raises(ConfigError, match="graph file not found"):
        load_config(path)


def test_load_config_numeric_slack(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[run]\nslack = 0.05\n")
    assert load_config(path).slack == 0.05


def test_load_config_sparsity_graph_files(tmp_path):
    g1, g2 = tmp_path / "a.txt", tmp_path / "b.txt"
    digraph.save_graph(digraph.ring_digraph(4), g1)
    digraph.save_graph(digraph.complete_digraph(4), g2)
    path = tmp_path / "c.ini"
    path.write_text(f"[sparsity]\ngraphs = {g1}, {g2}\n[run]\nalpha = 0.1\n")
    assert load_config(path).graph_files == (str(g1), str(g2))

    path.write_text(f"[sparsity]\ngraphs = {tmp_path / 'no.txt'}\n")
    with pytest.raises(ConfigError, match="graph file not found"):
        load_config(path)


def test_resolve_graph_variants(tmp_path):
    assert resolve_graph(make_config(tmp_path)).n == 10
    rnd = make_config(tmp_path, graph=("random", 6, 4, 2))
    g = resolve_graph(rnd)
    assert g == digraph.random_digraph(6, 4, 2)


def test_thread_cap_env(monkeypatch):
    monkeypatch.delenv(experiments.THREADS_ENV, raising=False)
    assert thread_cap() == 1
    monkeypatch.setenv(experiments.THREADS_ENV, "4")
    assert thread_cap() == 4
    monkeypatch.setenv(experiments.THREADS_ENV, "0")
    assert thread_cap() == 1  # clamped to at least one worker
    monkeypatch.setenv(experiments.THREADS_ENV, "many")
    with pytest.raises(ConfigError, match="integer"):
        thread_cap()


def test_build_objectives_variants(tmp_path):
    logi = make_config(tmp_path, objective="logistic", n_examples=4, dim=2)
    objs = build_objectives(logi, 5)
    assert len(objs) == 5 and objs[0].dim == 2
    quad = make_config(tmp_path, objective="quadratic", dim=3)
    qobjs = build_objectives(quad, 4)
    assert len(qobjs) == 4 and qobjs[0].lipschitz == 1.0
    # a seed override changes the data
    other = build_objectives(quad, 4, seed=1)
    assert not np.allclose(qobjs[0].center, other[0].center)


# ---------------------------------------------------------------------------
# comparison driver
# ---------------------------------------------------------------------------


def test_compare_rejects_sweep(tmp_path):
    cfg = make_config(tmp_path, alpha=("sweep", 0.1, 0.5, 5))
    with pytest.raises(ConfigError, match="single step size"):
        cmd_compare(cfg)


def test_compare_zero_iterations_keeps_initial_residual(tmp_path):
    cfg = make_config(tmp_path, iters=0)
    report = cmd_compare(cfg)
    summary = report.summaries["addopt"]
    assert summary.iterations == 0
    assert summary.final_residual == 1.0
    assert np.isnan(summary.slope)
    rows = read_csv(tmp_path / "study_summary.csv")
    assert rows[0] == [
        "algorithm", "alpha", "iterations", "final_residual", "slope", "r2",
        "diverged",
    ]
    assert len(rows) == 2 and rows[1][3] == "1.0"


def test_compare_writes_trace_per_algorithm(tmp_path):
    cfg = make_config(
        tmp_path, algorithms=("addopt", "dextra", "gp"), alpha=0.2, iters=300,
    )
    report = cmd_compare(cfg)
    for name in ("addopt", "dextra", "gradient_push"):
        assert (tmp_path / f"study_{name}.csv").exists()
        assert name in report.summaries
    assert not report.any_diverged
    # tracked engines converge linearly; the baseline trails far behind
    assert report.summaries["addopt"].final_residual < 1e-8
    assert report.summaries["dextra"].final_residual < 1e-6
    assert report.summaries["gradient_push"].final_residual > 1e-3


def test_compare_baseline_always_uses_diminishing_steps(tmp_path):
    cfg = make_config(tmp_path, algorithms=("gp",), alpha=0.3, iters=5)
    report = cmd_compare(cfg)
    assert report.summaries["gradient_push"].alpha_label == "1/sqrt(k)"


def test_compare_flags_divergence_and_truncates_trace(tmp_path):
    cfg = make_config(tmp_path, alpha=50.0, iters=3000)
    report = cmd_compare(cfg)
    summary = report.summaries["addopt"]
    assert summary.diverged and report.any_diverged
    rows = read_csv(tmp_path / "study_summary.csv")
    assert rows[1][-1] == "1"
    # the written trace stops just before the overflow guard tripped
    trace_rows = read_csv(tmp_path / "study_addopt.csv")
    assert len(trace_rows) - 2 == summary.iterations
    assert all(np.isfinite(float(r[1])) for r in trace_rows[1:])


def test_compare_is_deterministic(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        cmd_compare(make_config(out, iters=50, objective="logistic"))
    for name in ("study_addopt.csv", "study_summary.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


# ---------------------------------------------------------------------------
# step-size study driver
# ---------------------------------------------------------------------------


def stepsize_config(tmp_path, **overrides):
    base = dict(
        alpha=("sweep", 0.001, 0.004, 6),
        objective="logistic",
        n_examples=2,
        dim=2,
        iters=100,
    )
    base.update(overrides)
    return make_config(tmp_path, **base)


def test_stepsize_study_requires_sweep(tmp_path):
    with pytest.raises(ConfigError, match="lo:hi:steps"):
        cmd_stepsize_study(make_config(tmp_path, alpha=0.1))


def test_stepsize_study_table_and_csv(tmp_path):
    cfg = stepsize_config(tmp_path)
    report = cmd_stepsize_study(cfg)
    assert report.alpha_bar is not None and report.alpha_bar > 0
    alphas = [row.alpha for row in report.stepsize_table]
    assert alphas == sorted(alphas) and len(alphas) == 6
    assert all(a < b for a, b in zip(alphas, alphas[1:]))
    rows = read_csv(tmp_path / "study_stepsize.csv")
    assert rows[0] == ["alpha", "rho", "converged", "residual_100"]
    assert len(rows) == 7
    for row in rows[1:]:
        float(row[0]), float(row[1]), float(row[3])
        assert row[2] in ("0", "1")


def test_stepsize_study_flags_divergent_grid_points(tmp_path):
    # push the grid across the practical stability edge
    cfg = make_config(
        tmp_path, alpha=("sweep", 0.1, 1.0, 10), objective="logistic",
        n_examples=2, dim=2, seed=7, iters=200,
    )
    report = cmd_stepsize_study(cfg)
    flags = [row.converged for row in report.stepsize_table]
    assert flags[0] and not all(flags)
    # once diverged, the recorded residual is infinite
    for row in report.stepsize_table:
        if not row.converged:
            assert not np.isfinite(row.residual_200) or row.residual_200 >= 1.0


def test_stepsize_study_threaded_matches_serial(tmp_path, monkeypatch):
    monkeypatch.delenv(experiments.THREADS_ENV, raising=False)
    serial = cmd_stepsize_study(stepsize_config(tmp_path / "serial"))
    monkeypatch.setenv(experiments.THREADS_ENV, "3")
    threaded = cmd_stepsize_study(stepsize_config(tmp_path / "threaded"))
    assert [
        (r.alpha, r.rho, r.converged, r.residual_200)
        for r in serial.stepsize_table
    ] == [
        (r.alpha, r.rho, r.converged, r.residual_200)
        for r in threaded.stepsize_table
    ]
    assert (tmp_path / "serial" / "study_stepsize.csv").read_bytes() == (
        tmp_path / "threaded" / "study_stepsize.csv"
    ).read_bytes()


# ---------------------------------------------------------------------------
# sparsity study driver
# ---------------------------------------------------------------------------


def test_sparsity_study_requires_constant_alpha(tmp_path):
    with pytest.raises(ConfigError, match="constant step size"):
        cmd_sparsity_study(make_config(tmp_path, alpha=("sweep", 0.1, 0.5, 3)))
    with pytest.raises(ConfigError, match="constant step size"):
        cmd_sparsity_study(make_config(tmp_path, alpha="1/sqrt(k)"))


def test_sparsity_identical_graphs_identical_slopes(tmp_path):
    g_path = tmp_path / "ring.txt"
    digraph.save_graph(digraph.ring_digraph(4), g_path)
    cfg = make_config(
        tmp_path, alpha=0.05, dim=2, iters=1500,
        graph_files=(str(g_path), str(g_path)),
    )
    report = cmd_sparsity_study(cfg)
    assert len(report.sparsity_rows) == 2
    a, b = report.sparsity_rows
    assert a.slope == pytest.approx(b.slope, abs=1e-12)
    assert a.edge_count == b.edge_count == 4


def test_sparsity_strict_nesting_rejects_disjoint_chains(tmp_path):
    fwd, rev = tmp_path / "fwd.txt", tmp_path / "rev.txt"
    digraph.save_graph(digraph.ring_digraph(4), fwd)
    digraph.save_graph(
        digraph.Digraph(4, [((v + 1) % 4, v) for v in range(4)]), rev
    )
    cfg = make_config(
        tmp_path, alpha=0.05, dim=2, iters=1500,
        graph_files=(str(fwd), str(rev)), strict_nesting=True,
    )
    with pytest.raises(ConfigError, match="not nested"):
        cmd_sparsity_study(cfg)
    relaxed = make_config(
        tmp_path, alpha=0.05, dim=2, iters=1500,
        graph_files=(str(fwd), str(rev)), strict_nesting=False,
    )
    report = cmd_sparsity_study(relaxed)
    assert [row.label for row in report.sparsity_rows] == ["fwd.txt", "rev.txt"]


def test_sparsity_complete_graph_is_weakly_fastest(tmp_path):
    cfg = make_config(
        tmp_path, graph=("random", 6, 0, 0), alpha=0.03, dim=3, iters=1500,
        seeds=(0, 1, 2), chain_extra=(0, 12, 24), strict_nesting=True,
    )
    report = cmd_sparsity_study(cfg)
    assert len(report.sparsity_rows) == 9
    means = {}
    for row in report.sparsity_rows:
        means.setdefault(row.label, []).append(row.slope)
    mean = {label: np.mean(v) for label, v in means.items()}
    # chain2 is the complete digraph: at least as fast as every sparser stage
    # up to the study's 5% tolerance
    for label in ("chain0", "chain1"):
        assert mean["chain2"] <= mean[label] + 0.05 * abs(mean[label])
    rows = read_csv(tmp_path / "study_sparsity.csv")
    assert rows[0] == ["graph", "edges", "seed", "slope"]
    assert len(rows) == 10
