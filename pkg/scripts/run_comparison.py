#!/usr/bin/env python3
"""Run the algorithm comparison described by a config file.

Runs every algorithm listed in the config once on the same graph and
objectives, writes one trace CSV per algorithm plus a summary CSV, and prints
the summary table.  Tracked engines use the configured constant step size;
plain gradient-push always uses the diminishing rule 1/sqrt(k).
"""

from __future__ import annotations

import argparse
from pathlib import Path

from dirgraphopt import experiments

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "compare_fig1.ini"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config", type=Path, default=DEFAULT_CONFIG,
        help=f"experiment config (default: {DEFAULT_CONFIG})",
    )
    args = parser.parse_args(argv)

    cfg = experiments.load_config(args.config)
    report = experiments.cmd_compare(cfg)
    print(f"{'algorithm':<14}{'alpha':<12}{'iters':>8}{'final residual':>18}"
          f"{'slope':>12}{'r2':>8}  diverged")
    for name, s in report.summaries.items():
        print(f"{name:<14}{s.alpha_label:<12}{s.iterations:>8}"
              f"{s.final_residual:>18.3e}{s.slope:>12.5f}{s.r2:>8.3f}"
              f"  {s.diverged}")
    print(f"traces and summary written to {cfg.out_dir}/{cfg.prefix}_*.csv")
    return 1 if report.any_diverged else 0


if __name__ == "__main__":
    raise SystemExit(main())
