"""Recovered fidelity versus amplitude: per-experiment estimates as ticks,
the mean as a marker, and the target value 1 as a reference line.

Reads ecs_mc_results.csv and ecs_mc_summary.csv.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import (checked_plot, checked_scatter, finish, load_table,
                     make_parser, numeric, run_script)

RESULT_COLUMNS = ["alpha", "experiment", "estimate"]
SUMMARY_COLUMNS = ["alpha", "mean_estimate", "s_squared"]


def _body(argv):
    parser = make_parser(__doc__, [
        ("results_csv", "ecs_mc_results.csv path"),
        ("summary_csv", "ecs_mc_summary.csv path"),
    ])
    args = parser.parse_args(argv)
    results = load_table(args.results_csv, RESULT_COLUMNS)
    summary = load_table(args.summary_csv, SUMMARY_COLUMNS)

    fig, ax = plt.subplots(figsize=(6, 4))
    checked_scatter(ax, numeric(results, "alpha"),
                    numeric(results, "estimate"),
                    marker="_", s=120, color="gray", label="experiments")
    alpha_s = numeric(summary, "alpha")
    order = np.argsort(alpha_s)
    checked_plot(ax, alpha_s[order], numeric(summary, "mean_estimate")[order],
                 marker="o", color="C0", label="mean")
    ax.axhline(1.0, linestyle="--", color="k", linewidth=1)
    ax.set_xlabel("amplitude")
    ax.set_ylabel("fidelity estimate")
    ax.legend(fontsize=8)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
