"""Calibration summary: estimated versus true loss rate with the empirical
and predicted estimator variances side by side.

Reads calibration.csv.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import checked_scatter, finish, load_table, make_parser, numeric, run_script

COLUMNS = ["gamma_true", "gamma_hat", "empirical_variance",
           "predicted_variance"]


def _body(argv):
    parser = make_parser(__doc__, [("csv", "calibration.csv path")])
    args = parser.parse_args(argv)
    table = load_table(args.csv, COLUMNS)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.5))
    true = numeric(table, "gamma_true")
    checked_scatter(ax1, true, numeric(table, "gamma_hat"),
                    marker="o", color="C0")
    lo, hi = min(0.0, true.min()), max(1.0, true.max())
    ax1.plot([lo, hi], [lo, hi], linestyle="--", color="gray", linewidth=1)
    ax1.set_xlabel("true loss rate")
    ax1.set_ylabel("estimated loss rate")

    x = np.arange(len(true))
    ax2.bar(x - 0.2, numeric(table, "empirical_variance"), width=0.4,
            label="empirical")
    ax2.bar(x + 0.2, numeric(table, "predicted_variance"), width=0.4,
            label="predicted")
    ax2.set_xticks(x)
    ax2.set_xticklabels([f"{g:g}" for g in true])
    ax2.set_xlabel("true loss rate")
    ax2.set_ylabel("estimator variance")
    ax2.legend(fontsize=8)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
