"""Sampling overhead versus amplification strength with a twin axis for the
effective squeezing the amplification produces.

Reads overhead_sweep.csv.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import checked_plot, finish, load_table, make_parser, numeric, run_script

COLUMNS = ["label", "mu", "overhead_approx", "overhead_with_variance_ratio",
           "r_amp"]


def _body(argv):
    parser = make_parser(__doc__, [("csv", "overhead_sweep.csv path")])
    parser.add_argument("--full", action="store_true",
                        help="plot the variance-ratio-weighted overhead")
    args = parser.parse_args(argv)
    table = load_table(args.csv, COLUMNS)
    col = "overhead_with_variance_ratio" if args.full else "overhead_approx"

    fig, ax = plt.subplots(figsize=(6, 4))
    ax2 = ax.twinx()
    labels = list(dict.fromkeys(table["label"]))
    sel_all = np.array(table["label"])
    for label in labels:
        sel = sel_all == label
        mu = numeric(table, "mu")[sel]
        order = np.argsort(mu)
        line = checked_plot(ax, mu[order], numeric(table, col)[sel][order],
                            label=label)
        checked_plot(ax2, mu[order], numeric(table, "r_amp")[sel][order],
                     linestyle=":", linewidth=1, color=line.get_color())
    ax.set_xlabel("subtraction strength mu")
    ax.set_ylabel("sampling overhead")
    ax.set_yscale("log")
    ax2.set_ylabel("amplified squeezing (dotted)")
    ax.legend(fontsize=8)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
