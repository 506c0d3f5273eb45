"""Residual bias versus subtraction budget, one curve per parameter set.

Reads bias_sweep.csv; the unmitigated bias of each curve appears as a
dashed horizontal reference line.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import checked_plot, finish, load_table, make_parser, numeric, run_script

COLUMNS = ["label", "gamma", "j_max", "mitigated_percentage_bias",
           "unmitigated_percentage_bias"]


def _body(argv):
    parser = make_parser(__doc__, [("csv", "bias_sweep.csv path")])
    parser.add_argument("--log-y", action="store_true",
                        help="log scale for the bias axis")
    args = parser.parse_args(argv)
    table = load_table(args.csv, COLUMNS)

    labels = list(dict.fromkeys(table["label"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    sel_all = np.array(table["label"])
    for label in labels:
        sel = sel_all == label
        j = numeric(table, "j_max")[sel]
        order = np.argsort(j)
        mit = numeric(table, "mitigated_percentage_bias")[sel][order]
        unmit = numeric(table, "unmitigated_percentage_bias")[sel][order]
        line = checked_plot(ax, j[order], mit, marker="o", label=label)
        checked_plot(ax, j[order], unmit, linestyle="--", linewidth=1,
                     color=line.get_color())
    if args.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("subtraction budget per mode")
    ax.set_ylabel("percentage bias")
    ax.legend(fontsize=8)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
