"""Mitigated bias as a function of the assumed loss rate.

Reads mismatch_sweep.csv; the constant unmitigated bias is shown dashed.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import checked_plot, finish, load_table, make_parser, numeric, run_script

COLUMNS = ["gamma_tilde", "mitigated_percentage_bias",
           "unmitigated_percentage_bias"]


def _body(argv):
    parser = make_parser(__doc__, [("csv", "mismatch_sweep.csv path")])
    args = parser.parse_args(argv)
    table = load_table(args.csv, COLUMNS)

    gt = numeric(table, "gamma_tilde")
    order = np.argsort(gt)
    fig, ax = plt.subplots(figsize=(6, 4))
    checked_plot(ax, gt[order],
                 numeric(table, "mitigated_percentage_bias")[order],
                 marker=".", label="mitigated")
    checked_plot(ax, gt[order],
                 numeric(table, "unmitigated_percentage_bias")[order],
                 linestyle="--", label="unmitigated")
    ax.set_xlabel("assumed loss rate")
    ax.set_ylabel("percentage bias")
    ax.legend(fontsize=8)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
