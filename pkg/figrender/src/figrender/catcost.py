"""Cat-state sampling cost S^2 versus amplitude, one curve per loss rate.

Reads cat_mc.csv.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import checked_plot, finish, load_table, make_parser, numeric, run_script

COLUMNS = ["alpha", "gamma", "s_squared"]


def _body(argv):
    parser = make_parser(__doc__, [("csv", "cat_mc.csv path")])
    args = parser.parse_args(argv)
    table = load_table(args.csv, COLUMNS)

    fig, ax = plt.subplots(figsize=(6, 4))
    gammas = list(dict.fromkeys(table["gamma"]))
    sel_all = np.array(table["gamma"])
    for gamma in gammas:
        sel = sel_all == gamma
        alpha = numeric(table, "alpha")[sel]
        order = np.argsort(alpha)
        checked_plot(ax, alpha[order], numeric(table, "s_squared")[sel][order],
                     marker="o", label=f"gamma = {float(gamma):g}")
    ax.set_yscale("log")
    ax.set_xlabel("cat amplitude")
    ax.set_ylabel("sampling overhead S^2")
    ax.legend(fontsize=8)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
