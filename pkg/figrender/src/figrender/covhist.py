"""Histograms of per-experiment covariance estimates, one panel per
observable, with labelled vertical dashed lines for the ideal, noisy, and
expected mitigated values.

Reads tmsv_cov_hist.csv and tmsv_cov_lines.csv.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import checked_bar, finish, load_table, make_parser, numeric, run_script

HIST_COLUMNS = ["observable", "series", "bin_left", "bin_right", "count"]
LINE_COLUMNS = ["observable", "ideal", "noisy", "expected_mitigated"]


def _body(argv):
    parser = make_parser(__doc__, [
        ("hist_csv", "tmsv_cov_hist.csv path"),
        ("lines_csv", "tmsv_cov_lines.csv path"),
    ])
    args = parser.parse_args(argv)
    hist = load_table(args.hist_csv, HIST_COLUMNS)
    lines = load_table(args.lines_csv, LINE_COLUMNS)

    observables = list(dict.fromkeys(hist["observable"]))
    fig, axes = plt.subplots(1, max(1, len(observables)),
                             figsize=(5 * max(1, len(observables)), 4),
                             squeeze=False)
    obs_col = np.array(hist["observable"])
    series_col = np.array(hist["series"])
    line_rows = {name: i for i, name in enumerate(lines["observable"])}
    for ax, name in zip(axes[0], observables):
        for series, alpha in (("mitigated", 0.7), ("unmitigated", 0.4)):
            sel = (obs_col == name) & (series_col == series)
            if not sel.any():
                continue
            left = numeric(hist, "bin_left")[sel]
            width = numeric(hist, "bin_right")[sel] - left
            checked_bar(ax, left, numeric(hist, "count")[sel], width,
                        alpha=alpha, label=series)
        if name in line_rows:
            i = line_rows[name]
            for col, style in (("ideal", "k"), ("noisy", "r"),
                               ("expected_mitigated", "b")):
                ax.axvline(float(lines[col][i]), linestyle="--", color=style,
                           linewidth=1, label=col)
        ax.set_title(name)
        ax.set_xlabel("estimate")
        ax.set_ylabel("experiments")
        ax.legend(fontsize=7)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
