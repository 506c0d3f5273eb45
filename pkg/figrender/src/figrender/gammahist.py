"""Histograms of the per-shot loss draws, one panel per mode, annotated
with the run's mitigated estimate.

Reads gamma_hist.csv and shots_result.csv.
"""

import matplotlib.pyplot as plt
import numpy as np

from .loader import checked_bar, finish, load_table, make_parser, numeric, run_script

HIST_COLUMNS = ["mode", "bin_left", "bin_right", "count"]
RESULT_COLUMNS = ["estimate", "s_squared", "shots"]


def _body(argv):
    parser = make_parser(__doc__, [
        ("hist_csv", "gamma_hist.csv path"),
        ("result_csv", "shots_result.csv path"),
    ])
    args = parser.parse_args(argv)
    hist = load_table(args.hist_csv, HIST_COLUMNS)
    result = load_table(args.result_csv, RESULT_COLUMNS)

    modes = list(dict.fromkeys(hist["mode"]))
    fig, axes = plt.subplots(1, max(1, len(modes)),
                             figsize=(4 * max(1, len(modes)), 3.5),
                             squeeze=False)
    mode_col = np.array(hist["mode"])
    for ax, mode in zip(axes[0], modes):
        sel = mode_col == mode
        left = numeric(hist, "bin_left")[sel]
        width = numeric(hist, "bin_right")[sel] - left
        checked_bar(ax, left, numeric(hist, "count")[sel], width,
                    color="C0", alpha=0.8)
        ax.set_title(f"mode {mode}")
        ax.set_xlabel("sampled loss rate")
        ax.set_ylabel("shots")
    est = float(result["estimate"][0])
    shots = result["shots"][0]
    fig.text(0.01, 0.01, f"estimate {est:.4f} from {shots} shots", fontsize=8)
    finish(fig, args)


def main(argv=None):
    return run_script(_body, argv)


if __name__ == "__main__":
    raise SystemExit(main())
