"""Shared CSV loading and drift-checked plotting helpers.

Every figure script goes through ``load_table`` (which fails loudly, naming
any missing columns) and the ``checked_*`` plot wrappers, which assert that
the numbers handed to matplotlib are bit-identical to the CSV columns: the
renderer presents data, it never recomputes it.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")

import numpy as np


class MissingColumnsError(ValueError):
    """A required CSV column is absent."""

    def __init__(self, path, missing):
        self.path = path
        self.missing = list(missing)
        super().__init__(
            f"{path}: missing required column(s): {', '.join(self.missing)}")


def load_table(path, required):
    """Read a CSV into a dict of column name -> list of strings."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise MissingColumnsError(path, required)
            rows = list(reader)
    except OSError as exc:
        raise MissingColumnsError(path, required) from exc
    missing = [c for c in required if c not in header]
    if missing:
        raise MissingColumnsError(path, missing)
    table = {name: [] for name in header}
    for row in rows:
        for name, value in zip(header, row):
            table[name].append(value)
    return table


def numeric(table, name):
    return np.array([float(v) for v in table[name]])


def _assert_same(plotted, source, what):
    plotted = np.asarray(plotted, dtype=float)
    source = np.asarray(source, dtype=float)
    if plotted.shape != source.shape or not np.array_equal(plotted, source):
        raise AssertionError(f"numeric drift between CSV and {what}")


def checked_plot(ax, x, y, **kw):
    (line,) = ax.plot(x, y, **kw)
    _assert_same(line.get_xdata(), x, "plotted line x data")
    _assert_same(line.get_ydata(), y, "plotted line y data")
    return line


def checked_bar(ax, left, height, width, **kw):
    bars = ax.bar(left, height, width=width, align="edge", **kw)
    _assert_same([b.get_height() for b in bars], height, "bar heights")
    _assert_same([b.get_x() for b in bars], left, "bar positions")
    return bars


def checked_scatter(ax, x, y, **kw):
    path = ax.scatter(x, y, **kw)
    offs = path.get_offsets()
    _assert_same(offs[:, 0], x, "scatter x data")
    _assert_same(offs[:, 1], y, "scatter y data")
    return path


def make_parser(description, inputs):
    """Common argument surface: input CSV path(s) and an output image path."""
    parser = argparse.ArgumentParser(description=description)
    for name, help_text in inputs:
        parser.add_argument(name, help=help_text)
    parser.add_argument("-o", "--output", required=True,
                        help="output image path (.png or .svg)")
    parser.add_argument("--title", default=None)
    return parser


def run_script(body, argv=None):
    """Execute a figure script body, mapping schema errors to exit code 2."""
    try:
        body(argv)
    except MissingColumnsError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    return 0


def finish(fig, args):
    if args.title:
        fig.suptitle(args.title)
    fig.tight_layout()
    fig.savefig(args.output)
