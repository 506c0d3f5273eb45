import csv

import pytest
from PIL import Image

from figrender import MissingColumnsError, load_table, numeric
from figrender import (bias, calibration, catcost, covhist, fidelity,
                       gammahist, mismatch, overhead)


def _check_png(path):
    with Image.open(path) as img:
        img.verify()
    assert path.stat().st_size > 0


def test_bias_render(preset_csvs, tmp_path):
    out = tmp_path / "fig2.png"
    assert bias.main([str(preset_csvs["fig2"] / "bias_sweep.csv"),
                      "-o", str(out)]) == 0
    _check_png(out)


def test_bias_render_svg(preset_csvs, tmp_path):
    out = tmp_path / "fig2.svg"
    assert bias.main([str(preset_csvs["fig2"] / "bias_sweep.csv"),
                      "-o", str(out), "--log-y"]) == 0
    head = out.read_text()[:200]
    assert "<svg" in head or "<?xml" in head


def test_overhead_render(preset_csvs, tmp_path):
    out = tmp_path / "fig3.png"
    assert overhead.main([str(preset_csvs["fig3"] / "overhead_sweep.csv"),
                          "-o", str(out), "--full"]) == 0
    _check_png(out)


def test_mismatch_render(preset_csvs, tmp_path):
    out = tmp_path / "fig4.png"
    assert mismatch.main([str(preset_csvs["fig4"] / "mismatch_sweep.csv"),
                          "-o", str(out)]) == 0
    _check_png(out)


def test_catcost_render(preset_csvs, tmp_path):
    out = tmp_path / "fig5.png"
    assert catcost.main([str(preset_csvs["fig5"] / "cat_mc.csv"),
                         "-o", str(out)]) == 0
    _check_png(out)


def test_covhist_render(preset_csvs, tmp_path):
    out = tmp_path / "fig6.png"
    assert covhist.main([str(preset_csvs["fig6"] / "tmsv_cov_hist.csv"),
                         str(preset_csvs["fig6"] / "tmsv_cov_lines.csv"),
                         "-o", str(out)]) == 0
    _check_png(out)


def test_fidelity_render(preset_csvs, tmp_path):
    out = tmp_path / "fig7.png"
    assert fidelity.main([str(preset_csvs["fig7"] / "ecs_mc_results.csv"),
                          str(preset_csvs["fig7"] / "ecs_mc_summary.csv"),
                          "-o", str(out)]) == 0
    _check_png(out)


def test_gammahist_render(preset_csvs, tmp_path):
    out = tmp_path / "fig8.png"
    assert gammahist.main([str(preset_csvs["fig8"] / "gamma_hist.csv"),
                           str(preset_csvs["fig8"] / "shots_result.csv"),
                           "-o", str(out)]) == 0
    _check_png(out)


def test_calibration_render(preset_csvs, tmp_path):
    out = tmp_path / "cal.png"
    assert calibration.main([str(preset_csvs["calibrate"] / "calibration.csv"),
                             "-o", str(out)]) == 0
    _check_png(out)


def _drop_column(src, dst, column):
    with open(src, newline="") as fh:
        rows = list(csv.reader(fh))
    idx = rows[0].index(column)
    with open(dst, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in rows:
            w.writerow(row[:idx] + row[idx + 1:])


@pytest.mark.parametrize("column", ["mitigated_percentage_bias", "j_max"])
def test_truncated_csv_names_missing_column(preset_csvs, tmp_path, capsys,
                                            column):
    bad = tmp_path / "truncated.csv"
    _drop_column(preset_csvs["fig2"] / "bias_sweep.csv", bad, column)
    out = tmp_path / "never.png"
    assert bias.main([str(bad), "-o", str(out)]) == 2
    err = capsys.readouterr().err
    assert column in err and "missing required column" in err
    assert not out.exists()


def test_truncated_hist_csv(preset_csvs, tmp_path, capsys):
    bad = tmp_path / "hist.csv"
    _drop_column(preset_csvs["fig6"] / "tmsv_cov_hist.csv", bad, "count")
    assert covhist.main([str(bad),
                         str(preset_csvs["fig6"] / "tmsv_cov_lines.csv"),
                         "-o", str(tmp_path / "x.png")]) == 2
    assert "count" in capsys.readouterr().err


def test_loader_missing_file(tmp_path):
    with pytest.raises(MissingColumnsError):
        load_table(tmp_path / "absent.csv", ["a"])


def test_loader_roundtrip(preset_csvs):
    table = load_table(preset_csvs["fig5"] / "cat_mc.csv",
                       ["alpha", "gamma", "s_squared"])
    s2 = numeric(table, "s_squared")
    s = numeric(table, "s")
    assert (abs(s2 - s * s) < 1e-12).all()
