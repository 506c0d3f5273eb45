import csv
import json
import math
import os

import numpy as np
import pytest

from losscancel import ConfigError, make_space
from losscancel.cli import (
    PRESETS,
    load_config,
    load_custom_observable,
    main,
    plan_shots,
    validate_config,
)
from losscancel.protocol import cat_mc_s


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _cat_cfg(tmp_path, **extra):
    cfg = {
        "kind": "cat-mc",
        "alpha_values": [0.8, 1.0],
        "gamma_values": [0.1, 0.2],
        "shots": 0,
    }
    cfg.update(extra)
    return _write(tmp_path, "cat.json", cfg)


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# --- presets ----------------------------------------------------------------

def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    names = [line.split("\t")[0] for line in out.strip().splitlines()]
    assert names == list(PRESETS)
    assert {"fig2", "fig6", "fig8", "calibrate"} <= set(names)


@pytest.mark.parametrize("name", list(PRESETS))
def test_preset_dump_validates(name, capsys, tmp_path):
    assert main(["presets", "--dump", name]) == 0
    cfg = json.loads(capsys.readouterr().out)
    validate_config(cfg)


def test_preset_dump_unknown(capsys):
    assert main(["presets", "--dump", "nope"]) == 2


# --- validate ---------------------------------------------------------------

def test_validate_ok(tmp_path, capsys):
    path = _cat_cfg(tmp_path)
    assert main(["validate", path]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok ")
    assert json.loads(out[3:])["kind"] == "cat-mc"


def test_validate_bad_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["validate", str(p)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_validate_unknown_kind(tmp_path, capsys):
    path = _write(tmp_path, "k.json", {"kind": "frobnicate"})
    assert main(["validate", path]) == 2
    assert "frobnicate" in capsys.readouterr().err


def test_validate_gamma_out_of_range(tmp_path, capsys):
    path = _write(tmp_path, "g.json", {
        "kind": "shots", "loss": {"gamma": [1.0]}, "shots": 10, "seed": 1})
    assert main(["validate", path]) == 2
    assert "[0, 1)" in capsys.readouterr().err


def test_validate_missing_field(tmp_path, capsys):
    path = _write(tmp_path, "m.json", {"kind": "cat-mc"})
    assert main(["validate", path]) == 2
    assert "alpha_values" in capsys.readouterr().err


# --- run --------------------------------------------------------------------

def test_run_cat_mc_values_and_manifest(tmp_path, capsys):
    path = _cat_cfg(tmp_path, output=str(tmp_path / "out"))
    assert main(["run", path]) == 0
    header, rows = _read_csv(tmp_path / "out" / "cat_mc.csv")
    assert header == ["alpha", "gamma", "phi", "s", "s_squared", "estimate"]
    assert len(rows) == 4
    for row in rows:
        alpha, gamma, s = float(row[0]), float(row[1]), float(row[3])
        assert s == pytest.approx(cat_mc_s(alpha, 0.0, gamma), abs=1e-12)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["tool"] == "losscancel"
    assert manifest["outputs"] == ["cat_mc.csv"]


def test_run_roundtrip_bit_identical(tmp_path, capsys):
    path = _cat_cfg(tmp_path, shots=2000, seed=17,
                    cutoffs=[20], leakage_tol=1e-4)
    assert main(["run", path, "-o", str(tmp_path / "a")]) == 0
    assert main(["run", path, "-o", str(tmp_path / "b")]) == 0
    # and once more from the emitted manifest instead of the config
    assert main(["run", str(tmp_path / "a" / "manifest.json"),
                 "-o", str(tmp_path / "c")]) == 0
    ref = (tmp_path / "a" / "cat_mc.csv").read_bytes()
    assert (tmp_path / "b" / "cat_mc.csv").read_bytes() == ref
    assert (tmp_path / "c" / "cat_mc.csv").read_bytes() == ref


def test_run_set_override(tmp_path, capsys):
    path = _cat_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["run", path, "--set", "gamma_values=[0.3]",
                 "--set", "alpha_values=[1.0]", "-o", out]) == 0
    _, rows = _read_csv(os.path.join(out, "cat_mc.csv"))
    assert len(rows) == 1
    assert float(rows[0][1]) == 0.3


def test_run_leakage_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "leak.json", {
        "kind": "bias-sweep",
        "curves": [{"label": "x", "state": {"family": "squeezed", "r0": 1.0},
                    "loss": {"gamma": [0.1]}}],
        "j_max_values": [0],
        "observable": {"kind": "projector-on-initial"},
        "cutoffs": [10],
        "leakage_tol": 1e-12,
        "output": str(tmp_path / "leak_out"),
    })
    assert main(["run", path]) == 3
    assert "numeric error" in capsys.readouterr().err


# --- custom observable ------------------------------------------------------

def _obs_file(tmp_path, dim, matrix):
    lines = [str(dim)]
    for v in np.asarray(matrix, dtype=complex).ravel():
        lines.append(f"{v.real} {v.imag}")
    p = tmp_path / "obs.txt"
    p.write_text("\n".join(lines) + "\n")
    return str(p)


def test_custom_observable_loader(tmp_path):
    sp = make_space(1, [2])
    m = np.diag([0.0, 1.0, 0.0])
    obs = load_custom_observable(_obs_file(tmp_path, 3, m), sp)
    assert np.allclose(obs.op.matrix, m)
    with pytest.raises(ConfigError, match="dimension"):
        load_custom_observable(_obs_file(tmp_path, 3, m), make_space(1, [3]))
    bad = m.astype(complex)
    bad[0, 1] = 1j
    with pytest.raises(ConfigError, match="Hermitian"):
        load_custom_observable(_obs_file(tmp_path, 3, bad), sp)


def test_run_with_custom_observable(tmp_path, capsys):
    obs_path = _obs_file(tmp_path, 3, np.diag([0.0, 1.0, 0.0]))
    path = _write(tmp_path, "cust.json", {
        "kind": "bias-sweep",
        "curves": [{"label": "sp", "state": {"family": "single_photon"},
                    "loss": {"gamma": [0.2]}}],
        "j_max_values": [0, 1],
        "observable": {"kind": "custom", "path": obs_path},
        "cutoffs": [2],
        "leakage_tol": 1.0,
        "output": str(tmp_path / "cust_out"),
    })
    assert main(["run", path]) == 0
    header, rows = _read_csv(tmp_path / "cust_out" / "bias_sweep.csv")
    by_j = {int(r[header.index("j_max")]): r for r in rows}
    bias_col = header.index("mitigated_percentage_bias")
    unmit_col = header.index("unmitigated_percentage_bias")
    # the single-photon projector observable is mitigated exactly
    assert abs(float(by_j[1][bias_col])) < 1e-10
    assert float(by_j[0][unmit_col]) == pytest.approx(20.0, abs=1e-10)


# --- calibrate --------------------------------------------------------------

def test_calibrate_command(tmp_path, capsys):
    path = _write(tmp_path, "cal.json", {
        "kind": "calibrate",
        "probe": {"amplitudes": [1, 1, 1, 1], "shots": 20000},
        "gamma_true": 0.1,
        "plan": {"target_accuracy": 0.01, "confidence": 0.99},
        "seed": 3,
        "output": str(tmp_path / "cal_out"),
    })
    assert main(["calibrate", path]) == 0
    header, rows = _read_csv(tmp_path / "cal_out" / "calibration.csv")
    row = dict(zip(header, rows[0]))
    assert int(row["planned_shots"]) == 250001
    sigma = math.sqrt(float(row["predicted_variance"]))
    assert abs(float(row["gamma_hat"]) - 0.1) < 4 * sigma


def test_calibrate_rejects_other_kinds(tmp_path, capsys):
    path = _cat_cfg(tmp_path)
    assert main(["calibrate", path]) == 2


def test_manifest_load_config_unwrap(tmp_path):
    path = _write(tmp_path, "man.json", {
        "tool": "losscancel", "version": "0.1.0",
        "config": {"kind": "cat-mc", "alpha_values": [1.0],
                   "gamma_values": [0.1], "shots": 0},
        "outputs": []})
    cfg = load_config(path)
    assert cfg["kind"] == "cat-mc"


def test_plan_shots_reexport():
    assert plan_shots(0.01, 0.99, 4.0) == 250001
