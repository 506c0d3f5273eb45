"""Generate small but schema-faithful CSV outputs for every experiment
preset once per session, by driving the upstream CLI with reduced shot and
grid sizes. The renderer itself only ever sees the CSV files."""

import json
import subprocess
import sys

import pytest

# preset name -> extra --set overrides that shrink the run
PRESET_OVERRIDES = {
    "fig2": ["cutoffs=[60]", "j_max_values=[0,1,2]"],
    "fig3": ["cutoffs=[80]", "mu_values=[0.05,0.1]"],
    "fig4": ["cutoffs=[50]", "leakage_tol=0.01",
             "gamma_tilde_values=[0.0,0.05,0.075,0.1]"],
    "fig5": [],
    "fig6": ["shots=2000", "experiments=3", "loss.bins=5"],
    "fig7": ["shots=2000", "experiments=2", "alpha_values=[1.0]",
             "loss.bins=5"],
    "fig8": ["shots=2000", "loss.bins=5"],
    "calibrate": ["probe.shots=5000"],
}


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "losscancel.cli", *args],
                          capture_output=True, text=True)


@pytest.fixture(scope="session")
def preset_csvs(tmp_path_factory):
    """Dict: preset name -> directory holding its CSV outputs."""
    root = tmp_path_factory.mktemp("preset_csvs")
    outdirs = {}
    for name, overrides in PRESET_OVERRIDES.items():
        dump = _cli("presets", "--dump", name)
        assert dump.returncode == 0, dump.stderr
        cfg_path = root / f"{name}.json"
        cfg_path.write_text(dump.stdout)
        outdir = root / name
        cmd = ["run", str(cfg_path), "-o", str(outdir)]
        for item in overrides:
            cmd += ["--set", item]
        res = _cli(*cmd)
        assert res.returncode == 0, f"{name}: {res.stderr}"
        outdirs[name] = outdir
    # sanity: the config echoed into the manifest carries the overrides
    manifest = json.loads((outdirs["fig6"] / "manifest.json").read_text())
    assert manifest["config"]["shots"] == 2000
    return outdirs
