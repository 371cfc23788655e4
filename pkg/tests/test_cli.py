import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from iongates.cli import COMMANDS, main, resolve_config, stage_seeds, ConfigError

# small but complete runs of every command
QUICK = {
    "ms-scan": ["grid1=[0, 2e-4, 5]", "grid2=[8e3, 12e3, 3]"],
    "ms-parity": [],
    "spectrum": ["detunings=[-1.5e6, 1.5e6, 31]", "realizations=4"],
    "ramsey": ["times=[1e-3, 20e-3, 8]", "realizations=100"],
    "mfdd": ["times=[1e-3, 16e-3, 8]", "realizations=100"],
    "echo": ["times=[4e-3, 60e-3, 8]", "realizations=100"],
    "address": ["points=21", "shots=50", "rabi_jitter=0.01"],
    "readout-sim": ["shots=2000"],
    "freq-table": ['drift={"points": [[0, 0], [180, 3000]], "max_curvature": 0.1, "at": 90}'],
    "calibrate-lightshift": ["times=[0, 3e-4, 21]", "deltas=[-50e3, 50e3, 41]"],
}


def invoke(command, out, sets=(), extra=()):
    argv = [command, "--out", str(out), "--seed", "5"]
    for s in sets:
        argv += ["--set", s]
    return main(argv + list(extra))


def csv_bytes(path: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(path.glob("*.csv"))}


def summary(path: Path) -> dict:
    return json.loads((path / "run.json").read_text())


@pytest.mark.parametrize("command", sorted(QUICK))
def test_command_runs_and_repeats(command, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert invoke(command, a, QUICK[command]) == 0
    assert invoke(command, b, QUICK[command]) == 0
    run = summary(a)
    assert run["status"] == "ok" and run["command"] == command and run["seed"] == 5
    files = csv_bytes(a)
    assert files and set(run["outputs"]) >= set(files)
    assert files == csv_bytes(b)


def test_readout_fit_from_simulated_histogram(tmp_path):
    assert invoke("readout-sim", tmp_path / "sim") == 0
    hist = tmp_path / "sim" / "histogram.csv"
    assert invoke("readout-fit", tmp_path / "fit", [f'histogram="{hist}"']) == 0
    p = np.array(summary(tmp_path / "fit")["results"]["p"])
    assert np.allclose(p, [0.25, 0.5, 0.25], atol=0.03)


def test_readout_fit_with_calibration(tmp_path):
    invoke("readout-sim", tmp_path / "dark", ["populations=[1, 0, 0]"])
    invoke("readout-sim", tmp_path / "bright", ["populations=[0, 0, 1]"])
    invoke("readout-sim", tmp_path / "mix")
    cal = {"dark": str(tmp_path / "dark" / "histogram.csv"),
           "bright": str(tmp_path / "bright" / "histogram.csv")}
    sets = [f'histogram="{tmp_path / "mix" / "histogram.csv"}"',
            f"calibration={json.dumps(cal)}"]
    assert invoke("readout-fit", tmp_path / "fit", sets) == 0
    model = summary(tmp_path / "fit")["results"]["model"]
    assert model["lambda_bright"] == pytest.approx(30, abs=0.5)


def test_parity_exact_fidelity(tmp_path):
    assert invoke("ms-parity", tmp_path) == 0
    res = summary(tmp_path)["results"]
    assert res["fidelity"] == pytest.approx(1.0, abs=1e-4)
    assert res["bell_fidelity_exact"] == pytest.approx(1.0, abs=1e-4)
    assert res["t_gate"] == pytest.approx(95.238e-6, rel=1e-4)


def test_scan_normalisation(tmp_path):
    assert invoke("ms-scan", tmp_path, QUICK["ms-scan"]) == 0
    assert summary(tmp_path)["results"]["normalisation_error"] < 1e-6


def test_thread_count_does_not_change_output(tmp_path):
    invoke("ms-scan", tmp_path / "one", QUICK["ms-scan"] + ["shots=100"])
    invoke("ms-scan", tmp_path / "four", QUICK["ms-scan"] + ["shots=100"],
           ["--threads", "4"])
    assert csv_bytes(tmp_path / "one") == csv_bytes(tmp_path / "four")


def test_snapshot_replays_run(tmp_path):
    assert invoke("ramsey", tmp_path / "a", QUICK["ramsey"]) == 0
    snap = tmp_path / "a" / "config.snapshot.json"
    assert main(["ramsey", "--config", str(snap), "--out", str(tmp_path / "b")]) == 0
    assert csv_bytes(tmp_path / "a") == csv_bytes(tmp_path / "b")
    assert json.loads(snap.read_text()) == \
        json.loads((tmp_path / "b" / "config.snapshot.json").read_text())


def test_seed_changes_sampled_output(tmp_path):
    invoke("readout-sim", tmp_path / "a")
    main(["readout-sim", "--out", str(tmp_path / "b"), "--seed", "6"])
    assert csv_bytes(tmp_path / "a") != csv_bytes(tmp_path / "b")


def test_stage_seeds_are_distinct():
    s = stage_seeds(5)
    assert len(set(s)) == len(s) and s == stage_seeds(5)


@pytest.mark.parametrize("sets", [["no_such_key=1"], ["shots=\"many\""],
                                  ["laser.bogus=2"], ["grid1=[0, 1e-4, 3"]])
def test_config_errors_exit_2(sets, tmp_path, capsys):
    command = "ramsey" if sets[0].startswith("laser") else "ms-scan"
    assert invoke(command, tmp_path, sets) == 2
    assert "config error" in capsys.readouterr().err


def test_config_error_names_field():
    with pytest.raises(ConfigError, match="laser.bogus"):
        resolve_config("ramsey", overrides=["laser.bogus=2"])


def test_missing_config_file(tmp_path):
    assert main(["echo", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 2


def test_config_for_other_command(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "echo"}))
    assert main(["ramsey", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_cutoff_is_flagged(tmp_path):
    code = invoke("ms-scan", tmp_path, ["grid1=[0, 2e-4, 3]", "grid2=[0.5e3, 1e3, 2]"])
    assert code == 3
    run = summary(tmp_path)
    assert run["status"] == "flagged" and "does not fit n_max" in run["flags"][0]


def test_low_confidence_readout_is_flagged(tmp_path):
    sets = ["lambda_bright=3"]
    invoke("readout-sim", tmp_path / "sim", sets)
    hist = tmp_path / "sim" / "histogram.csv"
    assert invoke("readout-fit", tmp_path / "fit", sets + [f'histogram="{hist}"']) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "iongates", "freq-table", "--out",
                           str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].split() == ["path", "sideband", "offset", "/", "MHz"]
    rows = (tmp_path / "table.csv").read_text().splitlines()
    assert rows[0] == "path,sideband,offset"


def test_every_command_is_covered():
    assert set(QUICK) | {"readout-fit"} == set(COMMANDS)
