import csv
import json
import subprocess
import sys

import pytest

from spinann.cli import main

SMALL = {
    "network": {"epochs": 30},
    "data": {"train_per_class": 8, "eval_per_class": 2},
    "variation": {"trials": 5},
    "simulation": {
        "sweep_length": 120e-9,
        "sweep_width": 20e-9,
        "sweep_j": [0.0, 1e11],
        "sweep_duration": 0.2e-9,
        "sweep_transient": 0.05e-9,
        "relax_time": 0.3e-9,
    },
}


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "small.json"
    p.write_text(json.dumps(SMALL))
    return str(p)


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, small_config):
    out = tmp_path_factory.mktemp("run")
    assert main(["train", "--config", small_config, "--out", str(out)]) == 0
    return out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_train_outputs(trained_dir, small_config):
    m = manifest(trained_dir)
    assert m["command"] == "train" and m["seed"] == 0
    assert {"model.json", "model_float.json", "loss.csv", "train_summary.json"} <= set(m["outputs"])
    from spinann.config import file_digest

    assert m["config_hash"] == file_digest(small_config)
    s = json.loads((trained_dir / "train_summary.json").read_text())
    assert s["eval_size"] == 52 and s["train_size"] == 208


def test_deploy_and_gamma(trained_dir, small_config):
    assert main(["deploy", "--config", small_config, "--out", str(trained_dir), "--dump-gamma"]) == 0
    s = json.loads((trained_dir / "deploy_summary.json").read_text())
    assert s["max_gamma"] <= 0.07
    rows = list(csv.DictReader(open(trained_dir / "gamma.csv")))
    assert len(rows) == 20 + 26
    assert (trained_dir / "layer0_G_pos.csv").exists() and (trained_dir / "layer1_dummy.csv").exists()


def test_infer(trained_dir, small_config):
    assert main(["infer", "--config", small_config, "--out", str(trained_dir)]) == 0
    s = json.loads((trained_dir / "infer_summary.json").read_text())
    assert 0 <= s["hardware_accuracy"] <= 1
    e = json.loads((trained_dir / "energy_inference.json").read_text())
    assert e["inferences"] == 52


def test_montecarlo_seed_deterministic(trained_dir, small_config):
    texts = []
    for _ in range(2):
        assert main(["montecarlo", "--config", small_config, "--out", str(trained_dir), "--seed", "7"]) == 0
        texts.append((trained_dir / "montecarlo.json").read_bytes())
    assert texts[0] == texts[1]
    assert json.loads(texts[0])["trials"] == 5 and manifest(trained_dir)["seed"] == 7


def test_energy_report(tmp_path):
    assert main(["energy-report", "--out", str(tmp_path)]) == 0
    r = json.loads((tmp_path / "energy_report.json").read_text())
    assert r["write_fJ"] == pytest.approx(0.17, rel=0.03)
    assert r["reset_fJ"] == pytest.approx(0.007, rel=0.03)
    assert r["total_fJ"] == pytest.approx(0.32, rel=0.03)
    assert r["synapse_power_ratio"] == pytest.approx(25.0)


def test_dw_sweep_schema(tmp_path, small_config):
    assert main(["dw-sweep", "--config", small_config, "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "velocity_sweep.csv")))
    assert list(rows[0]) == ["j_A_per_m2", "v_mps"]
    assert float(rows[0]["v_mps"]) == 0.0 and float(rows[1]["v_mps"]) > 0


def test_fit_mtj_and_transfer(tmp_path):
    assert main(["fit-mtj", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "mtj_model.json").read_text())
    assert d["synapse"]["R_min_ohm"] == pytest.approx(20e3, rel=1e-6)
    assert main(["transfer-function", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "transfer_summary.json").read_text())["central_r2"] >= 0.98


def test_gen_data(tmp_path, small_config):
    assert main(["gen-data", "--config", small_config, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "eval" / "labels.csv").read_text().count("\n") == 53


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"material": {"Ms": -5}}))
    assert main(["energy-report", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["energy-report", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
    assert not (tmp_path / "manifest.json").exists()


def test_stage_error_exit_code(tmp_path, capsys):
    assert main(["deploy", "--out", str(tmp_path)]) == 3
    assert "[cli]" in capsys.readouterr().err
    assert not (tmp_path / "manifest.json").exists()


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_console_script_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "spinann.cli", "energy-report", "--out", str(tmp_path)], capture_output=True)
    assert r.returncode == 0 and (tmp_path / "manifest.json").exists()
