import json
import os
import subprocess
from pathlib import Path

import jsonschema
import pytest

CLI = os.environ.get("SPIKENC_CLI", "spikenc")
SCHEMA = Path(__file__).resolve().parents[2] / "schemas" / "evaluation_report.schema.json"


def run(*args, check=True):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"exit {proc.returncode}: {proc.stderr}")
    return proc


def test_encode_reports_afr(tmp_path):
    out = run("encode", "--scheme", "ttfs-linear", "--steps", 50, "--samples-per-class", 4,
              "synthetic", tmp_path)
    assert "AFR=2.000%" in out.stdout
    assert len(list(tmp_path.glob("*.spk"))) == 12
    meta = json.loads((tmp_path / "window_00000.json").read_text())
    assert meta["encoding"]["scheme"] == "ttfs-linear"
    assert "version" in meta


def test_encode_is_reproducible(tmp_path):
    for name in ("a", "b"):
        run("encode", "--scheme", "rate-beta", "--seed", 7, "--steps", 5,
            "--samples-per-class", 3, "--out", tmp_path / name)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_unknown_scheme_is_usage_error(tmp_path):
    assert run("encode", "--scheme", "burst", "--out", tmp_path, check=False).returncode == 2
    assert run("evaluate", "--schemes", "binary6,nope", check=False).returncode == 2
    assert run("encode", "--no-such-flag", check=False).returncode == 2


def test_evaluate_json_matches_schema(tmp_path):
    report = tmp_path / "r.json"
    run("evaluate", "--schemes", "binary6,binary10,ttfs-linear", "--steps", 5, "--epochs", 2,
        "--hidden", "16", "--noise-seeds", 2, "--samples-per-class", 10, "--report", "json",
        "--out", report)
    doc = json.loads(report.read_text())
    jsonschema.validate(doc, json.loads(SCHEMA.read_text()))
    rows = {r["scheme"]: r for r in doc["rows"]}
    assert rows["binary10"]["snr_db"] > rows["binary6"]["snr_db"]
    assert [d["p"] for d in rows["binary6"]["robustness"]] == [0.001, 0.01, 0.1]
    assert rows["ttfs-linear"]["dynamic_energy_mj"] == "not measured"
    assert doc["version"]


def test_evaluate_all_variants_without_training(tmp_path):
    report = tmp_path / "r.csv"
    run("evaluate", "--steps", 5, "--no-train", "--samples-per-class", 5, "--report", "csv",
        "--out", report)
    lines = [l for l in report.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 1 + 8
    assert lines[0].startswith("scheme,tensor_shape")


def test_evaluate_empty_dataset(tmp_path):
    proc = run("evaluate", "--samples-per-class", 0, "--no-train", check=False)
    assert proc.returncode == 3
    assert "EmptyDataset" in proc.stderr


def test_train_infer_perturb(tmp_path):
    model = tmp_path / "m.cuba"
    run("train", "--scheme", "binary6", "--epochs", 15, "--lr", 0.01, "--batch", 8,
        "--hidden", "32,16", "--samples-per-class", 10, "--out", model)
    assert (tmp_path / "m.cuba.epochs.csv").read_text().startswith("epoch,loss")
    spikes = tmp_path / "spk"
    run("encode", "--scheme", "binary6", "--samples-per-class", 10, "--out", spikes)
    out = run("infer", "--checkpoint", model, spikes / "window_00000.spk").stdout
    pred = json.loads(out.splitlines()[0])
    assert pred["class"] == pred["label"]
    assert len(pred["rates"]) == 3

    same = tmp_path / "p0.spk"
    run("perturb", spikes / "window_00000.spk", same, "--noise-p", 0, "--seed", 4)
    assert same.read_bytes() == (spikes / "window_00000.spk").read_bytes()

    run("encode", "--scheme", "ttfs-linear", "--steps", 5, "--samples-per-class", 1,
        "--out", tmp_path / "ttfs")
    bad = run("infer", "--checkpoint", model, tmp_path / "ttfs" / "window_00000.spk", check=False)
    assert bad.returncode == 3
    assert "Shape" in bad.stderr
