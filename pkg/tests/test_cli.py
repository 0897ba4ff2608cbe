import json
import subprocess
import sys
from pathlib import Path

import pytest

from string_sausage.cli import (
    CSV_HEADER,
    EXIT_CONFIG,
    EXIT_OK,
    main,
    parse_config,
    run_config,
)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, out


def last_json(out):
    return json.loads(out.strip().splitlines()[-1])


def test_survival_subcommand(capsys, tmp_path):
    csv_path = tmp_path / "out.csv"
    code, out = run_cli(
        [
            "survival", "--hard", "--d", "2", "--J", "1", "--nu", "1", "--a", "0.3",
            "--T", "0.5", "--n", "100", "--seed", "7", "--threads", "1",
            "--csv", str(csv_path),
        ],
        capsys,
    )
    assert code == EXIT_OK
    rec = last_json(out)
    assert rec["method"] == "hard_direct"
    assert 0.0 <= rec["p_hat"] <= 1.0
    assert rec["stderr"] >= 0.0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 2


def test_unknown_subcommand_exit_2():
    proc = subprocess.run(
        [sys.executable, "-m", "string_sausage.cli", "frobnicate"],
        capture_output=True,
    )
    assert proc.returncode == 2


def test_missing_seed_exit_2():
    proc = subprocess.run(
        [sys.executable, "-m", "string_sausage.cli", "survival", "--hard"],
        capture_output=True,
    )
    assert proc.returncode == 2


def test_bad_model_params_exit_2(capsys):
    code, _ = run_cli(
        ["survival", "--hard", "--a", "7.0", "--n", "100", "--seed", "1", "--threads", "1"],
        capsys,
    )
    assert code == EXIT_CONFIG


def test_scaling_check_subcommand(capsys):
    code, out = run_cli(
        [
            "scaling-check", "--J", "2", "--nu", "0.25", "--a", "0.2", "--T", "0.5",
            "--n", "100", "--seed", "3", "--threads", "1",
        ],
        capsys,
    )
    assert code == EXIT_OK
    rec = last_json(out)
    assert "original" in rec and "scaled" in rec
    assert isinstance(rec["overlap"], bool)
    assert len(rec["original"]["ci95"]) == 2


def test_simulate_subcommand(capsys, tmp_path):
    out_npz = tmp_path / "trace.npz"
    code, out = run_cli(
        ["simulate", "--d", "2", "--seed", "1", "--out", str(out_npz)], capsys
    )
    assert code == EXIT_OK
    rec = last_json(out)
    assert len(rec["final_com"]) == 2
    assert rec["final_radius"] >= 0
    assert out_npz.exists()


def test_sausage_subcommand(capsys):
    code, out = run_cli(
        ["sausage", "--d", "2", "--seed", "2", "--method", "hit_or_miss", "--n-mc", "5000"],
        capsys,
    )
    assert code == EXIT_OK
    rec = last_json(out)
    assert rec["volume"] > 0


def test_fit_subcommand(capsys, tmp_path):
    data = tmp_path / "fit.csv"
    rows = ["T,neg_log_S"] + [f"{T},{7.0 * T ** 0.5}" for T in (1, 2, 4, 8, 16)]
    data.write_text("\n".join(rows) + "\n")
    code, out = run_cli(["fit", "--input", str(data)], capsys)
    assert code == EXIT_OK
    rec = last_json(out)
    assert abs(rec["gamma_hat"] - 0.5) < 1e-9


def test_fit_bad_columns_exit_2(capsys, tmp_path):
    data = tmp_path / "bad.csv"
    data.write_text("x,y\n1,2\n")
    code, _ = run_cli(["fit", "--input", str(data)], capsys)
    assert code == EXIT_CONFIG


def test_parse_config_flat_and_json(tmp_path):
    flat = tmp_path / "c.cfg"
    flat.write_text("experiment = survival\nseed = 5\nT = [1.0, 2.0]\n# comment\n")
    cfg = parse_config(str(flat))
    assert cfg == {"experiment": "survival", "seed": 5, "T": [1.0, 2.0]}
    js = tmp_path / "c.json"
    js.write_text(json.dumps(cfg))
    assert parse_config(str(js)) == cfg


def test_run_config_sweep_cardinality():
    cfg = {
        "experiment": "survival", "seed": 9, "n_replicas": 100, "threads": 1,
        "T": [0.25, 0.5, 0.75, 1.0], "nu": 0.5,
    }
    rows, summary = run_config(cfg)
    assert len(rows) == 4
    assert summary["n_rows"] == 4


def test_run_config_zero_intensity_all_survive():
    cfg = {"experiment": "survival", "seed": 9, "n_replicas": 100, "threads": 1, "nu": [0.0], "T": [0.5, 1.0]}
    rows, _ = run_config(cfg)
    assert all(r["estimate"] == 1.0 for r in rows)


def test_run_config_requires_seed():
    with pytest.raises(Exception):
        run_config({"experiment": "survival"})


def test_run_twice_identical_csv(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment = survival\nseed = 11\nn_replicas = 100\nthreads = 1\nT = [0.5]\n")
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        code, _ = run_cli(["run", "--config", str(cfg), "--csv", str(path)], capsys)
        assert code == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_run_bad_config_exit_2(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = warp\nseed = 1\n")
    code, _ = run_cli(["run", "--config", str(cfg)], capsys)
    assert code == EXIT_CONFIG
    code, _ = run_cli(["run", "--config", str(tmp_path / "missing.cfg")], capsys)
    assert code == EXIT_CONFIG


def test_quenched_roundtrip_via_env_file(capsys, tmp_path):
    env_file = tmp_path / "env.json"
    code, _ = run_cli(
        [
            "survival", "--hard", "--nu", "0.5", "--T", "0.5", "--n", "100",
            "--seed", "13", "--threads", "1", "--save-env", str(env_file),
        ],
        capsys,
    )
    assert code == EXIT_OK
    assert env_file.exists()
    code, out = run_cli(
        [
            "survival", "--hard", "--nu", "0.5", "--T", "0.5", "--n", "100",
            "--seed", "13", "--threads", "1", "--env", str(env_file),
        ],
        capsys,
    )
    assert code == EXIT_OK
    rec = last_json(out)
    assert rec["method"] == "quenched_hard"
