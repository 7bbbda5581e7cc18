"""End-to-end command-line behavior: artifacts, determinism, exit codes."""

import json

import pytest

from hetnetsim import cli


def run(argv):
    return cli.main(argv)


def test_deploy_writes_all_artifacts(tmp_path, capsys):
    out = tmp_path / "dep"
    code = run([
        "deploy", "--n", "25", "--beta", "1.5", "--seed", "3",
        "--out", str(out), "--emit", "json,csv,pbm,png",
    ])
    assert code == 0
    for name in (
        "instance.json",
        "regions.json",
        "primary_nodes.csv",
        "secondary_nodes.csv",
        "regions.pbm",
        "deployment.png",
    ):
        assert (out / name).exists(), name
    text = capsys.readouterr().out
    assert "deployed n=" in text
    payload = json.loads((out / "instance.json").read_text())
    assert payload["schema_version"] == 1


def test_deploy_respects_emit_subset(tmp_path):
    out = tmp_path / "dep"
    run(["deploy", "--n", "25", "--beta", "1.5", "--out", str(out), "--emit", "json"])
    assert (out / "instance.json").exists()
    assert not (out / "deployment.png").exists()
    assert not (out / "primary_nodes.csv").exists()


def test_simulate_runs_are_byte_identical(tmp_path):
    args = [
        "simulate", "--n", "25", "--beta", "1.5", "--seed", "7",
        "--trials", "2", "--frames", "2", "--emit", "json,csv,slot-trace",
    ]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    for name in ("report.json", "loads.csv", "trace.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_simulate_report_carries_checks(tmp_path, capsys):
    out = tmp_path / "sim"
    run([
        "simulate", "--n", "25", "--beta", "1.5", "--seed", "7",
        "--trials", "1", "--frames", "1", "--out", str(out), "--emit", "json",
    ])
    text = capsys.readouterr().out
    assert text.count("PASS") >= 6
    payload = json.loads((out / "report.json").read_text())
    assert payload["trials"][0]["checks"]
    assert payload["schema_version"] == 1


def test_simulate_exit_one_on_failed_family(tmp_path):
    # dense unlicensed regime: detoured traffic overshoots the asymptotic
    # loaded-fraction bound at this scale, and the check says so
    code = run([
        "simulate", "--n", "25", "--beta", "3", "--seed", "7",
        "--trials", "1", "--frames", "1", "--out", str(tmp_path), "--emit", "json",
    ])
    assert code == 1


def test_simulate_png_artifacts(tmp_path):
    out = tmp_path / "pngs"
    run([
        "simulate", "--n", "25", "--beta", "1.5", "--seed", "7",
        "--trials", "1", "--frames", "1", "--out", str(out), "--emit", "png",
    ])
    assert (out / "deployment.png").exists()
    assert (out / "loads.png").exists()


def test_sweep_worker_count_is_invisible_in_artifacts(tmp_path):
    base = [
        "sweep", "--n", "25", "--beta", "2", "--seed", "5",
        "--densities", "25,36", "--trials", "2", "--frames", "1",
        "--emit", "json,csv",
    ]
    one, eight = tmp_path / "w1", tmp_path / "w8"
    assert run(base + ["--workers", "1", "--out", str(one)]) == 0
    assert run(base + ["--workers", "8", "--out", str(eight)]) == 0
    for name in ("fit.json", "sweep.csv"):
        assert (one / name).read_bytes() == (eight / name).read_bytes(), name


def test_sweep_fit_png(tmp_path):
    out = tmp_path / "fit"
    code = run([
        "sweep", "--n", "25", "--beta", "2", "--seed", "5",
        "--densities", "25,36,49", "--trials", "2", "--frames", "1",
        "--workers", "1", "--out", str(out), "--emit", "png",
    ])
    assert code == 0
    assert (out / "fit.png").exists()


def test_verify_exits_zero_when_families_hold(tmp_path, capsys):
    code = run([
        "verify", "--n", "25", "--beta", "1.5", "--seed", "2",
        "--trials", "2", "--frames", "1", "--out", str(tmp_path), "--emit", "json",
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert "result: all bound families hold" in text
    assert (tmp_path / "verify.json").exists()


def test_config_file_merges_with_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"n": 30.0, "beta": 2.5}))
    out = tmp_path / "dep"
    code = run([
        "deploy", "--config", str(cfg_path), "--beta", "2.0",
        "--out", str(out), "--emit", "json",
    ])
    assert code == 0
    payload = json.loads((out / "instance.json").read_text())
    assert payload["config"]["n"] == 30.0
    assert payload["config"]["beta"] == 2.0  # flag wins


def test_unknown_config_key_is_a_usage_error(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"n": 30.0, "bandwidth": 2.0}))
    code = run(["deploy", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_invalid_field_value_is_a_usage_error(tmp_path, capsys):
    code = run([
        "deploy", "--n", "25", "--beta", "0.5", "--out", str(tmp_path),
    ])
    assert code == 2
    assert "beta" in capsys.readouterr().err


def test_missing_config_file_is_a_usage_error(tmp_path, capsys):
    code = run([
        "deploy", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path),
    ])
    assert code == 2
    capsys.readouterr()


def test_bad_emit_kind_is_a_usage_error(tmp_path, capsys):
    code = run([
        "deploy", "--n", "25", "--beta", "1.5", "--out", str(tmp_path),
        "--emit", "json,hologram",
    ])
    assert code == 2
    assert "hologram" in capsys.readouterr().err


def test_single_density_sweep_is_a_usage_error(tmp_path, capsys):
    code = run([
        "sweep", "--n", "25", "--beta", "2", "--densities", "25",
        "--trials", "1", "--out", str(tmp_path),
    ])
    assert code == 2
    assert "densities" in capsys.readouterr().err


def test_config_file_must_hold_an_object(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text("[1, 2, 3]")
    code = run(["deploy", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert code == 2
    capsys.readouterr()
