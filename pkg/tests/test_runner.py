import json
from pathlib import Path

import pytest

from entropywalks import errors
from entropywalks.cli import main as cli_main
from entropywalks.runner import (
    ExperimentConfig,
    config_from_json,
    emit_plotdata,
    load_config,
    parallel_map,
    run,
)


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_config_requires_seed(tmp_path):
    p = _write(tmp_path, "c.json", {"kind": "certify",
                                    "input": {"generator": "uniform", "n": 3, "k": 2}})
    with pytest.raises(errors.ConfigParseError):
        load_config(p)


def test_config_parse_error_carries_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"kind": "certify",\n  "oops"')
    with pytest.raises(errors.ConfigParseError) as exc:
        load_config(p)
    assert "line" in str(exc.value) and "column" in str(exc.value)


def test_missing_input_file(tmp_path):
    cfg = ExperimentConfig(kind="certify", input=str(tmp_path / "nope.json"),
                           params={}, seed=1, output_dir=str(tmp_path / "runs"))
    with pytest.raises(errors.InputNotFound):
        run(cfg)


def test_certify_run_and_determinism(tmp_path):
    base = {
        "kind": "certify",
        "input": {"generator": "uniform", "n": 3, "k": 2},
        "params": {"alpha": 1.0, "mesh": 48},
        "seed": 11,
    }
    r1 = run(config_from_json(dict(base, output_dir=str(tmp_path / "runs_a"))))
    r2 = run(config_from_json(dict(base, output_dir=str(tmp_path / "runs_b"))))
    assert r1.summary["verdict"] == "certified-exact"
    c1 = Path(r1.table_paths["certify"]).read_bytes()
    c2 = Path(r2.table_paths["certify"]).read_bytes()
    assert r1.table_paths["certify"] != r2.table_paths["certify"]
    assert c1 == c2
    assert (r1.out_dir / "manifest.json").exists()
    assert (r1.out_dir / "summary.json").exists()


def test_contraction_run_emits_schema(tmp_path):
    cfg = config_from_json({
        "kind": "contraction",
        "input": {"generator": "r_fold_uniform", "n": 4, "k": 2, "r": 2},
        "params": {"alpha": 0.5, "ells": [2], "trials": 128},
        "seed": 3,
        "output_dir": str(tmp_path / "runs"),
    })
    rep = run(cfg)
    assert rep.summary["ok"]
    lines = Path(rep.table_paths["contraction"]).read_text().splitlines()
    assert lines[1] == "alpha,ell,measured,kappa,margin"
    paths = emit_plotdata(rep)
    assert any("plotdata_contraction" in p for p in paths)
    head = Path(paths[0]).read_text().splitlines()[0]
    assert head.startswith("# columns:")


def test_scale_run_columns(tmp_path):
    cfg = config_from_json({
        "kind": "scale",
        "input": {"generator": "curie_weiss", "n": 8, "delta": 0.5},
        "params": {"sizes": [8], "delta": 0.5, "walk_runs": 0},
        "seed": 5,
        "output_dir": str(tmp_path / "runs"),
    })
    rep = run(cfg)
    lines = Path(rep.table_paths["scale"]).read_text().splitlines()
    assert lines[1].split(",")[:4] == ["n", "delta", "gap", "tmix_exact"]


def test_scale_empty_sizes(tmp_path):
    cfg = config_from_json({
        "kind": "scale", "input": {"generator": "curie_weiss", "n": 8, "delta": 0.5},
        "params": {"sizes": [], "delta": 0.5}, "seed": 5,
        "output_dir": str(tmp_path / "runs"),
    })
    rep = run(cfg)
    lines = Path(rep.table_paths["scale"]).read_text().splitlines()
    assert len(lines) == 2  # comment + header only


def test_walk_run_writes_trajectory(tmp_path):
    cfg = config_from_json({
        "kind": "walk",
        "input": {"generator": "uniform", "n": 4, "k": 2},
        "params": {"ell": 1, "steps": 200, "thin": 10},
        "seed": 9,
        "output_dir": str(tmp_path / "runs"),
    })
    rep = run(cfg)
    lines = Path(rep.summary["trajectory"]).read_text().splitlines()
    assert lines[0] == "step,state_hex"
    assert len(lines) == 22


def test_cli_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, "good.json", {
        "kind": "certify", "input": {"generator": "uniform", "n": 3, "k": 2},
        "params": {"alpha": 1.0, "mesh": 32}, "seed": 1,
        "output_dir": str(tmp_path / "runs")})
    assert cli_main(["certify", "--config", str(good)]) == 0
    falsify = _write(tmp_path, "fals.json", {
        "kind": "certify",
        "input": {"generator": "r_fold_uniform", "n": 4, "k": 2, "r": 2},
        "params": {"alpha": 1.0, "mesh": 32}, "seed": 1,
        "output_dir": str(tmp_path / "runs")})
    assert cli_main(["certify", "--config", str(falsify)]) == 1
    bad = tmp_path / "broken.json"
    bad.write_text("{nope")
    assert cli_main(["certify", "--config", str(bad)]) == 2


def test_cli_witness_file_on_falsification(tmp_path):
    cfg = _write(tmp_path, "f.json", {
        "kind": "certify",
        "input": {"generator": "r_fold_uniform", "n": 4, "k": 2, "r": 2},
        "params": {"alpha": 1.0, "mesh": 32}, "seed": 1,
        "output_dir": str(tmp_path / "runs")})
    assert cli_main(["certify", "--config", str(cfg)]) == 1
    wits = list((tmp_path / "runs").glob("*/witness.json"))
    assert wits, "falsification must persist a witness file"
    obj = json.loads(wits[0].read_text())
    assert "q" in obj or "z" in obj


def test_exchange_run(tmp_path):
    cfg = config_from_json({
        "kind": "exchange",
        "input": {"generator": "curie_weiss", "n": 6, "delta": 0.5},
        "params": {}, "seed": 2, "output_dir": str(tmp_path / "runs")})
    rep = run(cfg)
    assert rep.summary["ok"]


def test_mlsi_and_mix_runs(tmp_path):
    cfg = config_from_json({
        "kind": "mlsi",
        "input": {"generator": "rank_one", "u": [0.4, 0.3], "h": [0.1, -0.2]},
        "params": {"trials": 96}, "seed": 4, "output_dir": str(tmp_path / "runs")})
    rep = run(cfg)
    assert rep.summary["ok"]
    assert rep.summary["upper"] >= rep.summary["theory_lower"] - 1e-8
    cfg = config_from_json({
        "kind": "mix",
        "input": {"generator": "curie_weiss", "n": 6, "delta": 0.5},
        "params": {"epsilon": 0.25}, "seed": 4,
        "output_dir": str(tmp_path / "runs")})
    rep = run(cfg)
    assert rep.summary["t_mix"] <= rep.summary["mlsi_bound"]


def test_parallel_map_respects_env(monkeypatch):
    monkeypatch.setenv("ENTROPYWALKS_THREADS", "4")
    out = parallel_map(lambda x: x * x, range(10))
    assert out == [x * x for x in range(10)]
    monkeypatch.setenv("ENTROPYWALKS_THREADS", "1")
    assert parallel_map(lambda x: -x, [3, 1]) == [-3, -1]
