import json
import os

import numpy as np
import pandas as pd
import pytest

import percolation
import zxgraph
from circuit import BrickworkCircuit, GateKind, ModelParams, sample_circuit
from harness import (EXIT_CONFIG, EXIT_OK, ConfigError, ReplayMismatch, i2_boundary_collapses, load_config, main,
                     replay, run_experiment, selftest)
from models import record_run, runs_for_hash
from tasks import TaskRunner
from utils import OutputWriter, config_hash, read_csv_checked, read_json, realization_seed


def _digests(manifest, skip=("manifest.json",)):
    return {o["path"]: o["sha256"] for o in manifest.outputs if o["path"] not in skip}


def test_load_config_applies_overrides(write_config):
    cfg = load_config(write_config(), {"master_seed": 11, "workers": None})
    assert cfg.master_seed == 11
    assert cfg.workers >= 1
    assert cfg.p_grid == [0.1, 0.5, 0.9]


def test_load_config_sorts_and_dedupes(write_config):
    cfg = load_config(write_config(p_grid=[0.5, 0.1, 0.5], n_qubits=[12, 6]))
    assert cfg.p_grid == [0.1, 0.5]
    assert cfg.n_qubits == [6, 12]


@pytest.mark.parametrize("fields,needle", [
    ({"n_qubits": [8]}, "n_qubits"),
    ({"n_qubits": [5]}, "n_qubits"),
    ({"p_grid": [1.5]}, "p_grid"),
    ({"n_realizations": 1}, "n_realizations"),
    ({"colour": "blue"}, "colour"),
    ({"experiment": "tomography"}, "experiment"),
])
def test_load_config_names_bad_field(write_config, fields, needle):
    with pytest.raises(ConfigError, match=needle):
        load_config(write_config(**fields))


def test_non_thirds_sizes_are_fine_for_percolation(write_config):
    cfg = load_config(write_config(experiment="perc_scan", n_qubits=[4, 8]))
    assert cfg.n_qubits == [4, 8]


def test_load_config_unreadable(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    with pytest.raises(ConfigError):
        load_config(None)


def test_config_hash_ignores_runtime_fields(write_config, tmp_path):
    path = write_config()
    a = load_config(path, {"workers": 1})
    b = load_config(path, {"workers": 4, "output_dir": str(tmp_path / "elsewhere")})
    c = load_config(path, {"master_seed": 8})
    assert a.config_hash == b.config_hash
    assert a.config_hash != c.config_hash
    assert a.as_experiment("perc_scan").config_hash != a.config_hash


def test_realization_seeds():
    assert realization_seed(7, "mi_scan:mi", 0) == realization_seed(7, "mi_scan:mi", 0)
    seeds = {realization_seed(7, "mi_scan:mi", i) for i in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2 ** 63 for s in seeds)


def test_mi_scan_writes_reproducible_outputs(write_config, tmp_path):
    cfg = load_config(write_config())
    first = run_experiment(cfg, runner=map)
    names = {o["path"] for o in first.outputs}
    assert names == {"mi_scan.csv", "mi_crossing.json"}
    frame = pd.read_csv(os.path.join(cfg.output_dir, "mi_scan.csv"))
    assert list(frame.columns) == ["p", "r", "N", "M", "I2", "stderr", "config_hash", "master_seed"]
    assert len(frame) == 3
    assert (frame["M"] == 3).all()
    crossing = read_json(os.path.join(cfg.output_dir, "mi_crossing.json"))
    assert crossing["config_hash"] == cfg.config_hash
    assert crossing["crossings"][0]["crossing"] is None

    again = load_config(write_config(), {"output_dir": str(tmp_path / "again")})
    second = run_experiment(again, runner=map)
    assert _digests(first) == _digests(second)


def test_worker_count_does_not_change_outputs(write_config, tmp_path):
    serial = run_experiment(load_config(write_config()), runner=map)
    pooled = run_experiment(load_config(write_config(), {"output_dir": str(tmp_path / "pool"), "workers": 2}))
    assert _digests(serial) == _digests(pooled)


def test_run_is_recorded_in_ledger(write_config):
    cfg = load_config(write_config())
    manifest = run_experiment(cfg, runner=map)
    runs = runs_for_hash(os.path.join(cfg.output_dir, "runs.db"), cfg.config_hash)
    assert len(runs) == 1
    assert runs[0]["status"] == "success"
    assert runs[0]["master_seed"] == "7"
    assert sorted(o["path"] for o in runs[0]["outputs"]) == sorted(o["path"] for o in manifest.outputs)
    assert read_json(os.path.join(cfg.output_dir, "manifest.json"))["status"] == "success"


def test_failed_run_removes_partial_outputs(write_config):
    cfg = load_config(write_config(experiment="phase_diagram"))

    def flaky(fn, jobs):
        if fn is percolation.sample_realization:
            raise RuntimeError("worker died")
        return map(fn, jobs)

    with pytest.raises(RuntimeError):
        run_experiment(cfg, runner=flaky)
    assert not os.path.exists(os.path.join(cfg.output_dir, "phase_mi.csv"))
    assert not os.path.exists(os.path.join(cfg.output_dir, "manifest.json"))


def test_phase_diagram_and_sample_replay(write_config):
    cfg = load_config(write_config(experiment="phase_diagram"))
    manifest = run_experiment(cfg, runner=map)
    names = {o["path"] for o in manifest.outputs}
    assert {"phase_mi.csv", "mi_boundary.csv", "phase_p_path.csv", "perc_boundary.csv"} <= names
    samples = sorted(n for n in names if n.startswith("sample_"))
    assert len(samples) == 3

    dump = os.path.join(cfg.output_dir, samples[0])
    body = replay(dump, "simplified", cfg.output_dir, cfg)
    assert body["diagram"] == read_json(dump)["simplified"]
    assert os.path.exists(os.path.join(cfg.output_dir, "replay_simplified_events.csv"))

    with pytest.raises(ReplayMismatch):
        replay(dump, "simplified", cfg.output_dir, cfg.as_experiment("mi_scan"))


def test_replay_raw_identity(tmp_path):
    record = tmp_path / "identity.json"
    record.write_text(json.dumps(BrickworkCircuit.uniform(4, 2, GateKind.IDENTITY).to_record()))
    body = replay(str(record), "raw", str(tmp_path / "replay"))
    assert body["stats"]["n_spiders"] == 0
    assert body["stats"]["n_wires"] == 4
    assert not os.path.exists(tmp_path / "replay" / "replay_raw_events.csv")


def test_replay_stages_match_library(tmp_path):
    c = sample_circuit(ModelParams(0.4, 0.5, 6, 3, seed=12))
    record = tmp_path / "record.json"
    record.write_text(json.dumps(c.to_record()))
    graphlike = zxgraph.to_graph_like(zxgraph.diagram_from_circuit(c))
    simplified, _ = zxgraph.clifford_simplify(graphlike.copy())

    assert replay(str(record), "graphlike", str(tmp_path))["diagram"] == zxgraph.dump_diagram(graphlike)
    assert replay(str(record), "simplified", str(tmp_path))["diagram"] == zxgraph.dump_diagram(simplified)
    events = pd.read_csv(tmp_path / "replay_simplified_events.csv")
    assert {"step", "rule", "distance"} <= set(events.columns)


def test_replay_unknown_stage(tmp_path):
    with pytest.raises(ReplayMismatch):
        replay(str(tmp_path / "record.json"), "reduced", str(tmp_path))


def test_main_exit_codes(write_config, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["mi-scan", "--config", write_config(n_qubits=[8])]) == EXIT_CONFIG
    assert main(["replay", "--record", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"n_qubits": 4, "depth": 1, "bricks": [[0, 1, "cnot", "left"]]}))
    assert main(["replay", "--record", str(broken), "--out", str(tmp_path / "r")]) == EXIT_CONFIG
    assert main(["mi-scan", "--config", write_config(), "--seed", "3"]) == EXIT_OK
    assert os.path.exists(tmp_path / "out" / "mi_scan.csv")


def test_selftest(tmp_path):
    assert selftest(5, {"stabilizer": 5, "zx": 5}, str(tmp_path)) == []
    report = read_json(str(tmp_path / "selftest.json"))
    assert report["passed"] is True


def test_output_writer_round_trip(tmp_path):
    writer = OutputWriter(str(tmp_path), "abc123", 2 ** 64 - 1)
    writer.write_csv(pd.DataFrame({"p": [0.1, 0.2], "value": [1.0, 2.0]}), "table.csv")
    writer.write_json({"answer": 42}, "report.json")

    frame = read_csv_checked(writer.path("table.csv"), "abc123")
    assert list(frame.columns) == ["p", "value"]
    assert read_csv_checked(writer.path("table.csv"), "other") is None
    assert read_csv_checked(writer.path("nothing.csv"), "abc123") is None
    assert read_json(writer.path("report.json"))["master_seed"] == 2 ** 64 - 1

    writer.cleanup()
    assert os.listdir(tmp_path) == []


def test_ledger(tmp_path):
    db = str(tmp_path / "runs.db")
    manifest = {"experiment": "slc", "config_hash": "f" * 64, "master_seed": 2 ** 63, "code_version": "0.1.0",
                "status": "success", "started_at": "2024-06-11T10:00:00", "finished_at": "2024-06-11T10:05:00",
                "outputs": [{"path": "slc.csv", "rows": 12, "sha256": "0" * 64}]}
    first = record_run(db, manifest)
    second = record_run(db, manifest)
    assert second > first
    runs = runs_for_hash(db, "f" * 64)
    assert [r["id"] for r in runs] == [first, second]
    assert runs[0]["outputs"] == [{"path": "slc.csv", "rows": 12, "sha256": "0" * 64}]
    assert runs_for_hash(db, config_hash({"other": 1})) == []


def test_task_runner_keeps_order():
    jobs = list(range(-20, 20))
    assert TaskRunner(workers=2)(abs, jobs) == [abs(j) for j in jobs]
    assert TaskRunner(workers=1).map(abs, jobs) == [abs(j) for j in jobs]


def test_task_runner_reraises():
    with pytest.raises(TypeError):
        TaskRunner(workers=1)(abs, ["x"])


@pytest.mark.slow
def test_collapse_and_boundary_fit_reuse(write_config):
    path = write_config(experiment="mi_scan", p_grid=[0.05, 0.1, 0.2, 0.3, 0.5], r_grid=[0.2, 0.5, 0.8],
                        n_qubits=[6, 12], n_realizations=20)
    run_experiment(load_config(path), runner=map)
    cfg = load_config(path, {"experiment": "collapse"})
    manifest = run_experiment(cfg, runner=map)
    assert {"collapse_scores.csv", "collapse_summary.json"} <= {o["path"] for o in manifest.outputs}
    scores = pd.read_csv(os.path.join(cfg.output_dir, "collapse_scores.csv"))
    assert set(scores["source"]) <= {"I2", "P_path"}

    fit = run_experiment(load_config(path, {"experiment": "boundary_fit"}), runner=map)
    report = read_json(os.path.join(cfg.output_dir, "boundary_fit.json"))
    assert "status" in report
    assert fit.status == "success"


def test_error_tracker_counts_per_experiment(caplog):
    from logging_config import ErrorTracker

    tracker = ErrorTracker()
    for _ in range(3):
        tracker.log_error(ValueError("bad seed"), "sample", "slc")
    tracker.log_error(KeyError("p"), "table", None)
    assert tracker.summary() == {"slc:ValueError": 3, "-:KeyError": 1}
    assert "seen 3x" in caplog.text


def test_context_logger_appends_context(caplog):
    import logging

    from logging_config import ContextLogger

    caplog.set_level(logging.DEBUG, logger="harness.test")
    log = ContextLogger("harness.test", {"experiment": "mi_scan"}).bind(N=12)
    log.info("point done")
    assert "point done | experiment=mi_scan N=12" in caplog.text


def test_boundary_collapse_at_fixed_p_varies_r():
    rows = [{"p": 0.5, "r": r, "N": n, "I2": -np.exp(-r * n ** 2 / 20.0)}
            for n in (6, 12, 24) for r in np.linspace(0.0, 0.05, 26)]
    out = i2_boundary_collapses(pd.DataFrame(rows), [1.75, 2.0])
    assert {(cut, value) for cut, value, *_ in out} == {("p", 0.5)}
    scores = {d: result.score for _, _, d, _, result in out}
    assert scores[2.0] < scores[1.75]


def test_boundary_collapse_runs_without_a_crossing(write_config):
    cfg = load_config(write_config(experiment="collapse", p_grid=[0.9, 0.95], r_grid=[1.0], n_qubits=[6, 12]))
    mi = pd.DataFrame([{"p": p, "r": 1.0, "N": n, "M": 10, "I2": -np.exp(-(1.0 - p) * n ** 1.75), "stderr": 0.01}
                       for n in (6, 12) for p in np.linspace(0.9, 0.99, 46)])
    perc = pd.DataFrame([{"p": p, "r": 1.0, "N": 6, "M": 10, "P_path": 1.0, "stderr": 0.0} for p in (0.9, 0.95)])
    OutputWriter(cfg.output_dir, cfg.as_experiment("mi_scan").config_hash, cfg.master_seed).write_csv(mi, "mi_scan.csv")
    OutputWriter(cfg.output_dir, cfg.as_experiment("perc_scan").config_hash, cfg.master_seed).write_csv(perc, "p_path.csv")

    run_experiment(cfg, runner=map)
    scores = pd.read_csv(os.path.join(cfg.output_dir, "collapse_scores.csv"))
    boundary = scores[scores["mode"] == "boundary"]
    assert set(boundary["cut"]) == {"r"}
    assert sorted(boundary["exponent"]) == [1.75, 2.0]
    assert (scores["mode"] == "transition").sum() == 0
    best = read_json(os.path.join(cfg.output_dir, "collapse_summary.json"))["best"]
    assert [(b["mode"], b["exponent"]) for b in best] == [("boundary", 1.75)]
