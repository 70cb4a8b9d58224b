"""
Experiment orchestration and the command-line interface.

Each experiment reads a validated ExperimentConfig, fans realizations out
through a TaskRunner, and writes CSV/JSON artifacts stamped with the config
hash. Seeds are derived from (master_seed, stream tag, point index), so the
worker count never changes a byte of output.
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from importlib import metadata
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

import circuit
import oracle
import percolation
import scaling
import zxgraph
from config import Config, ExperimentConfig, get_config
from logging_config import ContextLogger, error_tracker, log_performance, setup_logging
from models import record_run
from tasks import TaskRunner
from utils import (OutputWriter, config_hash, file_digest, format_point, read_csv_checked, read_json,
                   realization_seed)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3
REPLAY_STAGES = ("raw", "local", "graphlike", "simplified")


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration"""


class ReplayMismatch(ValueError):
    """Replay input does not belong to the current configuration"""


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    master_seed: int
    code_version: str
    started_at: str
    finished_at: Optional[str] = None
    status: str = "running"
    outputs: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def code_version() -> str:
    try:
        return metadata.version("mptzx")
    except metadata.PackageNotFoundError:
        return "unknown"


# configuration

def _describe_validation(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        where = ".".join(str(x) for x in e["loc"]) or "config"
        parts.append(f"{where}: {e['msg']}")
    return "; ".join(parts)


def load_config(path: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Parse the JSON config file and apply non-empty CLI overrides."""
    if not path:
        raise ConfigError("--config is required for this command")
    try:
        with open(path, encoding="utf8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "experiment" and raw.get("experiment") not in (None, value):
            logger.warning(f"Config names experiment {raw['experiment']!r}; running {value!r}")
        raw[key] = value
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(_describe_validation(e)) from e


def _stream(cfg: ExperimentConfig, tag: str, index: int) -> np.random.Generator:
    return np.random.default_rng(realization_seed(cfg.master_seed, f"{cfg.experiment}:{tag}", index))


def _params(cfg: ExperimentConfig, p: float, r: float, n: int) -> circuit.ModelParams:
    return circuit.ModelParams(p, r, n, cfg.depth_for(n), cfg.initial_state)


def _grid(cfg: ExperimentConfig) -> List[circuit.ModelParams]:
    return [_params(cfg, p, r, n) for r in cfg.r_grid
            for n in cfg.n_qubits for p in cfg.p_grid]


# data tables

def mi_table(cfg: ExperimentConfig, runner: Callable = map) -> pd.DataFrame:
    """I2 mean and standard error for every (r, N, p) of the grid."""
    log = ContextLogger(__name__, {"experiment": cfg.experiment, "seed": cfg.master_seed})
    rows = []
    for index, point in enumerate(_grid(cfg)):
        est = circuit.measure_I2_ensemble(point, cfg.n_realizations, _stream(cfg, "mi", index), runner)
        log.bind(p=point.p, r=point.r, N=point.n_qubits).debug(f"I2={est.mean:.4f}±{est.stderr:.4f}")
        rows.append({"p": point.p, "r": point.r, "N": point.n_qubits, "M": est.n_realizations,
                     "I2": est.mean, "stderr": est.stderr})
    return pd.DataFrame(rows, columns=["p", "r", "N", "M", "I2", "stderr"])


def p_path_table(cfg: ExperimentConfig, runner: Callable = map) -> pd.DataFrame:
    return percolation.estimate_p_path(_grid(cfg), cfg.n_realizations, _stream(cfg, "perc", 0), runner,
                                       with_cut=cfg.min_cut)


def _curves(frame: pd.DataFrame, y: str) -> Dict[int, pd.DataFrame]:
    return {int(n): g.rename(columns={"p": "x", y: "y", "stderr": "err"})[["x", "y", "err"]]
            for n, g in frame.groupby("N", sort=True)}


def mi_crossings(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    """Successive-N crossing per r; failures are reported, not raised."""
    out = []
    for r, group in frame.groupby("r", sort=True):
        try:
            est = circuit.find_crossing(_curves(group, "I2"))
            out.append({"r": float(r), "status": "ok", **est.to_dict()})
        except (circuit.NoCrossingError, circuit.InvalidArgument) as e:
            logger.warning(f"No I2 crossing at r={r}: {e}")
            out.append({"r": float(r), "status": str(e), "crossing": None, "error": None, "pairs": []})
    return out


def threshold_fits(cfg: ExperimentConfig, frame: pd.DataFrame) -> List[Dict[str, Any]]:
    """Fermionic fit per (r, N) and the N -> infinity extrapolation per r."""
    out = []
    for r, group in frame.groupby("r", sort=True):
        fits, failures = [], []
        for n, g in group.groupby("N", sort=True):
            try:
                fits.append(scaling.fermionic_fit(g["p"], g["P_path"], g["stderr"], int(n), cfg.nu,
                                                  get_config().MIN_FIT_SIGMA))
            except (scaling.FitUnbounded, scaling.InsufficientData) as e:
                failures.append({"N": int(n), "reason": str(e)})
        entry: Dict[str, Any] = {
            "r": float(r),
            "fits": [f.to_dict() for f in fits],
            "failures": failures,
            "decreasing_with_N": bool(all(a.p_c > b.p_c for a, b in zip(fits, fits[1:]))) if len(fits) > 1 else None,
            "extrapolation": None,
        }
        if len(fits) >= 3:
            try:
                entry["extrapolation"] = scaling.extrapolate_threshold(fits, cfg.nu, cfg.alpha).to_dict()
            except (scaling.FitUnbounded, scaling.InsufficientData, scaling.InvalidArgument) as e:
                entry["extrapolation_error"] = str(e)
        out.append(entry)
    return out


# experiments

def run_mi_scan(cfg: ExperimentConfig, writer: OutputWriter, runner: Callable) -> None:
    frame = mi_table(cfg, runner)
    writer.write_csv(frame, "mi_scan.csv")
    writer.write_json({"crossings": mi_crossings(frame)}, "mi_crossing.json")


def run_perc_scan(cfg: ExperimentConfig, writer: OutputWriter, runner: Callable) -> None:
    frame = p_path_table(cfg, runner)
    writer.write_csv(frame, "p_path.csv")
    thresholds = threshold_fits(cfg, frame)

    collapsed = []
    for entry in thresholds:
        p_c_of_n = {f["n_qubits"]: f["p_c"] for f in entry["fits"]}
        if len(p_c_of_n) < 2:
            continue
        data = frame[(frame["r"] == entry["r"]) & frame["N"].isin(list(p_c_of_n))]
        scaled, result = scaling.collapse_check(data, p_c_of_n, cfg.nu)
        entry["collapse"] = asdict(result)
        collapsed.append(scaled.assign(r=entry["r"]))
    writer.write_json({"thresholds": thresholds}, "perc_threshold.json")
    if collapsed:
        writer.write_csv(pd.concat(collapsed, ignore_index=True)[["r", "N", "x_scaled", "y"]], "perc_collapse.csv")


def _perc_boundary(thresholds: List[Dict[str, Any]]) -> pd.DataFrame:
    rows = []
    for entry in thresholds:
        row = {"r": entry["r"], "p_c": np.nan, "err": np.nan, "method": "none", "status": "no fit"}
        if entry["extrapolation"]:
            ex = entry["extrapolation"]
            row.update(p_c=ex["p_c_infinity"], err=ex["ci_halfwidth"], method="extrapolated", status="ok")
        elif entry["fits"]:
            largest = entry["fits"][-1]
            row.update(p_c=largest["p_c"], err=largest["p_c_err"], method=f"N={largest['n_qubits']}", status="ok")
        rows.append(row)
    return pd.DataFrame(rows, columns=["r", "p_c", "err", "method", "status"])


def mi_boundary(frame: pd.DataFrame) -> pd.DataFrame:
    rows = [{"r": c["r"], "p_c": c["crossing"] if c["crossing"] is not None else np.nan,
             "err": c["error"] if c["error"] is not None else np.nan, "status": c["status"]}
            for c in mi_crossings(frame)]
    return pd.DataFrame(rows, columns=["r", "p_c", "err", "status"])


def sample_point_dumps(cfg: ExperimentConfig, writer: OutputWriter) -> None:
    """Circuit record, raw and simplified diagram for the documented sample points."""
    n = min(cfg.n_qubits)
    for i, (p, r) in enumerate(Config.SAMPLE_POINTS):
        params = _params(cfg, p, r, n).with_seed(realization_seed(cfg.master_seed, f"{cfg.experiment}:sample", i))
        c = circuit.sample_circuit(params)
        raw = zxgraph.diagram_from_circuit(c)
        simplified, events = zxgraph.clifford_simplify(raw.copy())
        writer.write_json({
            "p": p, "r": r, "N": n,
            "record": c.to_record(),
            "raw": zxgraph.dump_diagram(raw),
            "simplified": zxgraph.dump_diagram(simplified),
            "raw_stats": zxgraph.diagram_stats(raw),
            "simplified_stats": zxgraph.diagram_stats(simplified),
            "n_events": len(events),
        }, f"sample_{format_point(p, r)}.json")


def run_phase_diagram(cfg: ExperimentConfig, writer: OutputWriter, runner: Callable) -> None:
    mi = mi_table(cfg, runner)
    writer.write_csv(mi, "phase_mi.csv")
    writer.write_csv(mi_boundary(mi), "mi_boundary.csv")

    perc = p_path_table(cfg, runner)
    writer.write_csv(perc, "phase_p_path.csv")
    writer.write_csv(_perc_boundary(threshold_fits(cfg, perc)), "perc_boundary.csv")
    sample_point_dumps(cfg, writer)


def run_slc(cfg: ExperimentConfig, writer: OutputWriter, runner: Callable) -> None:
    frame, peaks = percolation.second_largest_cluster_curve(_grid(cfg), cfg.n_realizations,
                                                            _stream(cfg, "slc", 0), runner)
    writer.write_csv(frame, "slc.csv")
    writer.write_csv(percolation.peaks_table(peaks), "slc_peaks.csv")

    report = []
    for r in cfg.r_grid:
        usable = [pk for pk in peaks if pk.r == r and not pk.undefined and not pk.at_edge and pk.p_err]
        usable.sort(key=lambda pk: pk.N)
        entry: Dict[str, Any] = {
            "r": r,
            "peaks_used": [pk.N for pk in usable],
            "shifts_down": bool(all(a.p_peak > b.p_peak for a, b in zip(usable, usable[1:]))) if len(usable) > 1 else None,
            "extrapolation": None,
        }
        if len(usable) >= 3:
            try:
                entry["extrapolation"] = scaling.extrapolate_threshold(
                    [(pk.N, pk.p_peak, pk.p_err) for pk in usable], cfg.nu, cfg.alpha).to_dict()
            except (scaling.FitUnbounded, scaling.InsufficientData) as e:
                entry["extrapolation_error"] = str(e)
        report.append(entry)
    writer.write_json({"slc": report}, "slc_extrapolation.json")


def run_distance_stats(cfg: ExperimentConfig, writer: OutputWriter, runner: Callable) -> None:
    per_step, histograms, report = [], [], []
    for index, point in enumerate(_grid(cfg)):
        jobs = circuit.realization_params(point, cfg.n_realizations, _stream(cfg, "distance", index))
        logs = list(runner(zxgraph.sample_rewrite_events, jobs))
        stats = zxgraph.distance_stats_over_runs(logs, point.n_qubits, cfg.window, Config.DISTANCE_BIN_WIDTH)
        key = {"p": point.p, "r": point.r, "N": point.n_qubits}
        per_step.append(stats.per_step.assign(**key))
        histograms.append(stats.histogram.assign(**key))
        report.append({**key, **stats.summary()})
    writer.write_csv(pd.concat(per_step, ignore_index=True)[["p", "r", "N", "step", "mean_distance", "count"]],
                     "distance_per_step.csv")
    writer.write_csv(pd.concat(histograms, ignore_index=True)[["p", "r", "N", "bin_left", "bin_right", "count"]],
                     "distance_hist.csv")
    writer.write_json({"points": report}, "distance_report.json")


def _reuse_or_compute(cfg: ExperimentConfig, writer: OutputWriter, name: str, source: str,
                      compute: Callable[[ExperimentConfig], pd.DataFrame]) -> pd.DataFrame:
    other = cfg.as_experiment(source)
    frame = read_csv_checked(writer.path(name), other.config_hash)
    if frame is not None:
        logger.info(f"Reusing {name} from a matching {source} run")
        return frame
    logger.info(f"No matching {name}; regenerating it with {source} seeds")
    return compute(other)


BoundaryCollapse = Tuple[str, float, float, pd.DataFrame, scaling.CollapseResult]


def i2_boundary_collapses(mi: pd.DataFrame, exponents: Sequence[float]) -> List[BoundaryCollapse]:
    """Boundary collapses of I2 near the loop-phase edges.

    At fixed r the distance to the p = 1 edge is delta = r * (1 - p); at
    fixed p the distance to the r = 0 edge is delta = r. Cuts with fewer
    than two sizes are skipped.
    """
    out = []
    cuts = (("r", "p", lambda g: g["r"] * (1.0 - g["p"])), ("p", "r", lambda g: g["r"]))
    for cut, along, delta in cuts:
        for value, group in mi.groupby(cut, sort=True):
            if group["N"].nunique() < 2 or group[along].nunique() < 2:
                continue
            data = group.assign(x=delta).rename(columns={"I2": "y"})[["N", "x", "y"]]
            for d in exponents:
                scaled, result = circuit.scaling_collapse(data, 0.0, d, "boundary")
                out.append((cut, float(value), float(d), scaled, result))
    return out


def run_collapse(cfg: ExperimentConfig, writer: OutputWriter, runner: Callable) -> None:
    mi = _reuse_or_compute(cfg, writer, "mi_scan.csv", "mi_scan", lambda c: mi_table(c, runner))
    perc = _reuse_or_compute(cfg, writer, "p_path.csv", "perc_scan", lambda c: p_path_table(c, runner))

    scores, frames = [], []

    def record(source: str, mode: str, cut: str, value: float, exponent: float, scaled: pd.DataFrame,
               result: scaling.CollapseResult) -> None:
        scores.append({"source": source, "mode": mode, "cut": cut, "value": value, "exponent": exponent,
                       "score": result.score, "mean_deviation": result.mean_deviation, "n_points": result.n_points,
                       "n_curves": result.n_curves, "degenerate": result.degenerate})
        frames.append(scaled.assign(source=source, mode=mode, cut=cut, value=value, exponent=exponent))

    for entry in mi_crossings(mi):
        if entry["crossing"] is None:
            continue
        data = mi[mi["r"] == entry["r"]].rename(columns={"p": "x", "I2": "y"})
        for nu in cfg.collapse_nus:
            scaled, result = circuit.scaling_collapse(data, entry["crossing"], nu, "transition")
            record("I2", "transition", "r", entry["r"], nu, scaled, result)

    for cut, value, d, scaled, result in i2_boundary_collapses(mi, cfg.boundary_exponents):
        record("I2", "boundary", cut, value, d, scaled, result)

    for entry in threshold_fits(cfg, perc):
        p_c_of_n = {f["n_qubits"]: f["p_c"] for f in entry["fits"]}
        if len(p_c_of_n) < 2:
            continue
        data = perc[(perc["r"] == entry["r"]) & perc["N"].isin(list(p_c_of_n))]
        for nu in cfg.collapse_nus:
            scaled, result = scaling.collapse_check(data, p_c_of_n, nu)
            record("P_path", "transition", "r", entry["r"], nu, scaled, result)

    table = pd.DataFrame(scores, columns=["source", "mode", "cut", "value", "exponent", "score", "mean_deviation",
                                          "n_points", "n_curves", "degenerate"])
    writer.write_csv(table, "collapse_scores.csv")
    if frames:
        writer.write_csv(pd.concat(frames, ignore_index=True)[["source", "mode", "cut", "value", "exponent", "N",
                                                               "x_scaled", "y"]],
                         "collapse.csv")

    best = []
    usable = table[~table["degenerate"].astype(bool)]
    for (source, mode, cut, value), g in usable.groupby(["source", "mode", "cut", "value"], sort=True):
        top = g.loc[g["score"].idxmin()]
        best.append({"source": source, "mode": mode, "cut": cut, "value": float(value),
                     "exponent": float(top["exponent"]), "score": float(top["score"])})
    writer.write_json({"best": best}, "collapse_summary.json")


def run_boundary_fit(cfg: ExperimentConfig, writer: OutputWriter, runner: Callable) -> None:
    boundary = _reuse_or_compute(cfg, writer, "mi_boundary.csv", "phase_diagram",
                                 lambda c: mi_boundary(mi_table(c, runner)))
    ok = boundary[(boundary["status"] == "ok") & (boundary["r"] > 0) & boundary["p_c"].notna()
                  & (boundary["p_c"] > 0) & (boundary["p_c"] < cfg.small_p_max)]
    points = [(float(row.p_c), float(row.r)) for row in ok.itertuples()]
    payload: Dict[str, Any] = {"points": [{"p_c": p, "r": r} for p, r in points], "small_p_max": cfg.small_p_max}
    try:
        fit = scaling.boundary_exponential_fit(points)
        payload.update(status="ok", fit=asdict(fit))
    except (scaling.FitUnbounded, scaling.InsufficientData, scaling.InvalidArgument) as e:
        logger.warning(f"Boundary fit failed: {e}")
        payload.update(status=str(e), fit=None)
    writer.write_json(payload, "boundary_fit.json")


EXPERIMENTS: Dict[str, Callable[[ExperimentConfig, OutputWriter, Callable], None]] = {
    "mi_scan": run_mi_scan,
    "perc_scan": run_perc_scan,
    "phase_diagram": run_phase_diagram,
    "slc": run_slc,
    "distance_stats": run_distance_stats,
    "collapse": run_collapse,
    "boundary_fit": run_boundary_fit,
}


def run_experiment(cfg: ExperimentConfig, runner: Optional[Callable] = None) -> RunManifest:
    """Run one experiment, write its artifacts and manifest, and record the run in the ledger."""
    runner = runner or TaskRunner(cfg.workers, label=cfg.experiment, experiment=cfg.experiment)
    writer = OutputWriter(cfg.output_dir, cfg.config_hash, cfg.master_seed)
    manifest = RunManifest(cfg.experiment, cfg.config_hash, cfg.master_seed, code_version(),
                           datetime.now().isoformat(timespec="seconds"))
    logger.info(f"Starting {cfg.experiment} (config {cfg.config_hash[:12]}, seed {cfg.master_seed})")
    start_time = time.time()
    try:
        EXPERIMENTS[cfg.experiment](cfg, writer, runner)
    except Exception:
        log_performance(cfg.experiment, time.time() - start_time, success=False)
        writer.cleanup()
        raise
    log_performance(cfg.experiment, time.time() - start_time)

    manifest.outputs = [{**o, "sha256": file_digest(writer.path(o["path"]))} for o in writer.outputs]
    manifest.finished_at = datetime.now().isoformat(timespec="seconds")
    manifest.status = "success"
    writer.write_json(manifest.to_dict(), "manifest.json")
    try:
        record_run(writer.path(Config.LEDGER_NAME), manifest.to_dict())
    except Exception as e:
        # data files are already complete; a broken ledger must not discard them
        error_tracker.log_error(e, "run ledger", cfg.experiment)
    return manifest


# replay

def _load_record(path: str) -> Dict[str, Any]:
    try:
        payload = read_json(path)
    except OSError as e:
        raise ReplayMismatch(f"cannot read record {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise circuit.RecordParseError(f"{path} is not valid JSON: {e}") from e
    return payload


def replay(record_path: str, stage: str, output_dir: str,
           cfg: Optional[ExperimentConfig] = None) -> Dict[str, Any]:
    """Re-derive one pipeline stage from a circuit record and dump the diagram.

    The record file is either a bare circuit record or a sample dump holding
    one under ``record``; when it carries a config hash it must match ``cfg``.
    """
    if stage not in REPLAY_STAGES:
        raise ReplayMismatch(f"unknown stage {stage!r}; expected one of {', '.join(REPLAY_STAGES)}")
    payload = _load_record(record_path)
    record = payload.get("record", payload)
    embedded = payload.get("config_hash")
    if cfg is not None and embedded and embedded != cfg.config_hash:
        raise ReplayMismatch(f"record was produced by config {embedded[:12]}, current config is {cfg.config_hash[:12]}")
    c = circuit.BrickworkCircuit.from_record(record)

    d = zxgraph.diagram_from_circuit(c)
    events: List[zxgraph.RewriteEvent] = []
    if stage == "local":
        d, events = zxgraph.local_simplify(d)
    elif stage == "graphlike":
        tel = zxgraph.Telemetry(d)
        zxgraph.to_graph_like(d, tel)
        events = tel.events
    elif stage == "simplified":
        d, events = zxgraph.clifford_simplify(d)

    cfg_hash = cfg.config_hash if cfg is not None else (embedded or config_hash({"record": record}))
    writer = OutputWriter(output_dir, cfg_hash, c.seed)
    body = {"stage": stage, "record": c.to_record(), "diagram": zxgraph.dump_diagram(d),
            "stats": zxgraph.diagram_stats(d), "n_events": len(events)}
    writer.write_json(body, f"replay_{stage}.json")
    if stage != "raw":
        writer.write_csv(zxgraph.events_frame(events), f"replay_{stage}_events.csv")
    return body


# selftest

def selftest(seed: int, cases: Optional[Dict[str, int]] = None, output_dir: Optional[str] = None) -> List[str]:
    """Run the dense-oracle suites; returns the failure descriptions."""
    cases = cases or get_config().SELFTEST_CASES
    rng = np.random.default_rng(seed)
    failures = []
    start_time = time.time()
    stab = oracle.stabilizer_suite(cases["stabilizer"], rng)
    log_performance("selftest.stabilizer", time.time() - start_time, success=not stab)
    failures += [f"stabilizer: {f}" for f in stab]

    start_time = time.time()
    zx = oracle.zx_suite(cases["zx"], rng)
    log_performance("selftest.zx", time.time() - start_time, success=not zx)
    failures += [f"zx: {f}" for f in zx]

    if output_dir:
        writer = OutputWriter(output_dir, config_hash({"selftest": cases, "seed": seed}), seed)
        writer.write_json({"cases": cases, "failures": failures, "passed": not failures}, "selftest.json")
    return failures


# CLI

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mptzx", description="Measurement-induced transitions in "
                                     "monitored Clifford circuits via stabilizers and ZX percolation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", help="output directory")
        p.add_argument("--verbose", action="store_true", help="debug logging on the console")

    for name in EXPERIMENTS:
        common(sub.add_parser(name.replace("_", "-"), help=f"run the {name} experiment"))

    rp = sub.add_parser("replay", help="re-derive a diagram stage from a circuit record")
    common(rp)
    rp.add_argument("--record", required=True, help="circuit record or sample dump (JSON)")
    rp.add_argument("--stage", default="simplified", help="|".join(REPLAY_STAGES))

    st = sub.add_parser("selftest", help="run the dense oracle suites")
    common(st)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    profile = get_config()
    setup_logging(profile.LOG_DIR, "DEBUG" if args.verbose else profile.LOG_LEVEL)
    command = args.command.replace("-", "_")

    try:
        if command == "selftest":
            failures = selftest(args.seed if args.seed is not None else 0, output_dir=args.out)
            for f in failures:
                logger.error(f"selftest failure: {f}")
            logger.info(f"selftest: {'passed' if not failures else f'{len(failures)} failures'}")
            return EXIT_SELFTEST if failures else EXIT_OK

        overrides = {"master_seed": args.seed, "workers": args.workers, "output_dir": args.out}
        if command == "replay":
            cfg = load_config(args.config, overrides) if args.config else None
            replay(args.record, args.stage, args.out or (cfg.output_dir if cfg else profile.OUTPUT_DIR), cfg)
            return EXIT_OK

        cfg = load_config(args.config, {**overrides, "experiment": command})
        manifest = run_experiment(cfg)
        print(json.dumps({"experiment": manifest.experiment, "config_hash": manifest.config_hash,
                          "outputs": [o["path"] for o in manifest.outputs]}, indent=2))
        return EXIT_OK

    except (ConfigError, ReplayMismatch, circuit.RecordParseError, zxgraph.DumpParseError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG
    except Exception as e:
        error_tracker.log_error(e, f"command {args.command}", command)
        logger.info(f"Failures so far: {error_tracker.summary()}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
