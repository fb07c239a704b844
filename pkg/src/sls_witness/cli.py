"""Command-line entry point: ``sls-witness <command>``.

Exit codes: 0 when no signalling is detected, 2 when it is, 1 on any
operational error (bad configuration, unreadable input, unwritable output).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .core import TwoStateWavefunction, partial_trace, pure_density, random_state
from .ensemble import (CalibrationError, HorizonTooShortError, OffDiagonalSeries, WitnessSeries,
                       calibrate_born, compute_verdict, run_ensemble, timescales)
from .master import (LOCAL_TO_A, JumpTerm, gksl_generator, locality_audit, toy_kraus_check,
                     verify_toy_gksl)
from .models import (CSL, SUV, Linear, ToyDeterministic, TrajectoryConfig, default_dt,
                     toy_analytic, toy_step)
from .noise import OU, SBM, StaticOU, StaticSBM

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SLS = 2

WITNESS_HEADER = ("t", "mean_p0", "stderr", "n_traj")
CROSS_HEADER = ("t", "mean_cross", "stderr", "n_traj")
SUMMARY_HEADER = ("jtau", "t_max", "t_coll")

MODELS = ("csl", "suv", "linear", "toy")
NOISES = ("ou", "sbm", "static-ou", "static-sbm")

FIG1_P0 = math.cos(math.pi / 6) ** 2
FIG1_INSET_P0 = math.cos(math.pi / 8) ** 2
FIG1_OU_RATIOS = (0.5, 0.7, 1.0, 2.0)
FIG2_JTAU = (0.05, 0.2, 1.0)


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"invalid {field}: {message}")
        self.field = field


class InputFileError(ValueError):
    pass


# --- output helpers ----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_rows(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer)) else _fmt(v) for v in row])


def write_witness_csv(path: Path, series: WitnessSeries) -> None:
    write_rows(path, WITNESS_HEADER,
               ((t, m, e, int(series.n_traj)) for t, m, e in
                zip(series.times, series.mean_p0, series.stderr)))


def write_cross_csv(path: Path, cross: OffDiagonalSeries, n_traj: int) -> None:
    err = cross.stderr if cross.stderr is not None else np.zeros_like(cross.mean_cross)
    write_rows(path, CROSS_HEADER,
               ((t, m, e, int(n_traj)) for t, m, e in zip(cross.times, cross.mean_cross, err)))


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _finite_or_none(x: float | None):
    return None if x is None or not math.isfinite(x) else x


# --- experiment configuration ------------------------------------------------

@dataclass
class ExperimentConfig:
    model: str = "csl"
    gamma: float = 1.0
    J: float = 1.0
    G: float = 1.0
    noise: str = "static-sbm"
    tau: float | None = None
    initial_p0: float = FIG1_P0
    dt: float | None = None
    horizon: float = 3.0
    n_traj: int = 100_000
    master_seed: int = 0
    record_points: int = 200
    threshold_z: float = 5.0
    output_path: str = "witness.csv"

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError("model", f"{self.model!r} is not one of {', '.join(MODELS)}")
        if self.model in ("suv", "linear"):
            if self.noise not in NOISES:
                raise ConfigError("noise", f"{self.noise!r} is not one of {', '.join(NOISES)}")
            if self.noise in ("ou", "sbm") and not (self.tau is not None and self.tau > 0):
                raise ConfigError("tau", "coloured noise needs tau > 0")
        if self.model in ("csl", "toy") and not (_finite(self.gamma) and self.gamma > 0):
            raise ConfigError("gamma", "must be a positive number")
        if self.model == "suv" and not (_finite(self.J) and self.J > 0):
            raise ConfigError("J", "must be a positive number")
        if self.model in ("suv", "linear") and not (_finite(self.G) and self.G >= 0):
            raise ConfigError("G", "must be a non-negative number")
        if not (_finite(self.initial_p0) and 0.0 < self.initial_p0 < 1.0):
            raise ConfigError("initial_p0", "must lie strictly between 0 and 1")
        if not (_finite(self.horizon) and self.horizon > 0):
            raise ConfigError("horizon", "must be a positive number")
        if self.dt is not None and not (_finite(self.dt) and 0 < self.dt <= self.horizon):
            raise ConfigError("dt", "must satisfy 0 < dt <= horizon")
        if not (isinstance(self.n_traj, int) and self.n_traj >= 100):
            raise ConfigError("n_traj", "must be an integer >= 100")
        if not (isinstance(self.master_seed, int) and 0 <= self.master_seed < 2 ** 64):
            raise ConfigError("master_seed", "must be an integer in [0, 2^64)")
        if not (isinstance(self.record_points, int) and 2 <= self.record_points <= 200):
            raise ConfigError("record_points", "must be an integer in [2, 200]")
        if not (_finite(self.threshold_z) and self.threshold_z > 0):
            raise ConfigError("threshold_z", "must be a positive number")
        if not self.output_path:
            raise ConfigError("output_path", "must be a non-empty path")

    def build_model(self):
        if self.model == "csl":
            return CSL(self.gamma)
        if self.model == "toy":
            return ToyDeterministic(self.gamma)
        noise = {"ou": lambda: OU(self.tau), "sbm": lambda: SBM(self.tau),
                 "static-ou": StaticOU, "static-sbm": StaticSBM}[self.noise]()
        if self.model == "suv":
            return SUV(self.J, self.G, noise)
        return Linear(self.G, noise)

    def build_trajectory(self, model) -> TrajectoryConfig:
        dt = self.dt if self.dt is not None else min(default_dt(model), self.horizon)
        return TrajectoryConfig.uniform(TwoStateWavefunction.from_p0(self.initial_p0),
                                        self.horizon, dt, self.record_points)


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


_CONFIG_TYPES = {"gamma": float, "J": float, "G": float, "tau": float, "initial_p0": float,
                 "dt": float, "horizon": float, "threshold_z": float, "n_traj": int,
                 "master_seed": int, "record_points": int}


def load_config(config_file: str | None, overrides: dict[str, Any]) -> ExperimentConfig:
    """Merge a JSON config file with command-line overrides; flags win."""
    values: dict[str, Any] = {}
    known = {f.name for f in fields(ExperimentConfig)}
    if config_file:
        try:
            with open(config_file) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {config_file}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a JSON object")
        for key, val in raw.items():
            if key not in known:
                raise ConfigError(key, "unknown configuration field")
            values[key] = val
    values.update({k: v for k, v in overrides.items() if v is not None})
    for key, typ in _CONFIG_TYPES.items():
        if key in values and values[key] is not None:
            val = values[key]
            if typ is int and not (isinstance(val, int) and not isinstance(val, bool)):
                if isinstance(val, float) and val.is_integer():
                    val = int(val)
                else:
                    raise ConfigError(key, f"expected an integer, got {val!r}")
            elif typ is float:
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise ConfigError(key, f"expected a number, got {val!r}")
                val = float(val)
            values[key] = val
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


# --- commands ----------------------------------------------------------------

def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json") if csv_path.suffix == ".csv" else \
        csv_path.with_name(csv_path.name + ".json")


def run_witness(cfg: ExperimentConfig, workers: int | None = None):
    model = cfg.build_model()
    traj = cfg.build_trajectory(model)
    series, cross = run_ensemble(model, traj, cfg.n_traj, cfg.master_seed, workers=workers)
    verdict = compute_verdict(series, cfg.threshold_z)
    try:
        t_max, t_coll = timescales(series, cross)
    except HorizonTooShortError:
        t_max = float(series.times[int(np.argmax(np.abs(series.witness)))])
        t_coll = None
    return series, cross, verdict, t_max, t_coll


def cmd_witness(args) -> int:
    overrides = {"model": args.model, "gamma": args.gamma, "J": args.J, "G": args.G,
                 "noise": args.noise, "tau": args.tau, "initial_p0": args.p0, "dt": args.dt,
                 "horizon": args.horizon, "n_traj": args.n_traj, "master_seed": args.seed,
                 "record_points": args.record_points, "threshold_z": args.threshold_z,
                 "output_path": args.output}
    cfg = load_config(args.config, overrides)
    out = Path(cfg.output_path)
    if out.parent and not out.parent.exists():
        raise OSError(f"output directory {out.parent} does not exist")
    start = time.perf_counter()
    series, cross, verdict, t_max, t_coll = run_witness(cfg, args.workers)
    write_witness_csv(out, series)
    _write_json(_sidecar_path(out), {
        "config": asdict(cfg),
        "verdict": {"max_abs_z": _finite_or_none(verdict.max_abs_z),
                    "max_abs_z_infinite": math.isinf(verdict.max_abs_z),
                    "t_max": verdict.t_max, "verdict": verdict.verdict,
                    "threshold_z": verdict.threshold_z},
        "t_max": t_max,
        "t_coll": t_coll,
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
    })
    print(f"{verdict.verdict}: max |z| = {verdict.max_abs_z:.3g} at t = {verdict.t_max:.4g}")
    return EXIT_SLS if verdict.sls_detected else EXIT_OK


def _series_entry(name: str, series: WitnessSeries, threshold_z: float, **extra) -> dict:
    v = compute_verdict(series, threshold_z)
    return {"file": name, "verdict": v.verdict, "max_abs_z": _finite_or_none(v.max_abs_z),
            "final_witness": float(series.witness[-1]), "final_stderr": float(series.stderr[-1]),
            **extra}


def _arguments(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def cmd_fig1(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    n, seed, horizon = args.n_traj, args.seed, args.horizon
    initial_set = [TwoStateWavefunction.from_p0(FIG1_P0),
                   TwoStateWavefunction.from_p0(FIG1_INSET_P0)]
    try:
        cal = calibrate_born(StaticSBM(), initial_set, horizon, args.calibration_n_traj,
                             master_seed=seed, tolerance=args.calibration_tolerance,
                             log_range=tuple(args.log_range), workers=args.workers)
    except CalibrationError as exc:
        print(f"error: static SBM calibration failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    runs = [("csl_white", CSL(1.0), "csl white noise, gamma = 1", {})]
    runs.append(("suv_static_sbm", SUV(1.0, cal.ratio, StaticSBM()),
                 "SUV static SBM at calibrated G/J", {"G_over_J": cal.ratio}))
    for r in FIG1_OU_RATIOS:
        runs.append((f"suv_static_ou_gj{r:g}", SUV(1.0, r, StaticOU()),
                     f"SUV static OU at G/J = {r:g}", {"G_over_J": r}))
    runs.append(("linear_static_sbm", Linear(1.0, StaticSBM()),
                 "linear model (J = 0), static SBM, G = 1", {"G": 1.0}))
    entries = []
    for p0, suffix in ((FIG1_P0, ""), (FIG1_INSET_P0, "_inset")):
        for name, model, label, extra in runs:
            if suffix and name in ("csl_white", "linear_static_sbm"):
                continue
            traj = TrajectoryConfig.uniform(TwoStateWavefunction.from_p0(p0), horizon,
                                            min(default_dt(model), horizon), args.record_points)
            series, _ = run_ensemble(model, traj, n, seed, workers=args.workers)
            fname = f"{name}{suffix}.csv"
            write_witness_csv(outdir / fname, series)
            entries.append(_series_entry(fname, series, args.threshold_z, label=label,
                                         initial_p0=p0, **extra))
            print(f"{fname}: final witness {series.witness[-1]:+.4f} "
                  f"+/- {series.stderr[-1]:.4f}")
    _write_json(outdir / "manifest.json", {
        "command": "fig1", "arguments": _arguments(args), "seed": seed, "n_traj": n,
        "horizon_J": horizon,
        "calibration": {"noise": "static-sbm", "G_over_J": cal.ratio,
                        "objective": cal.objective, "deviations": list(cal.deviations),
                        "n_traj": args.calibration_n_traj,
                        "tolerance": args.calibration_tolerance,
                        "log10_range": list(args.log_range),
                        "initial_p0": [FIG1_P0, FIG1_INSET_P0]},
        "ou_ratios": list(FIG1_OU_RATIOS), "series": entries,
        "version": __version__, "wall_time_s": time.perf_counter() - start,
    })
    return EXIT_OK


def cmd_fig2(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    initial_set = [TwoStateWavefunction.from_p0(FIG1_P0),
                   TwoStateWavefunction.from_p0(FIG1_INSET_P0)]
    rows, entries = [], []
    for jtau in args.jtau:
        noise = SBM(jtau)
        try:
            cal = calibrate_born(noise, initial_set, args.horizon, args.calibration_n_traj,
                                 master_seed=args.seed, tolerance=args.calibration_tolerance,
                                 log_range=tuple(args.log_range),
                                 refine_steps=args.refine_steps, workers=args.workers)
        except CalibrationError as exc:
            print(f"error: calibration failed at J tau = {jtau:g}: {exc}", file=sys.stderr)
            return EXIT_ERROR
        model = SUV(1.0, cal.ratio, noise)
        traj = TrajectoryConfig.uniform(initial_set[0], args.horizon, default_dt(model),
                                        args.record_points)
        series, cross = run_ensemble(model, traj, args.n_traj, args.seed, workers=args.workers)
        t_max, t_coll = timescales(series, cross)
        tag = f"jtau{jtau:g}"
        write_witness_csv(outdir / f"witness_{tag}.csv", series)
        write_cross_csv(outdir / f"cross_{tag}.csv", cross, args.n_traj)
        rows.append((jtau, t_max, t_coll))
        bump = int(np.argmax(series.witness))
        entries.append(_series_entry(f"witness_{tag}.csv", series, args.threshold_z, jtau=jtau,
                                     G_over_J=cal.ratio, calibration_objective=cal.objective,
                                     t_max=t_max, t_coll=t_coll,
                                     bump=float(series.witness[bump]),
                                     bump_z=float(series.witness[bump] / series.stderr[bump])))
        print(f"J tau = {jtau:g}: G/J = {cal.ratio:.4g}, t_max = {t_max:.4g}, t_coll = {t_coll:.4g}")
    write_rows(outdir / "summary.csv", SUMMARY_HEADER, rows)
    _write_json(outdir / "manifest.json", {
        "command": "fig2", "arguments": _arguments(args), "seed": args.seed,
        "n_traj": args.n_traj,
        "calibration": {"n_traj": args.calibration_n_traj,
                        "tolerance": args.calibration_tolerance,
                        "log10_range": list(args.log_range), "refine_steps": args.refine_steps,
                        "initial_p0": [FIG1_P0, FIG1_INSET_P0]},
        "horizon_J": args.horizon,
        "series": entries, "version": __version__,
        "wall_time_s": time.perf_counter() - start,
    })
    return EXIT_OK


# gksl audit --------------------------------------------------------------------

DIMS_KEY = '"dims"'
JUMPS_KEY = '"jumps"'


def _line_of(text: str, needle: str, occurrence: int = 0) -> int:
    pos = -1
    for _ in range(occurrence + 1):
        pos = text.find(needle, pos + 1)
        if pos < 0:
            return 1
    return text.count("\n", 0, pos) + 1


def _parse_matrix(obj, dim: int, where: str, line: int) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise InputFileError(f"line {line}: {where} is not a numeric matrix") from None
    if arr.shape != (dim, dim, 2):
        raise InputFileError(f"line {line}: {where} has shape {arr.shape}, "
                             f"expected ({dim}, {dim}, 2) [re, im] pairs")
    if not np.all(np.isfinite(arr)):
        raise InputFileError(f"line {line}: {where} has non-finite entries")
    return arr[..., 0] + 1j * arr[..., 1]


def load_operator_file(path: str):
    """Parse ``{"dims": [dA, dB], "H": [[[re, im], ...], ...], "jumps": [{"rate", "matrix"}]}``."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFileError(f"line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputFileError("line 1: top level must be a JSON object")
    dims = raw.get("dims")
    if not (isinstance(dims, list) and len(dims) == 2 and
            all(isinstance(d, int) and d > 0 for d in dims)):
        raise InputFileError(f"line {_line_of(text, DIMS_KEY)}: dims must be [dA, dB]")
    dim = dims[0] * dims[1]
    H = raw.get("H")
    if H is not None:
        H = _parse_matrix(H, dim, "H", _line_of(text, '"H"'))
    jumps = []
    raw_jumps = raw.get("jumps", [])
    if not isinstance(raw_jumps, list):
        raise InputFileError(f"line {_line_of(text, JUMPS_KEY)}: jumps must be a list")
    for k, j in enumerate(raw_jumps):
        line = _line_of(text, '"matrix"', k)
        if not isinstance(j, dict) or "matrix" not in j:
            raise InputFileError(f"line {line}: jump {k} needs a matrix")
        rate = j.get("rate", 1.0)
        if isinstance(rate, bool) or not isinstance(rate, (int, float)) or not math.isfinite(rate):
            raise InputFileError(f"line {line}: jump {k} rate must be a finite number")
        jumps.append(JumpTerm(float(rate), _parse_matrix(j["matrix"], dim, f"jump {k}", line)))
    return tuple(dims), H, jumps


def audit_operators(dims, H, jumps, probes: int = 20, seed: int = 0) -> dict:
    """Locality classes and the largest reduced generator over random entangled probes."""
    dA, dB = dims
    classes = [locality_audit(j.op, dims) for j in jumps]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        rho = pure_density(random_state(dA * dB, rng))
        gen = gksl_generator(rho, H, jumps)
        worst = max(worst, float(np.max(np.abs(partial_trace(gen, (dA, dB), keep="B")))))
    local = all(c == LOCAL_TO_A for c in classes)
    signalling = worst > 1e-12
    return {"classes": classes, "max_reduced_generator": worst, "all_local": local,
            "signalling": signalling}


def cmd_gksl_audit(args) -> int:
    dims, H, jumps = load_operator_file(args.file)
    report = audit_operators(dims, H, jumps, args.probes, args.seed)
    for k, c in enumerate(report["classes"]):
        print(f"jump {k}: {c}")
    print(f"max |Tr_A Lambda(rho)| over {args.probes} probes: {report['max_reduced_generator']:.3e}")
    locality = LOCAL_TO_A if report["all_local"] else "not local"
    outcome = "signalling possible" if report["signalling"] else "no signalling detected"
    print(f"{locality}; {outcome}")
    return EXIT_SLS if report["signalling"] else EXIT_OK


# toy verification ------------------------------------------------------------

def toy_verification(gamma: float, dt: float | None = None) -> dict:
    """Numerical checks of the deterministic toy model at ``dt = 1e-4/gamma`` by default."""
    dt = 1e-4 / gamma if dt is None else dt
    psi = TwoStateWavefunction.from_p0(0.5)
    n = int(round(3.0 / (gamma * dt)))
    err = 0.0
    for k in range(1, n + 1):
        psi = toy_step(psi, dt, gamma)
        err = max(err, abs(psi.p0 - psi.p1 - toy_analytic(0.0, k * dt, gamma)))
    times = np.linspace(0.1 / gamma, 3.0 / gamma, 59)
    gksl_err = verify_toy_gksl(gamma, times)
    t_k, h = 1.0 / gamma, 1e-3 / gamma
    a, b = toy_kraus_check(t_k, h, gamma), toy_kraus_check(t_k, h / 2, gamma)
    psi = TwoStateWavefunction.from_p0(0.75)
    for _ in range(int(round(10.0 / (gamma * dt)))):
        psi = toy_step(psi, dt, gamma)
    return {"gamma": gamma, "dt": dt, "state_error": err, "gksl_error": gksl_err,
            "kraus_identity_ratio": a.identity_defect / b.identity_defect,
            "kraus_map_ratio": a.map_defect / b.map_defect,
            "kraus_identity_defect_adjoint": a.identity_defect_adjoint,
            "gamma2": a.gamma2, "k3_weight_real": a.k3_weight_real,
            "final_p0": psi.p0}


def cmd_toy_verify(args) -> int:
    if not args.gamma > 0:
        raise ConfigError("gamma", "must be positive")
    r = toy_verification(args.gamma, args.dt)
    ok_state = r["state_error"] < 1e-8
    ok_gksl = r["gksl_error"] < 1e-8
    ok_collapse = r["final_p0"] > 1 - 1e-6
    print(f"state vs tanh(2 gamma t): max error {r['state_error']:.3e} "
          f"[{'ok' if ok_state else 'FAIL'}]")
    print(f"GKSL generator vs exact d rho/dt on [0.1, 3]/gamma: max error {r['gksl_error']:.3e} "
          f"[{'ok' if ok_gksl else 'FAIL'}]")
    print(f"Kraus identity defect ratio under dt halving: {r['kraus_identity_ratio']:.3f}; "
          f"map defect ratio: {r['kraus_map_ratio']:.3f}")
    print(f"Gamma2 at t = 1/gamma: {r['gamma2']:.4g}; K3 weight real: {r['k3_weight_real']}; "
          f"adjoint identity defect {r['kraus_identity_defect_adjoint']:.3e}")
    print(f"p0 at gamma t = 10 from 0.75: {r['final_p0']:.12f} "
          f"[{'ok' if ok_collapse else 'FAIL'}] (collapse to branch 0)")
    return EXIT_OK if ok_state and ok_gksl and ok_collapse else EXIT_ERROR


# --- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sls-witness", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("witness", help="run one ensemble and write the witness series")
    w.add_argument("--config", help="JSON file with experiment fields; flags take precedence")
    w.add_argument("--model", choices=MODELS)
    w.add_argument("--gamma", type=float)
    w.add_argument("--J", type=float)
    w.add_argument("--G", type=float)
    w.add_argument("--noise", choices=NOISES)
    w.add_argument("--tau", type=float)
    w.add_argument("--p0", type=float, help="initial |a0|^2")
    w.add_argument("--dt", type=float)
    w.add_argument("--horizon", type=float)
    w.add_argument("--n-traj", type=int)
    w.add_argument("--seed", type=int)
    w.add_argument("--record-points", type=int)
    w.add_argument("--threshold-z", type=float)
    w.add_argument("--output", "-o")
    w.add_argument("--workers", type=int)
    w.set_defaults(func=cmd_witness)

    f1 = sub.add_parser("fig1", help="witness curves for white, static OU/SBM and linear models")
    f1.add_argument("--seed", type=int, default=0)
    f1.add_argument("--n-traj", type=int, default=100_000)
    f1.add_argument("--calibration-n-traj", type=int, default=100_000)
    f1.add_argument("--calibration-tolerance", type=float, default=0.01)
    f1.add_argument("--log-range", type=float, nargs=2, default=[-2.0, 2.0],
                    metavar=("LO", "HI"), help="search range of log10(G/J)")
    f1.add_argument("--horizon", type=float, default=10.0, help="in units of 1/J")
    f1.add_argument("--record-points", type=int, default=200)
    f1.add_argument("--threshold-z", type=float, default=5.0)
    f1.add_argument("--outdir", default="fig1")
    f1.add_argument("--workers", type=int)
    f1.set_defaults(func=cmd_fig1)

    f2 = sub.add_parser("fig2", help="finite-correlation-time SBM witness bumps and timescales")
    f2.add_argument("--seed", type=int, default=0)
    f2.add_argument("--n-traj", type=int, default=100_000)
    f2.add_argument("--calibration-n-traj", type=int, default=20_000)
    f2.add_argument("--calibration-tolerance", type=float, default=0.02)
    f2.add_argument("--log-range", type=float, nargs=2, default=[-1.0, 1.0],
                    metavar=("LO", "HI"), help="search range of log10(G/J)")
    f2.add_argument("--refine-steps", type=int, default=8)
    f2.add_argument("--jtau", type=float, nargs="+", default=list(FIG2_JTAU))
    f2.add_argument("--horizon", type=float, default=8.0, help="in units of 1/J")
    f2.add_argument("--record-points", type=int, default=200)
    f2.add_argument("--threshold-z", type=float, default=5.0)
    f2.add_argument("--outdir", default="fig2")
    f2.add_argument("--workers", type=int)
    f2.set_defaults(func=cmd_fig2)

    a = sub.add_parser("gksl-audit", help="locality and signalling audit of GKSL jump operators")
    a.add_argument("file", help="JSON operator file")
    a.add_argument("--probes", type=int, default=20)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_gksl_audit)

    t = sub.add_parser("toy-verify", help="numerical checks of the deterministic toy model")
    t.add_argument("--gamma", type=float, default=1.0)
    t.add_argument("--dt", type=float, help="defaults to 1e-4/gamma")
    t.set_defaults(func=cmd_toy_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
