"""Command line front end.

Subcommands: simulate (write a synthetic dataset with its ground truth),
fit (identify coefficients from a dataset), signature (decompose the
load series under a given theta), and eval (compare raw and integrated
fits against a known truth).

Exit codes: 0 success, 1 missing files or other IO failures, 2 bad
configuration, 3 empty or degenerate inputs. Outputs are deterministic:
running a command twice on the same inputs produces identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from datetime import timezone
from typing import Optional, Sequence

from .core import HvacMode, LoadSignature, StationConstants, Theta
from .errors import (
    ConfigError,
    IngestError,
    IoError,
    RegressionError,
    ThermosigError,
)
from .ingest import CsvSchema, FrameSeries, ModeRule, build_frames, parse_csv
from .models import balance_target, load, supply
from .regression import FitResult, GridSpec, assemble, grid_fit, integrate, objective
from .synth import Scenario, emit_csv, scenario_from_dict, simulate

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs beyond its file arguments."""

    constants: StationConstants = StationConstants()
    schema: CsvSchema = CsvSchema()
    mode_rule: ModeRule = ModeRule()
    grid: GridSpec = GridSpec()
    mode_filter: frozenset[HvacMode] = frozenset({HvacMode.REFRIGERATOR})
    scenario: Optional[Scenario] = None
    out_dir: Optional[str] = None
    max_gap: int = 5


def _build(section: str, builder, raw: dict):
    try:
        return builder(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {section!r} section: {exc}") from None


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise IoError(path, str(exc)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")

    kwargs = {}
    if "constants" in data:
        kwargs["constants"] = _build("constants", StationConstants, data.pop("constants"))
    if "schema" in data:
        kwargs["schema"] = _build("schema", CsvSchema, data.pop("schema"))
    if "mode_rule" in data:
        kwargs["mode_rule"] = _build("mode_rule", ModeRule, data.pop("mode_rule"))
    if "grid" in data:
        kwargs["grid"] = _build("grid", GridSpec, data.pop("grid"))
    if "mode_filter" in data:
        names = data.pop("mode_filter")
        try:
            kwargs["mode_filter"] = frozenset(HvacMode(name) for name in names)
        except ValueError as exc:
            raise ConfigError(f"bad mode_filter: {exc}") from None
    if "scenario" in data:
        try:
            kwargs["scenario"] = scenario_from_dict(data.pop("scenario"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario: {exc}") from None
    if "out_dir" in data:
        kwargs["out_dir"] = str(data.pop("out_dir"))
    if "max_gap" in data:
        try:
            kwargs["max_gap"] = int(data.pop("max_gap"))
        except (TypeError, ValueError):
            raise ConfigError("max_gap must be an integer") from None
    if data:
        raise ConfigError(f"unknown config keys: {sorted(data)}")
    return RunConfig(**kwargs)


def _thread_count() -> int:
    raw = os.environ.get("THERMOSIG_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"THERMOSIG_THREADS must be an integer, got {raw!r}") from None
    if threads < 1:
        raise ConfigError(f"THERMOSIG_THREADS must be positive, got {threads}")
    return threads


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise IoError(path, str(exc)) from None


def _write_json(path: str, payload: dict) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _ensure_out_dir(out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoError(out_dir, str(exc)) from None


def _read_theta(path: str) -> Theta:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise IoError(path, str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    try:
        raw = data["theta"]
        return Theta(c_p=float(raw["c_p"]), alpha=float(raw["alpha"]), beta_ac=float(raw["beta_ac"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: missing or malformed theta: {exc}") from None


def _load_frames(config: RunConfig, dataset: str) -> FrameSeries:
    if not os.path.exists(dataset):
        raise IoError(dataset, "no such file")
    records = parse_csv(dataset, config.schema)
    return build_frames(records, config.constants, rule=config.mode_rule, max_gap=config.max_gap)


def _fit_payload(result: FitResult) -> dict:
    return {
        "theta": asdict(result.theta),
        "relative_error": result.relative_error,
        "grid": result.grid.to_dict(),
        "mode_frames_used": result.mode_frames_used,
        "used_integration": result.used_integration,
        "hit_bound": result.hit_bound,
    }


def cmd_simulate(config: RunConfig, out_dir: str) -> None:
    """Write dataset.csv and truth.json for the configured scenario."""
    if config.scenario is None:
        raise ConfigError("simulate needs a 'scenario' section in the config")
    scenario = config.scenario
    series, anchors = simulate(scenario)
    _ensure_out_dir(out_dir)
    dataset_path = os.path.join(out_dir, "dataset.csv")
    try:
        emit_csv(series, anchors, dataset_path, config.schema)
    except OSError as exc:
        raise IoError(dataset_path, str(exc)) from None
    _write_json(
        os.path.join(out_dir, "truth.json"),
        {
            "theta": asdict(scenario.theta_true),
            "constants": asdict(scenario.constants),
            "dataset": {
                "rows": len(series),
                "start": series.start.astimezone(timezone.utc).isoformat(),
                "step": series.step,
            },
        },
    )
    print(f"wrote {dataset_path} ({len(series)} rows) and truth.json")


def cmd_fit(config: RunConfig, dataset: str, out_dir: str, use_integrated: bool) -> FitResult:
    """Fit the dataset and write fit.json plus the initial error surface."""
    series = _load_frames(config, dataset)
    system = assemble(series, config.constants, config.mode_filter)
    if use_integrated:
        system = integrate(system)
    result = grid_fit(
        system,
        grid=config.grid,
        use_integrated=use_integrated,
        threads=_thread_count(),
        collect_surface=True,
    )
    _ensure_out_dir(out_dir)
    _write_json(os.path.join(out_dir, "fit.json"), _fit_payload(result))

    lines = ["c_p,alpha,beta_ac,objective"]
    for c_p, alpha, beta_ac, value in result.surface:
        lines.append(f"{float(c_p)!r},{float(alpha)!r},{float(beta_ac)!r},{float(value)!r}")
    _write_text(os.path.join(out_dir, "error_surface.csv"), "\n".join(lines) + "\n")
    print(
        f"fit: c_p={result.theta.c_p:g} alpha={result.theta.alpha:g} "
        f"beta_ac={result.theta.beta_ac:g} relative_error={result.relative_error:.6g}"
    )
    return result


def _signature_rows(series: FrameSeries, theta: Theta, constants: StationConstants):
    rows = []
    for ts, frame in zip(series.timestamps(), series):
        if frame.delta is None:
            continue
        l_total, l_pil, l_eil = load(frame, theta, constants)
        breakdown = supply(frame, theta, constants)
        residual = l_total - breakdown.total - balance_target(frame, constants)
        rows.append((ts, frame.mode, l_total, l_pil, l_eil, breakdown.total, residual))
    return rows


def cmd_signature(config: RunConfig, dataset: str, theta_path: str, out_dir: str) -> None:
    """Decompose the dataset's load under theta; write signature.csv and
    summary.json."""
    theta = _read_theta(theta_path)
    series = _load_frames(config, dataset)
    rows = _signature_rows(series, theta, config.constants)

    signature = LoadSignature(
        l_total=tuple(r[2] for r in rows),
        l_passenger=tuple(r[3] for r in rows),
        l_environment=tuple(r[4] for r in rows),
        supply=tuple(r[5] for r in rows),
        residual=tuple(r[6] for r in rows),
    )

    relative_error = None
    try:
        system = integrate(assemble(series, config.constants, config.mode_filter))
        relative_error = objective(theta, system, use_integrated=True)
    except RegressionError:
        pass

    _ensure_out_dir(out_dir)
    lines = ["timestamp,mode,l_total,l_passenger,l_environment,supply,residual"]
    for ts, mode, l_total, l_pil, l_eil, total_supply, residual in rows:
        lines.append(
            f"{ts.astimezone(timezone.utc).isoformat()},{mode.value},"
            f"{l_total!r},{l_pil!r},{l_eil!r},{total_supply!r},{residual!r}"
        )
    _write_text(os.path.join(out_dir, "signature.csv"), "\n".join(lines) + "\n")

    sums = {
        "l_total": sum(signature.l_total),
        "l_passenger": sum(signature.l_passenger),
        "l_environment": sum(signature.l_environment),
        "supply": sum(signature.supply),
    }
    shares = {}
    if sums["l_total"] != 0.0:
        shares = {
            "passenger_share": sums["l_passenger"] / sums["l_total"],
            "environment_share": sums["l_environment"] / sums["l_total"],
        }
    _write_json(
        os.path.join(out_dir, "summary.json"),
        {
            "frames": len(rows),
            "theta": asdict(theta),
            "totals": sums,
            "shares": shares or None,
            "integrated_relative_error": relative_error,
        },
    )
    print(f"wrote signature.csv ({len(rows)} frames) and summary.json")


def _coefficient_errors(estimate: Theta, truth: Theta) -> dict:
    errors = {}
    for name in ("c_p", "alpha", "beta_ac"):
        est = getattr(estimate, name)
        true = getattr(truth, name)
        # relative where the truth is nonzero, absolute otherwise
        errors[name] = abs(est - true) / abs(true) if true != 0 else abs(est - true)
    return errors


def cmd_eval(config: RunConfig, dataset: str, truth_path: str, out_dir: str) -> None:
    """Fit the dataset both ways and compare against the known truth."""
    try:
        with open(truth_path, encoding="utf-8") as handle:
            truth_data = json.load(handle)
    except OSError as exc:
        raise IoError(truth_path, str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{truth_path}: invalid JSON: {exc}") from None
    theta_true = _read_theta(truth_path)

    series = _load_frames(config, dataset)
    described = truth_data.get("dataset")
    if described is not None:
        matches = (
            described.get("rows") == len(series)
            and described.get("step") == series.step
            and described.get("start") == series.start.astimezone(timezone.utc).isoformat()
        )
        if not matches:
            raise ConfigError(
                f"{truth_path} describes a different dataset "
                f"(rows/start/step do not match {dataset})"
            )

    system = integrate(assemble(series, config.constants, config.mode_filter))
    threads = _thread_count()
    raw_fit = grid_fit(system, grid=config.grid, use_integrated=False, threads=threads)
    integrated_fit = grid_fit(system, grid=config.grid, use_integrated=True, threads=threads)

    raw_errors = _coefficient_errors(raw_fit.theta, theta_true)
    integrated_errors = _coefficient_errors(integrated_fit.theta, theta_true)
    not_worse = all(integrated_errors[k] <= raw_errors[k] for k in raw_errors)

    _ensure_out_dir(out_dir)
    _write_json(
        os.path.join(out_dir, "eval.json"),
        {
            "theta_true": asdict(theta_true),
            "raw": {
                "theta": asdict(raw_fit.theta),
                "relative_error": raw_fit.relative_error,
                "coefficient_errors": raw_errors,
            },
            "integrated": {
                "theta": asdict(integrated_fit.theta),
                "relative_error": integrated_fit.relative_error,
                "coefficient_errors": integrated_errors,
            },
            "integrated_not_worse": not_worse,
        },
    )
    print(f"wrote eval.json (integrated_not_worse={not_worse})")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermosig",
        description="Identify and decompose the thermal load signature of a station",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False, theta=None):
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        if dataset:
            p.add_argument("--dataset", required=True, help="input dataset CSV")
        if theta:
            p.add_argument("--theta", required=True, help=theta)
        p.add_argument("--out", default=None, help="output directory (default: config out_dir or '.')")

    common(sub.add_parser("simulate", help="generate a synthetic dataset with known truth"))
    fit = sub.add_parser("fit", help="identify the coefficient triple from a dataset")
    common(fit, dataset=True)
    group = fit.add_mutually_exclusive_group()
    group.add_argument("--raw", action="store_true", help="fit on the raw step balance")
    group.add_argument(
        "--integrated",
        action="store_true",
        help="fit on the prefix-summed balance (default)",
    )
    common(
        sub.add_parser("signature", help="decompose the load series under a given theta"),
        dataset=True,
        theta="fit.json or truth.json supplying the theta",
    )
    common(
        sub.add_parser("eval", help="compare raw and integrated fits against a known truth"),
        dataset=True,
        theta="truth.json written by simulate",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out_dir = args.out or config.out_dir or "."
        if args.command == "simulate":
            cmd_simulate(config, out_dir)
        elif args.command == "fit":
            cmd_fit(config, args.dataset, out_dir, use_integrated=not args.raw)
        elif args.command == "signature":
            cmd_signature(config, args.dataset, args.theta, out_dir)
        elif args.command == "eval":
            cmd_eval(config, args.dataset, args.theta, out_dir)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (IngestError, RegressionError, ThermosigError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
