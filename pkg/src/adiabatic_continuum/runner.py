"""Command implementations behind the CLI.

Each command returns (exit code, record, csv text or None, printable
lines).  Records are plain dicts of Python scalars so the JSON on disk is
byte-reproducible: keys are sorted, floats keep their shortest repr, and
only cmd_simulate carries a timestamp.  Sweep outputs are timestamp-free
on purpose; identical configs must produce identical bytes regardless of
--jobs.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import (
    adiabatic_criterion,
    fit_power_law,
    leakage_exact,
    leakage_first_order,
    planned_substeps,
    sweep_leakage,
)
from .bands import (
    FEASIBLE_SLACK,
    BandPartition,
    minimal_time,
    validate_noncrossing,
    virtual_gap,
)
from .config import ExperimentConfig
from .errors import ConfigError
from .propagation import (
    PropagationConfig,
    deviation_from_identity,
    evolve_intertwiner,
    evolve_propagator,
    intertwine_residual,
    intertwiner_step_budget,
    literal_window_hermiticity,
    phase_family,
    propagator_step_budget,
    wave_operator,
)
from .verify import verify_config

CSV_HEADER = "T,eta_exact,eta_first_order,w_deviation"


def _pyify(obj):
    if isinstance(obj, dict):
        return {k: _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _json_text(payload) -> str:
    return json.dumps(_pyify(payload), indent=2, sort_keys=True) + "\n"


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    os.replace(tmp, path)


def write_outputs(config: ExperimentConfig, record: dict, csv_text: str | None = None) -> Path:
    """Persist report.json, resolved_config.json, and (for sweeps) sweep.csv."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "json" in config.formats:
        _write_text(out / "report.json", _json_text(record))
        _write_text(out / "resolved_config.json", _json_text(config.resolved))
    if csv_text is not None and "csv" in config.formats:
        _write_text(out / "sweep.csv", csv_text)
    return out


def _cell(value: float) -> str:
    return format(float(value), ".17g")


def _criterion_dict(crit) -> dict:
    return {
        "max_coupling": crit.max_coupling,
        "min_gap": crit.min_gap,
        "margin": crit.margin,
        "threshold": crit.threshold,
        "satisfied": crit.satisfied,
    }


def cmd_simulate(config: ExperimentConfig, jobs: int = 1):
    duration = config.scalar_duration()
    model = config.build_model()
    part = config.build_partition()
    cross = validate_noncrossing(model, part, s_samples=max(257, config.s_samples))
    variant = config.build_variant(part)

    run = PropagationConfig(duration, config.steps, config.scheme)
    u = evolve_propagator(model, run)
    a = evolve_intertwiner(model, variant, config.steps, config.scheme)
    phi = phase_family(model, duration, config.steps)
    w = wave_operator(u, a, phi)

    eta = leakage_exact(model, u, part, config.j0)
    eta_hat = leakage_first_order(model, part, config.j0, duration)
    w_dev = deviation_from_identity(w.final)
    crit = adiabatic_criterion(model, part, config.j0, config.s_samples, config.threshold)
    mandated, used = planned_substeps(model, part, config.j0, duration)
    window = literal_window_hermiticity(model, config.band_size, 0.5)

    record = {
        "command": "simulate",
        "config_hash": config.config_hash,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "resolved_config": config.resolved,
        "leakage": {
            "T": duration,
            "j0": config.j0,
            "band": part.band_of(config.j0),
            "eta_exact": eta,
            "eta_first_order": eta_hat,
            "w_deviation": w_dev,
        },
        "criterion": _criterion_dict(crit),
        "diagnostics": {
            "unitarity": {fam.kind: fam.unitarity_defect() for fam in (u, a, phi, w)},
            "intertwine_residual": intertwine_residual(a, model, part),
            "propagator_steps": {
                "used": config.steps,
                "required": propagator_step_budget(model, duration),
            },
            "intertwiner_steps": {
                "used": config.steps,
                "required": intertwiner_step_budget(model, variant),
            },
            "transition_substeps": {"mandated": mandated, "used": used},
            "min_band_separation": cross.min_separation,
            "literal_window_relative_defect": window.relative_defect,
        },
    }
    lines = [
        f"T = {duration:g}  j0 = {config.j0}  band = {part.band_of(config.j0)}",
        f"eta_exact       = {eta:.6e}",
        f"eta_first_order = {eta_hat:.6e}",
        f"w_deviation     = {w_dev:.6e}",
        f"criterion margin = {crit.margin:.6g} (threshold {crit.threshold:g}, "
        f"{'satisfied' if crit.satisfied else 'not satisfied'})",
    ]
    return 0, record, None, lines


def cmd_sweep(config: ExperimentConfig, jobs: int = 1):
    durations = config.sweep_durations()
    model = config.build_model()
    part = config.build_partition()
    validate_noncrossing(model, part, s_samples=max(257, config.s_samples))
    variant = config.build_variant(part)

    gap = virtual_gap(model, part, part.band_of(config.j0))
    for t in sorted(durations):
        if gap * t < config.margin:
            raise ConfigError(
                f"duration T={t:g} violates the gap margin: "
                f"gap*T = {gap * t:.3g} < {config.margin:g}"
            )

    reports = sweep_leakage(
        model, part, config.j0, durations, config.steps, config.scheme, variant, jobs
    )
    fit = fit_power_law([r.duration for r in reports], [r.eta_exact for r in reports])

    rows = [
        {
            "T": r.duration,
            "eta_exact": r.eta_exact,
            "eta_first_order": r.eta_first_order,
            "w_deviation": r.w_deviation,
        }
        for r in reports
    ]
    csv_lines = [CSV_HEADER]
    for r in reports:
        csv_lines.append(
            ",".join(_cell(v) for v in (r.duration, r.eta_exact, r.eta_first_order, r.w_deviation))
        )
    csv_text = "\n".join(csv_lines) + "\n"

    record = {
        "command": "sweep",
        "config_hash": config.config_hash,
        "resolved_config": config.resolved,
        "fit": {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "excluded": list(fit.excluded),
        },
        "rows": rows,
    }
    lines = [
        f"{len(reports)} durations: " + ", ".join(f"{r.duration:g}" for r in reports),
        f"fit: slope = {fit.slope:.4f}, r^2 = {fit.r_squared:.5f}",
    ]
    if fit.excluded:
        lines.append("excluded exact-zero leakages at T = " + ", ".join(f"{t:g}" for t in fit.excluded))
    return 0, record, csv_text, lines


def cmd_criterion(config: ExperimentConfig, jobs: int = 1):
    model = config.build_model()
    part = config.build_partition()
    crit = adiabatic_criterion(model, part, config.j0, config.s_samples, config.threshold)
    record = {
        "command": "criterion",
        "config_hash": config.config_hash,
        "resolved_config": config.resolved,
        "criterion": _criterion_dict(crit),
    }
    lines = [
        f"max coupling = {crit.max_coupling:.6g}",
        f"min gap      = {crit.min_gap:.6g}",
        f"margin       = {crit.margin:.6g}",
        f"threshold    = {crit.threshold:g}",
        "satisfied" if crit.satisfied else "not satisfied",
    ]
    return (0 if crit.satisfied else 4), record, None, lines


def cmd_bands(config: ExperimentConfig, jobs: int = 1):
    model = config.build_model()
    target = config.planning_duration()
    margin = config.margin
    n = config.grid_size

    candidates = []
    selected: int | None = None
    best_ratio = 0.0
    for m in range(1, n + 1):
        part_m = BandPartition(n, m)
        # The tail band absorbs the remainder, so any m > N/2 collapses to a
        # single band with no exterior: nothing to be adiabatic against.
        if len(part_m) < 2:
            candidates.append(
                {"m": m, "virtual_gap": None, "minimal_T": None, "feasible": False}
            )
            continue
        gap = min(virtual_gap(model, part_m, b) for b in range(len(part_m)))
        ratio = gap * target / margin
        feasible = ratio >= 1.0 - FEASIBLE_SLACK
        candidates.append(
            {
                "m": m,
                "virtual_gap": gap,
                "minimal_T": minimal_time(gap, margin),
                "feasible": feasible,
            }
        )
        best_ratio = max(best_ratio, ratio)
        if feasible and selected is None:
            selected = m

    record = {
        "command": "bands",
        "config_hash": config.config_hash,
        "resolved_config": config.resolved,
        "plan": {
            "target_T": target,
            "margin": margin,
            "candidates": candidates,
            "selected_m": selected,
            "best_margin_ratio": best_ratio,
        },
    }
    lines = [f"target T = {target:g}, margin = {margin:g}", "m  virtual_gap  minimal_T  feasible"]
    for c in candidates:
        if c["virtual_gap"] is None:
            lines.append(f"{c['m']:<3}{'-':>11}{'-':>11}  no exterior")
        else:
            lines.append(
                f"{c['m']:<3}{c['virtual_gap']:>11.5g}{c['minimal_T']:>11.5g}"
                f"  {'yes' if c['feasible'] else 'no'}"
            )
    if selected is None:
        lines.append(
            f"no feasible band size; best achievable margin ratio {best_ratio:.3g}"
        )
        return 6, record, None, lines
    lines.append(f"smallest feasible band size: m = {selected}")
    return 0, record, None, lines


def cmd_verify(config: ExperimentConfig, jobs: int = 1):
    all_passed, checks, annotations = verify_config(config)
    record = {
        "command": "verify",
        "config_hash": config.config_hash,
        "resolved_config": config.resolved,
        "checks": checks,
        "all_passed": all_passed,
        "annotations": annotations,
    }
    lines = []
    for row in checks:
        status = "PASS" if row["passed"] else "FAIL"
        measured = "n/a" if row["measured"] is None else f"{row['measured']:.3e}"
        tolerance = "n/a" if row["tolerance"] is None else f"{row['tolerance']:.0e}"
        lines.append(f"[{status}] {row['name']}: measured {measured} (tol {tolerance})")
        lines.append(f"       {row['detail']}")
    for note in annotations:
        lines.append(f"[info] {note}")
    lines.append("all checks passed" if all_passed else "verification FAILED")
    return (0 if all_passed else 1), record, None, lines


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "criterion": cmd_criterion,
    "bands": cmd_bands,
    "verify": cmd_verify,
}
