"""Self-check battery for a configured experiment.

Six named invariants run against the exact setup a config describes:
projector algebra, unitarity of all four operator families, the frozen
frame limit, degeneracy of the two generator variants at band size one,
agreement of the transition integral with its integration-by-parts twin,
and the transport intertwining property.  Each check is isolated so a
single failure (or crash) is reported under its own name.
"""

from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np

from .analysis import leakage_exact, transition_integral, transition_integral_parts
from .bands import BandPartition, band_projector
from .config import ExperimentConfig
from .errors import NoExteriorError
from .propagation import (
    PropagationConfig,
    evolve_intertwiner,
    evolve_propagator,
    generator,
    intertwine_residual,
    kato_state,
    literal_window_hermiticity,
    phase_family,
    wave_operator,
    weyl_band,
)
from .spectral import MONOTONE_SCREEN_SAMPLES

CHECK_NAMES = (
    "projector_algebra",
    "unitarity",
    "frozen_frame",
    "variant_degeneracy",
    "by_parts",
    "intertwining",
)


def _max_abs(a: np.ndarray) -> float:
    return float(np.abs(a).max()) if a.size else 0.0


def _reference_duration(config: ExperimentConfig) -> float:
    if config.duration is not None:
        return config.duration
    return max(config.duration_list)


def _check_projector_algebra(config, model, part) -> dict:
    n = model.size
    worst = {"idempotency": 0.0, "hermiticity": 0.0, "trace": 0.0, "resolution": 0.0}
    tols = {"idempotency": 1e-12, "hermiticity": 1e-13, "trace": 1e-10, "resolution": 1e-12}
    for s in (0.0, 0.5, 1.0):
        total = np.zeros((n, n), dtype=complex)
        for b in range(len(part)):
            p = band_projector(model, part, b, s).matrix
            worst["idempotency"] = max(worst["idempotency"], _max_abs(p @ p - p))
            worst["hermiticity"] = max(worst["hermiticity"], _max_abs(p - p.conj().T))
            worst["trace"] = max(worst["trace"], abs(np.trace(p) - len(part.members(b))))
            total += p
        worst["resolution"] = max(worst["resolution"], _max_abs(total - np.eye(n)))
    binding = max(worst, key=lambda k: worst[k] / tols[k])
    return {
        "passed": all(worst[k] <= tols[k] for k in worst),
        "measured": worst[binding],
        "tolerance": tols[binding],
        "detail": "; ".join(f"{k} {worst[k]:.3e} (tol {tols[k]:.0e})" for k in worst),
    }


def _families(config, model, part, t_ref):
    variant = config.build_variant(part)
    u = evolve_propagator(model, PropagationConfig(t_ref, config.steps, config.scheme))
    a = evolve_intertwiner(model, variant, config.steps, config.scheme)
    phi = phase_family(model, t_ref, config.steps)
    w = wave_operator(u, a, phi)
    return u, a, phi, w


def _check_unitarity(config, model, part) -> dict:
    t_ref = _reference_duration(config)
    defects = {fam.kind: fam.unitarity_defect() for fam in _families(config, model, part, t_ref)}
    worst = max(defects.values())
    return {
        "passed": worst <= 1e-9,
        "measured": worst,
        "tolerance": 1e-9,
        "detail": "; ".join(f"{k} {v:.3e}" for k, v in defects.items()) + f" at T={t_ref:g}",
    }


def _check_frozen_frame(config, model, part) -> dict:
    frozen = dataclasses.replace(config, theta_max=0.0)
    fmodel = frozen.build_model()
    fpart = frozen.build_partition()
    variant = frozen.build_variant(fpart)
    t_ref = _reference_duration(config)

    k_max = max(_max_abs(generator(fmodel, variant, s)) for s in MONOTONE_SCREEN_SAMPLES)
    a = evolve_intertwiner(fmodel, variant, steps=16)
    a_dev = _max_abs(a.final - np.eye(fmodel.size))
    u = evolve_propagator(fmodel, PropagationConfig(t_ref, config.steps, config.scheme))
    phi = phase_family(fmodel, t_ref, config.steps)
    u_phi = _max_abs(u.matrices - phi.matrices)
    eta = leakage_exact(fmodel, u, fpart, config.j0)

    passed = k_max <= 1e-15 and a_dev <= 1e-12 and u_phi <= 1e-10 and eta <= 1e-12
    return {
        "passed": passed,
        "measured": u_phi,
        "tolerance": 1e-10,
        "detail": (
            f"max|K| {k_max:.3e} (tol 1e-15); |A-1| {a_dev:.3e} (tol 1e-12); "
            f"max|U-Phi| {u_phi:.3e} (tol 1e-10); leakage {eta:.3e} (tol 1e-12)"
        ),
    }


def _check_variant_degeneracy(config, model, part) -> dict:
    part1 = BandPartition(model.size, 1)
    wb = weyl_band(part1)
    ks = kato_state()
    diff = max(
        _max_abs(generator(model, wb, s) - generator(model, ks, s))
        for s in MONOTONE_SCREEN_SAMPLES
    )
    return {
        "passed": diff <= 1e-14,
        "measured": diff,
        "tolerance": 1e-14,
        "detail": "band size 1 generator vs state-wise generator, 5 schedule points",
    }


def _check_by_parts(config, model, part) -> dict:
    t_ref = config.duration if config.duration is not None else 200.0
    if t_ref <= 0.0:
        return {
            "passed": True,
            "measured": 0.0,
            "tolerance": 1e-8,
            "detail": "T = 0: transition integrals are identically zero",
        }
    band = part.band_of(config.j0)
    try:
        exterior = part.exterior(band)
    except NoExteriorError:
        return {
            "passed": True,
            "measured": 0.0,
            "tolerance": 1e-8,
            "detail": "single band covers the grid; no exterior pairs to compare",
        }
    variant = config.build_variant(part)
    pairs = sorted(exterior, key=lambda j: (abs(j - config.j0), j))[:10]
    worst_diff = 0.0
    worst_pair = pairs[0]
    passed = True
    for j in pairs:
        direct = transition_integral(model, variant, config.j0, j, t_ref)
        split = transition_integral_parts(model, variant, config.j0, j, t_ref)
        diff = abs(direct - split.total)
        if diff > max(1e-8, 1e-6 * abs(direct)):
            passed = False
        if diff > worst_diff:
            worst_diff = diff
            worst_pair = j
    return {
        "passed": passed,
        "measured": worst_diff,
        "tolerance": 1e-8,
        "detail": (
            f"{len(pairs)} exterior pairs at T={t_ref:g}; worst pair "
            f"({config.j0}, {worst_pair}); tol per pair max(1e-8, 1e-6*|F|)"
        ),
    }


def _check_intertwining(config, model, part) -> dict:
    a = evolve_intertwiner(model, kato_state(), config.steps, config.scheme)
    residual = intertwine_residual(a, model, part)
    return {
        "passed": residual <= 1e-6,
        "measured": residual,
        "tolerance": 1e-6,
        "detail": f"state-wise transport at {config.steps} steps ({config.scheme})",
    }


_CHECKS: tuple[tuple[str, Callable], ...] = (
    ("projector_algebra", _check_projector_algebra),
    ("unitarity", _check_unitarity),
    ("frozen_frame", _check_frozen_frame),
    ("variant_degeneracy", _check_variant_degeneracy),
    ("by_parts", _check_by_parts),
    ("intertwining", _check_intertwining),
)


def verify_config(config: ExperimentConfig) -> tuple[bool, list[dict], list[str]]:
    """Run all six checks; returns (all_passed, check rows, info annotations)."""
    model = config.build_model()
    part = config.build_partition()

    checks: list[dict] = []
    for name, fn in _CHECKS:
        try:
            row = fn(config, model, part)
        except Exception as exc:  # a crashed check is a failed check, named
            row = {
                "passed": False,
                "measured": None,
                "tolerance": None,
                "detail": f"check raised {type(exc).__name__}: {exc}",
            }
        row["name"] = name
        checks.append(row)

    annotations: list[str] = []
    if config.theta_max == 0.0:
        annotations.append(
            "theta_max = 0: the frame never moves, so transition and leakage "
            "checks are satisfied trivially"
        )
    if config.band_size == config.grid_size:
        annotations.append("a single band covers the grid; exterior checks are vacuous")
    window = literal_window_hermiticity(model, config.band_size, 0.5)
    annotations.append(
        f"literal one-sided window generator (width {config.band_size}) has "
        f"hermiticity defect {window.hermiticity_defect:.3e} "
        f"({window.relative_defect:.3e} relative); the symmetric band mask is used instead"
    )

    return all(row["passed"] for row in checks), checks, annotations
