"""Adiabaticity diagnostics.

Oscillatory transition integrals and their integration-by-parts twin,
exact and first-order band leakage, the pointwise transition-weight
estimate, the coupling/gap validity criterion, and log-log convergence
fits over a sweep of durations.

Everything is computed on the dimensionless schedule clock s; quantities
the literature states on the physical clock t = t0 + s*T absorb their
powers of T at the reporting boundary, never inside the integrators.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bands import BandPartition, virtual_gap
from .errors import AnalysisError, ConfigError, CrossingError, StepBudgetError
from .propagation import (
    GeneratorVariant,
    PropagationConfig,
    UnitaryFamily,
    MIDPOINT,
    deviation_from_identity,
    final_intertwiner,
    final_propagator,
    kato_state,
    phase_operator,
)
from .spectral import EPS_CROSS, HBAR, ContinuumModel

# Oversampling policy for oscillatory quadrature: never fewer than 20
# points per phase period (the hard floor), and in practice 32x that plus
# a 50k minimum so the midpoint rule's own O(h^2) error sits far below
# the 1e-8 by-parts cross-check budget.
POINTS_PER_PERIOD = 20
_OVERSAMPLE = 32
_MIN_SUBSTEPS = 50_000

# Pairs whose coupling probe stays below this relative floor contribute
# |F|^2 < 1e-24 of the leading term; their quadrature is skipped.
_SILENT_REL = 1e-12


@dataclass(frozen=True)
class LeakageReport:
    """Band-leakage summary for one run at one duration."""

    duration: float
    j0: int
    band: int
    eta_exact: float
    eta_first_order: float
    w_deviation: float


@dataclass(frozen=True)
class CriterionReport:
    """Coupling-to-gap margin of the validity criterion."""

    max_coupling: float
    min_gap: float
    margin: float
    threshold: float
    satisfied: bool


@dataclass(frozen=True)
class ConvergenceFit:
    """Least-squares line through (log duration, log leakage)."""

    durations: tuple[float, ...]
    leakages: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float
    excluded: tuple[float, ...]


@dataclass(frozen=True)
class TransitionParts:
    """Integration-by-parts split of one transition integral.

    total = boundary + tail; bound is the duration-scaled a-priori bound
    (hbar/T) * (2*max|g| + integral |g'|) with g = coupling/gap.
    """

    total: complex
    boundary: complex
    tail: complex
    bound: float


def coupling(model: ContinuumModel, j0: int, j: int, s: float) -> complex:
    """Frame coupling <phi_j0(s) | d/ds phi_j(s)>."""
    return complex(model.frame_coupling_profile(j0, j, float(s))[0])


def _coupling_scale(model: ContinuumModel, samples: int = 65) -> float:
    rate = np.abs(model.rotation.schedule.angle_rate(np.linspace(0.0, 1.0, samples)))
    return float(rate.max()) * float(np.abs(model.rotation.generator).max())


def _silent_pair(model: ContinuumModel, j0: int, j: int, probes: int = 65) -> bool:
    s = np.linspace(0.0, 1.0, probes)
    probe = float(np.abs(model.frame_coupling_profile(j0, j, s)).max())
    return probe <= _SILENT_REL * _coupling_scale(model)


def mandated_substeps(
    model: ContinuumModel,
    j0: int,
    j: int,
    duration: float,
    s_end: float = 1.0,
    hbar: float = HBAR,
    samples: int = 129,
) -> int:
    """Hard floor: POINTS_PER_PERIOD per period of the fastest phase."""
    s = np.linspace(0.0, s_end, samples)
    de = np.abs(np.asarray(model.energy(j0, s)) - np.asarray(model.energy(j, s)))
    periods = abs(duration) * float(de.max()) * s_end / (2.0 * math.pi * hbar)
    return max(1, math.ceil(POINTS_PER_PERIOD * periods))


def _resolve_substeps(model, j0, j, duration, s_end, hbar, substeps) -> int:
    floor = mandated_substeps(model, j0, j, duration, s_end, hbar)
    if substeps is None:
        return max(_MIN_SUBSTEPS, _OVERSAMPLE * floor)
    if substeps < floor:
        raise StepBudgetError(
            f"substeps={substeps} cannot resolve the transition phase of pair "
            f"({j0}, {j}) at T={duration}",
            floor,
        )
    return int(substeps)


def _pair_mask_allows(model, variant: GeneratorVariant, j0: int, j: int) -> bool:
    return bool(variant.keep_mask(model.size)[j0, j])


def planned_substeps(
    model: ContinuumModel,
    part: BandPartition,
    j0: int,
    duration: float,
    substeps: int | None = None,
    hbar: float = HBAR,
) -> tuple[int, int]:
    """(mandated floor, points actually used) over the exterior of j0's band."""
    floor = 0
    used = 0
    for j in part.exterior(part.band_of(j0)):
        floor = max(floor, mandated_substeps(model, j0, j, duration, 1.0, hbar))
        used = max(used, _resolve_substeps(model, j0, j, duration, 1.0, hbar, substeps))
    return floor, used


def transition_integral(
    model: ContinuumModel,
    variant: GeneratorVariant,
    j0: int,
    j: int,
    duration: float,
    s_end: float = 1.0,
    substeps: int | None = None,
    hbar: float = HBAR,
) -> complex:
    """Oscillatory integral of the masked coupling against the phase mismatch.

    Composite midpoint over [0, s_end] of
    exp[i*T*(alpha_j0 - alpha_j)/hbar] * i*hbar*<phi_j0|dphi_j>.
    Exactly zero for pairs removed by the variant's mask.
    """
    if not 0.0 <= s_end <= 1.0:
        raise ConfigError(f"s_end must lie in [0, 1], got {s_end}")
    if not _pair_mask_allows(model, variant, j0, j):
        return 0.0 + 0.0j
    if s_end == 0.0 or _silent_pair(model, j0, j):
        return 0.0 + 0.0j
    n = _resolve_substeps(model, j0, j, duration, s_end, hbar, substeps)
    h = s_end / n
    sm = (np.arange(n) + 0.5) * h
    dalpha = np.asarray(model.phase(j0, sm)) - np.asarray(model.phase(j, sm))
    weight = np.exp(1j * duration * dalpha / hbar)
    integrand = weight * (1j * hbar * model.frame_coupling_profile(j0, j, sm))
    return complex(h * integrand.sum())


def transition_integral_parts(
    model: ContinuumModel,
    variant: GeneratorVariant,
    j0: int,
    j: int,
    duration: float,
    s_end: float = 1.0,
    substeps: int | None = None,
    hbar: float = HBAR,
    fd_step: float = 1e-5,
) -> TransitionParts:
    """Integration-by-parts rearrangement of transition_integral.

    Valid only when the energy mismatch never vanishes on [0, s_end];
    returns the boundary term, the remaining integral, and the resulting
    O(hbar/T) magnitude bound.
    """
    if duration <= 0.0:
        raise ConfigError("integration by parts needs a positive duration")
    if not 0.0 < s_end <= 1.0:
        raise ConfigError(f"s_end must lie in (0, 1], got {s_end}")
    n = _resolve_substeps(model, j0, j, duration, s_end, hbar, substeps)
    h = s_end / n
    sm = (np.arange(n) + 0.5) * h
    grid = np.concatenate([[0.0], sm, [s_end]])

    de = np.asarray(model.energy(j0, grid)) - np.asarray(model.energy(j, grid))
    # A sign change between grid points means the mismatch vanished there
    # even when no sample lands near zero.
    if float(np.abs(de).min()) <= EPS_CROSS or bool(np.any(de[:-1] * de[1:] < 0.0)):
        raise CrossingError(
            f"energy mismatch of pair ({j0}, {j}) vanishes on [0, {s_end}]; "
            "integration by parts is invalid"
        )

    keep = 1.0 if _pair_mask_allows(model, variant, j0, j) else 0.0

    def masked_coupling(pts: np.ndarray) -> np.ndarray:
        return keep * 1j * hbar * np.asarray(model.frame_coupling_profile(j0, j, pts))

    g = masked_coupling(grid) / de
    # d/ds (coupling/gap): centered difference for the coupling (the
    # schedules are smooth polynomials, safe to probe slightly outside
    # the interval), analytic rate for the gap.
    cp = (masked_coupling(grid + fd_step) - masked_coupling(grid - fd_step)) / (2.0 * fd_step)
    de_rate = np.asarray(model.energy_rate(j0, grid)) - np.asarray(model.energy_rate(j, grid))
    gp = (cp * de - masked_coupling(grid) * de_rate) / (de * de)

    dalpha_end = float(model.phase(j0, s_end)) - float(model.phase(j, s_end))
    pref = hbar / (1j * duration)
    boundary = pref * (np.exp(1j * duration * dalpha_end / hbar) * g[-1] - g[0])

    dalpha_mid = np.asarray(model.phase(j0, sm)) - np.asarray(model.phase(j, sm))
    weight = np.exp(1j * duration * dalpha_mid / hbar)
    tail = -pref * h * np.sum(weight * gp[1:-1])

    bound = (hbar / duration) * (
        2.0 * float(np.abs(g).max()) + float(h * np.abs(gp[1:-1]).sum())
    )
    return TransitionParts(complex(boundary + tail), complex(boundary), complex(tail), bound)


def leakage_exact(
    model: ContinuumModel,
    u: UnitaryFamily | np.ndarray,
    part: BandPartition,
    j0: int,
) -> float:
    """Probability that the evolved j0 state left its band by s=1."""
    u1 = u.final if isinstance(u, UnitaryFamily) else np.asarray(u)
    members = list(part.members(part.band_of(j0)))
    v = u1[:, j0]
    c = model.frame_matrix(1.0)[:, members].conj().T @ v
    eta = 1.0 - float(np.sum(np.abs(c) ** 2))
    # Exact leakage is nonnegative; roundoff may land a hair below zero.
    return max(eta, 0.0)


def leakage_wave_form(
    model: ContinuumModel,
    w: UnitaryFamily | np.ndarray,
    part: BandPartition,
    j0: int,
) -> float:
    """Leakage through the residual operator: weight outside the initial band."""
    w1 = w.final if isinstance(w, UnitaryFamily) else np.asarray(w)
    exterior = list(part.exterior(part.band_of(j0)))
    v = w1[:, j0]
    return float(np.sum(np.abs(v[exterior]) ** 2))


def leakage_first_order(
    model: ContinuumModel,
    part: BandPartition,
    j0: int,
    duration: float,
    substeps: int | None = None,
    hbar: float = HBAR,
) -> float:
    """First-order leakage: summed |transition integral|^2 over the exterior."""
    band = part.band_of(j0)
    variant = kato_state()
    total = 0.0
    for j in part.exterior(band):
        f = transition_integral(model, variant, j0, j, duration, 1.0, substeps, hbar)
        total += abs(f) ** 2
    return total / hbar**2


def transition_weight(
    model: ContinuumModel,
    part: BandPartition,
    j0: int,
    j: int,
    duration: float,
    substeps: int | None = None,
    hbar: float = HBAR,
) -> float:
    """Single-pair transition probability on the physical clock.

    The clock change cancels: T from dt = T ds against 1/T in the
    physical-time coupling, so this is exactly one exterior term of
    leakage_first_order.
    """
    if part.band_of(j) == part.band_of(j0):
        raise ConfigError(f"state {j} is inside the band of {j0}; no transition weight")
    f = transition_integral(model, kato_state(), j0, j, duration, 1.0, substeps, hbar)
    return abs(f) ** 2 / hbar**2


def transition_weight_max_estimate(
    model: ContinuumModel,
    j0: int,
    j: int,
    duration: float | None = None,
    samples: int = 1001,
    hbar: float = HBAR,
) -> float:
    """Peak of |hbar * coupling / gap|^2 over the sweep.

    With a duration, the coupling is converted to the physical clock
    (one factor 1/T), giving the a-priori peak transition probability.
    """
    s = np.linspace(0.0, 1.0, samples)
    de = np.asarray(model.energy(j0, s)) - np.asarray(model.energy(j, s))
    if float(np.abs(de).min()) <= EPS_CROSS or bool(np.any(de[:-1] * de[1:] < 0.0)):
        raise CrossingError(
            f"energy mismatch of pair ({j0}, {j}) vanishes; no finite estimate"
        )
    de = np.abs(de)
    ratio = hbar * np.abs(model.frame_coupling_profile(j0, j, s)) / de
    peak = float(ratio.max()) ** 2
    if duration is not None:
        if duration <= 0:
            raise ConfigError(f"duration must be positive, got {duration}")
        peak /= duration**2
    return peak


def adiabatic_criterion(
    model: ContinuumModel,
    part: BandPartition,
    j0: int,
    s_samples: int = 129,
    threshold: float = 0.1,
) -> CriterionReport:
    """Max exterior coupling against min exterior gap, flagged by threshold."""
    if s_samples < 2:
        raise ConfigError(f"s_samples must be >= 2, got {s_samples}")
    if threshold <= 0:
        raise ConfigError(f"threshold must be positive, got {threshold}")
    band = part.band_of(j0)
    exterior = part.exterior(band)
    s = np.linspace(0.0, 1.0, s_samples)
    e_j0 = np.asarray(model.energy(j0, s))
    max_coupling = 0.0
    min_gap = math.inf
    for j in exterior:
        max_coupling = max(
            max_coupling, float(np.abs(model.frame_coupling_profile(j0, j, s)).max())
        )
        min_gap = min(min_gap, float(np.abs(e_j0 - np.asarray(model.energy(j, s))).min()))
    if min_gap <= 0.0:
        raise CrossingError("criterion undefined: exterior gap reaches zero")
    margin = max_coupling / min_gap
    return CriterionReport(max_coupling, min_gap, margin, threshold, margin <= threshold)


def sweep_leakage(
    model: ContinuumModel,
    part: BandPartition,
    j0: int,
    durations,
    steps: int,
    scheme: str = MIDPOINT,
    variant: GeneratorVariant | None = None,
    jobs: int = 1,
    substeps: int | None = None,
    hbar: float = HBAR,
) -> list[LeakageReport]:
    """One LeakageReport per duration, computed independently per duration.

    The transport unitary is duration-free, so it is integrated once and
    shared read-only across workers.  Results are reduced sorted by
    duration; a failure aborts with the error of the smallest failing
    duration, so the outcome never depends on scheduling.
    """
    durations = [float(t) for t in durations]
    if not durations:
        raise ConfigError("sweep needs at least one duration")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    variant = variant if variant is not None else kato_state()
    band = part.band_of(j0)
    model.frame_matrix(0.5)  # warm the cached eigendecomposition before fan-out
    a1 = final_intertwiner(model, variant, steps, scheme, hbar)

    def one(duration: float) -> LeakageReport:
        u1 = final_propagator(model, PropagationConfig(duration, steps, scheme, hbar))
        eta = leakage_exact(model, u1, part, j0)
        eta_hat = leakage_first_order(model, part, j0, duration, substeps, hbar)
        phi1 = phase_operator(model, duration, 1.0, hbar)
        w1 = phi1.conj().T @ (a1.conj().T @ u1)
        return LeakageReport(
            duration, j0, band, eta, eta_hat, deviation_from_identity(w1)
        )

    results: dict[float, LeakageReport] = {}
    failures: dict[float, Exception] = {}
    if jobs == 1:
        for t in durations:
            try:
                results[t] = one(t)
            except Exception as exc:  # reduced deterministically below
                failures[t] = exc
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {t: pool.submit(one, t) for t in durations}
            for t, fut in futures.items():
                try:
                    results[t] = fut.result()
                except Exception as exc:
                    failures[t] = exc
    if failures:
        raise failures[min(failures)]
    return [results[t] for t in sorted(results)]


def fit_power_law(durations, values) -> ConvergenceFit:
    """Least-squares line through (log T, log value); zeros are excluded.

    Exact zeros are a theorem (nothing leaked), not data; they are
    reported in `excluded` and never log-transformed.
    """
    durations = [float(t) for t in durations]
    values = [float(v) for v in values]
    if len(durations) != len(values):
        raise ConfigError("durations and values differ in length")
    excluded = tuple(t for t, v in zip(durations, values) if v == 0.0)
    kept = [(t, v) for t, v in zip(durations, values) if v != 0.0]
    if not kept:
        raise AnalysisError(
            "trivially adiabatic: every leakage is exactly zero, nothing to fit"
        )
    if any(v < 0 for _, v in kept):
        raise AnalysisError("negative leakage cannot enter a log-log fit")
    if len(kept) < 3:
        raise AnalysisError(f"need at least 3 nonzero points, got {len(kept)}")
    x = np.log([t for t, _ in kept])
    y = np.log([v for _, v in kept])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return ConvergenceFit(
        tuple(t for t, _ in kept),
        tuple(v for _, v in kept),
        float(slope),
        float(intercept),
        r_squared,
        excluded,
    )


def convergence_study(
    model: ContinuumModel,
    part: BandPartition,
    j0: int,
    durations,
    steps: int,
    scheme: str = MIDPOINT,
    variant: GeneratorVariant | None = None,
    jobs: int = 1,
    margin: float | None = None,
    substeps: int | None = None,
    hbar: float = HBAR,
) -> ConvergenceFit:
    """Fit the decay exponent of exact leakage across a duration sweep."""
    durations = [float(t) for t in durations]
    if len(durations) < 3:
        raise ConfigError(f"convergence study needs >= 3 durations, got {len(durations)}")
    if margin is not None:
        gap = virtual_gap(model, part, part.band_of(j0))
        for t in sorted(durations):
            if gap * t < margin:
                raise ConfigError(
                    f"duration T={t} violates the gap margin: gap*T = {gap * t:.3g} < {margin}"
                )
    reports = sweep_leakage(
        model, part, j0, durations, steps, scheme, variant, jobs, substeps, hbar
    )
    return fit_power_law(
        [r.duration for r in reports], [r.eta_exact for r in reports]
    )
