"""Band partitions, packets, and differential projectors over the grid.

A band is a contiguous run of grid indices standing in for a small spectral
window.  Projectors onto the rotating frame vectors of a band are exact
rank-m orthogonal projectors, and each band carries a virtual gap: the
smallest distance between in-band and exterior energies over the sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, CrossingError, NoExteriorError, NoFeasibleBandError
from .spectral import EPS_CROSS, ContinuumModel, KGrid


@dataclass(frozen=True)
class BandPartition:
    """Contiguous bands of nominal size m; the last band absorbs any remainder.

    All bands have exactly m indices except possibly the last, whose size
    lies in [m, 2m-1].  This keeps every band at least m wide so gap
    planning stays conservative.
    """

    grid_size: int
    band_size: int

    def __post_init__(self):
        if not 1 <= self.band_size <= self.grid_size:
            raise ConfigError(
                f"band size must be in [1, {self.grid_size}], got {self.band_size}"
            )

    @cached_property
    def bands(self) -> tuple[tuple[int, ...], ...]:
        n_full = self.grid_size // self.band_size
        edges = [i * self.band_size for i in range(n_full)] + [self.grid_size]
        return tuple(tuple(range(a, b)) for a, b in zip(edges[:-1], edges[1:]))

    def __len__(self) -> int:
        return len(self.bands)

    def band_of(self, j: int) -> int:
        """Index of the band containing grid node j."""
        if not 0 <= j < self.grid_size:
            raise ConfigError(f"grid index {j} outside [0, {self.grid_size})")
        return min(j // self.band_size, len(self.bands) - 1)

    def members(self, band: int) -> tuple[int, ...]:
        if not 0 <= band < len(self.bands):
            raise ConfigError(f"band index {band} outside [0, {len(self.bands)})")
        return self.bands[band]

    def exterior(self, band: int) -> tuple[int, ...]:
        inside = set(self.members(band))
        out = tuple(j for j in range(self.grid_size) if j not in inside)
        if not out:
            raise NoExteriorError(
                f"band {band} covers the whole grid ({self.grid_size} nodes); "
                "no exterior states exist"
            )
        return out


def partition(grid: KGrid, m: int) -> BandPartition:
    return BandPartition(grid.size, m)


@dataclass(frozen=True)
class WeylPacket:
    """Uniform-weight packet over one band of frame vectors.

    `coefficients` live in the instantaneous frame basis (support confined
    to the band); `vector` is the same state in the computational basis.
    """

    band: int
    s: float
    coefficients: np.ndarray
    vector: np.ndarray


@dataclass(frozen=True)
class DifferentialProjector:
    """Snapshot projector onto an index window of frame vectors at one s.

    Carries the N x m frame slice; the full projector matrix is derived,
    which keeps idempotency exact up to a single matrix product.
    """

    indices: tuple[int, ...]
    s: float
    frame_slice: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.indices)

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.frame_slice @ self.frame_slice.conj().T


@dataclass(frozen=True)
class WeylProjection:
    """Result of projecting a state onto one band."""

    indices: tuple[int, ...]
    vector: np.ndarray
    coefficients: np.ndarray


def projector(model: ContinuumModel, indices, s: float) -> DifferentialProjector:
    """Projector onto an arbitrary nonempty set of frame vectors at s.

    Accepts any index window (bands or the sliding windows of the
    generator construction); duplicates are rejected.
    """
    idx = tuple(int(j) for j in indices)
    if not idx:
        raise ConfigError("projector needs at least one index")
    if len(set(idx)) != len(idx):
        raise ConfigError(f"duplicate indices in projector window: {idx}")
    if min(idx) < 0 or max(idx) >= model.size:
        raise ConfigError(f"projector indices {idx} outside [0, {model.size})")
    frame_slice = model.frame_matrix(s)[:, list(idx)]
    return DifferentialProjector(idx, float(s), frame_slice)


def band_projector(model: ContinuumModel, part: BandPartition, band: int, s: float) -> DifferentialProjector:
    return projector(model, part.members(band), s)


def project(proj: DifferentialProjector, psi: np.ndarray) -> WeylProjection:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (proj.frame_slice.shape[0],):
        raise ConfigError(
            f"state has shape {psi.shape}, expected ({proj.frame_slice.shape[0]},)"
        )
    coeff = proj.frame_slice.conj().T @ psi
    return WeylProjection(proj.indices, proj.frame_slice @ coeff, coeff)


def weyl_packet(model: ContinuumModel, part: BandPartition, band: int, s: float) -> WeylPacket:
    """Equal-weight normalized packet over a band's frame vectors."""
    members = part.members(band)
    coeff = np.zeros(model.size, dtype=complex)
    coeff[list(members)] = 1.0 / np.sqrt(len(members))
    vector = model.frame_matrix(s)[:, list(members)].sum(axis=1) / np.sqrt(len(members))
    return WeylPacket(band, float(s), coeff, vector)


def pair_gap(model: ContinuumModel, inside, outside, samples: int = 129) -> float:
    """Smallest |E_in - E_out| over sampled s for explicit index sets."""
    inside = list(inside)
    outside = list(outside)
    if not inside or not outside:
        raise ConfigError("pair_gap needs nonempty index sets on both sides")
    s = np.linspace(0.0, 1.0, samples)
    e = np.asarray(model.energies(s), dtype=float)
    return float(np.abs(e[:, inside, None] - e[:, None, outside]).min())


def virtual_gap(model: ContinuumModel, part: BandPartition, band: int, samples: int = 129) -> float:
    """Smallest in-band to exterior energy distance over s in [0, 1]."""
    return pair_gap(model, part.members(band), part.exterior(band), samples)


def minimal_time(gap: float, margin: float) -> float:
    """Shortest duration T with gap * T >= margin."""
    if gap <= 0.0:
        raise CrossingError(f"virtual gap {gap:.3e} is not positive")
    if margin <= 0.0:
        raise ConfigError(f"margin must be positive, got {margin}")
    return margin / gap


# Feasibility at the exact gap*T = margin boundary must not flip on the
# few ulps the grid spacing loses to rounding; compare with relative slack.
FEASIBLE_SLACK = 1e-9


def feasible_band_size(
    model: ContinuumModel,
    duration: float,
    margin: float = 1.0,
    samples: int = 129,
) -> int:
    """Smallest band size whose worst band satisfies gap * duration >= margin."""
    if duration <= 0.0:
        raise ConfigError(f"duration must be positive, got {duration}")
    for m in range(1, model.size):
        part = BandPartition(model.size, m)
        if len(part) < 2:
            # The tail band absorbed everything; larger m only coarsens further.
            break
        gaps = [virtual_gap(model, part, b, samples) for b in range(len(part))]
        if min(gaps) * duration >= margin * (1.0 - FEASIBLE_SLACK):
            return m
    raise NoFeasibleBandError(
        f"no band size in [1, {model.size - 1}] reaches gap*T >= {margin} at T={duration}"
    )


@dataclass(frozen=True)
class CrossingReport:
    """Outcome of the no-crossing scan for every band of a partition.

    `ok` is true iff every band keeps min separation above eps and no
    in-band/exterior energy pair changes sign between adjacent samples.
    A failed check is a report, not an exception.
    """

    ok: bool
    eps: float
    samples: int
    band_separations: tuple[float, ...]
    min_separation: float
    worst_band: int
    crossing_interval: tuple[float, float] | None


def crossing_report(
    model: ContinuumModel,
    part: BandPartition,
    s_samples: int = 257,
    eps: float = EPS_CROSS,
) -> CrossingReport:
    """Scan in-band vs exterior energies for touching or sign-crossing.

    Sign changes of E_in - E_out between adjacent samples are flagged even
    when no sample lands on the crossing itself; the first offending
    s-interval is reported.
    """
    if s_samples < 2:
        raise ConfigError(f"s_samples must be >= 2, got {s_samples}")
    s = np.linspace(0.0, 1.0, s_samples)
    e = np.asarray(model.energies(s), dtype=float)

    separations: list[float] = []
    min_sep = np.inf
    worst = 0
    interval: tuple[float, float] | None = None
    ok = True
    for b in range(len(part)):
        inside = list(part.members(b))
        try:
            outside = list(part.exterior(b))
        except NoExteriorError:
            # Single band covering the grid: vacuously crossing-free.
            separations.append(np.inf)
            continue
        d = e[:, inside, None] - e[:, None, outside]
        sep = float(np.abs(d).min())
        separations.append(sep)
        if sep < min_sep:
            min_sep = sep
            worst = b
        if sep <= eps:
            ok = False
        flips = (d[:-1] * d[1:] < 0.0).any(axis=(1, 2))
        if flips.any():
            ok = False
            if interval is None:
                t = int(np.argmax(flips))
                interval = (float(s[t]), float(s[t + 1]))

    if not np.isfinite(min_sep):
        min_sep = np.inf
    return CrossingReport(
        ok=ok,
        eps=eps,
        samples=s_samples,
        band_separations=tuple(separations),
        min_separation=float(min_sep),
        worst_band=worst,
        crossing_interval=interval,
    )


def validate_noncrossing(
    model: ContinuumModel,
    part: BandPartition,
    s_samples: int = 257,
    eps: float = EPS_CROSS,
) -> CrossingReport:
    """Raising wrapper around crossing_report for fail-fast pipelines."""
    report = crossing_report(model, part, s_samples, eps)
    if not report.ok:
        where = (
            f" in s-interval [{report.crossing_interval[0]:.4f}, {report.crossing_interval[1]:.4f}]"
            if report.crossing_interval
            else ""
        )
        raise CrossingError(
            f"band {report.worst_band} approaches or crosses its exterior"
            f"{where}: min separation {report.min_separation:.3e} (eps {eps:.1e})"
        )
    return report
