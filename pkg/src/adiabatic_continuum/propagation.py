"""Unitary families of the adiabatic construction.

Four families on a shared s-grid: the physical propagator (scaled by the
duration T), the transport unitary generated by the masked frame-velocity
generator (T-independent), the dynamical-phase operator (diagonal in the
initial frame), and the residual wave operator obtained by composition.

Every step exponential goes through a Hermitian eigendecomposition, so all
families are unitary to roundoff regardless of step count; step budgets
only control accuracy, never stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bands import BandPartition
from .errors import ConfigError, StepBudgetError
from .spectral import HBAR, ContinuumModel

MIDPOINT = "midpoint_exponential"
CF4 = "fourth_order_commutator_free"
SCHEMES = (MIDPOINT, CF4)

VARIANTS = ("kato_state", "weyl_band")

# Gauss-Legendre nodes on [0,1] and the commutator-free order-4 weights.
# First exponential weights the earlier node more (a1 > a2); swapping the
# weights demotes the scheme to order 2.
_C1 = 0.5 - math.sqrt(3.0) / 6.0
_C2 = 0.5 + math.sqrt(3.0) / 6.0
_A1 = 0.25 + math.sqrt(3.0) / 6.0
_A2 = 0.25 - math.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class PropagationConfig:
    """How to integrate one family: duration scale, resolution, scheme."""

    duration: float
    steps: int
    scheme: str = MIDPOINT
    hbar: float = HBAR

    def __post_init__(self):
        if self.duration < 0:
            raise ConfigError(f"duration must be >= 0, got {self.duration}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive")


@dataclass(frozen=True)
class GeneratorVariant:
    """Which couplings the transport generator keeps.

    kato_state zeroes only the per-state diagonal (rank-1 windows);
    weyl_band zeroes every same-band block of a fixed partition, which is
    the symmetric reading that keeps the generator Hermitian.
    """

    kind: str
    partition: BandPartition | None = None

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ConfigError(f"unknown generator variant {self.kind!r}")
        if self.kind == "weyl_band" and self.partition is None:
            raise ConfigError("weyl_band variant needs a band partition")
        if self.kind == "kato_state" and self.partition is not None:
            raise ConfigError("kato_state variant takes no partition")

    def keep_mask(self, n: int) -> np.ndarray:
        """Boolean matrix: True where the coupling survives the mask."""
        if self.kind == "kato_state":
            return ~np.eye(n, dtype=bool)
        if self.partition.grid_size != n:
            raise ConfigError(
                f"variant partition covers {self.partition.grid_size} states, model has {n}"
            )
        labels = np.empty(n, dtype=int)
        for b, members in enumerate(self.partition.bands):
            labels[list(members)] = b
        return labels[:, None] != labels[None, :]


def kato_state() -> GeneratorVariant:
    return GeneratorVariant("kato_state")


def weyl_band(part: BandPartition) -> GeneratorVariant:
    return GeneratorVariant("weyl_band", part)


@dataclass(eq=False)
class UnitaryFamily:
    """One unitary per node of a uniform s-grid on [0, 1]."""

    kind: str
    s_nodes: np.ndarray
    matrices: np.ndarray
    variant: GeneratorVariant | None = None

    def __post_init__(self):
        if self.kind not in ("U", "A", "Phi", "W"):
            raise ConfigError(f"unknown family kind {self.kind!r}")
        if self.matrices.shape[0] != self.s_nodes.shape[0]:
            raise ConfigError("family has a matrix count different from its node count")

    def __len__(self) -> int:
        return len(self.s_nodes)

    @property
    def final(self) -> np.ndarray:
        return self.matrices[-1]

    def index_of(self, s: float) -> int:
        i = int(round(s * (len(self.s_nodes) - 1)))
        i = min(max(i, 0), len(self.s_nodes) - 1)
        if abs(self.s_nodes[i] - s) > 1e-12:
            raise ConfigError(f"s={s} is not a node of this family's grid")
        return i

    def at(self, s: float) -> np.ndarray:
        return self.matrices[self.index_of(s)]

    def unitarity_defect(self) -> float:
        """max over nodes of the entrywise defect of M^dag M from identity."""
        n = self.matrices.shape[-1]
        eye = np.eye(n)
        worst = 0.0
        for lo in range(0, len(self), 2048):
            block = self.matrices[lo : lo + 2048]
            prod = np.matmul(block.conj().swapaxes(-1, -2), block)
            worst = max(worst, float(np.abs(prod - eye).max()))
        return worst


def _phase_exp(h: np.ndarray, factor: float) -> np.ndarray:
    """exp(-1j * factor * h) for Hermitian h, exactly unitary."""
    w, p = np.linalg.eigh(h)
    return (p * np.exp(-1j * factor * w)) @ p.conj().T


# ---- step budgets ------------------------------------------------------


def propagator_step_budget(model: ContinuumModel, duration: float, hbar: float = HBAR, samples: int = 65) -> int:
    """Minimum steps keeping each propagator step's phase swing <= pi/4."""
    scale = abs(duration) * model.max_energy(samples) / hbar
    return max(1, math.ceil(scale * 4.0 / math.pi))


def generator_norm(model: ContinuumModel, variant: GeneratorVariant, samples: int = 65) -> float:
    worst = 0.0
    for s in np.linspace(0.0, 1.0, samples):
        k = generator(model, variant, float(s))
        worst = max(worst, float(np.abs(np.linalg.eigvalsh(k)).max()))
    return worst


def intertwiner_step_budget(model: ContinuumModel, variant: GeneratorVariant, hbar: float = HBAR, samples: int = 65) -> int:
    """Step budget for the transport unitary (duration-free)."""
    scale = generator_norm(model, variant, samples) / hbar
    return max(1, math.ceil(scale * 4.0 / math.pi))


# ---- generators --------------------------------------------------------


def frame_velocity_overlaps(model: ContinuumModel, s: float) -> np.ndarray:
    """Anti-Hermitian overlap matrix M_ab = <phi_a(s) | d/ds phi_b(s)>."""
    q = model.frame_matrix(s)
    return q.conj().T @ model.frame_velocity_matrix(s)


def generator_in_frame(model: ContinuumModel, variant: GeneratorVariant, s: float, hbar: float = HBAR) -> np.ndarray:
    """Generator elements in the instantaneous frame: i*hbar*(masked M)."""
    m = frame_velocity_overlaps(model, s)
    keep = variant.keep_mask(model.size)
    return 1j * hbar * np.where(keep, m, 0.0)


def generator(model: ContinuumModel, variant: GeneratorVariant, s: float, hbar: float = HBAR) -> np.ndarray:
    """Transport generator K(s), Hermitian by the symmetric masking.

    Equals i*hbar * sum_j (I - P_win(j)) |dphi_j><phi_j| with rank-1
    windows (kato_state) or fixed-partition bands (weyl_band).
    """
    q = model.frame_matrix(s)
    masked = generator_in_frame(model, variant, s, hbar)
    return q @ masked @ q.conj().T


@dataclass(frozen=True)
class LiteralWindowDiagnostic:
    """Hermiticity defect of the asymmetric sliding-window generator.

    Zeroing couplings only toward the m indices at and above each state
    (a one-sided window) breaks Hermiticity on a grid; this diagnostic
    measures by how much.  The shipped variants use symmetric masks.
    """

    window: int
    s: float
    norm: float
    hermiticity_defect: float

    @property
    def relative_defect(self) -> float:
        return self.hermiticity_defect / self.norm if self.norm > 0 else 0.0


def literal_window_hermiticity(model: ContinuumModel, window: int, s: float, hbar: float = HBAR) -> LiteralWindowDiagnostic:
    if not 1 <= window <= model.size:
        raise ConfigError(f"window must be in [1, {model.size}], got {window}")
    m = frame_velocity_overlaps(model, s)
    n = model.size
    rows = np.arange(n)[:, None]
    cols = np.arange(n)[None, :]
    keep = ~((rows >= cols) & (rows < np.minimum(cols + window, n)))
    q = model.frame_matrix(s)
    k = 1j * hbar * (q @ np.where(keep, m, 0.0) @ q.conj().T)
    norm = float(np.abs(k).max())
    defect = float(np.abs(k - k.conj().T).max())
    return LiteralWindowDiagnostic(window, float(s), norm, defect)


# ---- evolutions --------------------------------------------------------


def _propagator_steps(model: ContinuumModel, config: PropagationConfig):
    """Yield U after each step of iħ dU/ds = T H(s) U, midpoint or CF4."""
    n = model.size
    ds = 1.0 / config.steps
    scale = config.duration / config.hbar
    u = np.eye(n, dtype=complex)
    yield u
    for step in range(config.steps):
        s0 = step * ds
        if config.scheme == MIDPOINT:
            sm = s0 + 0.5 * ds
            q = model.frame_matrix(sm)
            phases = np.exp(-1j * scale * ds * np.asarray(model.energies(sm)))
            u = q @ (phases[:, None] * (q.conj().T @ u))
        else:
            h1 = model.hamiltonian(s0 + _C1 * ds)
            h2 = model.hamiltonian(s0 + _C2 * ds)
            u = _phase_exp(_A2 * h1 + _A1 * h2, scale * ds) @ (
                _phase_exp(_A1 * h1 + _A2 * h2, scale * ds) @ u
            )
        yield u


def _check_propagator_budget(model: ContinuumModel, config: PropagationConfig):
    required = propagator_step_budget(model, config.duration, config.hbar)
    if config.steps < required:
        raise StepBudgetError(
            f"steps={config.steps} cannot resolve duration T={config.duration}",
            required,
        )


def evolve_propagator(model: ContinuumModel, config: PropagationConfig) -> UnitaryFamily:
    """Physical propagator family U on steps+1 uniform nodes."""
    _check_propagator_budget(model, config)
    s_nodes = np.linspace(0.0, 1.0, config.steps + 1)
    matrices = np.empty((config.steps + 1, model.size, model.size), dtype=complex)
    for i, u in enumerate(_propagator_steps(model, config)):
        matrices[i] = u
    return UnitaryFamily("U", s_nodes, matrices)


def final_propagator(model: ContinuumModel, config: PropagationConfig) -> np.ndarray:
    """U at s=1 only; streaming variant for memory-lean sweeps."""
    _check_propagator_budget(model, config)
    u = None
    for u in _propagator_steps(model, config):
        pass
    return u


def _intertwiner_steps(model: ContinuumModel, variant: GeneratorVariant, steps: int, scheme: str, hbar: float):
    n = model.size
    ds = 1.0 / steps
    a = np.eye(n, dtype=complex)
    yield a
    for step in range(steps):
        s0 = step * ds
        if scheme == MIDPOINT:
            k = generator(model, variant, s0 + 0.5 * ds, hbar)
            a = _phase_exp(k, ds / hbar) @ a
        else:
            k1 = generator(model, variant, s0 + _C1 * ds, hbar)
            k2 = generator(model, variant, s0 + _C2 * ds, hbar)
            a = _phase_exp(_A2 * k1 + _A1 * k2, ds / hbar) @ (
                _phase_exp(_A1 * k1 + _A2 * k2, ds / hbar) @ a
            )
        yield a


def _check_intertwiner_budget(model: ContinuumModel, variant: GeneratorVariant, steps: int, hbar: float):
    required = intertwiner_step_budget(model, variant, hbar)
    if steps < required:
        raise StepBudgetError(
            f"steps={steps} cannot resolve the transport generator", required
        )


def evolve_intertwiner(
    model: ContinuumModel,
    variant: GeneratorVariant,
    steps: int,
    scheme: str = MIDPOINT,
    hbar: float = HBAR,
) -> UnitaryFamily:
    """Transport family A solving iħ dA/ds = K(s) A; duration-free."""
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; pick one of {SCHEMES}")
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    _check_intertwiner_budget(model, variant, steps, hbar)
    s_nodes = np.linspace(0.0, 1.0, steps + 1)
    matrices = np.empty((steps + 1, model.size, model.size), dtype=complex)
    for i, a in enumerate(_intertwiner_steps(model, variant, steps, scheme, hbar)):
        matrices[i] = a
    return UnitaryFamily("A", s_nodes, matrices, variant=variant)


def final_intertwiner(
    model: ContinuumModel,
    variant: GeneratorVariant,
    steps: int,
    scheme: str = MIDPOINT,
    hbar: float = HBAR,
) -> np.ndarray:
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; pick one of {SCHEMES}")
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    _check_intertwiner_budget(model, variant, steps, hbar)
    a = None
    for a in _intertwiner_steps(model, variant, steps, scheme, hbar):
        pass
    return a


def intertwine_residual(a_family: UnitaryFamily, model: ContinuumModel, part: BandPartition) -> float:
    """max over bands and nodes of || P_band(s) − A(s) P_band(0) A(s)^dag ||_2.

    P_band(0) selects columns (the frame is the computational basis at
    s=0), so the transported projector is A_band A_band^dag.
    """
    if part.grid_size != model.size:
        raise ConfigError("partition and model grid sizes disagree")
    worst = 0.0
    for members in part.bands:
        idx = list(members)
        ab = a_family.matrices[:, :, idx]
        transported = np.matmul(ab, ab.conj().swapaxes(-1, -2))
        qb = model.frame_slices_profile(idx, a_family.s_nodes)
        target = np.matmul(qb, qb.conj().swapaxes(-1, -2))
        diff = transported - target
        sv = np.linalg.svd(diff, compute_uv=False)
        worst = max(worst, float(sv[..., 0].max()))
    return worst


# ---- phases and the wave operator --------------------------------------


def dynamical_phase(model: ContinuumModel, j: int, s: float) -> float:
    """Accumulated energy integral of grid state j up to s (closed form)."""
    return float(model.phase(j, s))


def phase_operator(model: ContinuumModel, duration: float, s: float, hbar: float = HBAR) -> np.ndarray:
    """Dynamical-phase unitary at s, diagonal in the initial frame."""
    alphas = np.array([model.phase(j, s) for j in range(model.size)], dtype=float)
    phases = np.exp(-1j * duration * alphas / hbar)
    q0 = model.frame_matrix(0.0)
    return (q0 * phases) @ q0.conj().T


def phase_family(model: ContinuumModel, duration: float, steps: int, hbar: float = HBAR) -> UnitaryFamily:
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    s_nodes = np.linspace(0.0, 1.0, steps + 1)
    alphas = np.stack([np.asarray(model.phase(j, s_nodes)) for j in range(model.size)], axis=1)
    phases = np.exp(-1j * duration * alphas / hbar)
    matrices = np.zeros((steps + 1, model.size, model.size), dtype=complex)
    idx = np.arange(model.size)
    matrices[:, idx, idx] = phases
    return UnitaryFamily("Phi", s_nodes, matrices)


def wave_operator(u: UnitaryFamily, a: UnitaryFamily, phi: UnitaryFamily) -> UnitaryFamily:
    """Residual family W = Phi^dag A^dag U on the shared s-grid."""
    for fam, kind in ((u, "U"), (a, "A"), (phi, "Phi")):
        if fam.kind != kind:
            raise ConfigError(f"expected a {kind} family, got {fam.kind}")
    if not (
        np.array_equal(u.s_nodes, a.s_nodes) and np.array_equal(u.s_nodes, phi.s_nodes)
    ):
        raise ConfigError("families do not share one s-grid")
    am = np.matmul(a.matrices.conj().swapaxes(-1, -2), u.matrices)
    wm = np.matmul(phi.matrices.conj().swapaxes(-1, -2), am)
    return UnitaryFamily("W", u.s_nodes.copy(), wm)


def deviation_from_identity(matrix: np.ndarray) -> float:
    """Spectral-norm distance from the identity."""
    n = matrix.shape[-1]
    return float(np.linalg.svd(matrix - np.eye(n), compute_uv=False)[0])


def rotating_picture(model: ContinuumModel, a_family: UnitaryFamily, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Conjugated pair (A^dag H A, A^dag K A) at one node of A's grid."""
    if a_family.variant is None:
        raise ConfigError("rotating picture needs a transport family with a variant")
    a = a_family.at(s)
    h = model.hamiltonian(s)
    k = generator(model, a_family.variant, s)
    return a.conj().T @ h @ a, a.conj().T @ k @ a
