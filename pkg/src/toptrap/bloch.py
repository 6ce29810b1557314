"""Dark-state polarimetry: 13-state master-equation pulse simulator.

Models a short resonant pulse on the Rb-87 D1 F=2 -> F'=2 line for atoms
held in the stretched (F=2, m=2) ground state.  Pure sigma+ light cannot
scatter (no m'=3 level); any pi or sigma- admixture drives loss, partially
suppressed at high intensity by a coherent dark superposition of the m=2
and m=1 ground states.  The per-pulse loss is the integrated
photon-scattering probability, on the grounds that one scattered photon
removes an atom from the condensate.

State ordering: F=2 ground m=-2..2 (indices 0-4), F=1 ground m=-1..1
(5-7), F'=2 excited m=-2..2 (8-12).  Scattering that branches back to
F=2 removes the atom (tracked in a scalar loss bucket); branching to F=1
keeps the population in the density matrix as an inert sink, so
trace(rho) plus the bucket stays one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import constants as C
from ._kernels import integrate_pulse
from .angular import clebsch_gordan, hyperfine_strength
from .errors import IntegratorStepFailure, NonlinearRegime, StepUnderflow
from .numerics import weighted_linear_least_squares
from .polarization import BeamGeometry, StokesVector, projections

__all__ = [
    "DensityMatrix",
    "IntensityScan",
    "KappaResult",
    "LevelSystem",
    "PulseSpec",
    "alignment_scan",
    "build_level_system",
    "calibrate_kappa",
    "infer_impurity",
    "level_system_summary",
    "loss_vs_intensity",
    "simulate_pulse",
    "stretched_sigma_minus_detuning",
    "survival",
    "two_level_reference_epsilon",
]

N_STATES = 13

#: (F, m) labels in storage order.
STATE_LABELS = tuple(
    [(2, m) for m in range(-2, 3)] + [(1, m) for m in range(-1, 2)] + [("2p", m) for m in range(-2, 3)]
)

_GROUND_F2 = range(0, 5)
_GROUND_F1 = range(5, 8)
_EXCITED = range(8, 13)

#: Index of the trapped (F=2, m=2) state.
STRETCHED_INDEX = 4

# D1 nuclear spin and electronic Js
_I_NUC = 1.5
_J_GROUND = 0.5
_J_EXCITED = 0.5

# Excited lifetimes integrated after the pulse so leftover excited
# population finishes scattering (residual e^-12 ~ 6e-6).
_SETTLE_LIFETIMES = 12.0


@dataclass(frozen=True)
class LevelSystem:
    """Couplings, shifts, and decay channels of the 13-state system.

    All rates and shifts in rad/s.  ``couplings`` maps polarization
    q = +1, -1, 0 to the dimensionless dipole matrix (excited row, ground
    column, Clebsch-Gordan normalized).  ``branching[e, g]`` is the
    probability that a decay from excited state ``e`` lands on ground
    state ``g``; each row sums to one.  ``refill`` holds the three jump
    operators (one per emitted polarization) that return population to
    the F=1 sink states.
    """

    b_field: float
    detuning: float
    gamma: float
    isat: float
    zeeman: np.ndarray
    h0_diag: np.ndarray
    couplings: dict
    branching: np.ndarray
    refill: np.ndarray
    labels: tuple = STATE_LABELS

    @property
    def decay_rates(self) -> np.ndarray:
        d = np.zeros(N_STATES)
        d[list(_EXCITED)] = self.gamma
        return d


def stretched_sigma_minus_detuning(b_field: float) -> float:
    """Detuning (rad/s, from the pi reference) that puts the laser on the
    (F=2, m=2) -> (F'=2, m'=1) sigma- transition.

    This is the documented operating point for the polarimetry
    calibrations: it reproduces the observed loss-curve shape (maximum
    near 100 I_S for both impurity kinds) and the measured ratio of the
    sigma-/pi loss slopes.  Equals -(1/6) mu_B B / hbar.
    """
    return -(1.0 / 6.0) * C.BOHR_MAGNETON * b_field * C.GAUSS_TO_TESLA / C.HBAR


def build_level_system(
    b_field: float,
    detuning: float = 0.0,
    gamma: float = C.GAMMA_D1,
    isat: float = C.ISAT_D1,
) -> LevelSystem:
    """Assemble the level system at field ``b_field`` (gauss).

    ``detuning`` (rad/s) is measured from the Zeeman-shifted
    (F=2, m=2) -> (F'=2, m'=2) pi transition; zero means the laser is
    resonant with the trapped state's pi line.  The polarimetry
    calibrations run at ``stretched_sigma_minus_detuning``.
    """
    if b_field < 0:
        raise ValueError("field magnitude must be non-negative")
    mu_b = C.BOHR_MAGNETON * b_field * C.GAUSS_TO_TESLA / C.HBAR  # rad/s per unit gF*m

    zeeman = np.zeros(N_STATES)
    for i, (f, m) in enumerate(STATE_LABELS):
        gf = {2: C.GF_GROUND_F2, 1: C.GF_GROUND_F1, "2p": C.GF_EXCITED_FP2}[f]
        zeeman[i] = gf * m * mu_b

    # Rotating frame at the laser frequency; the reference transition
    # (2,2)->(2',2) is resonant at zero detuning.
    delta_ref = zeeman[12] - zeeman[STRETCHED_INDEX]
    h0 = zeeman.copy()
    h0[list(_EXCITED)] -= delta_ref + detuning

    couplings = {}
    for q in (+1, -1, 0):
        c = np.zeros((N_STATES, N_STATES))
        for g in _GROUND_F2:
            _, mg = STATE_LABELS[g]
            me = mg + q
            if abs(me) <= 2:
                e = 8 + me + 2
                c[e, g] = clebsch_gordan(2, mg, 1, q, 2, me)
        couplings[q] = c

    branching = np.zeros((N_STATES, N_STATES))
    for e in _EXCITED:
        _, me = STATE_LABELS[e]
        for g in list(_GROUND_F2) + list(_GROUND_F1):
            fg, mg = STATE_LABELS[g]
            q = me - mg
            if abs(q) <= 1:
                s = hyperfine_strength(_J_EXCITED, _J_GROUND, _I_NUC, 2, fg)
                branching[e, g] = s * clebsch_gordan(fg, mg, 1, q, 2, me) ** 2

    # Jump operators into the F=1 sink, one per emitted polarization so
    # that coherences between excited states refill correctly.
    s_f1 = hyperfine_strength(_J_EXCITED, _J_GROUND, _I_NUC, 2, 1)
    refill = np.zeros((3, N_STATES, N_STATES))
    for k, q in enumerate((-1, 0, +1)):
        for e in _EXCITED:
            _, me = STATE_LABELS[e]
            mg = me - q
            if abs(mg) <= 1:
                g = 5 + mg + 1
                refill[k, g, e] = np.sqrt(gamma * s_f1) * clebsch_gordan(1, mg, 1, q, 2, me)

    return LevelSystem(
        b_field=float(b_field),
        detuning=float(detuning),
        gamma=float(gamma),
        isat=float(isat),
        zeeman=zeeman,
        h0_diag=h0,
        couplings=couplings,
        branching=branching,
        refill=refill,
    )


@dataclass
class DensityMatrix:
    """13x13 complex density matrix with its validity checks."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (N_STATES, N_STATES):
            raise ValueError(f"density matrix must be {N_STATES}x{N_STATES}")
        self.matrix = m

    @classmethod
    def pure(cls, index: int) -> "DensityMatrix":
        m = np.zeros((N_STATES, N_STATES), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    @classmethod
    def stretched(cls) -> "DensityMatrix":
        """The trapped (F=2, m=2) state."""
        return cls.pure(STRETCHED_INDEX)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def validate(self, tol: float = 1e-9):
        if self.hermiticity_defect() > 1e-10 + tol:
            raise ValueError("density matrix not Hermitian")
        if not -tol <= self.trace <= 1.0 + tol:
            raise ValueError("trace outside [0, 1]")
        if self.min_eigenvalue() < -tol:
            raise ValueError("negative eigenvalue")


@dataclass(frozen=True)
class PulseSpec:
    """One square light pulse.

    ``intensity`` is the total intensity in units of the saturation
    intensity; ``fractions`` are the polarization intensity fractions
    (|E_+|^2, |E_-|^2, |E_pi|^2) and must sum to one.
    """

    duration: float = 120e-9
    intensity: float = 100.0
    fractions: tuple[float, float, float] = (1.0, 0.0, 0.0)
    n_pulses: int = 1280

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.intensity < 0:
            raise ValueError("intensity must be non-negative")
        f = np.asarray(self.fractions, dtype=float)
        if np.any(f < 0) or abs(f.sum() - 1.0) > 1e-12:
            raise ValueError("fractions must be non-negative and sum to 1")
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be at least 1")

    @classmethod
    def with_impurity(cls, kind: str, impurity: float, **kw) -> "PulseSpec":
        """Mostly-sigma+ pulse with a single impurity component."""
        if kind == "pi":
            fractions = (1.0 - impurity, 0.0, impurity)
        elif kind == "sigma_minus":
            fractions = (1.0 - impurity, impurity, 0.0)
        else:
            raise ValueError("impurity kind must be 'pi' or 'sigma_minus'")
        return cls(fractions=fractions, **kw)


class PulseResult(NamedTuple):
    rho: DensityMatrix
    epsilon: float
    n_steps: int

    @property
    def scattered_to_f2(self) -> float:
        """Loss-bucket share: scattering events that branched back to F=2."""
        return 1.0 - self.rho.trace


def _hamiltonian(sys: LevelSystem, pulse: PulseSpec) -> np.ndarray:
    h = np.diag(sys.h0_diag.astype(complex))
    # Rabi convention: a unit-strength dipole element driven at I = 2 I_S
    # oscillates at the natural linewidth.
    for frac, q in zip(pulse.fractions, (+1, -1, 0)):
        if frac > 0:
            omega = sys.gamma * np.sqrt(frac * pulse.intensity / 2.0)
            h += 0.5 * omega * (sys.couplings[q] + sys.couplings[q].T)
    return h


def simulate_pulse(
    sys: LevelSystem,
    pulse: PulseSpec,
    rho0: DensityMatrix | None = None,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-12,
) -> PulseResult:
    """Propagate one pulse and return the per-pulse loss.

    ``epsilon`` is the integrated scattering probability
    int Gamma * (excited population) dt, taken over the pulse plus the
    subsequent free decay of whatever excited population the pulse leaves
    behind (those atoms scatter their photon moments later and are lost
    all the same).  Population that decays into F=1 stays in the returned
    density matrix; scattering back into F=2 leaves it (see module
    docstring).

    Raises
    ------
    IntegratorStepFailure
        If the adaptive stepper cannot meet tolerance.
    """
    if rho0 is None:
        rho0 = DensityMatrix.stretched()
    h = _hamiltonian(sys, pulse)
    decay = sys.decay_rates
    try:
        rho, epsilon, n_steps = integrate_pulse(
            h, decay, sys.refill, rho0.matrix, pulse.duration, rel_tol, abs_tol
        )
        # Light off: let leftover excited population finish scattering so
        # epsilon covers the whole episode the pulse causes.
        if sys.gamma > 0:
            h_dark = np.diag(sys.h0_diag.astype(complex))
            rho, eps_tail, extra = integrate_pulse(
                h_dark, decay, sys.refill, rho, _SETTLE_LIFETIMES / sys.gamma, rel_tol, abs_tol
            )
            epsilon += eps_tail
            n_steps += extra
    except StepUnderflow as exc:
        raise IntegratorStepFailure(str(exc)) from exc
    return PulseResult(DensityMatrix(rho), float(epsilon), n_steps)


def survival(epsilon: float, n_pulses: int) -> float:
    """Fraction remaining after ``n_pulses`` independent pulses: (1-eps)^N."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    return (1.0 - epsilon) ** n_pulses


def infer_impurity(p: float, n_pulses: int, kappa: float) -> float:
    """Invert a measured survival probability to a polarization impurity.

    |E|^2 = (1 - P^(1/N)) / kappa; exact inverse of ``survival`` composed
    with the linear loss model eps = kappa |E|^2.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("survival probability must lie in (0, 1]")
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return (1.0 - p ** (1.0 / n_pulses)) / kappa


def two_level_reference_epsilon(sys: LevelSystem, pulse: PulseSpec, impurity_fraction: float) -> float:
    """Loss expected without dark-state formation (resonant two-level rate).

    The impurity component alone drives its strongest transition out of
    (2,2); the per-pulse loss is the saturated resonant scattering rate
    integrated over the pulse.
    """
    # strongest coupling of the impurity polarization out of (2,2)
    c2 = max(sys.couplings[0][e, STRETCHED_INDEX] ** 2 for e in _EXCITED)
    if pulse.fractions[1] > pulse.fractions[2]:
        c2 = max(sys.couplings[-1][e, STRETCHED_INDEX] ** 2 for e in _EXCITED)
    s = c2 * impurity_fraction * pulse.intensity
    rate = 0.5 * sys.gamma * s / (1.0 + s)
    return -np.expm1(-rate * pulse.duration)


@dataclass
class IntensityScan:
    """Loss-versus-intensity curve with its no-dark-state reference."""

    intensity: np.ndarray
    epsilon: np.ndarray
    survival: np.ndarray
    reference_epsilon: np.ndarray
    reference_survival: np.ndarray
    n_pulses: int


def loss_vs_intensity(
    sys: LevelSystem,
    impurity_kind: str,
    impurity: float,
    intensities: Sequence[float],
    n_pulses: int = 1280,
    duration: float = 120e-9,
    rel_tol: float = 1e-8,
) -> IntensityScan:
    """Per-pulse loss and N-pulse survival across an intensity grid.

    Starts every pulse from the stretched state (pulses act
    independently; the trap dephases any ground coherence between them).
    """
    if impurity > 1e-2:
        raise ValueError("impurity must be <= 1e-2 (perturbative regime)")
    intensities = np.asarray(intensities, dtype=float)
    eps = np.empty_like(intensities)
    ref = np.empty_like(intensities)
    for i, inten in enumerate(intensities):
        pulse = PulseSpec.with_impurity(
            impurity_kind, impurity, intensity=float(inten), duration=duration, n_pulses=n_pulses
        )
        eps[i] = simulate_pulse(sys, pulse, rel_tol=rel_tol).epsilon
        ref[i] = two_level_reference_epsilon(sys, pulse, impurity)
    return IntensityScan(
        intensity=intensities,
        epsilon=eps,
        survival=(1.0 - eps) ** n_pulses,
        reference_epsilon=ref,
        reference_survival=(1.0 - ref) ** n_pulses,
        n_pulses=n_pulses,
    )


class KappaResult(NamedTuple):
    kappa_pi: float
    kappa_minus: float


def _kappa_one_kind(sys, kind, intensity, duration, impurities, rel_tol):
    i_lo, i_hi = impurities
    eps = []
    for imp in (i_lo, i_hi):
        pulse = PulseSpec.with_impurity(kind, imp, intensity=intensity, duration=duration)
        eps.append(simulate_pulse(sys, pulse, rel_tol=rel_tol).epsilon)
    slope_lo, slope_hi = eps[0] / i_lo, eps[1] / i_hi
    if abs(slope_hi - slope_lo) > 0.05 * max(slope_lo, slope_hi):
        raise NonlinearRegime(
            f"{kind} loss not linear: secant slopes {slope_lo:.4g} vs {slope_hi:.4g}"
        )
    return (eps[1] - eps[0]) / (i_hi - i_lo)


def calibrate_kappa(
    sys: LevelSystem,
    intensity: float,
    duration: float = 120e-9,
    impurities: tuple[float, float] = (1e-5, 1e-4),
    rel_tol: float = 1e-8,
) -> KappaResult:
    """Loss-per-impurity slopes d(eps)/d|E|^2 for pi and sigma- light.

    Finite-difference slope at small impurity, with the two single-point
    secants compared to confirm linearity.

    Raises
    ------
    NonlinearRegime
        If the secants differ by more than 5%.
    """
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    return KappaResult(
        kappa_pi=_kappa_one_kind(sys, "pi", intensity, duration, impurities, rel_tol),
        kappa_minus=_kappa_one_kind(sys, "sigma_minus", intensity, duration, impurities, rel_tol),
    )


@dataclass
class AlignmentScan:
    """Pi-impurity versus pulse-centre delay, with its parabola fit."""

    offsets: np.ndarray
    epi2: np.ndarray
    epsilon: np.ndarray | None
    survival: np.ndarray | None
    curvature: float
    floor: float


def alignment_scan(
    stokes: StokesVector,
    t_offsets: Sequence[float],
    omega_rot: float = C.OMEGA1_DEFAULT,
    residual_impurity: float = 5e-5,
    kappa_pi: float | None = None,
    n_pulses: int | None = None,
) -> AlignmentScan:
    """Pi admixture seen by the atoms as the pulse timing is offset.

    A pulse centred ``t`` after the field-along-z instant meets the field
    at tilt angle theta = omega_rot * t, so the pi projection grows as
    theta^2/2 on top of the residual impurity floor.  Fits
    epi2 = floor + c * (omega_rot t)^2 and reports c (0.5 for ideal
    sigma+ input).  When ``kappa_pi`` is given the scan also carries the
    predicted loss and, with ``n_pulses``, the survival.
    """
    t = np.asarray(t_offsets, dtype=float)
    theta = np.abs(omega_rot * t)
    if np.any(theta >= np.pi):
        raise ValueError("offsets must stay well inside the rotation period")
    epi2 = np.array(
        [projections(stokes, BeamGeometry(th))[0] for th in theta]
    ) + residual_impurity
    design = np.column_stack([np.ones_like(t), (omega_rot * t) ** 2])
    fit = weighted_linear_least_squares(design, epi2)
    eps = kappa_pi * epi2 if kappa_pi is not None else None
    surv = (1.0 - eps) ** n_pulses if (eps is not None and n_pulses) else None
    return AlignmentScan(
        offsets=t,
        epi2=epi2,
        epsilon=eps,
        survival=surv,
        curvature=float(fit.params[1]),
        floor=float(fit.params[0]),
    )


def level_system_summary(sys: LevelSystem) -> dict:
    """JSON-ready dump of level structure, couplings, and branchings."""
    return {
        "b_field_G": sys.b_field,
        "detuning_rad_per_s": sys.detuning,
        "gamma_rad_per_s": sys.gamma,
        "isat_W_per_m2": sys.isat,
        "states": [{"F": f, "m": m} for f, m in sys.labels],
        "zeeman_rad_per_s": sys.zeeman.tolist(),
        "hamiltonian_diag_rad_per_s": sys.h0_diag.tolist(),
        "couplings": {str(q): sys.couplings[q].tolist() for q in sys.couplings},
        "branching": sys.branching.tolist(),
    }
