"""TOP-trap magnetic field model.

Evaluates the instantaneous rotating-bias + quadrupole field with all coil
non-idealities, the time-averaged field magnitude (both by brute-force
phase averaging and by the second-order closed forms), and derived trap
geometry: harmonic frequencies, transverse centre position, and the
field-magnitude time series at the centre.

Units at the interface: gauss, gauss/cm, centimetres, seconds, rad/s.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import constants as C
from .errors import QuadratureNotConverged

__all__ = [
    "FieldSample",
    "NonIdealities",
    "PhysicalConstants",
    "TrapConfig",
    "bias_field_firstorder",
    "center_field_series",
    "field_series",
    "gravity_compensating_gradient",
    "instantaneous_field",
    "time_avg_magnitude_analytic",
    "time_avg_magnitude_numeric",
    "trap_center_x",
    "trap_frequencies",
    "zeeman_frequency",
    "zeeman_slope",
]

#: Threshold above which "small" non-idealities trigger a warning; beyond
#: this the first-order formulas accumulate >1% second-order residuals.
SMALLNESS_WARN = 0.1


@dataclass(frozen=True)
class PhysicalConstants:
    """Atomic and fundamental constants for the trapped state.

    Defaults describe the Rb-87 F=2, m_F=2 ground state, whose magnetic
    moment is the Bohr magneton to good accuracy.
    """

    mu: float = C.BOHR_MAGNETON        # magnetic moment, J/T
    mass: float = C.MASS_RB87          # kg
    g: float = C.STANDARD_GRAVITY      # m/s^2
    gF_ground: float = C.GF_GROUND_F2  # dimensionless
    h: float = C.PLANCK                # J s

    def __post_init__(self):
        for name in ("mu", "mass", "g", "gF_ground", "h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be strictly positive")


@dataclass(frozen=True)
class TrapConfig:
    """Nominal TOP drive parameters.

    Attributes
    ----------
    B0 : float
        Rotating bias amplitude (gauss).
    B1p : float
        Linear-quadrupole gradient oscillating at ``Omega1`` (gauss/cm).
    B2p : float
        Spherical-quadrupole gradient oscillating at ``Omega2`` (gauss/cm).
    Omega1, Omega2 : float
        Drive angular frequencies (rad/s); assumed incommensurate.
    """

    B0: float = 24.0
    B1p: float = 30.7
    B2p: float = 2.5
    Omega1: float = C.OMEGA1_DEFAULT
    Omega2: float = C.OMEGA2_DEFAULT
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not self.B0 > 0:
            raise ValueError("B0 must be positive")
        if not (self.Omega1 > 0 and self.Omega2 > 0):
            raise ValueError("drive frequencies must be positive")
        if self.Omega1 == self.Omega2:
            raise ValueError("Omega1 and Omega2 must differ (incommensurate drives)")

    @property
    def q(self) -> float:
        """Relative linear gradient B1'/B0 (1/cm)."""
        return self.B1p / self.B0

    @property
    def period1(self) -> float:
        return 2.0 * np.pi / self.Omega1


@dataclass(frozen=True)
class NonIdealities:
    """Coil imperfections and environmental dc field.

    ``Delta`` is the amplitude mismatch of the two bias coils, ``psi1/2``
    their angular deviations from +-45 degrees, ``xi1/2`` their phase
    offsets from the quadrupole drive, and ``BE`` the stray dc field
    (B_Ex, B_Ey, B_Ez) in gauss.
    """

    Delta: float = 0.0
    psi1: float = 0.0
    psi2: float = 0.0
    xi1: float = 0.0
    xi2: float = 0.0
    BE: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        worst = max(abs(self.Delta), abs(self.psi1), abs(self.psi2), abs(self.xi1), abs(self.xi2))
        if worst > SMALLNESS_WARN:
            warnings.warn(
                f"non-ideality magnitude {worst:.3g} exceeds {SMALLNESS_WARN}; "
                "first-order formulas degrade",
                stacklevel=2,
            )

    # Common/differential combinations that appear in the averaged potential.
    @property
    def psi(self) -> float:
        return 0.5 * (self.psi1 + self.psi2)

    @property
    def psi_prime(self) -> float:
        return 0.5 * (self.psi1 - self.psi2)

    @property
    def xi(self) -> float:
        return 0.5 * (self.xi1 + self.xi2)

    @property
    def xi_prime(self) -> float:
        return 0.5 * (self.xi1 - self.xi2)

    @property
    def coil_terms_zero(self) -> bool:
        return self.Delta == self.psi1 == self.psi2 == self.xi1 == self.xi2 == 0.0


ZERO_NI = NonIdealities()


@dataclass(frozen=True)
class FieldSample:
    """Field vector (gauss) and its magnitude at one instant."""

    t: float
    B: np.ndarray
    magnitude: float


def _field_at_phases(cfg, ni, r, phi1, phi2, dc_quad=0.0):
    """Total field components for bias phase(s) phi1 and B2 phase(s) phi2.

    The two bias coils are evaluated in their exact trigonometric form, not
    the first-order expansion.  Broadcasts over phase arrays.
    """
    x, y, z = r
    amp = cfg.B0 / np.sqrt(2.0)
    sa = np.sin(phi1 - np.pi / 4.0 + ni.xi1)
    sb = np.sin(phi1 + np.pi / 4.0 + ni.xi2)
    coil_a = amp * (1.0 + ni.Delta)
    coil_b = amp * (1.0 - ni.Delta)
    bx = coil_a * (1.0 + ni.psi1) * sa + coil_b * (1.0 - ni.psi2) * sb
    bz = -coil_a * (1.0 - ni.psi1) * sa + coil_b * (1.0 + ni.psi2) * sb

    c1 = np.cos(phi1)
    bx = bx - cfg.B1p * x * c1
    bz = bz + cfg.B1p * z * c1

    c2 = np.cos(phi2)
    bx = bx - cfg.B2p * x * c2
    by = 2.0 * cfg.B2p * y * c2
    bz = bz - cfg.B2p * z * c2

    bx = bx + ni.BE[0] - dc_quad * x
    by = by + ni.BE[1] - dc_quad * y
    bz = bz + ni.BE[2] + 2.0 * dc_quad * z
    return bx, by, bz


def instantaneous_field(
    cfg: TrapConfig,
    ni: NonIdealities,
    r: Sequence[float],
    t: float,
    dc_quad: float = 0.0,
) -> FieldSample:
    """Total instantaneous field at position ``r`` (cm) and time ``t`` (s).

    Sums the two bias coils (exact forms), the oscillating linear and
    spherical quadrupoles, the environmental field, and an optional static
    spherical quadrupole of gradient ``dc_quad`` (gauss/cm).
    """
    bx, by, bz = _field_at_phases(cfg, ni, r, cfg.Omega1 * t, cfg.Omega2 * t, dc_quad)
    vec = np.array([bx, by, bz], dtype=float)
    return FieldSample(t=float(t), B=vec, magnitude=float(np.linalg.norm(vec)))


def field_series(
    cfg: TrapConfig,
    ni: NonIdealities,
    r: Sequence[float],
    times: Sequence[float],
    dc_quad: float = 0.0,
) -> np.ndarray:
    """Field samples over ``times``: array of rows (t, Bx, By, Bz, |B|)."""
    times = np.asarray(times, dtype=float)
    bx, by, bz = _field_at_phases(cfg, ni, r, cfg.Omega1 * times, cfg.Omega2 * times, dc_quad)
    mag = np.sqrt(bx * bx + by * by + bz * bz)
    return np.column_stack([times, bx, by, bz, mag])


def bias_field_firstorder(cfg: TrapConfig, ni: NonIdealities, t) -> tuple[np.ndarray, np.ndarray]:
    """Rotating bias field expanded to first order in the non-idealities.

    Returns the (Bx, Bz) components; useful as an expansion cross-check
    against the exact coil sum.
    """
    wt = cfg.Omega1 * np.asarray(t, dtype=float)
    s, c = np.sin(wt), np.cos(wt)
    xp = ni.xi_prime + ni.psi_prime
    bx = cfg.B0 * ((1.0 + xp) * s - (ni.Delta - ni.xi + ni.psi) * c)
    bz = cfg.B0 * ((1.0 - xp) * c - (ni.Delta + ni.xi - ni.psi) * s)
    return bx, bz


def time_avg_magnitude_numeric(
    cfg: TrapConfig,
    ni: NonIdealities,
    r: Sequence[float],
    dc_quad: float = 0.0,
    rel_tol: float = 1e-9,
) -> float:
    """Brute-force time-averaged |B| at position ``r`` (gauss).

    The two drive phases are treated as independent (the incommensurate
    limit), so the average is a 2-D phase integral evaluated on a periodic
    rectangle rule, refined by doubling until two successive grids agree to
    ``rel_tol``.  Serves as the oracle for all closed-form averages.
    """
    n1, n2 = 64, 32
    prev = None
    for _ in range(6):
        p1 = 2.0 * np.pi * np.arange(n1)[:, None] / n1
        p2 = 2.0 * np.pi * np.arange(n2)[None, :] / n2
        bx, by, bz = _field_at_phases(cfg, ni, r, p1, p2, dc_quad)
        avg = float(np.mean(np.sqrt(bx * bx + by * by + bz * bz)))
        if prev is not None and abs(avg - prev) <= rel_tol * abs(avg):
            return avg
        prev = avg
        n1, n2 = 2 * n1, 2 * n2
    raise QuadratureNotConverged(
        f"phase-grid average not converged to {rel_tol:g} at {n1//2}x{n2//2} samples"
    )


def _eq4_coefficients(cfg: TrapConfig) -> tuple[float, float, float]:
    """Quadratic coefficients (cx, cy, cz) of the ideal averaged magnitude."""
    b0 = cfg.B0
    cx = 3.0 * cfg.B1p**2 / (16.0 * b0) + cfg.B2p**2 / (4.0 * b0)
    cy = cfg.B2p**2 / b0
    cz = cfg.B1p**2 / (16.0 * b0) + cfg.B2p**2 / (4.0 * b0)
    return cx, cy, cz


def time_avg_magnitude_analytic(cfg: TrapConfig, ni: NonIdealities, r: Sequence[float]) -> float:
    """Second-order closed form of the time-averaged |B| (gauss).

    With ideal coils this is the quadratic expansion around the origin;
    with coil non-idealities it switches to the first-order form in which
    the B2 quadrupole is omitted (it is an order of magnitude weaker than
    the B1 terms it would correct).  The environmental field only enters
    the average at second order and is dropped in both branches.

    Valid for displacements small compared to B0/B1' -- empirically the
    brute-force average agrees to 1e-3 relative out to |r| ~ 0.5 mm at the
    nominal operating point.  The sign of the linear z term follows from
    the field definitions (the average grows with +z); see
    ``gravity_compensating_gradient`` for the magnitude that balances
    gravity.
    """
    x, y, z = (float(v) for v in r)
    if ni.coil_terms_zero:
        cx, cy, cz = _eq4_coefficients(cfg)
        return cfg.B0 + 0.5 * cfg.B1p * z + cx * x * x + cy * y * y + cz * z * z
    q = cfg.q
    lin_x = 0.25 * (ni.Delta - 2.0 * ni.xi + 2.0 * ni.psi) * q * x
    lin_z = 0.25 * (2.0 - ni.xi_prime - ni.psi_prime) * q * z
    quad = (3.0 / 16.0) * q * q * x * x + (1.0 / 16.0) * q * q * z * z
    return cfg.B0 * (1.0 + lin_x + lin_z + quad)


def trap_frequencies(cfg: TrapConfig) -> tuple[float, float, float]:
    """Harmonic trap frequencies (omega_x, omega_y, omega_z) in rad/s.

    From the quadratic coefficients of the averaged magnitude:
    omega_i = sqrt(2 mu c_i / m), with gauss/cm^2 converted to T/m^2.
    """
    cx, cy, cz = _eq4_coefficients(cfg)
    # 1 G/cm^2 = 1e-4 T / 1e-4 m^2 = 1 T/m^2
    k = 2.0 * cfg.constants.mu / cfg.constants.mass
    return tuple(float(np.sqrt(k * c)) for c in (cx, cy, cz))


def gravity_compensating_gradient(constants: PhysicalConstants) -> float:
    """Linear gradient magnitude (gauss/cm) whose averaged linear term
    balances gravity: B1' = 2 m g / mu."""
    b1p_si = 2.0 * constants.mass * constants.g / constants.mu  # T/m
    return b1p_si / C.GAUSS_TO_TESLA * C.CM_TO_M


def trap_center_x(ni: NonIdealities, q: float) -> float:
    """Transverse displacement (cm) of the potential minimum.

    x0 = -2 (Delta - 2 xi + 2 psi) / (3 q); vanishes for ideal coils.
    The sign of q is free (compensation can legitimately reverse the
    gradient); only q = 0 leaves the transverse minimum undefined.
    """
    if q == 0:
        raise ValueError("q = B1'/B0 must be nonzero")
    return -2.0 * (ni.Delta - 2.0 * ni.xi + 2.0 * ni.psi) / (3.0 * q)


def center_field_series(
    cfg: TrapConfig,
    ni: NonIdealities,
    z0: float,
    times: Sequence[float],
    mode: str = "firstorder",
) -> np.ndarray:
    """Field magnitude at the trap centre versus time: rows of (t, |B|).

    ``firstorder`` evaluates the five-term oscillation model

        B0 { 1 + q z0 / 2 + q_Ex sin(W1 t) + q_Ez cos(W1 t)
             + (q z0 - 2 xi' - 2 psi') cos(2 W1 t) / 2
             - 2 (Delta + xi - psi) sin(2 W1 t) / 3 }

    at the transverse centre x0.  ``exact`` instead evaluates the full
    instantaneous field magnitude at (x0, 0, z0), which keeps the B2
    quadrupole and all higher orders; the difference between the modes is
    O(ni^2) B0.
    """
    times = np.asarray(times, dtype=float)
    if mode == "exact":
        x0 = trap_center_x(ni, cfg.q)
        rows = field_series(cfg, ni, (x0, 0.0, z0), times)
        return np.column_stack([times, rows[:, 4]])
    if mode != "firstorder":
        raise ValueError(f"unknown mode {mode!r}")
    q = cfg.q
    qex = ni.BE[0] / cfg.B0
    qez = ni.BE[2] / cfg.B0
    wt = cfg.Omega1 * times
    mag = cfg.B0 * (
        1.0
        + 0.5 * q * z0
        + qex * np.sin(wt)
        + qez * np.cos(wt)
        + 0.5 * (q * z0 - 2.0 * ni.xi_prime - 2.0 * ni.psi_prime) * np.cos(2.0 * wt)
        - (2.0 / 3.0) * (ni.Delta + ni.xi - ni.psi) * np.sin(2.0 * wt)
    )
    return np.column_stack([times, mag])


def zeeman_frequency(B: float, constants: PhysicalConstants) -> float:
    """First-order Zeeman transition frequency (Hz) at field ``B`` (gauss).

    f = gF mu_B B / h, about 0.70 MHz/G for the F=2 ground state.  The
    ~40 kHz Breit-Rabi correction at 24 G is deliberately ignored: the
    calibration works with field *variations*, where the first-order slope
    is accurate to better than 1%.
    """
    if B < 0:
        raise ValueError("field magnitude must be non-negative")
    return constants.gF_ground * constants.mu * B * C.GAUSS_TO_TESLA / constants.h


def zeeman_slope(constants: PhysicalConstants) -> float:
    """Transition-frequency slope df/dB in Hz per gauss."""
    return constants.gF_ground * constants.mu * C.GAUSS_TO_TESLA / constants.h
