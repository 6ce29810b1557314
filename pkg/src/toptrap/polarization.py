"""Stokes/Mueller calculus for the circular-polarization optical train.

Works on the Poincare sphere of fully polarized light: a state is the
reduced Stokes vector (S1, S2, S3) with S0 = 1, and every optical element
is a retarder, i.e. a rotation of the sphere.  Includes the
quarter-wave/half-wave/Fresnel-rhomb preparation train, its first-order
output state and compensation inverse, the sigma+/sigma-/pi projections
relative to a tilted quantization axis, and the pulse-time-averaged
fidelity of strobed light in a rotating field.

Element order convention: chains are listed in propagation order, the
first element is applied to the light first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DisturbanceTooLarge

__all__ = [
    "BeamGeometry",
    "LINEAR_INPUT",
    "RetarderElement",
    "SIGMA_PLUS",
    "StokesVector",
    "apply_chain",
    "fidelity",
    "mueller_retarder",
    "preparation_chain",
    "projections",
    "pulse_avg_fidelity",
    "pulse_avg_projection_numeric",
    "rhomb_output_firstorder",
    "solve_compensation",
    "weak_biref_fidelity",
]


@dataclass(frozen=True)
class StokesVector:
    """Reduced Stokes vector of fully polarized light (S0 = 1)."""

    s1: float
    s2: float
    s3: float

    @classmethod
    def from_circular_components(cls, e_r: complex, e_l: complex) -> "StokesVector":
        """Build from right/left circular field amplitudes (normalized)."""
        norm = abs(e_r) ** 2 + abs(e_l) ** 2
        if norm == 0:
            raise ValueError("zero field")
        s1 = 2.0 * (e_r * np.conj(e_l)).real / norm
        s2 = -2.0 * (e_r * np.conj(e_l)).imag / norm
        s3 = (abs(e_r) ** 2 - abs(e_l) ** 2) / norm
        return cls(s1, s2, s3)

    def as_array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.s1**2 + self.s2**2 + self.s3**2))

    def normalized(self) -> "StokesVector":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StokesVector(self.s1 / n, self.s2 / n, self.s3 / n)


#: Pure sigma+ target state (right-circular on this convention).
SIGMA_PLUS = StokesVector(0.0, 0.0, 1.0)

#: Linear polarization along the polarizer axis, input to the wave plates.
LINEAR_INPUT = StokesVector(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class RetarderElement:
    """Birefringent element: retardance ``delta`` with fast axis at ``alpha``.

    ``delta`` is stored canonically in (-pi, pi].
    """

    alpha: float
    delta: float
    label: str = ""

    def __post_init__(self):
        d = float(self.delta)
        d = np.remainder(d + np.pi, 2.0 * np.pi) - np.pi
        if d == -np.pi:
            d = np.pi
        object.__setattr__(self, "delta", d)

    @classmethod
    def quarter_wave(cls, alpha: float, label: str = "QWP") -> "RetarderElement":
        return cls(alpha, np.pi / 2.0, label)

    @classmethod
    def half_wave(cls, alpha: float, label: str = "HWP") -> "RetarderElement":
        return cls(alpha, np.pi, label)

    @classmethod
    def rhomb(cls, retardance_error: float = 0.0, label: str = "rhomb") -> "RetarderElement":
        """Fresnel rhomb: a quarter-wave retarder at -45 degrees.

        The rhomb retardance is extremely stable; ``retardance_error``
        models a small fixed deviation from pi/2.
        """
        return cls(-np.pi / 4.0, np.pi / 2.0 + retardance_error, label)


@dataclass(frozen=True)
class BeamGeometry:
    """Propagation direction relative to the quantization (field) axis."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta must lie in [0, pi]")


def mueller_retarder(alpha: float, delta: float) -> np.ndarray:
    """3x3 Mueller matrix of a retarder acting on (S1, S2, S3).

    A rotation of the Poincare sphere by angle ``delta`` about the axis
    (cos 2a, sin 2a, 0); orthogonal with determinant +1.
    """
    c2a, s2a = np.cos(2.0 * alpha), np.sin(2.0 * alpha)
    cd, sd = np.cos(delta), np.sin(delta)
    return np.array(
        [
            [c2a * c2a + s2a * s2a * cd, c2a * s2a * (1.0 - cd), s2a * sd],
            [c2a * s2a * (1.0 - cd), c2a * c2a * cd + s2a * s2a, -c2a * sd],
            [-s2a * sd, c2a * sd, cd],
        ]
    )


def apply_chain(elements, s_in: StokesVector) -> StokesVector:
    """Propagate a Stokes vector through retarders in propagation order.

    The first list element is the first surface the light meets.  The
    output is renormalized so roundoff cannot accumulate off the sphere.
    """
    v = s_in.as_array()
    for el in elements:
        v = mueller_retarder(el.alpha, el.delta) @ v
    n = np.linalg.norm(v)
    return StokesVector(*(v / n)) if n > 0 else StokesVector(*v)


def fidelity(s_out: StokesVector, s_ref: StokesVector) -> float:
    """Polarization fidelity F = (1 + S_out . S_ref) / 2."""
    return 0.5 * (1.0 + float(s_out.as_array() @ s_ref.as_array()))


def weak_biref_fidelity(s: StokesVector, alpha: float, delta: float) -> float:
    """Second-order fidelity of a weakly birefringent element (|delta| << 1).

    F ~ 1 - (delta^2/4) [ (S1 sin 2a - S2 cos 2a)^2 + S3^2 ]; exact when
    the light is linear and aligned to the retarder axis.  Documented
    validity |delta| <= 0.3 (residual is O(delta^4)).
    """
    proj = s.s1 * np.sin(2.0 * alpha) - s.s2 * np.cos(2.0 * alpha)
    return 1.0 - 0.25 * delta * delta * (proj * proj + s.s3 * s.s3)


def preparation_chain(
    alpha1: float, alpha2: float, rhomb_error: float = 0.0
) -> list[RetarderElement]:
    """The circular-polarization preparation train.

    Linear light passes a quarter-wave plate at ``alpha1``, a half-wave
    plate at ``alpha2`` (both near zero, aligned with the polarization
    axis), then the Fresnel rhomb that converts to circular.
    """
    return [
        RetarderElement.quarter_wave(alpha1),
        RetarderElement.half_wave(alpha2),
        RetarderElement.rhomb(rhomb_error),
    ]


def rhomb_output_firstorder(alpha1: float, alpha2: float) -> StokesVector:
    """State exiting the rhomb, first order in the wave-plate angles.

    S = (-2 a1, 4 a2 - 2 a1, 1) + O(a^2), renormalized.
    """
    if max(abs(alpha1), abs(alpha2)) > 0.1:
        warnings.warn("wave-plate angles above 0.1 rad; first-order form degrades", stacklevel=2)
    return StokesVector(-2.0 * alpha1, 4.0 * alpha2 - 2.0 * alpha1, 1.0).normalized()


_FIRST_ORDER_MAP = np.array([[-2.0, 0.0], [-2.0, 4.0]])


def solve_compensation(s1_err: float, s2_err: float) -> tuple[float, float]:
    """Wave-plate angles that cancel a small downstream (S1, S2) disturbance.

    Inverts the first-order output map so the chain produces
    (-s1_err, -s2_err) on the first two components, then applies one
    Newton correction against the exact chain.  The residual after adding
    the disturbance back is O(err^2).

    Raises
    ------
    DisturbanceTooLarge
        If either component exceeds 0.1.
    """
    if max(abs(s1_err), abs(s2_err)) > 0.1:
        raise DisturbanceTooLarge("disturbance components must be <= 0.1")
    target = -np.array([s1_err, s2_err])
    angles = np.linalg.solve(_FIRST_ORDER_MAP, target)
    out = apply_chain(preparation_chain(*angles), LINEAR_INPUT)
    residual = np.array([out.s1, out.s2]) - target
    angles = angles - np.linalg.solve(_FIRST_ORDER_MAP, residual)
    return float(angles[0]), float(angles[1])


def projections(s: StokesVector, geom: BeamGeometry) -> tuple[float, float, float]:
    """Intensity fractions (|E_pi|^2, |E_-|^2, |E_+|^2) on the atomic basis.

    For a beam at polar angles (theta, phi) relative to the field:

        |E_pi|^2 = (1 + S1 cos 2phi + S2 sin 2phi) sin^2(theta) / 2
        |E_-|^2  = (1 - S3 cos theta)/2 - |E_pi|^2 / 2

    and |E_+|^2 completes the sum to one.
    """
    planar = 1.0 + s.s1 * np.cos(2.0 * geom.phi) + s.s2 * np.sin(2.0 * geom.phi)
    sin2 = np.sin(geom.theta) ** 2
    e_pi = 0.5 * planar * sin2
    e_minus = 0.5 * (1.0 - s.s3 * np.cos(geom.theta)) - 0.25 * planar * sin2
    e_plus = 1.0 - e_pi - e_minus
    return float(e_pi), float(e_minus), float(e_plus)


def pulse_avg_fidelity(omega1: float, tau: float, t_center_offset: float = 0.0) -> float:
    """Fidelity of a square light pulse strobed to the rotating field.

    For a pulse of duration ``tau`` centred ``t_center_offset`` after the
    field-along-z instant, the sigma+ fidelity carries a duration penalty
    and an alignment penalty:

        1 - F = (omega1 tau)^2 / 48 + (omega1 t_offset)^2 / 2.

    The duration term is the coherent (amplitude-averaged) projection over
    the pulse; the offset term is the pi-projection intensity theta^2/2 at
    tilt angle theta = omega1 t, which is what a loss measurement sees.
    """
    w = omega1
    if w * tau > 0.5:
        warnings.warn("omega1 * tau above 0.5; quadratic pulse average degrades", stacklevel=2)
    return 1.0 - (w * tau) ** 2 / 48.0 - 0.5 * (w * t_center_offset) ** 2


def pulse_avg_projection_numeric(
    omega1: float, tau: float, t_center_offset: float = 0.0, n: int = 20001
) -> float:
    """Brute-force pulse average of the sigma+ projection amplitude.

    Builds the circular field vector and the instantaneous sigma+ unit
    vector explicitly and averages |E* . sigma+| over a square pulse on a
    dense grid.  Independent oracle for the duration term of
    ``pulse_avg_fidelity`` (the two agree to better than 1% for
    omega1 tau <= 0.3 at zero offset).
    """
    t = t_center_offset + (np.arange(n) + 0.5) / n * tau - tau / 2.0
    wt = omega1 * t
    e_light = np.array([1.0, -1.0j, 0.0]) / np.sqrt(2.0)
    # sigma+ unit vector for a field along (sin wt, 0, cos wt)
    x_prime = np.stack([np.cos(wt), np.zeros_like(wt), np.sin(wt)])
    y_hat = np.array([0.0, 1.0, 0.0])[:, None]
    sigma_plus = (x_prime - 1.0j * y_hat) / np.sqrt(2.0)
    amp = np.abs(np.conj(e_light) @ sigma_plus)
    return float(np.mean(amp))
