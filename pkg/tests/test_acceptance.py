"""Acceptance suite: one test per release criterion, tolerances pinned.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion.
"""

import time

import numpy as np
import pytest

from toptrap.bloch import (
    PulseSpec,
    alignment_scan,
    build_level_system,
    calibrate_kappa,
    infer_impurity,
    loss_vs_intensity,
    simulate_pulse,
    stretched_sigma_minus_detuning,
    survival,
)
from toptrap.calibrate import (
    PositionDataset,
    RfPulseTrain,
    TrapSettings,
    fit_field_oscillation,
    fit_spectrum_peak,
    fit_ybias,
    run_compensation_loop,
    synth_strobe_spectrum,
    ybias_position,
)
from toptrap.fields import (
    NonIdealities,
    TrapConfig,
    center_field_series,
    time_avg_magnitude_analytic,
    time_avg_magnitude_numeric,
    trap_frequencies,
    zeeman_frequency,
    zeeman_slope,
)
from toptrap.numerics import make_rng
from toptrap.polarization import (
    SIGMA_PLUS,
    BeamGeometry,
    StokesVector,
    fidelity,
    mueller_retarder,
    projections,
    pulse_avg_fidelity,
    pulse_avg_projection_numeric,
    weak_biref_fidelity,
)

TWO_PI = 2 * np.pi


def _report(n, text):
    print(f"\nACCEPTANCE {n}: PASS - {text}")


def test_criterion_1_trap_frequencies():
    t0 = time.time()
    cfg = TrapConfig(B0=24.0, B1p=30.7, B2p=2.5)
    wx, wy, wz = trap_frequencies(cfg)
    fx, fy, fz = wx / TWO_PI, wy / TWO_PI, wz / TWO_PI
    assert 4.80 <= fx <= 5.00
    assert 0.90 <= fy <= 1.05
    assert 2.85 <= fz <= 2.95
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _report(1, f"trap frequencies ({fx:.3f}, {fy:.3f}, {fz:.3f}) Hz in bands, {elapsed:.2f} s")


def test_criterion_2_oracle_equivalence():
    t0 = time.time()
    rng = make_rng(2024)
    worst = 0.0
    n_configs = 100
    for _ in range(n_configs):
        cfg = TrapConfig(
            B0=rng.uniform(18.0, 30.0),
            B1p=rng.uniform(20.0, 40.0),
            B2p=rng.uniform(0.0, 5.0),
        )
        ni = NonIdealities(
            Delta=rng.uniform(-0.01, 0.01),
            psi1=rng.uniform(-0.01, 0.01),
            psi2=rng.uniform(-0.01, 0.01),
            xi1=rng.uniform(-0.01, 0.01),
            xi2=rng.uniform(-0.01, 0.01),
            BE=tuple(rng.uniform(-0.01, 0.01, 3)),
        )
        r = rng.uniform(-1e-3, 1e-3, 3)  # |each| <= 10 um
        num = time_avg_magnitude_numeric(cfg, ni, r)
        ana = time_avg_magnitude_analytic(cfg, ni, r)
        worst = max(worst, abs(ana - num) / num)
    assert worst < 1e-3
    elapsed = time.time() - t0
    assert elapsed < 30.0
    _report(2, f"analytic vs numeric <|B|>: worst rel err {worst:.2e} over {n_configs} configs, {elapsed:.1f} s")


def _measure_centers(cfg, ni, z0, delays, sigma_hz, rng, train):
    """Strobed-spectroscopy pipeline: spectrum per delay, Lorentzian fit."""
    slope = zeeman_slope(cfg.constants)
    mags = center_field_series(cfg, ni, z0, delays)[:, 1]
    centers = np.empty(delays.size)
    for i, b in enumerate(mags):
        jittered = zeeman_frequency(b, cfg.constants) + rng.normal(0.0, sigma_hz)
        grid = jittered + np.linspace(-2.4e5, 2.4e5, 33)
        ds = synth_strobe_spectrum(jittered / slope, train, grid, rabi=0.008)
        centers[i], _, _ = fit_spectrum_peak(ds)
    return centers


def test_criterion_3_calibration_round_trip():
    t0 = time.time()
    cfg = TrapConfig()
    slope = zeeman_slope(cfg.constants)
    sigma_hz = 5e-3 * slope  # 5 mG equivalent
    delays = np.arange(16) / 16 * cfg.period1
    train = RfPulseTrain()
    rng = make_rng(7)

    hits = 0
    n_trials = 200
    for _ in range(n_trials):
        ni = NonIdealities(
            Delta=rng.uniform(-0.01, 0.01),
            psi1=rng.uniform(-0.01, 0.01),
            psi2=rng.uniform(-0.01, 0.01),
            xi1=rng.uniform(-0.01, 0.01),
            xi2=rng.uniform(-0.01, 0.01),
            BE=(rng.uniform(-0.3, 0.3), 0.0, rng.uniform(-0.3, 0.3)),
        )
        z0 = rng.uniform(-2e-3, 2e-3)
        centers = _measure_centers(cfg, ni, z0, delays, sigma_hz, rng, train)
        fit = fit_field_oscillation(delays, centers, np.full(16, sigma_hz), cfg.Omega1)
        q = cfg.q
        truth_hz = slope * np.array(
            [
                ni.BE[0],
                ni.BE[2],
                -(2.0 / 3.0) * (ni.Delta + ni.xi - ni.psi) * cfg.B0,
                0.5 * (q * z0 - 2 * ni.xi_prime - 2 * ni.psi_prime) * cfg.B0,
            ]
        )
        if np.all(np.abs(fit.oscillating_amplitudes - truth_hz) <= 3.0 * fit.uncertainties[1:]):
            hits += 1
    assert hits >= 0.95 * n_trials

    # closed loop: exact-field measurements, three iterations to <= 10 mG
    loop_cfg = TrapConfig(B0=24.0, B1p=30.7, B2p=0.0)
    finals = []
    for seed in range(3):
        loop_rng = make_rng(100 + seed)
        ni = NonIdealities(
            Delta=loop_rng.uniform(-0.01, 0.01),
            psi1=loop_rng.uniform(-0.01, 0.01),
            psi2=loop_rng.uniform(-0.01, 0.01),
            xi1=loop_rng.uniform(-0.01, 0.01),
            xi2=loop_rng.uniform(-0.01, 0.01),
            BE=(loop_rng.uniform(-0.3, 0.3), 0.1, loop_rng.uniform(-0.3, 0.3)),
        )
        res = run_compensation_loop(
            loop_cfg, ni, TrapSettings(B1p=loop_cfg.B1p, z0=5e-3),
            n_iterations=3, noise_mG=5.0, rng=loop_rng,
        )
        finals.append(res.final_rms_mG)
        assert res.final_rms_mG <= 10.0
    elapsed = time.time() - t0
    assert elapsed < 120.0
    _report(
        3,
        f"amplitude recovery {hits}/{n_trials} within 3 sigma; "
        f"closed-loop rms {max(finals):.1f} mG <= 10 mG, {elapsed:.1f} s",
    )


def test_criterion_4_overshoot_method():
    t0 = time.time()
    bey_true, b2p = 0.56, 2.5
    grid = np.linspace(1.7, 2.7, 10)  # paper-like dc gradients around 2 G/cm
    rng = make_rng(44)
    values, sigmas = [], []
    for _ in range(10):
        y = ybias_position(grid, b2p, bey_true) + rng.normal(0.0, 5e-4, grid.size)
        bey, sig = fit_ybias(PositionDataset(grid, y, np.full(grid.size, 5e-4)), b2p)
        values.append(bey)
        sigmas.append(sig)
    sigma = float(np.mean(sigmas))
    assert 0.02 / 1.5 <= sigma <= 0.02 * 1.5
    assert abs(np.mean(values) - bey_true) <= 3.0 * sigma / np.sqrt(len(values))
    elapsed = time.time() - t0
    assert elapsed < 10.0
    _report(4, f"B_Ey = {np.mean(values):.3f} G recovered, sigma {sigma:.3f} G ~ 0.02 G, {elapsed:.1f} s")


def test_criterion_5_pulse_averaged_fidelity():
    omega1 = TWO_PI * 12.8e3
    tau = 120e-9
    err = 1.0 - pulse_avg_fidelity(omega1, tau)
    assert err == pytest.approx(1.9e-6, rel=0.05)
    err_numeric = 1.0 - pulse_avg_projection_numeric(omega1, tau)
    assert err_numeric == pytest.approx(err, rel=0.01)
    _report(5, f"1-F = {err:.3e} (closed form) vs {err_numeric:.3e} (brute force)")


def test_criterion_6_mueller_property_suite():
    rng = make_rng(66)
    n = 1000
    for _ in range(n):
        alpha = rng.uniform(-np.pi, np.pi)
        delta = rng.uniform(-np.pi, np.pi)
        # identity at zero retardance
        assert np.allclose(mueller_retarder(alpha, 0.0), np.eye(3), atol=1e-14)
        m = mueller_retarder(alpha, delta)
        # orthogonal rotation with det +1
        assert np.max(np.abs(m.T @ m - np.eye(3))) < 1e-12
        assert abs(np.linalg.det(m) - 1.0) < 1e-12
        # same-axis composition
        d2 = rng.uniform(-np.pi, np.pi)
        assert np.allclose(m @ mueller_retarder(alpha, d2), mueller_retarder(alpha, delta + d2), atol=1e-12)
        # projection completeness
        v = rng.normal(size=3)
        s = StokesVector(*(v / np.linalg.norm(v)))
        epi, em, ep = projections(s, BeamGeometry(rng.uniform(0, np.pi), rng.uniform(0, TWO_PI)))
        assert epi + em + ep == pytest.approx(1.0, abs=1e-12)
        # weak-birefringence residual is quartic in delta
        d_small = 0.1
        exact = fidelity(StokesVector(*(mueller_retarder(alpha, d_small) @ s.as_array())), s)
        assert abs(exact - weak_biref_fidelity(s, alpha, d_small)) < 0.05 * d_small**4
    _report(6, f"Mueller/projection/weak-birefringence properties on {n} random samples")


@pytest.fixture(scope="module")
def operating_system():
    return build_level_system(24.0, detuning=stretched_sigma_minus_detuning(24.0))


def test_criterion_7_dark_state_physics(operating_system):
    t0 = time.time()
    sys_ = operating_system
    # pure sigma+ is exactly dark
    eps_dark = simulate_pulse(sys_, PulseSpec(intensity=100.0)).epsilon
    assert abs(eps_dark) <= 1e-9
    # loss linear in impurity over a decade
    imps = np.array([1e-4, 2e-4, 4e-4, 7e-4, 1e-3])
    eps = np.array(
        [simulate_pulse(sys_, PulseSpec.with_impurity("pi", i, intensity=100.0)).epsilon for i in imps]
    )
    slope, intercept = np.polyfit(imps, eps, 1)
    resid = eps - (slope * imps + intercept)
    r2 = 1.0 - float(resid @ resid) / float(((eps - eps.mean()) ** 2).sum())
    assert r2 >= 0.999
    # non-monotonic loss with an interior maximum near 100 I_sat
    grid = np.logspace(0, 3, 25)
    scan = loss_vs_intensity(sys_, "pi", 2e-4, grid)
    imax = int(np.argmax(scan.epsilon))
    assert 0 < imax < grid.size - 1
    assert 50.0 <= scan.intensity[imax] <= 200.0
    # sigma- light is always lossier
    kappas = calibrate_kappa(sys_, 100.0)
    assert kappas.kappa_minus > kappas.kappa_pi
    elapsed = time.time() - t0
    assert elapsed < 300.0
    _report(
        7,
        f"dark eps {eps_dark:.1e}; linearity R^2 {r2:.5f}; "
        f"loss max at {scan.intensity[imax]:.0f} I_sat; kappa_- > kappa_pi, {elapsed:.1f} s",
    )


def test_criterion_8_kappa_calibration(operating_system):
    kappas = calibrate_kappa(operating_system, 100.0)
    assert 6.0 <= kappas.kappa_pi <= 13.0
    assert 12.0 <= kappas.kappa_minus <= 26.0
    rng = make_rng(88)
    for _ in range(200):
        eps = float(rng.uniform(1e-6, 0.1))
        n = int(rng.integers(1, 4000))
        kappa = float(rng.uniform(0.5, 30.0))
        assert abs(infer_impurity(survival(eps, n), n, kappa) * kappa - eps) <= 1e-12
    _report(
        8,
        f"kappa_pi {kappas.kappa_pi:.2f} in [6, 13], kappa_- {kappas.kappa_minus:.2f} in [12, 26]; "
        "inversion identity to 1e-12",
    )


def test_criterion_9_worked_polarimetry_example():
    eps = 9.5 * 1.5e-4
    p = survival(eps, 1280)
    assert p == pytest.approx(0.161, abs=0.001)
    offsets = np.linspace(-2e-6, 2e-6, 21)
    scan = alignment_scan(SIGMA_PLUS, offsets, omega_rot=TWO_PI * 12.8e3, residual_impurity=5e-5)
    assert scan.curvature == pytest.approx(0.50, abs=0.02)
    _report(9, f"P = {p:.3f} ~ 0.161; alignment parabola {scan.curvature:.3f} = 0.50 +/- 0.02")
