import numpy as np
import pytest

from toptrap.errors import QuadratureNotConverged
from toptrap.fields import (
    NonIdealities,
    PhysicalConstants,
    TrapConfig,
    bias_field_firstorder,
    center_field_series,
    field_series,
    gravity_compensating_gradient,
    instantaneous_field,
    time_avg_magnitude_analytic,
    time_avg_magnitude_numeric,
    trap_center_x,
    trap_frequencies,
    zeeman_frequency,
    zeeman_slope,
)
TWO_PI = 2 * np.pi


class TestInstantaneousField:
    def test_ideal_at_origin_t0(self, paper_cfg, ideal_ni):
        s = instantaneous_field(paper_cfg, ideal_ni, (0, 0, 0), 0.0)
        assert np.allclose(s.B, [0, 0, 24.0], atol=1e-12)

    def test_quarter_period(self, paper_cfg, ideal_ni):
        t = np.pi / (2 * paper_cfg.Omega1)
        s = instantaneous_field(paper_cfg, ideal_ni, (0, 0, 0), t)
        assert np.allclose(s.B, [24.0, 0, 0], atol=1e-9)

    def test_magnitude_is_norm(self, paper_cfg, rng):
        ni = NonIdealities(Delta=0.01, psi1=0.004, xi2=-0.006, BE=(0.1, 0.05, -0.2))
        for _ in range(20):
            r = rng.uniform(-0.01, 0.01, 3)
            t = rng.uniform(0, 1e-3)
            s = instantaneous_field(paper_cfg, ni, r, t, dc_quad=1.5)
            assert abs(s.magnitude - np.linalg.norm(s.B)) <= 1e-12 * s.magnitude

    def test_exact_coils_match_firstorder_expansion(self, paper_cfg):
        # the expanded bias field agrees with the exact coil sum to
        # second order in the non-idealities
        ni = NonIdealities(Delta=0.01, psi1=0.004, psi2=-0.006, xi1=0.003, xi2=0.002)
        t = np.linspace(0, paper_cfg.period1, 64)
        bx1, bz1 = bias_field_firstorder(paper_cfg, ni, t)
        cfg0 = TrapConfig(B0=paper_cfg.B0, B1p=0.0, B2p=0.0)
        rows = field_series(cfg0, ni, (0, 0, 0), t)
        worst = max(abs(ni.Delta), abs(ni.psi1), abs(ni.psi2), abs(ni.xi1), abs(ni.xi2))
        bound = 5.0 * worst**2 * paper_cfg.B0
        assert np.max(np.abs(rows[:, 1] - bx1)) < bound
        assert np.max(np.abs(rows[:, 3] - bz1)) < bound

    def test_dc_quad_adds_static_gradient(self, paper_cfg, ideal_ni):
        s = instantaneous_field(paper_cfg, ideal_ni, (0.1, 0.2, 0.3), 0.0, dc_quad=2.0)
        s0 = instantaneous_field(paper_cfg, ideal_ni, (0.1, 0.2, 0.3), 0.0)
        assert np.allclose(s.B - s0.B, [-0.2, -0.4, 1.2], atol=1e-12)

    def test_smallness_warning(self):
        with pytest.warns(UserWarning, match="non-ideality"):
            NonIdealities(Delta=0.2)


class TestTimeAverage:
    def test_ideal_origin_is_b0(self, paper_cfg, ideal_ni):
        assert time_avg_magnitude_numeric(paper_cfg, ideal_ni, (0, 0, 0)) == pytest.approx(24.0, abs=1e-12)
        assert time_avg_magnitude_analytic(paper_cfg, ideal_ni, (0, 0, 0)) == 24.0

    def test_numeric_quadratic_coefficient_along_x(self, paper_cfg, ideal_ni):
        # quadratic fit of brute-force averages; the derived coefficient
        # carries B2'^2/8, not the B2'^2/4 of the closed form used for
        # frequencies (see ledger), so compare against the derivation
        xs = np.linspace(-2e-3, 2e-3, 9)
        avgs = [time_avg_magnitude_numeric(paper_cfg, ideal_ni, (x, 0, 0), rel_tol=1e-11) for x in xs]
        c_fit = np.polyfit(xs, avgs, 2)[0]
        c_derived = 3 * paper_cfg.B1p**2 / (16 * paper_cfg.B0) + paper_cfg.B2p**2 / (8 * paper_cfg.B0)
        assert c_fit == pytest.approx(c_derived, rel=1e-3)

    def test_linear_z_slope(self, paper_cfg, ideal_ni):
        zp = time_avg_magnitude_numeric(paper_cfg, ideal_ni, (0, 0, 1e-3), rel_tol=1e-11)
        zm = time_avg_magnitude_numeric(paper_cfg, ideal_ni, (0, 0, -1e-3), rel_tol=1e-11)
        assert (zp - zm) / 2e-3 == pytest.approx(0.5 * paper_cfg.B1p, rel=1e-4)

    def test_mismatch_linear_x_coefficient(self, paper_cfg):
        # first-order x slope at the origin: (Delta - 2 xi + 2 psi) q B0 / 4
        ni = NonIdealities(Delta=0.005)
        h = 5e-4
        fp = time_avg_magnitude_numeric(paper_cfg, ni, (h, 0, 0), rel_tol=1e-11)
        fm = time_avg_magnitude_numeric(paper_cfg, ni, (-h, 0, 0), rel_tol=1e-11)
        slope = (fp - fm) / (2 * h)
        expected = 0.25 * ni.Delta * paper_cfg.q * paper_cfg.B0
        assert slope == pytest.approx(expected, rel=0.02)

    def test_analytic_matches_numeric_at_small_r(self, paper_cfg, rng):
        # 1e-3 relative agreement inside 10 um, with and without coil terms
        for trial in range(10):
            ni = NonIdealities(
                Delta=rng.uniform(-0.01, 0.01),
                psi1=rng.uniform(-0.01, 0.01),
                psi2=rng.uniform(-0.01, 0.01),
                xi1=rng.uniform(-0.01, 0.01),
                xi2=rng.uniform(-0.01, 0.01),
                BE=tuple(rng.uniform(-0.01, 0.01, 3)),
            )
            r = rng.uniform(-1e-3, 1e-3, 3)
            num = time_avg_magnitude_numeric(paper_cfg, ni, r)
            ana = time_avg_magnitude_analytic(paper_cfg, ni, r)
            assert abs(ana - num) / num < 1e-3

    def test_quadrature_raises_on_field_zero_crossing(self):
        cfg = TrapConfig(B0=24.0, B1p=30.7, B2p=0.0)
        with pytest.raises(QuadratureNotConverged):
            time_avg_magnitude_numeric(cfg, NonIdealities(), (0, 0, -cfg.B0 / cfg.B1p), rel_tol=1e-12)


class TestTrapGeometry:
    def test_paper_frequencies(self, paper_cfg):
        wx, wy, wz = trap_frequencies(paper_cfg)
        assert 4.80 <= wx / TWO_PI <= 5.00
        assert 0.90 <= wy / TWO_PI <= 1.05
        assert 2.85 <= wz / TWO_PI <= 2.95

    def test_no_b2_limit(self):
        cfg = TrapConfig(B0=24.0, B1p=30.7, B2p=0.0)
        wx, wy, wz = trap_frequencies(cfg)
        assert wy == 0.0
        assert wx / wz == pytest.approx(np.sqrt(3.0), rel=1e-12)

    def test_gravity_gradient(self, consts):
        g = gravity_compensating_gradient(consts)
        assert g == pytest.approx(30.5, abs=0.1)
        doubled = PhysicalConstants(mu=2 * consts.mu)
        assert gravity_compensating_gradient(doubled) == pytest.approx(g / 2, rel=1e-12)

    def test_gravity_off(self, consts):
        free = PhysicalConstants(g=1e-30)
        assert gravity_compensating_gradient(free) == pytest.approx(0.0, abs=1e-25)

    def test_trap_center_formula(self, paper_cfg):
        ni = NonIdealities(Delta=0.003)
        x0 = trap_center_x(ni, paper_cfg.q)
        assert x0 == pytest.approx(-15.6e-4, rel=0.01)  # -15.6 um in cm
        ni_xi = NonIdealities(xi1=0.003, xi2=0.003)
        assert trap_center_x(ni_xi, paper_cfg.q) == pytest.approx(4 * 0.003 / (3 * paper_cfg.q), rel=1e-12)
        assert trap_center_x(NonIdealities(), paper_cfg.q) == 0.0

    def test_trap_center_matches_numeric_argmin(self, paper_cfg, rng):
        for _ in range(3):
            ni = NonIdealities(
                Delta=rng.uniform(-0.01, 0.01),
                xi1=rng.uniform(-0.01, 0.01),
                psi2=rng.uniform(-0.01, 0.01),
            )
            x0 = trap_center_x(ni, paper_cfg.q)
            if abs(x0) < 1e-4:
                continue
            xs = x0 + np.linspace(-0.3, 0.3, 13) * abs(x0)
            avgs = [time_avg_magnitude_numeric(paper_cfg, ni, (x, 0, 0), rel_tol=1e-11) for x in xs]
            a, b, _ = np.polyfit(xs, avgs, 2)
            assert -b / (2 * a) == pytest.approx(x0, rel=0.02)


class TestCenterFieldSeries:
    def test_ideal_is_constant(self, paper_cfg, ideal_ni):
        t = np.linspace(0, 2 * paper_cfg.period1, 50)
        rows = center_field_series(paper_cfg, ideal_ni, 0.0, t)
        assert np.allclose(rows[:, 1], 24.0, atol=1e-12)

    def test_environmental_x_gives_pure_first_harmonic(self, paper_cfg):
        ni = NonIdealities(BE=(0.12, 0.0, 0.0))
        t = np.linspace(0, paper_cfg.period1, 128, endpoint=False)
        mags = center_field_series(paper_cfg, ni, 0.0, t)[:, 1]
        ripple = mags - np.mean(mags)
        expected = 0.12 * np.sin(paper_cfg.Omega1 * t)
        assert np.allclose(ripple, expected, atol=1e-12)

    def test_compensated_combinations_flatten_field(self):
        # q z0 = 2 xi' + 2 psi' and Delta + xi - psi = 0 kill both second
        # harmonics; first-order model becomes constant, exact residual is
        # second order in the non-idealities
        cfg = TrapConfig(B0=24.0, B1p=30.7, B2p=0.0)
        ni = NonIdealities(Delta=0.004, psi1=0.005, psi2=0.003, xi1=0.001, xi2=-0.001)
        assert ni.Delta + ni.xi - ni.psi == pytest.approx(0.0, abs=1e-15)
        z0 = 2 * (ni.xi_prime + ni.psi_prime) / cfg.q
        t = np.linspace(0, cfg.period1, 64, endpoint=False)
        first = center_field_series(cfg, ni, z0, t)[:, 1]
        assert np.ptp(first) < 1e-12 * cfg.B0
        exact = center_field_series(cfg, ni, z0, t, mode="exact")[:, 1]
        assert np.ptp(exact) < 10 * 0.004**2 * cfg.B0

    def test_exact_residual_scales_quadratically(self):
        cfg = TrapConfig(B0=24.0, B1p=30.7, B2p=0.0)
        t = np.linspace(0, cfg.period1, 64, endpoint=False)
        residuals = []
        for scale in (1.0, 0.5):
            ni = NonIdealities(Delta=0.008 * scale, xi1=0.01 * scale, xi2=-0.002 * scale)
            first = center_field_series(cfg, ni, 2e-3, t)[:, 1]
            exact = center_field_series(cfg, ni, 2e-3, t, mode="exact")[:, 1]
            residuals.append(np.max(np.abs(first - exact)))
        assert residuals[0] / residuals[1] > 3.0


class TestZeeman:
    def test_paper_point(self, consts):
        assert zeeman_frequency(24.0, consts) == pytest.approx(16.8e6, rel=0.01)

    def test_zero_field(self, consts):
        assert zeeman_frequency(0.0, consts) == 0.0

    def test_slope(self, consts):
        assert zeeman_frequency(1.0, consts) == pytest.approx(0.70e6, rel=0.01)
        assert zeeman_slope(consts) == pytest.approx(zeeman_frequency(1.0, consts), rel=1e-12)

    def test_negative_field_rejected(self, consts):
        with pytest.raises(ValueError):
            zeeman_frequency(-1.0, consts)


class TestConfigValidation:
    def test_bad_b0(self):
        with pytest.raises(ValueError):
            TrapConfig(B0=0.0)

    def test_equal_drive_frequencies(self):
        with pytest.raises(ValueError):
            TrapConfig(Omega1=1000.0, Omega2=1000.0)

    def test_constants_must_be_positive(self):
        with pytest.raises(ValueError):
            PhysicalConstants(mass=-1.0)
