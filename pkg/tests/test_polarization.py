import numpy as np
import pytest

from toptrap.errors import DisturbanceTooLarge
from toptrap.numerics import make_rng
from toptrap.polarization import (
    LINEAR_INPUT,
    SIGMA_PLUS,
    BeamGeometry,
    RetarderElement,
    StokesVector,
    apply_chain,
    fidelity,
    mueller_retarder,
    preparation_chain,
    projections,
    pulse_avg_fidelity,
    pulse_avg_projection_numeric,
    rhomb_output_firstorder,
    solve_compensation,
    weak_biref_fidelity,
)


def random_stokes(rng):
    v = rng.normal(size=3)
    return StokesVector(*(v / np.linalg.norm(v)))


class TestMuellerMatrix:
    def test_zero_retardance_is_identity(self, rng):
        for _ in range(50):
            assert np.allclose(mueller_retarder(rng.uniform(-np.pi, np.pi), 0.0), np.eye(3), atol=1e-15)

    def test_rotation_property(self, rng):
        # orthogonal with unit determinant on 1000 random samples
        for _ in range(1000):
            m = mueller_retarder(rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi, np.pi))
            assert np.max(np.abs(m.T @ m - np.eye(3))) < 1e-12
            assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)

    def test_quarter_wave_converts_circular_to_linear(self):
        out = mueller_retarder(0.0, np.pi / 2) @ [0, 0, 1]
        assert np.allclose(out, [0, -1, 0], atol=1e-15)

    def test_same_axis_composition(self, rng):
        for _ in range(200):
            a = rng.uniform(-np.pi, np.pi)
            d1, d2 = rng.uniform(-np.pi, np.pi, 2)
            lhs = mueller_retarder(a, d1) @ mueller_retarder(a, d2)
            assert np.allclose(lhs, mueller_retarder(a, d1 + d2), atol=1e-12)

    def test_spot_check_composition(self):
        lhs = mueller_retarder(0.3, 0.4) @ mueller_retarder(0.3, 0.5)
        assert np.allclose(lhs, mueller_retarder(0.3, 0.9), atol=1e-14)


class TestApplyChain:
    def test_empty_chain_is_identity(self):
        s = StokesVector(0.6, 0.0, 0.8)
        out = apply_chain([], s)
        assert (out.s1, out.s2, out.s3) == (0.6, 0.0, 0.8)

    def test_half_wave_at_pi_over_8(self):
        out = apply_chain([RetarderElement.half_wave(np.pi / 8)], StokesVector(1, 0, 0))
        assert np.allclose(out.as_array(), [0, 1, 0], atol=1e-12)

    def test_norm_preserved(self, rng):
        for _ in range(100):
            chain = [
                RetarderElement(rng.uniform(-1, 1), rng.uniform(-np.pi, np.pi)) for _ in range(4)
            ]
            out = apply_chain(chain, random_stokes(rng))
            assert out.norm == pytest.approx(1.0, abs=1e-12)


class TestFidelity:
    def test_identical_states(self):
        assert fidelity(SIGMA_PLUS, SIGMA_PLUS) == 1.0

    def test_antipodal_states(self):
        assert fidelity(StokesVector(0, 0, -1), SIGMA_PLUS) == 0.0

    def test_symmetry_and_rotation_invariance(self, rng):
        for _ in range(50):
            a, b = random_stokes(rng), random_stokes(rng)
            assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-15)
            m = mueller_retarder(rng.uniform(-1, 1), rng.uniform(-np.pi, np.pi))
            ra = StokesVector(*(m @ a.as_array()))
            rb = StokesVector(*(m @ b.as_array()))
            assert fidelity(ra, rb) == pytest.approx(fidelity(a, b), abs=1e-12)


class TestWeakBirefringence:
    def test_aligned_linear_input_is_lossless(self):
        assert weak_biref_fidelity(StokesVector(1, 0, 0), 0.0, 0.08) == 1.0

    def test_circular_input_value(self):
        assert weak_biref_fidelity(SIGMA_PLUS, 0.7, 0.05) == pytest.approx(1 - 0.05**2 / 4, abs=1e-15)

    def test_zero_retardance(self, rng):
        assert weak_biref_fidelity(random_stokes(rng), 0.2, 0.0) == 1.0

    def test_quartic_residual_scaling(self, rng):
        # halving delta shrinks the weak-form error ~16x
        for _ in range(50):
            s = random_stokes(rng)
            a = rng.uniform(-np.pi, np.pi)
            res = []
            for d in (0.1, 0.05):
                exact = fidelity(StokesVector(*(mueller_retarder(a, d) @ s.as_array())), s)
                res.append(abs(exact - weak_biref_fidelity(s, a, d)))
            if res[1] > 1e-14:  # skip states with vanishing quartic term
                assert res[0] / res[1] > 8.0


class TestPreparationTrain:
    def test_zero_angles_give_circular(self):
        out = rhomb_output_firstorder(0.0, 0.0)
        assert np.allclose(out.as_array(), [0, 0, 1], atol=1e-15)
        exact = apply_chain(preparation_chain(0.0, 0.0), LINEAR_INPUT)
        assert np.allclose(exact.as_array(), [0, 0, 1], atol=1e-12)

    def test_first_order_state(self):
        out = rhomb_output_firstorder(0.01, 0.0)
        assert out.s1 == pytest.approx(-0.02, abs=2e-4)
        assert out.s2 == pytest.approx(-0.02, abs=2e-4)

    def test_matches_exact_chain_to_second_order(self, rng):
        for _ in range(50):
            a1, a2 = rng.uniform(-0.05, 0.05, 2)
            fo = rhomb_output_firstorder(a1, a2).as_array()
            ex = apply_chain(preparation_chain(a1, a2), LINEAR_INPUT).as_array()
            assert np.max(np.abs(fo - ex)) < 4 * max(abs(a1), abs(a2)) ** 2 + 1e-12

    def test_large_angle_warns(self):
        with pytest.warns(UserWarning):
            rhomb_output_firstorder(0.2, 0.0)


class TestCompensation:
    def test_zero_disturbance(self):
        a1, a2 = solve_compensation(0.0, 0.0)
        assert a1 == pytest.approx(0.0, abs=1e-12)
        assert a2 == pytest.approx(0.0, abs=1e-12)

    def test_s1_channel(self):
        a1, a2 = solve_compensation(0.02, 0.0)
        assert a1 == pytest.approx(0.01, abs=1e-4)
        assert a2 == pytest.approx(0.005, abs=1e-4)
        out = apply_chain(preparation_chain(a1, a2), LINEAR_INPUT)
        assert abs(out.s1 + 0.02) < 1e-4
        assert abs(out.s2) < 1e-4

    def test_s2_channel(self):
        a1, a2 = solve_compensation(0.0, 0.03)
        assert a1 == pytest.approx(0.0, abs=1e-4)
        assert a2 == pytest.approx(-0.03 / 4, abs=1e-4)

    def test_closed_loop_residual_second_order(self, rng):
        for _ in range(30):
            e1, e2 = rng.uniform(-0.05, 0.05, 2)
            a1, a2 = solve_compensation(e1, e2)
            out = apply_chain(preparation_chain(a1, a2), LINEAR_INPUT)
            bound = 4 * max(abs(e1), abs(e2)) ** 2 + 1e-9
            assert abs(out.s1 + e1) < bound
            assert abs(out.s2 + e2) < bound

    def test_too_large_raises(self):
        with pytest.raises(DisturbanceTooLarge):
            solve_compensation(0.2, 0.0)


class TestProjections:
    def test_aligned_sigma_plus(self):
        assert projections(SIGMA_PLUS, BeamGeometry(0.0)) == (0.0, 0.0, 1.0)

    def test_reversed_field_flips_handedness(self):
        epi, em, ep = projections(SIGMA_PLUS, BeamGeometry(np.pi))
        assert epi == pytest.approx(0.0, abs=1e-30)
        assert em == pytest.approx(1.0, abs=1e-15)

    def test_small_ellipticity_sigma_minus(self):
        s1, s2 = 0.01, 0.02
        s = StokesVector(s1, s2, np.sqrt(1 - s1**2 - s2**2))
        _, em, _ = projections(s, BeamGeometry(0.0))
        assert em == pytest.approx((s1**2 + s2**2) / 4, rel=1e-3)

    def test_completeness(self, rng):
        for _ in range(1000):
            s = random_stokes(rng)
            geom = BeamGeometry(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            epi, em, ep = projections(s, geom)
            assert epi + em + ep == pytest.approx(1.0, abs=1e-14)

    def test_small_angle_pi_growth(self):
        theta = 0.05
        epi, _, _ = projections(SIGMA_PLUS, BeamGeometry(theta))
        assert epi == pytest.approx(theta**2 / 2, rel=1e-3)


class TestPulseAverage:
    def test_paper_operating_point(self):
        err = 1 - pulse_avg_fidelity(2 * np.pi * 12.8e3, 120e-9)
        assert err == pytest.approx(1.9e-6, rel=0.05)

    def test_zero_duration(self):
        assert pulse_avg_fidelity(2 * np.pi * 12.8e3, 0.0) == 1.0

    def test_offset_penalty(self):
        w = 2 * np.pi * 12.8e3
        t_off = 1e-6
        penalty = (1 - pulse_avg_fidelity(w, 120e-9, t_off)) - (1 - pulse_avg_fidelity(w, 120e-9))
        assert penalty == pytest.approx(0.5 * (w * t_off) ** 2, rel=1e-12)

    def test_brute_force_oracle(self):
        # closed form matches the numeric pulse average to 1% up to
        # omega tau = 0.3
        for w_tau in (0.05, 0.1, 0.3):
            w = 2 * np.pi * 12.8e3
            tau = w_tau / w
            closed = 1 - pulse_avg_fidelity(w, tau)
            numeric = 1 - pulse_avg_projection_numeric(w, tau)
            assert numeric == pytest.approx(closed, rel=0.01)

    def test_long_pulse_warns(self):
        with pytest.raises(UserWarning):
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("error")
                pulse_avg_fidelity(2 * np.pi * 12.8e3, 1e-2)


class TestRetarderElement:
    def test_delta_canonicalized(self):
        el = RetarderElement(0.0, 3 * np.pi)
        assert el.delta == pytest.approx(np.pi)
        el = RetarderElement(0.0, -np.pi)
        assert el.delta == pytest.approx(np.pi)

    def test_rhomb_error_parameter(self):
        el = RetarderElement.rhomb(retardance_error=0.01)
        assert el.delta == pytest.approx(np.pi / 2 + 0.01)
        assert el.alpha == pytest.approx(-np.pi / 4)

    def test_beam_geometry_validates_theta(self):
        with pytest.raises(ValueError):
            BeamGeometry(-0.1)


def test_stokes_from_field_components():
    s = StokesVector.from_circular_components(1.0, 0.0)
    assert np.allclose(s.as_array(), [0, 0, 1], atol=1e-15)
    s = StokesVector.from_circular_components(1.0, 1.0)
    assert np.allclose(s.as_array(), [1, 0, 0], atol=1e-15)
    rng = make_rng(3)
    for _ in range(20):
        er, el = rng.normal(size=2) + 1j * rng.normal(size=2)
        s = StokesVector.from_circular_components(er, el)
        assert s.norm == pytest.approx(1.0, abs=1e-12)
