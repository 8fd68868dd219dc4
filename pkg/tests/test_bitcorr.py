import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvbit import bitcorr, catalog, fock, gaussian
from cvbit.config import DEFAULT
from cvbit.errors import AllZero


class TestStrength:
    def test_perfect_and_none(self):
        assert bitcorr.strength_from_probabilities(0.5, 0, 0, 0.5) == 1.0
        assert bitcorr.strength_from_probabilities(0.25, 0.25, 0.25, 0.25) == 0.0

    def test_normalizes(self):
        assert bitcorr.strength_from_probabilities(3, 1, 1, 3) == pytest.approx(0.5)

    def test_errors(self):
        with pytest.raises(AllZero):
            bitcorr.strength_from_probabilities(0, 0, 0, 0)
        with pytest.raises(ValueError):
            bitcorr.strength_from_probabilities(-0.1, 0.5, 0.3, 0.3)


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_angle_pair_reduced(theta, phi):
    pair = bitcorr.AnglePair(theta, phi)
    assert 0.0 <= pair.theta < math.pi
    assert 0.0 <= pair.phi < math.pi


class TestOptimizer:
    def test_tmsv(self):
        res = bitcorr.optimize_q(gaussian.tmsv_standard_form(0.5))
        assert res.q == pytest.approx(2 / math.pi * math.atan(math.sinh(1)), abs=1e-12)
        assert (res.theta_star, res.phi_star) == (0.0, 0.0)
        assert res.e_at_optimum > 0
        assert res.grid_resolution == DEFAULT.grid_resolution

    def test_deterministic(self):
        cm = gaussian.random_gaussian_cm(3)
        assert bitcorr.optimize_q(cm) == bitcorr.optimize_q(cm)

    def test_off_grid_optimum(self):
        # rotate a standard form so that the optimum sits between grid nodes
        sf = gaussian.StandardForm(2.0, 3.0, 1.5, 0.4)
        moved = gaussian.apply_local_symplectic(sf.to_cm(), gaussian.rotation(0.123), gaussian.rotation(-0.77))
        res = bitcorr.optimize_q(moved)
        assert res.q == pytest.approx(gaussian.q_gaussian_closed(sf), abs=1e-10)

    def test_matches_closed_form_on_random_states(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            cm = gaussian.random_gaussian_cm(rng)
            sa = gaussian.rotation(rng.uniform(0, np.pi)) @ gaussian.squeezer(math.exp(rng.uniform(-1, 1)))
            sb = gaussian.rotation(rng.uniform(0, np.pi)) @ gaussian.squeezer(math.exp(rng.uniform(-1, 1)))
            moved = gaussian.apply_local_symplectic(cm, sa, sb)
            closed = gaussian.q_gaussian_closed(gaussian.standard_form(cm))
            assert bitcorr.optimize_q(moved).q == pytest.approx(closed, abs=1e-8)

    @pytest.mark.parametrize("kind", ["bell_phi_plus", "bell_phi_minus", "bell_psi_plus", "bell_psi_minus"])
    def test_bell_states(self, kind):
        for p in (0.1, 0.5, 0.8):
            psi, (_, q_b) = catalog.bell_state(kind, p)
            assert bitcorr.optimize_q(psi).q == pytest.approx(q_b, abs=1e-9)

    def test_product_and_qutrit(self):
        # even-parity local states have unbiased sign marginals
        c = np.outer([0.6, 0.0, 0.8], [0.8, 0.0, 0.6])
        assert bitcorr.optimize_q(fock.FockPureState(c, 0.0)).q < 1e-12
        assert bitcorr.optimize_q(catalog.qutrit_h()).q < 1e-12

    def test_fock_and_gaussian_paths_agree(self):
        cm, psi = catalog.tmsv(0.3, DEFAULT.replace(tail_tol=1e-14))
        assert bitcorr.optimize_q(psi).q == pytest.approx(bitcorr.optimize_q(cm).q, abs=1e-7)

    def test_biased_product_state_factorizes(self):
        c = np.outer([0.6, 0.8], [0.8, 0.6])
        psi = fock.FockPureState(c, 0.0)
        bias_a, bias_b = fock.marginal_sign_bias(psi, 0.4, 1.1)
        assert fock.e_fock(psi, 0.4, 1.1) == pytest.approx(bias_a * bias_b, abs=1e-14)

    def test_fairness(self):
        res = bitcorr.optimize_q(catalog.qutrit_h())
        assert bitcorr.fairness_check(gaussian.tmsv_standard_form(1.0), res.angles) == 0.0
        psi, _ = catalog.photon_subtracted(0.5, 0.9)
        assert bitcorr.fairness_check(psi, bitcorr.AnglePair(0.3, 1.2)) < 1e-12
        c = np.zeros((2, 2))
        c[0, 0] = c[1, 0] = 1 / math.sqrt(2)
        assert bitcorr.fairness_check(fock.FockPureState(c, 0.0), bitcorr.AnglePair(0, 0)) > 0.5


def test_golden_section():
    x, fx = bitcorr._golden_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, 100, 1e-12)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(0.0, abs=1e-12)
