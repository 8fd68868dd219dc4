import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvbit import bitcorr, catalog, fock
from cvbit.config import DEFAULT
from cvbit.errors import CutoffCapExceeded, NotConverged, OutOfRange, SpecParseError


class TestSpecParsing:
    def test_basic(self):
        p = catalog.parse_family_spec("kind=tmsv;r=0.5")
        assert (p.kind, p.r) == ("tmsv", 0.5)

    def test_order_and_whitespace(self):
        a = catalog.parse_family_spec("T=0.9; kind=photon_subtracted ;r=0.4")
        b = catalog.parse_family_spec("kind=photon_subtracted;r=0.4;T=0.9")
        assert a == b

    def test_lambda(self):
        p = catalog.parse_family_spec("kind=photon_subtracted;Lambda=0.5;T=1")
        assert p.r == pytest.approx(math.atanh(0.5))
        assert p.Lambda == pytest.approx(0.5)

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "r=0.5",
            "kind=nothing",
            "kind=tmsv",
            "kind=tmsv;r=0.5;p=0.2",
            "kind=tmsv;r=0.5;r=0.6",
            "kind=tmsv;r=abc",
            "kind=tmsv;r=-1",
            "kind=bell_phi_plus;p=1.5",
            "kind=tmsv;r",
            "kind=tmsv;r=0.5;Lambda=0.9",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(SpecParseError):
            catalog.parse_family_spec(text)

    @settings(max_examples=50, deadline=None)
    @given(r=st.floats(0, 3), t=st.floats(0, 1))
    def test_round_trip(self, r, t):
        p = catalog.FamilyParams("photon_subtracted", r=r, T=t)
        assert catalog.parse_family_spec(p.spec()) == p


def test_squeezing_db():
    assert catalog.squeezing_db(math.log(10) / 20) == pytest.approx(1.0)


class TestTmsv:
    def test_closed_forms(self):
        assert catalog.tmsv_negativity(0.5) == pytest.approx(0.859141, abs=1e-6)
        assert catalog.tmsv_q(0.5) == pytest.approx(2 / math.pi * math.atan(math.sinh(1)))

    def test_fock_state(self):
        cm, psi = catalog.tmsv(0.5)
        assert psi.tail_mass < DEFAULT.tail_tol
        cn = np.diag(psi.coeffs).real
        assert cn[1] / cn[0] == pytest.approx(math.tanh(0.5))
        assert np.allclose(cm.entries[0, 2], math.sinh(1))


class TestBell:
    def test_values(self):
        for p in (0.1, 0.5, 0.9):
            _, (n_b, q_b) = catalog.bell_state("bell_psi_plus", p)
            assert n_b == pytest.approx(math.sqrt(p * (1 - p)))
            assert q_b == pytest.approx(4 / math.pi * n_b)

    def test_negativity_matches_fock(self):
        psi, (n_b, _) = catalog.bell_state("bell_phi_minus", 0.3)
        assert fock.negativity_fock(psi) == pytest.approx(n_b, abs=1e-12)


class TestPhotonSubtracted:
    def test_coefficients_normalized(self):
        for r, t in [(0.1, 0.5), (0.8, 0.9), (1.2, 1.0)]:
            cn = catalog.ps_coefficients(r, t, 2000)
            assert np.sum(cn**2) == pytest.approx(1.0, abs=1e-12)

    def test_negativity_spot_value(self):
        assert catalog.ps_negativity(math.atanh(0.5), 1.0) == pytest.approx(2.2, abs=1e-12)

    def test_negativity_schmidt_identity(self):
        for r, t in [(0.2, 0.6), (0.9, 0.95), (1.1, 1.0)]:
            cn = catalog.ps_coefficients(r, t, 3000)
            assert catalog.ps_negativity(r, t) == pytest.approx((cn.sum() ** 2 - 1) / 2, abs=1e-10)

    def test_series_against_fock(self):
        tight = DEFAULT.replace(tail_tol=1e-12)
        for r, t in [(0.4, 0.9), (0.8, 0.7)]:
            psi, _ = catalog.photon_subtracted(r, t, tight)
            assert catalog.q_ps_series(r, t) == pytest.approx(bitcorr.optimize_q(psi, tight).q, abs=1e-6)

    def test_series_edge_cases(self):
        assert catalog.q_ps_series(0.0, 0.7) == 0.0
        with pytest.raises(NotConverged):
            catalog.q_ps_series(1.8, 1.0)
        with pytest.raises(OutOfRange):
            catalog.q_ps_series(0.5, 0.5, n_max=500)

    def test_cutoff_cap(self):
        with pytest.raises(CutoffCapExceeded):
            catalog.photon_subtracted(2.0, 1.0)


class TestMixture:
    def test_pure_limit(self):
        for r in (0.2, 0.7, 1.1):
            n, q = catalog.mixture_analytic(r, 1.0)
            assert q == pytest.approx(catalog.tmsv_q(r), abs=1e-12)
            assert n == pytest.approx(catalog.tmsv_negativity(r))

    def test_linear_in_weight(self):
        n, q = catalog.mixture_analytic(0.6, 0.35)
        assert q == pytest.approx(0.35 * catalog.tmsv_q(0.6), rel=1e-12)
        assert catalog.mixture_analytic(0.6, 0.0) == (0.0, 0.0)

    def test_density_matrix(self):
        # the partial-transpose trace norm is sensitive to the truncated tail
        tight, _ = catalog.mixture_tmsv_vacuum(0.5, 0.4, DEFAULT.replace(tail_tol=1e-16))
        assert fock.negativity_fock(tight) == pytest.approx(0.4 * catalog.tmsv_negativity(0.5), abs=1e-6)
        rho, (n_m, q_m) = catalog.mixture_tmsv_vacuum(0.5, 0.4)
        assert bitcorr.optimize_q(rho).q == pytest.approx(q_m, abs=1e-5)


def test_qutrit():
    psi = catalog.qutrit_h()
    assert psi.cutoff == 3
    assert bitcorr.optimize_q(psi).q < 1e-8
    assert fock.negativity_fock(psi) == pytest.approx(0.25, abs=1e-12)


class TestBuild:
    def test_representations(self):
        p = catalog.parse_family_spec("kind=tmsv;r=0.3")
        assert catalog.build(p).cutoff is None
        assert catalog.build(p, "fock").cutoff > 1
        with pytest.raises(OutOfRange):
            catalog.build(catalog.parse_family_spec("kind=qutrit_h"), "gaussian")

    def test_photon_subtracted_without_series(self):
        built = catalog.build(catalog.FamilyParams("photon_subtracted", r=1.45, T=1.0))
        assert built.negativity > 0
