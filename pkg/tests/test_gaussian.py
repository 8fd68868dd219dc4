import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvbit import gaussian
from cvbit.errors import DomainError, NonSymmetric, NotSymplectic, OutOfRange, Unphysical
from oracles import physical_by_eigenvalues, rotated_pair_covariance, sign_correlation_dblquad

TMSV_R05 = np.array(
    [
        [math.cosh(1), 0, math.sinh(1), 0],
        [0, math.cosh(1), 0, -math.sinh(1)],
        [math.sinh(1), 0, math.cosh(1), 0],
        [0, -math.sinh(1), 0, math.cosh(1)],
    ]
)


def random_local(rng, spread=1.0):
    def one():
        return gaussian.rotation(rng.uniform(0, np.pi)) @ gaussian.squeezer(math.exp(rng.uniform(-spread, spread)))

    return one(), one()


class TestCovarianceMatrix:
    def test_rejects_asymmetric(self):
        m = np.eye(4)
        m[0, 1] = 1e-6
        with pytest.raises(NonSymmetric):
            gaussian.CovarianceMatrix(m)

    def test_blocks(self):
        cm = gaussian.CovarianceMatrix(TMSV_R05)
        assert np.allclose(cm.alpha, math.cosh(1) * np.eye(2))
        assert np.allclose(cm.delta, np.diag([math.sinh(1), -math.sinh(1)]))

    def test_standard_form_orders_correlations(self):
        sf = gaussian.StandardForm(2.0, 2.0, -0.5, 1.2)
        assert sf.c_x >= abs(sf.c_p)


class TestStandardForm:
    def test_vacuum(self):
        sf = gaussian.standard_form(gaussian.CovarianceMatrix.vacuum())
        assert np.allclose(sf.as_tuple(), (1, 1, 0, 0))

    def test_tmsv(self):
        sf = gaussian.standard_form(gaussian.CovarianceMatrix(TMSV_R05))
        assert np.allclose(sf.as_tuple(), (math.cosh(1), math.cosh(1), math.sinh(1), math.sinh(1)), atol=1e-12)

    def test_recovers_locally_rotated_tmsv(self):
        rng = np.random.default_rng(1)
        ref = gaussian.tmsv_standard_form(0.5).as_tuple()
        for _ in range(20):
            sa = gaussian.rotation(rng.uniform(0, 2 * np.pi))
            sb = gaussian.rotation(rng.uniform(0, 2 * np.pi))
            moved = gaussian.apply_local_symplectic(gaussian.CovarianceMatrix(TMSV_R05), sa, sb)
            assert np.allclose(gaussian.standard_form(moved).as_tuple(), ref, atol=1e-9)

    def test_preserves_local_invariants(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            cm = gaussian.random_gaussian_cm(rng)
            moved = gaussian.apply_local_symplectic(cm, *random_local(rng))
            before = np.array(gaussian.local_invariants(moved))
            after = np.array(gaussian.local_invariants(gaussian.standard_form(moved).to_cm()))
            assert np.allclose(after, before, rtol=1e-10, atol=1e-10)


class TestPhysicality:
    def test_simple_cases(self):
        assert gaussian.is_physical(gaussian.CovarianceMatrix.vacuum())
        assert not gaussian.is_physical(gaussian.CovarianceMatrix(np.diag([0.5, 0.5, 1, 1])))

    def test_anticorrelated_edge_case(self):
        cm = gaussian.StandardForm(2, 2, 1.9, -1.9).to_cm()
        assert gaussian.is_physical(cm) == physical_by_eigenvalues(cm)

    def test_matches_eigenvalue_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(2000):
            la, lb = rng.uniform(1, 4, 2)
            cx = rng.uniform(0, 1.2 * math.sqrt(la * lb))
            cp = rng.uniform(-cx, cx)
            cm = gaussian.StandardForm(la, lb, cx, cp).to_cm()
            assert gaussian.is_physical(cm) == physical_by_eigenvalues(cm)


class TestNegativity:
    def test_vacuum(self):
        n, inv = gaussian.negativity_gaussian(gaussian.CovarianceMatrix.vacuum())
        assert n == 0.0
        assert inv.nuTilde == pytest.approx(1.0)

    def test_tmsv(self):
        n, inv = gaussian.negativity_gaussian(gaussian.CovarianceMatrix(TMSV_R05))
        assert inv.nuTilde == pytest.approx(math.exp(-1), rel=1e-12)
        assert n == pytest.approx((1 - math.exp(-1)) / (2 * math.exp(-1)), rel=1e-12)
        assert n == pytest.approx(0.859141, abs=1e-6)

    def test_invariant_relation(self):
        cm = gaussian.random_gaussian_cm(5)
        inv = gaussian.gaussian_invariants(cm)
        det_delta = np.linalg.det(cm.delta)
        assert inv.DeltaTilde == pytest.approx(inv.Delta - 4 * det_delta)

    def test_separable_family(self):
        sf = gaussian.boundary_family("separable", 0.7, 3.0)
        assert sf.c_p == 0.0
        assert sf.c_x == pytest.approx(0.7 * 8 / 3)
        assert gaussian.negativity_gaussian(sf.to_cm())[0] == 0.0

    def test_unphysical(self):
        with pytest.raises(Unphysical):
            gaussian.negativity_gaussian(gaussian.CovarianceMatrix(np.diag([0.5, 0.5, 1, 1])))


class TestClosedForm:
    def test_tmsv_value(self):
        q = gaussian.q_gaussian_closed(gaussian.tmsv_standard_form(0.5))
        assert q == pytest.approx(2 / math.pi * math.atan(math.sinh(1)), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            gaussian.q_gaussian_closed(gaussian.StandardForm(1, 1, 1, 0))

    def test_against_double_integral(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            cm = gaussian.random_gaussian_cm(rng)
            closed = gaussian.q_gaussian_closed(gaussian.standard_form(cm))
            numeric = sign_correlation_dblquad(rotated_pair_covariance(cm, 0.0, 0.0))
            assert numeric == pytest.approx(closed, abs=1e-8)

    def test_arcsine_law_against_double_integral(self):
        cm = gaussian.random_gaussian_cm(6)
        for theta, phi in [(0.3, 1.1), (2.0, 0.4), (1.0, 1.0)]:
            expect = sign_correlation_dblquad(rotated_pair_covariance(cm, theta, phi))
            assert gaussian.e_gaussian(cm, theta, phi) == pytest.approx(expect, abs=1e-8)

    def test_closed_form_is_supremum(self):
        rng = np.random.default_rng(7)
        grid = np.linspace(0, np.pi, 181)
        for _ in range(10):
            cm = gaussian.random_gaussian_cm(rng)
            e = np.abs(gaussian.e_gaussian(cm, grid[:, None], grid[None, :]))
            assert e.max() <= gaussian.q_gaussian_closed(gaussian.standard_form(cm)) + 1e-12


class TestPureCurve:
    def test_matches_tmsv(self):
        for r in (0.1, 0.5, 1.3):
            n = math.expm1(2 * r) / 2
            assert gaussian.q_pure_of_negativity(n) == pytest.approx(2 / math.pi * math.atan(math.sinh(2 * r)))

    def test_endpoints(self):
        assert gaussian.q_pure_of_negativity(0.0) == 0.0
        assert gaussian.scaled_negativity(0.0) == 0.0
        assert gaussian.scaled_negativity(0.5) == pytest.approx(0.5)


class TestGenerators:
    def test_random_states_physical_and_reproducible(self):
        a = [gaussian.random_gaussian_cm(np.random.default_rng(9)).entries for _ in range(3)]
        rng = np.random.default_rng(9)
        b = gaussian.random_gaussian_cm(rng).entries
        assert all(np.array_equal(x, b) for x in a)
        rng = np.random.default_rng(10)
        for _ in range(100):
            cm = gaussian.random_gaussian_cm(rng)
            assert physical_by_eigenvalues(cm)

    def test_bad_ranges(self):
        with pytest.raises(OutOfRange):
            gaussian.random_gaussian_cm(0, gaussian.SamplingRanges(0.5, 2))

    def test_boundary_families(self):
        for eps in (0.0, 0.5, 1.0):
            sep = gaussian.boundary_family("separable", eps)
            per = gaussian.boundary_family("perfect", eps)
            assert gaussian.is_physical(sep.to_cm()) and gaussian.is_physical(per.to_cm())
            assert gaussian.q_gaussian_closed(per) >= 0.97
        assert gaussian.q_gaussian_closed(gaussian.boundary_family("separable", 1.0)) >= 0.97
        with pytest.raises(OutOfRange):
            gaussian.boundary_family("separable", 1.5)

    def test_non_symplectic(self):
        with pytest.raises(NotSymplectic):
            gaussian.apply_local_symplectic(gaussian.CovarianceMatrix.vacuum(), 2 * np.eye(2), np.eye(2))


@settings(max_examples=60, deadline=None)
@given(
    la=st.floats(1, 9),
    lb=st.floats(1, 9),
    fx=st.floats(0, 0.999),
    fp=st.floats(-1, 1),
)
def test_standard_form_round_trip(la, lb, fx, fp):
    cx = fx * math.sqrt(la * lb)
    sf = gaussian.StandardForm(la, lb, cx, fp * cx)
    cm = sf.to_cm()
    if not gaussian.is_physical(cm):
        return
    back = gaussian.standard_form(cm)
    assert np.allclose(back.as_tuple(), sf.as_tuple(), atol=1e-8 * max(la, lb))
    q = gaussian.q_gaussian_closed(back)
    assert 0.0 <= q <= 1.0
