import math
from fractions import Fraction
import numpy as np
import pytest
from src.api.empirical import composition_array, enumerate_empirical, multinomial_prob
from src.api.finite_measures import conditional_theta, log_sum
from src.api.kernels import (
    column_slice,
    enumerate_tables,
    eta_event,
    eta_point_mass,
    eta_via_conditioning,
    kernel_law,
    s_marginal_law,
    verify_prcp_identity,
)
from src.errors import InternalContractError, ResourceError
from src.models.empirical import EmpiricalMeasure
from src.models.measures import Alphabet, Dist, JointDist
from src.models.rate import HalfSpace
from src.settings import ArithmeticMode
from tests.conftest import R2, S2, random_exact_joint, random_joint


class TestTables:
    def test_two_by_two(self):
        tables = enumerate_tables((2, 2), (2, 2))
        assert [t.counts for t in tables] == [((2, 0), (0, 2)), ((1, 1), (1, 1)), ((0, 2), (2, 0))]

    def test_margins_hold(self):
        for t in enumerate_tables((3, 1, 2), (2, 4)):
            assert tuple(t.array.sum(axis=1)) == (3, 1, 2)
            assert tuple(t.array.sum(axis=0)) == (2, 4)

    def test_mismatched_totals(self):
        assert enumerate_tables((2, 1), (1, 1)) == []

    def test_cap(self):
        with pytest.raises(ResourceError):
            enumerate_tables((20, 20, 20), (20, 20, 20), cap=100)


class TestPointMass:
    def test_exact_law_sums_to_one(self, symmetric_lambda_exact):
        theta = conditional_theta(symmetric_lambda_exact)
        zeta = EmpiricalMeasure(alphabet=S2, n=4, counts=(3, 1))
        total = sum(
            eta_point_mass(4, zeta, phi, theta, ArithmeticMode.EXACT) for phi in enumerate_empirical(4, R2)
        )
        assert total == 1

    def test_agrees_with_convolution(self, rng):
        lam = random_joint(rng, 3, 2, zeros=True)
        theta = conditional_theta(lam)
        zeta = EmpiricalMeasure(alphabet=lam.cols, n=5, counts=(2, 3))
        law = kernel_law(5, zeta, theta)
        for counts, lp in zip(law.counts, law.log_probs):
            phi = EmpiricalMeasure(alphabet=lam.rows, n=5, counts=tuple(int(c) for c in counts))
            assert eta_point_mass(5, zeta, phi, theta) == pytest.approx(math.exp(lp), rel=1e-12)

    def test_dirac_kernel(self):
        lam = JointDist.from_array(R2, S2, [[0.5, 0.0], [0.0, 0.5]])
        theta = conditional_theta(lam)
        zeta = EmpiricalMeasure(alphabet=S2, n=3, counts=(2, 1))
        assert eta_point_mass(3, zeta, EmpiricalMeasure(alphabet=R2, n=3, counts=(2, 1)), theta) == pytest.approx(1.0)
        assert eta_point_mass(3, zeta, EmpiricalMeasure(alphabet=R2, n=3, counts=(1, 2)), theta) == 0.0

    def test_product_lambda_forgets_zeta(self, rng):
        R3 = Alphabet.of_size(3, "r")
        mu = Dist.from_array(R3, rng.dirichlet(np.ones(3)))
        nu = Dist.from_array(S2, [0.3, 0.7])
        theta = conditional_theta(JointDist.product(mu, nu))
        for n in range(1, 7):
            zetas = enumerate_empirical(n, S2)
            for phi in enumerate_empirical(n, R3):
                expected = multinomial_prob(phi.counts, mu.weights)
                for zeta in zetas:
                    assert eta_point_mass(n, zeta, phi, theta) == pytest.approx(expected, rel=1e-12, abs=1e-300)


class TestKernelLaw:
    def test_normalized(self, rng):
        for _ in range(10):
            lam = random_joint(rng, 3, 3, zeros=True)
            zeta = EmpiricalMeasure(alphabet=lam.cols, n=6, counts=(1, 2, 3))
            law = kernel_law(6, zeta, conditional_theta(lam))
            assert math.exp(log_sum(law.log_probs)) == pytest.approx(1.0, abs=1e-12)

    def test_enumeration_order(self, symmetric_lambda):
        zeta = EmpiricalMeasure(alphabet=S2, n=3, counts=(1, 2))
        law = kernel_law(3, zeta, conditional_theta(symmetric_lambda))
        assert [tuple(c) for c in law.counts] == [(3, 0), (2, 1), (1, 2), (0, 3)]

    def test_wide_row_alphabet(self, rng):
        lam = random_joint(rng, 32, 2)
        zeta = EmpiricalMeasure(alphabet=lam.cols, n=3, counts=(2, 1))
        law = kernel_law(3, zeta, conditional_theta(lam))
        np.testing.assert_array_equal(law.counts, composition_array(3, 32))
        assert math.exp(log_sum(law.log_probs)) == pytest.approx(1.0, abs=1e-12)

    def test_exact_matches_conditioning(self, rng):
        for _ in range(5):
            lam = random_exact_joint(rng, 2, 2)
            zeta = EmpiricalMeasure(alphabet=lam.cols, n=4, counts=(1, 3))
            A = HalfSpace(coordinate="r1", threshold=0.5, op="ge")
            direct = eta_event(4, zeta, A, conditional_theta(lam), ArithmeticMode.EXACT)
            atom = eta_via_conditioning(4, zeta, A, lam, ArithmeticMode.EXACT)
            assert isinstance(direct, Fraction)
            assert direct == atom

    def test_conditioning_on_a_null_atom(self):
        lam = JointDist.from_array(R2, S2, [[1.0, 0.0], [0.0, 0.0]])
        zeta = EmpiricalMeasure(alphabet=S2, n=2, counts=(1, 1))
        with pytest.raises(InternalContractError):
            eta_via_conditioning(2, zeta, lambda phi: True, lam)


class TestColumnSlice:
    def test_tables_have_the_s_marginal(self, symmetric_lambda):
        zeta = EmpiricalMeasure(alphabet=S2, n=6, counts=(4, 2))
        cut = column_slice(6, zeta, symmetric_lambda)
        assert len(cut) == 5 * 3
        np.testing.assert_array_equal(cut.tables.sum(axis=1), np.tile([4, 2], (len(cut), 1)))

    def test_cap(self, symmetric_lambda):
        zeta = EmpiricalMeasure(alphabet=S2, n=200, counts=(100, 100))
        with pytest.raises(ResourceError):
            column_slice(200, zeta, symmetric_lambda, cap=1000)


class TestPRCP:
    def test_double_mode(self, rng):
        for _ in range(20):
            R, S = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            n = int(rng.integers(1, 5))
            lam = random_joint(rng, R, S)
            A = HalfSpace(coordinate="r1", threshold=float(rng.random()), op="ge")
            B = HalfSpace(coordinate=lam.cols.labels[-1], threshold=float(rng.random()), op="le")
            assert verify_prcp_identity(n, lam, A, B) <= 1e-12

    def test_exact_mode_is_exactly_zero(self, rng):
        for _ in range(10):
            R, S = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            lam = random_exact_joint(rng, R, S)
            A = HalfSpace(coordinate="r1", threshold=float(rng.random()), op="gt")
            B = HalfSpace(coordinate="s1", threshold=float(rng.random()), op="ge")
            assert verify_prcp_identity(3, lam, A, B, ArithmeticMode.EXACT) == 0

    def test_exact_mode_on_a_double_lambda(self, rng):
        for _ in range(10):
            lam = random_joint(rng, 2, 2)
            A = HalfSpace(coordinate="r1", threshold=0.5, op="ge")
            B = HalfSpace(coordinate="s2", threshold=0.5, op="le")
            assert verify_prcp_identity(3, lam, A, B, ArithmeticMode.EXACT) == 0
        lam = JointDist.from_array(R2, S2, [[0.2, 0.1], [0.4, 0.3]])
        A = HalfSpace(coordinate="r1", threshold=0.6, op="gt")
        assert verify_prcp_identity(4, lam, A, lambda zeta: True, ArithmeticMode.EXACT) == 0

    def test_s_marginal_law_is_a_law(self, rng):
        lam = random_joint(rng, 2, 3)
        _, logs = s_marginal_law(7, lam)
        assert math.exp(log_sum(logs)) == pytest.approx(1.0, abs=1e-12)
