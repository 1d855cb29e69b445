import math
from fractions import Fraction
import numpy as np
import pytest
from hypothesis import given, strategies as st
from src.api.finite_measures import (
    compose,
    conditional_theta,
    grouped_log_sum,
    log_sum,
    marginals,
    prohorov_distance,
    relative_entropy,
)
from src.errors import ArgumentError, PreconditionError
from src.models.measures import Alphabet, Dist, JointDist
from tests.conftest import R2, S2
from tests.oracles import subset_prohorov

weights = st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=5)


def _dist(ws, alphabet=None):
    alphabet = alphabet or Alphabet.of_size(len(ws))
    total = sum(ws)
    return Dist.from_array(alphabet, [w / total for w in ws])


class TestValidation:
    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError, match="negative"):
            Dist(alphabet=S2, weights=[1.5, -0.5])

    def test_matrix_message_names_rows(self):
        with pytest.raises(ValueError, match="r1=0.5"):
            JointDist(rows=R2, cols=S2, weights=[[0.25, 0.25], [0.25, 0.5]])

    def test_exact_weights_must_sum_exactly(self):
        with pytest.raises(ValueError, match="exactly 1"):
            Dist(alphabet=S2, weights=["1/3", "1/3"], exact=True)

    def test_duplicate_labels(self):
        with pytest.raises(ValueError, match="distinct"):
            Alphabet(labels=("a", "a"))


class TestRelativeEntropy:
    def test_zero_against_itself_exactly(self, symmetric_lambda_exact):
        assert relative_entropy(symmetric_lambda_exact, symmetric_lambda_exact) == 0.0

    def test_known_value(self):
        xi = Dist.from_array(S2, [0.5, 0.5])
        lam = Dist.from_array(S2, [0.25, 0.75])
        expected = 0.5 * math.log(2.0) + 0.5 * math.log(0.5 / 0.75)
        assert relative_entropy(xi, lam) == pytest.approx(expected, abs=1e-15)

    def test_infinite_off_support(self):
        xi = Dist.from_array(S2, [0.5, 0.5])
        lam = Dist.point_mass(S2, "s1")
        assert math.isinf(relative_entropy(xi, lam))
        assert relative_entropy(lam, xi) == pytest.approx(math.log(2.0))

    def test_shape_mismatch(self):
        with pytest.raises(ArgumentError):
            relative_entropy(Dist.uniform(S2), Dist.uniform(Alphabet.of_size(3)))

    @given(weights, weights)
    def test_nonnegative(self, a, b):
        k = min(len(a), len(b))
        assert relative_entropy(_dist(a[:k]), _dist(b[:k])) >= 0.0


class TestProhorov:
    @given(weights, weights)
    def test_matches_subset_oracle(self, a, b):
        k = min(len(a), len(b))
        mu, nu = _dist(a[:k]), _dist(b[:k])
        assert prohorov_distance(mu, nu) == pytest.approx(subset_prohorov(mu, nu), abs=1e-12)

    def test_exact_is_a_fraction(self):
        mu = Dist(alphabet=S2, weights=["1/3", "2/3"], exact=True)
        nu = Dist(alphabet=S2, weights=["1/2", "1/2"], exact=True)
        assert prohorov_distance(mu, nu) == Fraction(1, 6)


class TestKernels:
    def test_marginals(self, symmetric_lambda):
        rho, sigma = marginals(symmetric_lambda)
        np.testing.assert_allclose(rho.array, [0.5, 0.5])
        np.testing.assert_allclose(sigma.array, [0.5, 0.5])

    def test_theta_and_compose_recover_lambda(self, symmetric_lambda_exact):
        theta = conditional_theta(symmetric_lambda_exact)
        assert theta.rows[0].weights == (Fraction(4, 5), Fraction(1, 5))
        _, lam_s = marginals(symmetric_lambda_exact)
        assert compose(lam_s, theta).weights == symmetric_lambda_exact.weights

    def test_theta_names_empty_column(self):
        lam = JointDist.from_array(R2, S2, [[0.5, 0.0], [0.5, 0.0]])
        with pytest.raises(PreconditionError, match="s2"):
            conditional_theta(lam)

    @given(weights)
    def test_compose_keeps_psi(self, ws):
        rng = np.random.default_rng(len(ws))
        lam = JointDist.from_array(
            Alphabet.of_size(3, "r"), Alphabet.of_size(len(ws), "s"), rng.dirichlet(np.ones(3 * len(ws))).reshape(3, -1)
        )
        psi = _dist(ws, lam.cols)
        _, s_marginal = marginals(compose(psi, conditional_theta(lam)))
        np.testing.assert_allclose(s_marginal.array, psi.array, atol=1e-14)


class TestLogSum:
    def test_matches_direct_sum(self):
        values = [math.log(0.2), math.log(0.3), -math.inf]
        assert log_sum(values) == pytest.approx(math.log(0.5))

    def test_all_minus_inf(self):
        assert log_sum([-math.inf, -math.inf]) == -math.inf

    def test_large_values_do_not_overflow(self):
        assert log_sum([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0))

    @pytest.mark.parametrize("values", [[], [math.nan], [math.inf, 0.0]])
    def test_rejects(self, values):
        with pytest.raises(ArgumentError):
            log_sum(values)

    def test_grouped(self):
        out = grouped_log_sum(np.array([0.0, 0.0, -np.inf, 1.0]), np.array([0, 0, 1, 2]), 3)
        np.testing.assert_allclose(out[[0, 2]], [math.log(2.0), 1.0])
        assert out[1] == -np.inf
