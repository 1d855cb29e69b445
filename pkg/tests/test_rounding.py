from fractions import Fraction
import numpy as np
import pytest
from src.api.empirical import nearest_empirical
from src.api.rounding import certificate_for, check_rounding, match_s_margin, round_to_grid
from src.errors import ArgumentError, PreconditionError
from src.models.empirical import EmpiricalMeasure
from src.models.measures import JointDist
from src.models.rounding import RoundingCertificate
from tests.conftest import R2, S2, random_dist, random_joint


def _absolutely_continuous(rng, lam: JointDist) -> JointDist:
    w = lam.array * rng.random(lam.shape)
    return JointDist.from_array(lam.rows, lam.cols, w / w.sum())


class TestRoundToGrid:
    def test_within_one_over_n(self, rng):
        for _ in range(30):
            xi = random_joint(rng, 3, 2, zeros=True)
            n = int(rng.integers(1, 60))
            nu = round_to_grid(xi, n)
            assert nu.n == n
            assert np.abs(nu.array / n - xi.array).max() <= 1.0 / n + 1e-15
            assert not ((nu.array > 0) & (xi.array == 0)).any()

    def test_remainders_then_cell_order(self):
        xi = JointDist.from_array(R2, S2, [[0.25, 0.25], [0.25, 0.25]])
        # equal remainders: the extra unit goes to the first cell
        assert round_to_grid(xi, 5).counts == ((2, 1), (1, 1))

    def test_exact_input(self):
        xi = JointDist(rows=R2, cols=S2, weights=[["1/3", "1/6"], ["1/6", "1/3"]], exact=True)
        assert round_to_grid(xi, 6).counts == ((2, 1), (1, 2))

    def test_rejects_zero_level(self, symmetric_lambda):
        with pytest.raises(ArgumentError):
            round_to_grid(symmetric_lambda, 0)


class TestMatchSMargin:
    def test_seeded_instances(self, rng):
        for _ in range(100):
            R, S = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            n = int(rng.integers(10, 201))
            lam = random_joint(rng, R, S, zeros=True)
            xi = _absolutely_continuous(rng, lam)
            zeta = nearest_empirical(random_dist(rng, lam.cols), n)
            nu = match_s_margin(xi, zeta, lam)
            check = check_rounding(nu, xi, zeta, lam)
            assert nu.s_marginal().counts == zeta.counts
            assert check.s_margin_exact and check.absolutely_continuous
            assert check.fd_joint <= check.fd_joint_bound
            assert check.fd_r_marginal <= check.fd_r_marginal_bound

    def test_surplus_lands_on_the_heaviest_cell(self, symmetric_lambda):
        xi = JointDist.from_array(R2, S2, [[0.5, 0.0], [0.0, 0.5]])
        zeta = EmpiricalMeasure(alphabet=S2, n=4, counts=(1, 3))
        nu = match_s_margin(xi, zeta, symmetric_lambda)
        assert nu.counts == ((1, 0), (0, 3))

    def test_not_absolutely_continuous(self):
        lam = JointDist.from_array(R2, S2, [[0.5, 0.0], [0.25, 0.25]])
        xi = JointDist.from_array(R2, S2, [[0.25, 0.25], [0.25, 0.25]])
        zeta = EmpiricalMeasure(alphabet=S2, n=4, counts=(2, 2))
        with pytest.raises(PreconditionError, match=r"\(r1, s2\)"):
            match_s_margin(xi, zeta, lam)

    def test_empty_column(self):
        lam = JointDist.from_array(R2, S2, [[0.5, 0.0], [0.5, 0.0]])
        zeta = EmpiricalMeasure(alphabet=S2, n=2, counts=(1, 1))
        with pytest.raises(PreconditionError, match="s2"):
            match_s_margin(lam, zeta, lam)


class TestCertificate:
    @pytest.mark.parametrize("delta", [1.0, 0.3, 0.05])
    def test_invariant_holds(self, symmetric_lambda, delta):
        cert = certificate_for(symmetric_lambda, delta)
        assert cert.M == 4
        assert cert.kappa == pytest.approx(delta / 64)
        assert cert.marginal_bound(cert.N) < delta
        assert Fraction(2 * (64 + 16), cert.N - 1) >= Fraction(repr(delta)) / 2

    def test_bad_pair_is_rejected(self):
        with pytest.raises(ValueError, match="not below delta"):
            RoundingCertificate(delta=0.1, kappa=0.1, N=10, M=4)

    def test_rejects_nonpositive_delta(self, symmetric_lambda):
        with pytest.raises(ArgumentError):
            certificate_for(symmetric_lambda, 0.0)

    def test_rounding_from_the_certificate_level(self, rng, symmetric_lambda):
        cert = certificate_for(symmetric_lambda, 0.5)
        xi = _absolutely_continuous(rng, symmetric_lambda)
        zeta = nearest_empirical(random_dist(rng, S2), cert.N)
        check = check_rounding(match_s_margin(xi, zeta, symmetric_lambda), xi, zeta, symmetric_lambda)
        assert check.passed
