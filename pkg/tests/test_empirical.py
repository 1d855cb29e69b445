import math
from fractions import Fraction
import numpy as np
import pytest
from hypothesis import given, strategies as st
from src.api.empirical import (
    composition_array,
    densify,
    enumerate_empirical,
    find_N_for_ball,
    joint_empirical_law,
    log_multinomial_prob,
    multinomial_prob,
    nearest_empirical,
)
from src.api.finite_measures import prohorov_distance
from src.errors import ArgumentError, ResourceError
from src.models.empirical import EmpiricalMeasure
from src.models.measures import Alphabet, Dist
from src.models.rate import HalfSpace
from src.settings import ArithmeticMode
from tests.conftest import S2
from tests.oracles import sequence_law

A3 = Alphabet(labels=("a", "b", "c"))


class TestEnumeration:
    @pytest.mark.parametrize("n,k", [(1, 1), (3, 2), (4, 3), (6, 4)])
    def test_size_and_distinct(self, n, k):
        measures = enumerate_empirical(n, Alphabet.of_size(k))
        assert len(measures) == math.comb(n + k - 1, k - 1)
        assert len({m.counts for m in measures}) == len(measures)
        assert all(sum(m.counts) == n for m in measures)

    def test_order(self):
        counts = [m.counts for m in enumerate_empirical(2, A3)]
        assert counts == [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]

    def test_array_is_read_only(self):
        arr = composition_array(3, 3)
        with pytest.raises(ValueError):
            arr[0, 0] = 7

    def test_cap(self):
        with pytest.raises(ResourceError):
            enumerate_empirical(50, Alphabet.of_size(5), cap=1000)

    def test_rejects_zero_level(self):
        with pytest.raises(ArgumentError):
            enumerate_empirical(0, A3)


class TestMultinomial:
    def test_exact_law_sums_to_one(self):
        weights = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
        total = sum(multinomial_prob(m.counts, weights, ArithmeticMode.EXACT) for m in enumerate_empirical(5, A3))
        assert total == 1

    def test_double_matches_exact(self):
        weights = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
        for m in enumerate_empirical(4, A3):
            exact = multinomial_prob(m.counts, weights, ArithmeticMode.EXACT)
            assert multinomial_prob(m.counts, [float(w) for w in weights]) == pytest.approx(float(exact), rel=1e-12)

    def test_log_prob_off_support(self):
        nu = EmpiricalMeasure(alphabet=S2, n=2, counts=(1, 1))
        assert log_multinomial_prob(nu, Dist.point_mass(S2, "s1")) == -math.inf


class TestJointLaw:
    def test_matches_sequence_oracle(self, symmetric_lambda_exact):
        A = HalfSpace(coordinate="r1", threshold=0.5, op="ge")
        B = HalfSpace(coordinate="s2", threshold=0.5, op="le")
        for n in (1, 2, 3, 4):
            value = joint_empirical_law(n, symmetric_lambda_exact, A, B, ArithmeticMode.EXACT)
            assert value == sequence_law(n, symmetric_lambda_exact, A, B)

    def test_whole_space_has_mass_one(self, symmetric_lambda):
        everything = lambda phi: True
        assert joint_empirical_law(5, symmetric_lambda, everything, everything) == pytest.approx(1.0, abs=1e-12)


probabilities = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=4).filter(lambda ws: sum(ws) > 0.1)


class TestNearest:
    @given(probabilities, st.integers(min_value=1, max_value=12))
    def test_is_nearest(self, ws, n):
        alphabet = Alphabet.of_size(len(ws))
        target = Dist.from_array(alphabet, [w / sum(ws) for w in ws])
        best = nearest_empirical(target, n)
        best_gap = float(prohorov_distance(best.value(), target))
        others = min(float(prohorov_distance(m.value(), target)) for m in enumerate_empirical(n, alphabet))
        assert best_gap <= others + 1e-12

    def test_ties_go_to_the_first_symbol(self):
        target = Dist.from_array(S2, [0.5, 0.5])
        assert nearest_empirical(target, 3).counts == (2, 1)

    def test_exact_target(self):
        target = Dist(alphabet=A3, weights=["1/3", "1/3", "1/3"], exact=True)
        assert nearest_empirical(target, 6).counts == (2, 2, 2)


class TestDensify:
    @pytest.mark.parametrize("l,m", [(1, 3), (2, 7), (5, 16), (10, 40)])
    def test_within_two_over_l(self, l, m):
        zeta = EmpiricalMeasure(alphabet=A3, n=3, counts=(1, 1, 1))
        out = densify(zeta, l, m)
        assert out.n == m
        assert prohorov_distance(out.value(exact=True), zeta.value(exact=True)) <= Fraction(2, l)

    def test_needs_room(self):
        zeta = EmpiricalMeasure(alphabet=A3, n=3, counts=(1, 1, 1))
        with pytest.raises(ArgumentError):
            densify(zeta, 4, 11)


class TestBallLevel:
    @pytest.mark.parametrize("delta", [0.5, 0.2, 0.07])
    def test_every_later_level_meets_the_ball(self, delta):
        center = Dist.from_array(A3, [0.2, 0.3, 0.5])
        N = find_N_for_ball(center, delta)
        for n in range(N, N + 25):
            gap = float(prohorov_distance(nearest_empirical(center, n).value(), center))
            assert gap < delta

    def test_point_mass_center(self):
        center = Dist.point_mass(A3, "b")
        assert find_N_for_ball(center, 0.3) >= 1
        assert np.isclose(float(prohorov_distance(nearest_empirical(center, 1).value(), center)), 0.0)
