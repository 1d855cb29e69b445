from fractions import Fraction
import numpy as np
import pytest
from hypothesis import settings as hypothesis_settings
from src.models.measures import Alphabet, Dist, JointDist

hypothesis_settings.register_profile("deterministic", derandomize=True, deadline=None, max_examples=60)
hypothesis_settings.load_profile("deterministic")

R2 = Alphabet(labels=("r1", "r2"))
S2 = Alphabet(labels=("s1", "s2"))


def random_joint(rng: np.random.Generator, R: int, S: int, zeros: bool = False) -> JointDist:
    w = rng.dirichlet(np.ones(R * S)).reshape(R, S)
    if zeros:
        w[rng.random((R, S)) < 0.25] = 0.0
        for s in range(S):
            if w[:, s].sum() == 0:
                w[rng.integers(R), s] = 1.0
    return JointDist.from_array(Alphabet.of_size(R, "r"), Alphabet.of_size(S, "s"), w / w.sum())


def random_exact_joint(rng: np.random.Generator, R: int, S: int) -> JointDist:
    ints = rng.integers(1, 10, size=(R, S))
    total = int(ints.sum())
    return JointDist(
        rows=Alphabet.of_size(R, "r"),
        cols=Alphabet.of_size(S, "s"),
        weights=[[Fraction(int(c), total) for c in row] for row in ints],
        exact=True,
    )


def random_dist(rng: np.random.Generator, alphabet: Alphabet) -> Dist:
    return Dist.from_array(alphabet, rng.dirichlet(np.ones(alphabet.size)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def symmetric_lambda() -> JointDist:
    """lambda = [[.4, .1], [.1, .4]], the reference Sanov scenario."""
    return JointDist.from_array(R2, S2, [[0.4, 0.1], [0.1, 0.4]])


@pytest.fixture
def symmetric_lambda_exact() -> JointDist:
    return JointDist(rows=R2, cols=S2, weights=[["2/5", "1/10"], ["1/10", "2/5"]], exact=True)


@pytest.fixture
def half() -> Dist:
    return Dist.from_array(S2, [0.5, 0.5])


@pytest.fixture
def scenario_data() -> dict:
    return {
        "lambda": {"rows": ["r1", "r2"], "cols": ["s1", "s2"], "matrix": [[0.4, 0.1], [0.1, 0.4]]},
        "psi": {"alphabet": ["s1", "s2"], "weights": [0.5, 0.5]},
        "event": {"kind": "halfspace", "coordinate": "r1", "threshold": 0.8, "op": "ge"},
        "n_values": [20, 50, 100],
    }
