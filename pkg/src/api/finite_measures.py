import logging
import math
from fractions import Fraction
from typing import Sequence, Tuple, Union
import numpy as np
from scipy.special import logsumexp, rel_entr
from src.errors import ArgumentError, PreconditionError
from src.models.measures import Dist, JointDist, Kernel, Weight

logger = logging.getLogger(__name__)

Measure = Union[Dist, JointDist]


def _check_same_shape(a: Measure, b: Measure, what: str) -> None:
    if type(a) is not type(b):
        raise ArgumentError(f"{what}: cannot compare a {type(a).__name__} with a {type(b).__name__}")
    if isinstance(a, Dist):
        same = a.alphabet == b.alphabet
    else:
        same = a.rows == b.rows and a.cols == b.cols
    if not same:
        raise ArgumentError(f"{what}: measures live on different alphabets")


def _flat_weights(m: Measure) -> Tuple[Weight, ...]:
    if isinstance(m, Dist):
        return m.weights
    return tuple(w for row in m.weights for w in row)


def relative_entropy(xi: Measure, lam: Measure) -> float:
    """
   H(xi | lam) = sum xi log(xi / lam) with 0 log 0 = 0.

   Returns +inf exactly when xi is not absolutely continuous w.r.t. lam.
   Exact inputs are summed term by term from the rational ratios, so H(lam|lam) is exactly 0.

   Raises:
       ArgumentError: If the two measures live on different alphabets.
   """
    _check_same_shape(xi, lam, "relative_entropy")
    if xi.exact and lam.exact:
        terms = []
        for p, q in zip(_flat_weights(xi), _flat_weights(lam)):
            if p == 0:
                continue
            if q == 0:
                return math.inf
            terms.append(float(p) * math.log(p / q))
        return max(math.fsum(terms), 0.0)
    value = float(rel_entr(xi.array, lam.array).sum())
    return max(value, 0.0)


def prohorov_distance(mu: Measure, nu: Measure) -> Weight:
    """Prohorov distance for the discrete metric, i.e. the total-variation distance 1/2 sum |mu - nu|."""
    _check_same_shape(mu, nu, "prohorov_distance")
    if mu.exact and nu.exact:
        return sum((abs(a - b) for a, b in zip(_flat_weights(mu), _flat_weights(nu))), Fraction(0)) / 2
    return 0.5 * float(np.abs(mu.array - nu.array).sum())


def marginals(xi: JointDist) -> Tuple[Dist, Dist]:
    if xi.exact:
        zero = Fraction(0)
        r = [sum(row, zero) for row in xi.weights]
        s = [xi.column_mass(j) for j in range(xi.cols.size)]
        return Dist(alphabet=xi.rows, weights=r, exact=True), Dist(alphabet=xi.cols, weights=s, exact=True)
    arr = xi.array
    return Dist.from_array(xi.rows, arr.sum(axis=1)), Dist.from_array(xi.cols, arr.sum(axis=0))


def conditional_theta(lam: JointDist) -> Kernel:
    """
   theta(s, .) = lam(. x {s}) / lam(R x {s}), one row per column symbol.

   Raises:
       PreconditionError: If some column of lam carries no mass.
   """
    rows = []
    for s, label in enumerate(lam.cols.labels):
        mass = lam.column_mass(s)
        if mass <= 0:
            raise PreconditionError(f"lambda(R x {{{label}}}) = 0, theta({label}, .) is undefined")
        if lam.exact:
            rows.append(Dist(alphabet=lam.rows, weights=[lam.entry(r, s) / mass for r in range(lam.rows.size)], exact=True))
        else:
            col = lam.array[:, s]
            rows.append(Dist.from_array(lam.rows, col / col.sum()))
    return Kernel(source=lam.cols, target=lam.rows, rows=tuple(rows))


def compose(psi: Dist, theta: Kernel) -> JointDist:
    """The coupling xi(r, s) = psi(s) theta(s, r)."""
    if psi.alphabet != theta.source:
        raise ArgumentError("compose: psi and theta disagree on the column alphabet")
    exact = psi.exact and theta.exact
    weights = [
        [psi.weights[s] * theta.rows[s].weights[r] for s in range(psi.size)]
        for r in range(theta.target.size)
    ]
    return JointDist(rows=theta.target, cols=theta.source, weights=weights, exact=exact)


def log_sum(values: Sequence[float]) -> float:
    """
   Stable log sum exp over log-domain values in [-inf, +inf).

   Raises:
       ArgumentError: On an empty list, NaN or +inf entries.
   """
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ArgumentError("log_sum of an empty list")
    if np.isnan(arr).any() or np.isposinf(arr).any():
        raise ArgumentError("log_sum entries must lie in [-inf, +inf)")
    if np.isneginf(arr).all():
        return -math.inf
    return float(logsumexp(arr))


def grouped_log_sum(values: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
    """Per-group log sum exp; groups without a finite member come out as -inf."""
    values = np.asarray(values, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.intp)
    peak = np.full(n_groups, -np.inf)
    np.maximum.at(peak, groups, values)
    shift = np.where(np.isfinite(peak), peak, 0.0)
    acc = np.zeros(n_groups)
    with np.errstate(invalid="ignore"):
        np.add.at(acc, groups, np.exp(values - shift[groups]))
    with np.errstate(divide="ignore"):
        return shift + np.log(acc)
