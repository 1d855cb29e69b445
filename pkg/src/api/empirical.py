import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, List, Optional, Sequence, Union
import numpy as np
from scipy.special import gammaln, xlogy
from src.errors import ArgumentError, InternalContractError, ResourceError
from src.models.empirical import EmpiricalMeasure, JointEmpiricalMeasure
from src.models.measures import Alphabet, Dist, JointDist, to_fraction
from src.settings import ArithmeticMode, settings
from .finite_measures import log_sum, prohorov_distance

logger = logging.getLogger(__name__)

Predicate = Callable[[Dist], bool]


def simplex_size(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def _check_cap(n: int, k: int, cap: Optional[int]) -> int:
    cap = settings.ENUMERATION_CAP if cap is None else cap
    size = simplex_size(n, k)
    if size > cap:
        raise ResourceError(f"P_emp^{n} over {k} symbols has {size} elements, above the enumeration cap {cap}")
    return size


@lru_cache(maxsize=128)
def _compositions(n: int, k: int) -> np.ndarray:
    if k == 1:
        out = np.array([[n]], dtype=np.int64)
    else:
        blocks = []
        for first in range(n, -1, -1):
            tail = _compositions(n - first, k - 1)
            blocks.append(np.hstack([np.full((len(tail), 1), first, dtype=np.int64), tail]))
        out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def composition_array(n: int, k: int, cap: Optional[int] = None) -> np.ndarray:
    """
   All compositions of n into k nonnegative parts as a (count, k) integer array.

   Rows come first-coordinate-descending, recursively: (n, 0, ...) first and
   (..., 0, n) last. The returned array is read-only.

   Raises:
       ArgumentError: If n < 0 or k < 1.
       ResourceError: If the simplex is larger than the enumeration cap.
   """
    if n < 0 or k < 1:
        raise ArgumentError(f"composition_array needs n >= 0 and k >= 1, got n={n}, k={k}")
    _check_cap(n, k, cap)
    return _compositions(n, k)


def enumerate_empirical(n: int, alphabet: Alphabet, cap: Optional[int] = None) -> List[EmpiricalMeasure]:
    if n < 1:
        raise ArgumentError(f"enumerate_empirical needs n >= 1, got {n}")
    counts = composition_array(n, alphabet.size, cap)
    logger.debug("Enumerated %d empirical measures at n=%d over %d symbols", len(counts), n, alphabet.size)
    return [EmpiricalMeasure(alphabet=alphabet, n=n, counts=tuple(int(c) for c in row)) for row in counts]


def log_multinomial_rows(counts: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """log[n!/prod c! * prod w^c] for every row of `counts` (last axis flattened against `weights`)."""
    counts = np.asarray(counts)
    flat = counts.reshape(counts.shape[0], -1)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    n = flat.sum(axis=1)
    return gammaln(n + 1) - gammaln(flat + 1).sum(axis=1) + xlogy(flat, w).sum(axis=1)


def multinomial_prob(counts: Sequence[int], weights: Sequence[Any], mode: ArithmeticMode = ArithmeticMode.DOUBLE):
    """Probability that n i.i.d. draws from `weights` produce exactly `counts`."""
    counts = [int(c) for c in counts]
    if len(counts) != len(weights):
        raise ArgumentError("multinomial_prob: counts and weights differ in length")
    if mode == ArithmeticMode.EXACT:
        n = sum(counts)
        value = Fraction(math.factorial(n))
        for c, w in zip(counts, weights):
            value = value / math.factorial(c) * to_fraction(w) ** c
        return value
    return math.exp(float(log_multinomial_rows(np.array([counts]), np.array(weights, dtype=np.float64))[0]))


def log_multinomial_prob(nu: Union[EmpiricalMeasure, JointEmpiricalMeasure], lam: Union[Dist, JointDist]) -> float:
    """
   log of the probability that n i.i.d. lam-draws have empirical measure nu.

   Equals -inf exactly when nu charges a cell where lam vanishes.
   """
    if isinstance(nu, JointEmpiricalMeasure) and isinstance(lam, JointDist):
        if nu.rows != lam.rows or nu.cols != lam.cols:
            raise ArgumentError("log_multinomial_prob: nu and lambda live on different alphabet pairs")
    elif isinstance(nu, EmpiricalMeasure) and isinstance(lam, Dist):
        if nu.alphabet != lam.alphabet:
            raise ArgumentError("log_multinomial_prob: nu and lambda live on different alphabets")
    else:
        raise ArgumentError("log_multinomial_prob: nu and lambda must both be joint or both single")
    return float(log_multinomial_rows(nu.array[None, ...], lam.array)[0])


def _marginal_masks(counts: np.ndarray, axis: int, n: int, alphabet: Alphabet, event: Predicate) -> np.ndarray:
    sums = counts.sum(axis=axis)
    unique, inverse = np.unique(sums, axis=0, return_inverse=True)
    hit = np.fromiter(
        (bool(event(Dist(alphabet=alphabet, weights=row / n))) for row in unique), dtype=bool, count=len(unique)
    )
    return hit[inverse.reshape(-1)]


def joint_empirical_law(
    n: int,
    lam: JointDist,
    A: Predicate,
    B: Predicate,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
):
    """
   mu_n(A x B): total probability of the joint empirical couplings whose
   R-marginal lies in A and whose S-marginal lies in B.

   Raises:
       ResourceError: If P_emp^n(R x S) exceeds the enumeration cap.
   """
    if n < 1:
        raise ArgumentError(f"joint_empirical_law needs n >= 1, got {n}")
    R, S = lam.shape
    flat = composition_array(n, R * S, cap)
    tables = flat.reshape(-1, R, S)
    selected = _marginal_masks(tables, 2, n, lam.rows, A) & _marginal_masks(tables, 1, n, lam.cols, B)
    logger.debug("mu_%d(A x B): %d of %d couplings selected", n, int(selected.sum()), len(tables))
    if mode == ArithmeticMode.EXACT:
        weights = [w for row in lam.to_exact().weights for w in row]
        return sum((multinomial_prob(row, weights, mode) for row in flat[selected]), Fraction(0))
    if not selected.any():
        return 0.0
    return min(1.0, math.exp(log_sum(log_multinomial_rows(flat[selected], lam.array))))


def nearest_empirical(target: Dist, n: int) -> EmpiricalMeasure:
    """
   The fd-nearest element of P_emp^n to `target`.

   Largest-remainder rounding of n*target; equal remainders go to the earlier
   symbol, which picks the first candidate in enumeration order.
   """
    if n < 1:
        raise ArgumentError(f"nearest_empirical needs n >= 1, got {n}")
    if target.exact:
        scaled = [w * n for w in target.weights]
        floors = [math.floor(x) for x in scaled]
        remainders = [x - f for x, f in zip(scaled, floors)]
    else:
        scaled = target.array * n
        floors = [int(f) for f in np.floor(scaled)]
        remainders = [float(x) - f for x, f in zip(scaled, floors)]
    missing = n - sum(floors)
    order = sorted(range(target.size), key=lambda i: (-remainders[i], i))
    counts = list(floors)
    for i in order[:missing]:
        counts[i] += 1
    return EmpiricalMeasure(alphabet=target.alphabet, n=n, counts=tuple(counts))


def densify(zeta: EmpiricalMeasure, l: int, m: int) -> EmpiricalMeasure:
    """
   Element of P_emp^m within 2/l of zeta in P_emp^k (k = zeta.n), for m >= k*l.

   Scales zeta by l' = m // k and puts the i = m - l'k leftover units on the first symbol.
   """
    k = zeta.n
    if l < 1 or m < k * l:
        raise ArgumentError(f"densify needs m >= k*l, got k={k}, l={l}, m={m}")
    scale = m // k
    counts = [scale * c for c in zeta.counts]
    counts[0] += m - scale * k
    out = EmpiricalMeasure(alphabet=zeta.alphabet, n=m, counts=tuple(counts))
    gap = prohorov_distance(out.value(exact=True), zeta.value(exact=True))
    if gap > Fraction(2, scale):
        raise InternalContractError(f"densify produced fd={float(gap)} above 2/{scale}")
    return out


def find_N_for_ball(center: Dist, delta: float, verify: bool = True) -> int:
    """
   An N such that B(center, delta) meets P_emp^n for every n >= N.

   Picks the smallest level k with an empirical zeta closer than delta/2,
   the smallest l with 2/l < delta/2, and returns N = l*k. With `verify` the
   witnesses densify(zeta, l, n) for n in N..N+k are checked; any later n
   reuses one of them through the same construction.
   """
    if not delta > 0:
        raise ArgumentError(f"find_N_for_ball needs delta > 0, got {delta}")
    if delta >= 1:
        return 1
    half = delta / 2
    k = 1
    zeta = nearest_empirical(center, k)
    while float(prohorov_distance(zeta.value(), center.to_double())) >= half:
        k += 1
        zeta = nearest_empirical(center, k)
    l = math.floor(4 / delta) + 1
    N = l * k
    if verify:
        for n in range(N, N + k + 1):
            witness = densify(zeta, l, n)
            gap = float(prohorov_distance(witness.value(), center.to_double()))
            if not gap < delta:
                raise InternalContractError(f"witness at n={n} has fd={gap} >= delta={delta}")
    logger.debug("find_N_for_ball: k=%d, l=%d, N=%d for delta=%g", k, l, N, delta)
    return N
