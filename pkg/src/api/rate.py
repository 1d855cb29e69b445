import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, List, Optional, Tuple
import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp
from scipy.optimize import minimize_scalar
from scipy.special import rel_entr
from src.errors import ArgumentError, ConvergenceError, PreconditionError
from src.models.measures import Dist, JointDist, to_fraction
from src.models.rate import RateResult, SegmentInterval, segment_intervals_for
from src.settings import settings
from .empirical import composition_array
from .finite_measures import compose, conditional_theta, marginals, prohorov_distance, relative_entropy

logger = logging.getLogger(__name__)


def _check_pair(lam: JointDist, rho: Dist, sigma: Dist) -> None:
    if rho.alphabet != lam.rows:
        raise ArgumentError("rho must live on the row alphabet of lambda")
    if sigma.alphabet != lam.cols:
        raise ArgumentError("sigma must live on the column alphabet of lambda")


def _support_flow(lam: JointDist, rho: Dist, sigma: Dist) -> Tuple[Optional[dict], Fraction]:
    """Max-flow on source -> r (capacity rho_r) -> s (for lambda_rs > 0) -> sink (capacity sigma_s)."""
    _check_pair(lam, rho, sigma)
    graph = nx.DiGraph()
    supply = [to_fraction(w) for w in rho.weights]
    demand = [to_fraction(w) for w in sigma.weights]
    for r, mass in enumerate(supply):
        if mass > 0:
            graph.add_edge("source", ("r", r), capacity=mass)
    for s, mass in enumerate(demand):
        if mass > 0:
            graph.add_edge(("s", s), "sink", capacity=mass)
    arr = lam.array
    for r in range(lam.rows.size):
        for s in range(lam.cols.size):
            if arr[r, s] > 0 and supply[r] > 0 and demand[s] > 0:
                graph.add_edge(("r", r), ("s", s), capacity=Fraction(2))
    slack = Fraction(0) if (rho.exact and sigma.exact) else Fraction(1, 10**10)
    if "source" not in graph or "sink" not in graph:
        return None, slack
    value, flow = nx.maximum_flow(graph, "source", "sink", flow_func=edmonds_karp)
    if value < max(sum(supply), sum(demand)) - slack:
        return None, slack
    return flow, slack


def support_feasible(lam: JointDist, rho: Dist, sigma: Dist) -> bool:
    """
   Whether some coupling of (rho, sigma) is absolutely continuous w.r.t. lambda.

   Feasible iff the max-flow saturates both margins.
   """
    flow, _ = _support_flow(lam, rho, sigma)
    return flow is not None


def feasible_support(lam: JointDist, rho: Dist, sigma: Dist) -> Optional[np.ndarray]:
    """
   Cells (r, s) that carry positive mass in some coupling of (rho, sigma) below lambda; None if there is none.

   A cell unused by the max-flow can still carry mass iff r is reachable from s
   in the residual graph: s -> r' along used cells, r' -> s' along any cell of lambda.
   """
    flow, slack = _support_flow(lam, rho, sigma)
    if flow is None:
        return None
    R, S = lam.shape
    residual = nx.DiGraph()
    edges = [(r, s) for r in range(R) for s in range(S) if ("s", s) in flow.get(("r", r), {})]
    used = {(r, s) for r, s in edges if flow[("r", r)][("s", s)] > slack}
    for r, s in edges:
        residual.add_edge(("r", r), ("s", s))
        if (r, s) in used:
            residual.add_edge(("s", s), ("r", r))
    mask = np.zeros((R, S), dtype=bool)
    for r, s in edges:
        mask[r, s] = (r, s) in used or nx.has_path(residual, ("s", s), ("r", r))
    return mask


def _ipf(
    lam_arr: np.ndarray,
    rho: np.ndarray,
    sigma: np.ndarray,
    tol: float,
    max_iter: int,
    keep_iterates: bool,
    support: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float, int, List[np.ndarray]]:
    xi = lam_arr.copy()
    xi[rho <= 0, :] = 0.0
    xi[:, sigma <= 0] = 0.0
    if support is not None:
        # cells forced to 0 by every feasible coupling only fade out sublinearly
        xi[~support] = 0.0
    iterates: List[np.ndarray] = []
    residual = math.inf
    for it in range(1, max_iter + 1):
        row = xi.sum(axis=1)
        xi *= np.divide(rho, row, out=np.zeros_like(rho), where=row > 0)[:, None]
        col = xi.sum(axis=0)
        xi *= np.divide(sigma, col, out=np.zeros_like(sigma), where=col > 0)[None, :]
        residual = max(np.abs(xi.sum(axis=1) - rho).max(), np.abs(xi.sum(axis=0) - sigma).max())
        if keep_iterates:
            iterates.append(xi.copy())
        if residual <= tol:
            logger.debug("IPF converged after %d iterations, residual %.3e", it, residual)
            return xi, float(residual), it, iterates
    raise ConvergenceError(
        f"IPF did not reach tolerance {tol} within {max_iter} iterations (residual {residual:.3e})",
        last_iterate=xi,
        residual=float(residual),
        iterations=max_iter,
    )


def i_projection(
    lam: JointDist,
    rho: Dist,
    sigma: Dist,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    trace: bool = False,
) -> RateResult:
    """
   J(rho, sigma): the minimum of H(. | lambda) over couplings of (rho, sigma).

   Alternating row and column scaling from lambda restricted to the cells some
   feasible coupling can charge (max-flow plus residual reachability). Support
   infeasibility gives value = +inf. With `trace`, each iteration records (H(xi_k|lambda), H(xi*|xi_k));
   the second entry is the non-increasing one.

   Raises:
       ConvergenceError: If the margins are not within `tol` after `max_iter` sweeps.
   """
    tol = settings.IPF_TOL if tol is None else tol
    max_iter = settings.IPF_MAX_ITER if max_iter is None else max_iter
    if not tol > 0:
        raise ArgumentError(f"i_projection needs tol > 0, got {tol}")
    _check_pair(lam, rho, sigma)
    support = feasible_support(lam, rho, sigma)
    if support is None:
        return RateResult(value=math.inf, tol=tol)
    xi, residual, iterations, iterates = _ipf(lam.array, rho.array, sigma.array, tol, max_iter, trace, support)
    minimizer = JointDist.from_array(lam.rows, lam.cols, xi)
    value = relative_entropy(minimizer, lam.to_double())
    steps = None
    if trace:
        steps = tuple(
            (float(rel_entr(x, lam.array).sum()), float(rel_entr(xi, x).sum())) for x in iterates
        )
    return RateResult(
        value=value,
        minimizer=minimizer,
        margin_residual=residual,
        iterations=iterations,
        converged=True,
        tol=tol,
        trace=steps,
    )


def segment_minimum(lam: JointDist, rho: Dist, sigma: Dist, xatol: float = 1e-12) -> RateResult:
    """
   J(rho, sigma) for 2 x 2 alphabets by bounded scalar minimisation.

   The couplings of fixed 2 x 2 margins form the segment
   [[t, p - t], [q - t, 1 - p - q + t]]; zero cells of lambda pin t.
   """
    _check_pair(lam, rho, sigma)
    if lam.shape != (2, 2):
        raise ArgumentError(f"segment_minimum needs a 2 x 2 lambda, got {lam.shape}")
    p, q = float(rho.array[0]), float(sigma.array[0])
    lo, hi = max(0.0, p + q - 1.0), min(p, q)
    arr = lam.array
    pins = [v for v, zero in ((0.0, arr[0, 0] == 0), (p, arr[0, 1] == 0), (q, arr[1, 0] == 0), (p + q - 1.0, arr[1, 1] == 0)) if zero]
    if pins:
        t0 = pins[0]
        if any(abs(t - t0) > 1e-15 for t in pins) or not (lo - 1e-15 <= t0 <= hi + 1e-15):
            return RateResult(value=math.inf, tol=xatol)
        lo = hi = min(max(t0, lo), hi)
    if lo > hi:
        return RateResult(value=math.inf, tol=xatol)

    def coupling(t: float) -> np.ndarray:
        return np.maximum(np.array([[t, p - t], [q - t, 1.0 - p - q + t]]), 0.0)

    def objective(t: float) -> float:
        return float(rel_entr(coupling(t), arr).sum())

    candidates = [lo, hi]
    if hi > lo:
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
        candidates.insert(0, float(res.x))
    t_best = min(candidates, key=objective)
    xi = coupling(t_best)
    residual = max(np.abs(xi.sum(axis=1) - rho.array).max(), np.abs(xi.sum(axis=0) - sigma.array).max())
    minimizer = JointDist.from_array(lam.rows, lam.cols, xi / xi.sum())
    return RateResult(
        value=objective(t_best),
        minimizer=minimizer,
        margin_residual=float(residual),
        tol=max(float(residual), xatol),
    )


def _check_columns(lam: JointDist) -> None:
    for s, label in enumerate(lam.cols.labels):
        if lam.column_mass(s) <= 0:
            raise PreconditionError(f"lambda(R x {{{label}}}) = 0")


def column_scaling_projection(
    lam: JointDist, psi: Dist, tol: Optional[float] = None, max_iter: Optional[int] = None
) -> RateResult:
    """I-projection of lambda onto {xi : S-marginal = psi} by repeated column scaling."""
    tol = settings.IPF_TOL if tol is None else tol
    max_iter = settings.IPF_MAX_ITER if max_iter is None else max_iter
    if psi.alphabet != lam.cols:
        raise ArgumentError("psi must live on the column alphabet of lambda")
    _check_columns(lam)
    xi = lam.array.copy()
    target = psi.array
    for it in range(1, max_iter + 1):
        xi *= (target / xi.sum(axis=0))[None, :]
        residual = float(np.abs(xi.sum(axis=0) - target).max())
        if residual <= tol:
            minimizer = JointDist.from_array(lam.rows, lam.cols, xi)
            return RateResult(
                value=float(rel_entr(xi, lam.array).sum()),
                minimizer=minimizer,
                margin_residual=residual,
                iterations=it,
                tol=tol,
            )
    raise ConvergenceError(f"column scaling did not converge within {max_iter} sweeps", last_iterate=xi)


def inf_over_s_margin(lam: JointDist, psi: Dist) -> Tuple[float, JointDist]:
    """
   inf of H(xi | lambda) over xi with S-marginal psi.

   By the chain rule the value is H(psi | lambda_S), attained at psi (x) theta.
   """
    if psi.alphabet != lam.cols:
        raise ArgumentError("psi must live on the column alphabet of lambda")
    theta = conditional_theta(lam)
    _, lam_s = marginals(lam)
    return relative_entropy(psi, lam_s), compose(psi, theta)


def sanov_minimizer(lam: JointDist, psi: Dist) -> Dist:
    """phi*(r) = sum_s psi(s) theta(s, r), the zero of I."""
    return marginals(compose(psi, conditional_theta(lam)))[0]


def rate_I(
    lam: JointDist, psi: Dist, phi: Dist, tol: Optional[float] = None, max_iter: Optional[int] = None
) -> float:
    """I(phi) = J(phi, psi) - inf_xi H(xi | lambda) over P(R) x {psi}; +inf off the feasible region."""
    if phi.alphabet != lam.rows:
        raise ArgumentError("phi must live on the row alphabet of lambda")
    base, _ = inf_over_s_margin(lam, psi)
    if prohorov_distance(phi.to_double(), sanov_minimizer(lam, psi).to_double()) == 0:
        return 0.0
    J = i_projection(lam, phi, psi, tol, max_iter).value
    if math.isinf(J):
        return math.inf
    return max(J - base, 0.0)


def _feasible_segment(lam: JointDist, psi: Dist) -> Tuple[float, float]:
    """Range of phi(first label) with a finite rate, for two row symbols."""
    arr, w = lam.array, psi.array
    forced_first = float(w[(arr[1] == 0) & (w > 0)].sum())
    forced_second = float(w[(arr[0] == 0) & (w > 0)].sum())
    return forced_first, 1.0 - forced_second


def _clip_to(iv: SegmentInterval, a: float, b: float) -> SegmentInterval:
    lo, lo_closed = (iv.lo, iv.lo_closed) if iv.lo >= a else (a, True)
    hi, hi_closed = (iv.hi, iv.hi_closed) if iv.hi <= b else (b, True)
    return SegmentInterval(lo, hi, lo_closed, hi_closed)


def _segment_infimum(
    lam: JointDist, psi: Dist, intervals: List[SegmentInterval], tol: Optional[float]
) -> Tuple[float, Optional[Dist]]:
    p_star = float(sanov_minimizer(lam, psi).array[0])
    a, b = _feasible_segment(lam, psi)
    best_value, best_p = math.inf, None
    for iv in intervals:
        clipped = _clip_to(iv, a, b)
        if clipped.empty:
            continue
        # I is convex along the segment, so the infimum sits at the point nearest p*;
        # an open end is approached and the value there is the infimum by continuity
        p = clipped.nearest(p_star)
        value = rate_I(lam, psi, Dist.from_array(lam.rows, [p, 1.0 - p]), tol)
        if value < best_value or (value == best_value and best_p is not None and p > best_p):
            best_value, best_p = value, p
    if best_p is None or math.isinf(best_value):
        return math.inf, None
    return best_value, Dist.from_array(lam.rows, [best_p, 1.0 - best_p])


def _pattern_search(
    lam: JointDist, psi: Dist, descriptor: Any, x: np.ndarray, value: float, step: float, tol: Optional[float]
) -> Tuple[np.ndarray, float]:
    k = len(x)
    moves = [(i, j) for i in range(k) for j in range(k) if i != j]
    budget = 4000
    while step > 1e-9 and budget > 0:
        improved = False
        for i, j in moves:
            if x[j] < step:
                continue
            y = x.copy()
            y[i] += step
            y[j] -= step
            candidate = Dist.from_array(lam.rows, y)
            if not descriptor(candidate):
                continue
            budget -= 1
            v = rate_I(lam, psi, candidate, tol)
            if v < value:
                x, value, improved = y, v, True
                break
        if not improved:
            step /= 2
    return x, value


def _grid_infimum(
    lam: JointDist, psi: Dist, descriptor: Any, resolution: float, workers: int, tol: Optional[float]
) -> Tuple[float, Optional[Dist]]:
    N = max(1, int(round(1.0 / resolution)))
    grid = composition_array(N, lam.rows.size) / N
    points = [Dist.from_array(lam.rows, row) for row in grid]
    points = [phi for phi in points if descriptor(phi)]
    anchors = [sanov_minimizer(lam, psi)] + [c for c in getattr(descriptor, "anchors", list)() if c.alphabet == lam.rows]
    anchors = [phi for phi in anchors if descriptor(phi)]
    candidates = points + anchors
    if not candidates:
        return math.inf, None

    def evaluate(phi: Dist) -> float:
        return rate_I(lam, psi, phi, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(evaluate, candidates))
    else:
        values = [evaluate(phi) for phi in candidates]
    best = 0
    for i, v in enumerate(values):
        if v < values[best]:
            best = i
    if math.isinf(values[best]):
        return math.inf, None
    x, value = _pattern_search(lam, psi, descriptor, candidates[best].array.copy(), values[best], 1.0 / N, tol)
    logger.debug("grid infimum over %d candidates: %.6g refined to %.6g", len(candidates), values[best], value)
    return value, Dist.from_array(lam.rows, x)


def inf_rate_over_set(
    lam: JointDist,
    psi: Dist,
    descriptor: Any,
    resolution: Optional[float] = None,
    workers: Optional[int] = None,
    tol: Optional[float] = None,
) -> Tuple[float, Optional[Dist]]:
    """
   inf I over a subset of P(R), with its argmin (None when the infimum is +inf).

   Two row symbols: the set is decomposed into intervals of phi(first label)
   and convexity of I gives the exact infimum. Otherwise: a simplex grid of
   step `resolution` plus anchor points, then a pattern search from the best
   point that never leaves the set. Equal values keep the earliest grid point.
   """
    resolution = settings.GRID_RESOLUTION if resolution is None else resolution
    workers = settings.WORKERS if workers is None else workers
    if not resolution > 0:
        raise ArgumentError(f"inf_rate_over_set needs resolution > 0, got {resolution}")
    if psi.alphabet != lam.cols:
        raise ArgumentError("psi must live on the column alphabet of lambda")
    intervals = segment_intervals_for(descriptor, lam.rows)
    if intervals is not None:
        return _segment_infimum(lam, psi, intervals, tol)
    return _grid_infimum(lam, psi, descriptor, resolution, workers, tol)
