import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import numpy as np
from scipy.special import logsumexp
from src.errors import ArgumentError, ResourceError
from src.models.empirical import EmpiricalMeasure
from src.models.measures import Dist, JointDist
from src.models.scenario import (
    BallSpec,
    ConditionalProbability,
    ConvergenceReport,
    EpsilonScan,
    ScanReport,
    ScenarioConfig,
)
from src.settings import ArithmeticMode, settings
from .empirical import composition_array, multinomial_prob, nearest_empirical
from .finite_measures import conditional_theta, marginals, prohorov_distance
from .kernels import column_slice, kernel_law, s_marginal_law
from .rate import inf_over_s_margin, inf_rate_over_set

logger = logging.getLogger(__name__)

__all__ = [
    "nearest_empirical",
    "psi_sequence",
    "sanov_convergence",
    "conditional_ball_probability",
    "default_ball_grid",
    "scan_condition_A2",
    "scan_condition_B2",
]


def psi_sequence(config: ScenarioConfig) -> List[EmpiricalMeasure]:
    if config.psi_sequence_rule == "explicit":
        return list(config.psi_sequence)
    return [nearest_empirical(config.psi, n) for n in config.n_values]


def _masked_log_sum(values: np.ndarray, mask: np.ndarray) -> float:
    picked = values[mask]
    if picked.size == 0 or np.isneginf(picked).all():
        return -math.inf
    return float(logsumexp(picked))


def _masked_min(values: np.ndarray, mask: np.ndarray) -> float:
    picked = values[mask]
    return float(picked.min()) if picked.size else math.inf


def _one_level(
    config: ScenarioConfig,
    n: int,
    psi_n: EmpiricalMeasure,
    cap: Optional[int],
    targets: Tuple[float, float],
    record_timings: bool,
) -> ConvergenceReport:
    started = time.perf_counter()
    lam, event = config.lambda_, config.event
    closure = event.closure() if hasattr(event, "closure") else event
    cut = column_slice(n, psi_n, lam, cap)
    in_event = cut.r_mask(event)
    everything = np.ones(len(cut), dtype=bool)
    a_n = (_masked_log_sum(cut.log_probs, in_event) - _masked_log_sum(cut.log_probs, everything)) / n

    M = config.M
    poly = 2 * M * math.log(n + 1) / n
    h_all = _masked_min(cut.entropies, everything)
    h_event = _masked_min(cut.entropies, in_event)
    psi_value = psi_n.value()
    inf_I_closure, _ = inf_rate_over_set(lam, psi_value, closure, config.resolution)
    base, _ = inf_over_s_margin(lam, psi_value)
    inf_J_closure = inf_I_closure + base
    envelope_lo = -poly - h_event + h_all
    envelope_hi = poly - inf_J_closure + h_all
    wall_ms = (time.perf_counter() - started) * 1000.0 if record_timings else None
    report = ConvergenceReport(
        n=n,
        psi_n=psi_n,
        a_n=a_n,
        envelope_lo=envelope_lo,
        envelope_hi=envelope_hi,
        target_lo=targets[0],
        target_hi=targets[1],
        wall_ms=wall_ms,
    )
    if not report.contained:
        logger.warning("Envelope containment fails at n=%d: %r <= %r <= %r", n, envelope_lo, a_n, envelope_hi)
    logger.info("n=%d: a_n=%.6f envelope=[%.6f, %.6f]", n, a_n, envelope_lo, envelope_hi)
    return report


def sanov_targets(config: ScenarioConfig) -> Tuple[float, float]:
    """(-inf I over the interior, -inf I over the closure) of the event, for the limit psi."""
    event = config.event
    interior = event.interior() if hasattr(event, "interior") else event
    closure = event.closure() if hasattr(event, "closure") else event
    inf_interior, _ = inf_rate_over_set(config.lambda_, config.psi, interior, config.resolution)
    inf_closure, _ = inf_rate_over_set(config.lambda_, config.psi, closure, config.resolution)
    return 0.0 - inf_interior, 0.0 - inf_closure


def sanov_convergence(
    config: ScenarioConfig,
    cap: Optional[int] = None,
    workers: Optional[int] = None,
    record_timings: Optional[bool] = None,
) -> List[ConvergenceReport]:
    """
   a_n = (1/n) log eta_n(psi_n, A) with its exact finite-n envelope for every configured n.

   a_n is computed through the atom identity
   eta_n(psi_n, A) = mu_n(A x {psi_n}) / mu_n(P(R) x {psi_n}), summing the
   couplings with S-marginal psi_n. The envelope is
       lo = -(2M/n) log(n+1) - min_{nu: R-marginal in A} H(nu|lambda) + min_nu H(nu|lambda)
       hi =  (2M/n) log(n+1) - inf{J(phi, psi_n) : phi in closure(A)} + min_nu H(nu|lambda)
   with nu ranging over the empirical couplings with S-marginal psi_n.

   Raises:
       ResourceError: When a level exceeds a cap; `partial` holds the reports
           of the levels before it.
   """
    workers = settings.WORKERS if workers is None else workers
    record_timings = settings.RECORD_TIMINGS if record_timings is None else record_timings
    targets = sanov_targets(config)
    levels = list(zip(config.n_values, psi_sequence(config)))
    reports: List[ConvergenceReport] = []

    def run(level):
        n, psi_n = level
        try:
            return _one_level(config, n, psi_n, cap, targets, record_timings)
        except ResourceError as e:
            return e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, levels))
    else:
        results = []
        for level in levels:
            results.append(run(level))
            if isinstance(results[-1], ResourceError):
                break
    for (n, _), result in zip(levels, results):
        if isinstance(result, ResourceError):
            raise ResourceError(f"n={n}: {result.detail}", partial=reports)
        reports.append(result)
    return reports


def _in_ball(zeta: Dist, center: Dist, delta: float) -> bool:
    return float(prohorov_distance(zeta, center)) < delta


def conditional_ball_probability(
    n: int,
    lam: JointDist,
    A: Callable[[Dist], bool],
    center: Dist,
    delta: float,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
    cache: Optional[Dict[Any, Any]] = None,
) -> ConditionalProbability:
    """
   mu_n(A x B(center, delta)) / mu_n(P(R) x B(center, delta)) over the open ball.

   Summed atom by atom: each zeta in the ball contributes
   mu_n o pi^{-1}({zeta}) * eta_n(zeta, A). Returns the undefined marker when
   the ball carries no mass. `cache` may be shared between calls with the same
   (n, lambda, A) to reuse kernel evaluations.
   """
    if not delta > 0:
        raise ArgumentError(f"conditional_ball_probability needs delta > 0, got {delta}")
    if center.alphabet != lam.cols:
        raise ArgumentError("ball center must live on the column alphabet of lambda")
    theta = conditional_theta(lam)
    cache = {} if cache is None else cache
    if mode == ArithmeticMode.EXACT:
        return _conditional_ball_exact(n, lam, A, center, delta, theta, cap, cache)
    zetas, logs = s_marginal_law(n, lam, cap)
    center_d = center.to_double()
    num_terms, den_terms = [], []
    for zeta, lp in zip(zetas, logs):
        if not _in_ball(zeta.value(), center_d, delta) or np.isneginf(lp):
            continue
        key = ("log_eta", n, zeta.counts)
        if key not in cache:
            law = kernel_law(n, zeta, theta, mode, cap)
            cache[key] = _masked_log_sum(law.log_probs, law.mask(A))
        den_terms.append(lp)
        num_terms.append(lp + cache[key])
    if not den_terms:
        return ConditionalProbability.undefined()
    log_den = float(logsumexp(den_terms))
    log_num = float(logsumexp(num_terms)) if not np.isneginf(num_terms).all() else -math.inf
    log_value = min(log_num - log_den, 0.0)
    return ConditionalProbability(value=math.exp(log_value), log_value=log_value, defined=True, mass=math.exp(log_den))


def _conditional_ball_exact(n, lam, A, center, delta, theta, cap, cache) -> ConditionalProbability:
    _, lam_s = marginals(lam.to_exact())
    num = den = Fraction(0)
    for counts in composition_array(n, lam.cols.size, cap):
        zeta = EmpiricalMeasure(alphabet=lam.cols, n=n, counts=tuple(int(c) for c in counts))
        if not prohorov_distance(zeta.value(exact=True), center.to_exact()) < Fraction(repr(float(delta))):
            continue
        p = multinomial_prob(zeta.counts, lam_s.weights, ArithmeticMode.EXACT)
        if p == 0:
            continue
        key = ("eta", n, zeta.counts)
        if key not in cache:
            law = kernel_law(n, zeta, theta, ArithmeticMode.EXACT, cap)
            cache[key] = sum((q for q, hit in zip(law.probs, law.mask(A)) if hit), Fraction(0))
        den += p
        num += p * cache[key]
    if den == 0:
        return ConditionalProbability.undefined()
    value = num / den
    return ConditionalProbability(
        value=float(value),
        log_value=math.log(value) if value > 0 else -math.inf,
        defined=True,
        mass=float(den),
    )


def default_ball_grid(psi: Dist, epsilons: Sequence[float]) -> List[BallSpec]:
    """
   Balls centred at psi with radii eps/2 and 9 eps/10, then off-centre balls of
   radius eps/2 around psi with eps/4 of mass moved between each ordered pair of
   symbols. Every ball is admissible for its own eps.
   """
    radii = sorted({r for eps in epsilons for r in (eps / 2, 0.9 * eps)}, reverse=True)
    grid = [BallSpec(center=psi, delta=r) for r in radii]
    w = psi.array
    k = len(w)
    for eps in sorted(set(epsilons), reverse=True):
        shift = eps / 4
        for i in range(k):
            for j in range(k):
                if i == j or w[j] < shift:
                    continue
                z = w.copy()
                z[i] += shift
                z[j] -= shift
                grid.append(BallSpec(center=Dist.from_array(psi.alphabet, z), delta=eps / 2))
    return grid


def _admissible(ball: BallSpec, psi: Dist, epsilon: float) -> bool:
    return ball.delta < epsilon and float(prohorov_distance(ball.center.to_double(), psi.to_double())) + ball.delta <= epsilon


def _scan(
    config: ScenarioConfig,
    condition: str,
    event: Any,
    epsilons: Sequence[float],
    ball_grid: Sequence[BallSpec],
    mode: ArithmeticMode,
    cap: Optional[int],
) -> List[EpsilonScan]:
    window = settings.PROXY_WINDOW
    inner = min if condition == "a2" else max
    cache: Dict[Any, Any] = {}
    rows = []
    for epsilon in epsilons:
        balls = [b for b in ball_grid if _admissible(b, config.psi, epsilon)]
        skipped = 0
        per_n = []
        for n in config.n_values:
            values = []
            for ball in balls:
                cp = conditional_ball_probability(n, config.lambda_, event, ball.center, ball.delta, mode, cap, cache)
                if not cp.defined:
                    skipped += 1
                    continue
                values.append(cp.log_value / n)
            per_n.append((n, inner(values) if values else math.nan))
        tail = [v for _, v in per_n[-window:] if not math.isnan(v)]
        proxy = inner(tail) if tail else math.nan
        if skipped:
            logger.warning("eps=%g: %d undefined conditionals skipped", epsilon, skipped)
        rows.append(
            EpsilonScan(
                epsilon=epsilon,
                admissible_balls=len(balls),
                skipped_undefined=skipped,
                per_n=tuple(per_n),
                proxy=proxy,
            )
        )
    return rows


def scan_condition_A2(
    config: ScenarioConfig,
    epsilons: Optional[Sequence[float]] = None,
    ball_grid: Optional[Sequence[BallSpec]] = None,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
) -> ScanReport:
    """
   Finite proxy of sup_eps liminf_n inf_balls (1/n) log mu_n(closure(U) x Y | X x B(z, delta)).

   The liminf is the min over the last PROXY_WINDOW levels; the target is -inf I(U).
   """
    epsilons = config.epsilons if epsilons is None else epsilons
    ball_grid = (config.ball_grid or default_ball_grid(config.psi, epsilons)) if ball_grid is None else ball_grid
    event = config.event
    closure = event.closure() if hasattr(event, "closure") else event
    rows = _scan(config, "a2", closure, epsilons, ball_grid, mode, cap)
    proxies = [r.proxy for r in rows if not math.isnan(r.proxy)]
    proxy = max(proxies) if proxies else math.nan
    target = 0.0 - inf_rate_over_set(config.lambda_, config.psi, event, config.resolution)[0]
    return ScanReport(condition="a2", rows=rows, proxy=proxy, target=target, margin=proxy - target)


def scan_condition_B2(
    config: ScenarioConfig,
    epsilons: Optional[Sequence[float]] = None,
    ball_grid: Optional[Sequence[BallSpec]] = None,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
) -> ScanReport:
    """Mirror of the (A2) scan: sup over balls, max over the window, min over eps, on the interior of W."""
    epsilons = config.epsilons if epsilons is None else epsilons
    ball_grid = (config.ball_grid or default_ball_grid(config.psi, epsilons)) if ball_grid is None else ball_grid
    event = config.event
    interior = event.interior() if hasattr(event, "interior") else event
    rows = _scan(config, "b2", interior, epsilons, ball_grid, mode, cap)
    proxies = [r.proxy for r in rows if not math.isnan(r.proxy)]
    proxy = min(proxies) if proxies else math.nan
    target = 0.0 - inf_rate_over_set(config.lambda_, config.psi, event, config.resolution)[0]
    return ScanReport(condition="b2", rows=rows, proxy=proxy, target=target, margin=target - proxy)
