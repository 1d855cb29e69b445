import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Optional
import numpy as np
from scipy.special import rel_entr
from src.models.measures import Alphabet, Dist, JointDist
from src.models.rate import HalfSpace
from src.models.scenario import ScenarioConfig
from src.models.verify import SuiteSummary
from src.settings import ArithmeticMode, Settings, settings as default_settings
from .empirical import composition_array, log_multinomial_rows, nearest_empirical
from .finite_measures import conditional_theta, log_sum, marginals, relative_entropy
from .gallery import (
    BETA,
    calibrated_integrals,
    counterexample_ratio,
    exponential_mixture_weights,
    find_epsilon_n,
    gaussian_cumulant,
    gaussian_log_tail,
    rate_identity_residual,
)
from .harness import sanov_convergence
from .kernels import eta_event, eta_via_conditioning, kernel_law, verify_prcp_identity
from .rate import column_scaling_projection, i_projection, inf_over_s_margin, segment_minimum, support_feasible
from .rounding import check_rounding, match_s_margin
from src.models.gallery import GaussianPairFamily

logger = logging.getLogger(__name__)

Suite = Callable[[np.random.Generator, ArithmeticMode, Settings], SuiteSummary]


def _random_joint(rng: np.random.Generator, R: int, S: int, exact: bool = False, zeros: bool = False) -> JointDist:
    rows, cols = Alphabet.of_size(R, "r"), Alphabet.of_size(S, "s")
    if exact:
        ints = rng.integers(1, 10, size=(R, S))
        total = int(ints.sum())
        return JointDist(rows=rows, cols=cols, weights=[[Fraction(int(c), total) for c in row] for row in ints], exact=True)
    w = rng.dirichlet(np.ones(R * S)).reshape(R, S)
    if zeros:
        w[rng.random((R, S)) < 0.25] = 0.0
        # keep every column charged
        for s in range(S):
            if w[:, s].sum() == 0:
                w[rng.integers(R), s] = 1.0
    return JointDist.from_array(rows, cols, w / w.sum())


def _random_dist(rng: np.random.Generator, alphabet: Alphabet) -> Dist:
    return Dist.from_array(alphabet, rng.dirichlet(np.ones(alphabet.size)))


def prcp_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    summary = SuiteSummary()
    for _ in range(20):
        R, S = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        n = int(rng.integers(1, 5 if mode == ArithmeticMode.EXACT else 7))
        if R * S > 6:
            n = min(n, 4)
        lam = _random_joint(rng, R, S, exact=mode == ArithmeticMode.EXACT)
        A = HalfSpace(coordinate=lam.rows.labels[0], threshold=float(rng.random()), op="ge")
        B = HalfSpace(coordinate=lam.cols.labels[-1], threshold=float(rng.random()), op="le")
        residual = verify_prcp_identity(n, lam, A, B, mode, cfg.ENUMERATION_CAP)
        if mode == ArithmeticMode.EXACT:
            summary = summary.record(float(residual), residual == 0)
        else:
            summary = summary.record(residual, residual <= cfg.PRCP_TOL)
    return summary


def sandwich_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    """(n+1)^-M e^{-nH(nu|lam)} <= P(nu) <= e^{-nH(nu|lam)} over every empirical coupling."""
    summary = SuiteSummary()
    for R, S in ((1, 2), (2, 2), (2, 3)):
        lam = _random_joint(rng, R, S)
        M = R * S
        for n in range(1, 11):
            flat = composition_array(n, M, cfg.ENUMERATION_CAP)
            logs = log_multinomial_rows(flat, lam.array)
            entropy = n * rel_entr(flat / n, lam.array.reshape(-1)).sum(axis=1)
            upper = logs + entropy
            lower = -M * math.log(n + 1) - entropy - logs
            worst = float(max(upper.max(), lower.max()))
            summary = summary.record(max(worst, 0.0), worst <= cfg.SANDWICH_SLACK)
    return summary


def kernel_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    """Kernel laws sum to one, and the convolution agrees with direct conditioning."""
    summary = SuiteSummary()
    for _ in range(10):
        R, S = int(rng.integers(2, 4)), int(rng.integers(1, 3))
        n = int(rng.integers(1, 7))
        lam = _random_joint(rng, R, S, zeros=True)
        theta = conditional_theta(lam)
        zeta = nearest_empirical(_random_dist(rng, lam.cols), n)
        law = kernel_law(n, zeta, theta, ArithmeticMode.DOUBLE, cfg.TABLE_CAP)
        mass = abs(math.exp(log_sum(law.log_probs)) - 1.0)
        summary = summary.record(mass, mass <= cfg.KERNEL_TOL)
        A = HalfSpace(coordinate=lam.rows.labels[0], threshold=float(rng.random()), op="gt")
        via_law = eta_event(n, zeta, A, theta, ArithmeticMode.DOUBLE, cfg.TABLE_CAP)
        via_atom = eta_via_conditioning(n, zeta, A, lam, ArithmeticMode.DOUBLE, cfg.TABLE_CAP)
        gap = abs(via_law - via_atom)
        summary = summary.record(gap, gap <= cfg.KERNEL_TOL)
    return summary


def ipf_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    """IPF against the one-degree-of-freedom minimisation on 2 x 2 alphabets."""
    summary = SuiteSummary()
    rows, cols = Alphabet.of_size(2, "r"), Alphabet.of_size(2, "s")
    for i in range(50):
        lam = _random_joint(rng, 2, 2, zeros=i % 5 == 0)
        rho, sigma = _random_dist(rng, rows), _random_dist(rng, cols)
        ipf = i_projection(lam, rho, sigma, tol=1e-11)
        oracle = segment_minimum(lam, rho, sigma)
        if math.isinf(ipf.value) or math.isinf(oracle.value):
            agree = math.isinf(ipf.value) and math.isinf(oracle.value)
            summary = summary.record(0.0, agree and not support_feasible(lam, rho, sigma))
            continue
        gap = abs(ipf.value - oracle.value)
        summary = summary.record(max(gap, ipf.margin_residual), gap <= 1e-8 and ipf.margin_residual <= 1e-10)
    return summary


def one_marginal_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    summary = SuiteSummary()
    for _ in range(50):
        R, S = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        lam = _random_joint(rng, R, S)
        psi = _random_dist(rng, lam.cols)
        value, _ = inf_over_s_margin(lam, psi)
        closed = relative_entropy(psi, marginals(lam)[1])
        numeric = column_scaling_projection(lam, psi).value
        gap = max(abs(value - closed), abs(value - numeric))
        summary = summary.record(gap, gap <= 1e-10)
    return summary


def rounding_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    summary = SuiteSummary()
    for _ in range(100):
        R, S = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        n = int(rng.integers(10, 201))
        lam = _random_joint(rng, R, S, zeros=True)
        # xi << lambda: reweight lambda on its support
        w = lam.array * rng.random(lam.shape)
        xi = JointDist.from_array(lam.rows, lam.cols, w / w.sum())
        zeta = nearest_empirical(_random_dist(rng, lam.cols), n)
        check = check_rounding(match_s_margin(xi, zeta, lam), xi, zeta, lam)
        slack = max(check.fd_joint - check.fd_joint_bound, check.fd_r_marginal - check.fd_r_marginal_bound, 0.0)
        summary = summary.record(slack, check.passed)
    return summary


def envelope_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    """The finite-n envelope of the symmetric 2 x 2 scenario at a few moderate levels."""
    config = ScenarioConfig.model_validate(
        {
            "lambda": {"rows": ["r1", "r2"], "cols": ["s1", "s2"], "matrix": [[0.4, 0.1], [0.1, 0.4]]},
            "psi": {"alphabet": ["s1", "s2"], "weights": [0.5, 0.5]},
            "event": {"kind": "halfspace", "coordinate": "r1", "threshold": 0.8, "op": "ge"},
            "n_values": [20, 50, 100, 200],
        }
    )
    summary = SuiteSummary()
    for report in sanov_convergence(config, cfg.TABLE_CAP, workers=1, record_timings=False):
        miss = max(report.envelope_lo - report.a_n, report.a_n - report.envelope_hi, 0.0)
        summary = summary.record(miss, report.contained)
    return summary


def gallery_suite(rng: np.random.Generator, mode: ArithmeticMode, cfg: Settings) -> SuiteSummary:
    summary = SuiteSummary()
    for n in (1, 10, 100, 1000):
        w1, w2 = exponential_mixture_weights(n)
        gap = max(abs(w1 - (1 - 2 / math.e)), abs(w2 - 1 / math.e))
        summary = summary.record(gap, gap <= 1e-12)
    previous = math.inf
    for n in (1, 4, 16, 64, 256):
        eps = find_epsilon_n(n)
        with_alpha, without = calibrated_integrals(n, eps)
        gap = max(abs(with_alpha - 0.5 * BETA), abs(without - 0.5 * BETA))
        summary = summary.record(gap, gap <= 1e-10 and 0 < eps < 1 / math.sqrt(n) and eps < previous)
        previous = eps
    ratios = [counterexample_ratio(50, m) for m in (50, 500, 5000)]
    for m, ratio in zip((50, 500, 5000), ratios):
        bound = 50 / m * math.exp(gaussian_log_tail(math.sqrt(50)))
        summary = summary.record(max(ratio - bound, 0.0), ratio <= bound)
    summary = summary.record(0.0, ratios[0] > ratios[1] > ratios[2] and math.log(ratios[2]) / 50 < -0.5)
    for _ in range(1000):
        x, y, r, lam = rng.normal(size=4)
        family = GaussianPairFamily(r=float(r) or 1.0)
        n = int(rng.integers(1, 10_001))
        y_n = y + 1.0 / n
        cumulant_gap = abs(gaussian_cumulant(n, y_n, lam, family) - (lam * family.r * y_n + 0.5 * lam * lam))
        identity = rate_identity_residual(float(x), float(y), family)
        residual = max(cumulant_gap, identity)
        summary = summary.record(residual, cumulant_gap <= 1e-12 and identity <= 1e-14)
    return summary


SUITES: Dict[str, Suite] = {
    "prcp": prcp_suite,
    "sandwich": sandwich_suite,
    "kernel": kernel_suite,
    "ipf": ipf_suite,
    "one_marginal": one_marginal_suite,
    "rounding": rounding_suite,
    "envelope": envelope_suite,
    "gallery": gallery_suite,
}


def run_suites(
    seed: int, mode: ArithmeticMode = ArithmeticMode.DOUBLE, cfg: Optional[Settings] = None
) -> Dict[str, SuiteSummary]:
    """
   Run every invariant suite; each gets its own generator seeded from `seed` and its position,
   so a suite's instances do not depend on which suites ran before it.
   """
    cfg = default_settings if cfg is None else cfg
    out = {}
    for i, (name, suite) in enumerate(SUITES.items()):
        rng = np.random.default_rng([seed, i])
        summary = suite(rng, mode, cfg)
        if summary.failures:
            logger.warning("Suite %s: %d of %d checks failed", name, summary.failures, summary.checks)
        else:
            logger.info("Suite %s: %d checks passed", name, summary.checks)
        out[name] = summary
    return out
