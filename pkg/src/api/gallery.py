import logging
import math
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple
import numpy as np
from scipy.special import gammainc, log_ndtr, ndtr
from src.errors import ArgumentError, InternalContractError
from src.models.gallery import GaussianPairFamily, HypothesisRow, Interval, IntervalSet, MixtureFamily

logger = logging.getLogger(__name__)

BETA = float(ndtr(1.0) - ndtr(-1.0))
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_n(n: int) -> None:
    if n < 1:
        raise ArgumentError(f"n must be a positive integer, got {n}")


def gaussian_cumulant(n: int, y_n: float, lam: float, family: GaussianPairFamily) -> float:
    """(1/n) log E exp(n lam X) for X ~ Normal(r y_n, 1/n), i.e. lam r y_n + lam^2/2."""
    _check_n(n)
    return lam * family.r * y_n + 0.5 * lam * lam


def gaussian_rate(x: float, y: float, family: GaussianPairFamily) -> float:
    return (x - family.r * y) ** 2


def rate_identity_residual(x: float, y: float, family: GaussianPairFamily) -> float:
    """
   |J(x, y) - inf_x J(., y) - rate/2| with J(x, y) = (x^2 - 2rxy + y^2)/2, relative to 1 + rate/2.

   The left side is evaluated in rationals from the float inputs, so only the
   rounding of `gaussian_rate` itself remains.
   """
    fx, fy, fr = Fraction(x), Fraction(y), Fraction(family.r)
    lhs = (fx * fx - 2 * fr * fx * fy + fy * fy) / 2 - (1 - fr * fr) * fy * fy / 2
    half = Fraction(gaussian_rate(x, y, family)) / 2
    return float(abs(lhs - half) / (1 + half))


def gaussian_log_tail(x: float) -> float:
    """log P(Z > x) for a standard normal Z, accurate far into the tail."""
    return float(log_ndtr(-x))


def gaussian_log_interval(lo: float, hi: float, n: int) -> float:
    """log Normal(0, 1/n)((lo, hi)) without underflow in either tail."""
    if lo >= hi:
        return -math.inf
    a, b = math.sqrt(n) * lo, math.sqrt(n) * hi
    if a > 0:
        upper, lower = gaussian_log_tail(a), gaussian_log_tail(b)
    elif b < 0:
        upper, lower = gaussian_log_tail(-b), gaussian_log_tail(-a)
    else:
        return math.log(float(ndtr(b) - ndtr(a)))
    if math.isinf(lower):
        return upper
    return upper + math.log1p(-math.exp(lower - upper))


def exponential_mixture_weights(n: int) -> Tuple[float, float]:
    """
   (int_0^{1/n} alpha_n dnu_n, int_0^{1/n} (1 - alpha_n) dnu_n) for alpha_n = min(ny, 1), nu_n = Exp(n).

   Substituting t = ny gives int_0^1 t e^-t dt and int_0^1 (1 - t) e^-t dt, whatever n is.
   """
    _check_n(n)
    return 1.0 - 2.0 / math.e, 1.0 / math.e


def counterexample_log_ratio(n: int, m: int) -> float:
    """log mu_n(U x Y | X x V_m) for U = (1, inf), V_m = [0, 1/m) in the exponential mixture family."""
    if not 1 <= n <= m:
        raise ArgumentError(f"counterexample_ratio is only computed for m >= n >= 1, got n={n}, m={m}")
    a = n / m
    # 1 - e^-a (1 + a) and 1 - e^-a are the regularised lower incomplete gammas P(2, a), P(1, a)
    return gaussian_log_tail(math.sqrt(n)) + math.log(gammainc(2, a)) - math.log(gammainc(1, a))


def counterexample_ratio(n: int, m: int) -> float:
    return math.exp(counterexample_log_ratio(n, m))


def _calibration_gap(u: float) -> float:
    # int_{|t| <= 1} min(|t|/u, 1) dPhi(t) - beta/2, with u = eps * sqrt(n)
    ramp = 2.0 / (u * _SQRT_2PI) * -math.expm1(-0.5 * u * u)
    flat = 2.0 * float(ndtr(1.0) - ndtr(u))
    return ramp + flat - 0.5 * BETA


def find_epsilon_n(n: int, max_iter: int = 200, tol: float = 1e-10) -> float:
    """
   eps_n in (0, 1/sqrt(n)) with int_{[-k_n, k_n]} min(|z|/eps_n, 1) dNormal(0, 1/n)(z) = beta/2.

   Bisection on the bracket (1e-15 k_n, k_n (1 - 1e-12)).

   Raises:
       InternalContractError: If the bracket does not change sign.
   """
    _check_n(n)
    kappa = 1.0 / math.sqrt(n)
    lo, hi = 1e-15 * kappa, kappa * (1.0 - 1e-12)
    root_n = math.sqrt(n)
    g_lo, g_hi = _calibration_gap(lo * root_n), _calibration_gap(hi * root_n)
    if not (g_lo > 0 > g_hi):
        raise InternalContractError(f"eps_n bracket does not change sign at n={n}: {g_lo}, {g_hi}")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gap = _calibration_gap(mid * root_n)
        if abs(gap) <= tol and hi - lo <= tol * kappa:
            break
        if gap > 0:
            lo = mid
        else:
            hi = mid
    return mid


def calibrated_integrals(n: int, epsilon: float) -> Tuple[float, float]:
    """(int alpha dnu_n, int (1 - alpha) dnu_n) over [-k_n, k_n] for alpha = min(|z|/epsilon, 1)."""
    u = epsilon * math.sqrt(n)
    with_alpha = _calibration_gap(u) + 0.5 * BETA
    return with_alpha, BETA - with_alpha


def _alpha(n: int, y: float, family: MixtureFamily, epsilon: float) -> float:
    if family.alpha_spec == "linear_ramp":
        if y < 0:
            raise ArgumentError(f"the linear ramp lives on [0, inf), got y={y}")
        return min(n * y, 1.0)
    return min(abs(y) / epsilon, 1.0)


def _mu1(n: int, event: IntervalSet, family: MixtureFamily) -> float:
    total = 0.0
    for iv in event:
        if family.on_naturals:
            first, last = iv.integers()
            if first <= last:
                total += 2.0 ** (1 - first) - (0.0 if math.isinf(last) else 2.0 ** (-last))
        elif iv.lo < iv.hi:
            root = math.sqrt(n)
            total += float(ndtr(root * iv.hi) - ndtr(root * iv.lo))
    return min(total, 1.0)


def _mu2_atom(n: int, family: MixtureFamily) -> float:
    return float(n) if family.mu2_spec == "dirac_at_n" else 1.0 / n


def mixture_kernel_eval(
    n: int, y: float, family: MixtureFamily, event: IntervalSet, epsilon: float = None
) -> float:
    """
   eta_n(y, event) = alpha_n(y) mu1_n(event) + (1 - alpha_n(y)) mu2_n(event).

   `epsilon` is the calibrated ramp width; it defaults to find_epsilon_n(n).
   """
    _check_n(n)
    if not isinstance(event, IntervalSet):
        raise ArgumentError("mixture_kernel_eval needs an IntervalSet event")
    if family.alpha_spec == "calibrated_phi_epsilon" and epsilon is None:
        epsilon = find_epsilon_n(n)
    a = _alpha(n, y, family, epsilon)
    mu2 = 1.0 if event.contains(_mu2_atom(n, family)) else 0.0
    if a == 0.0:
        return mu2
    return a * _mu1(n, event, family) + (1.0 - a) * mu2


def _log_mu1(n: int, event: IntervalSet, family: MixtureFamily) -> float:
    if family.on_naturals:
        mass = _mu1(n, event, family)
        return math.log(mass) if mass > 0 else -math.inf
    logs = [gaussian_log_interval(iv.lo, iv.hi, n) for iv in event]
    logs = [v for v in logs if not math.isinf(v)]
    if not logs:
        return -math.inf
    peak = max(logs)
    return peak + math.log(sum(math.exp(v - peak) for v in logs))


def window_masses(n: int, family: MixtureFamily) -> Tuple[float, float]:
    """(int_{W_n} alpha_n dnu_n, int_{W_n} (1 - alpha_n) dnu_n) in closed form."""
    if family.nu_spec == "exponential_rate_n":
        return exponential_mixture_weights(n)
    with_alpha, without = calibrated_integrals(n, find_epsilon_n(n))
    if family.nu_spec == "gaussian_scaled_plus_atom":
        # nu0 = delta_0/2 + nu_n/2 and alpha_n(0) = 0
        return 0.5 * with_alpha, 0.5 + 0.5 * without
    return with_alpha, without


def check_mixture_hypotheses(
    family: MixtureFamily, n_values: Sequence[int], events: Sequence[IntervalSet]
) -> List[HypothesisRow]:
    """Per n: (1/n) log of both window masses and (1/n) log mu1_n(A), mu2_n(A) for each event."""
    rows = []
    for n in n_values:
        _check_n(n)
        w_alpha, w_rest = window_masses(n, family)
        atom = _mu2_atom(n, family)
        rows.append(
            HypothesisRow(
                n=n,
                log_alpha_mass=math.log(w_alpha) / n,
                log_one_minus_alpha_mass=math.log(w_rest) / n,
                log_mu1=[_log_mu1(n, A, family) / n for A in events],
                log_mu2=[0.0 if A.contains(atom) else -math.inf for A in events],
            )
        )
    return rows


def gaussian_table(family: GaussianPairFamily, lam: float, y: float, n_values: Sequence[int]) -> List[Dict]:
    """Cumulants along y_n = y + 1/n with their gap to the limit lam r y + lam^2/2."""
    limit = lam * family.r * y + 0.5 * lam * lam
    rows = []
    for n in n_values:
        y_n = y + 1.0 / n
        value = gaussian_cumulant(n, y_n, lam, family)
        rows.append({"n": n, "y_n": y_n, "cumulant": value, "limit": limit, "gap": value - limit})
    return rows


def counterexample_table(n_values: Sequence[int], m_values: Sequence[int]) -> List[Dict]:
    rows = []
    for n in n_values:
        bound_log = math.log(n) + gaussian_log_tail(math.sqrt(n))
        for m in m_values:
            if m < n:
                continue
            log_ratio = counterexample_log_ratio(n, m)
            rows.append(
                {
                    "n": n,
                    "m": m,
                    "ratio": math.exp(log_ratio),
                    "log_ratio_over_n": log_ratio / n,
                    "bound": math.exp(bound_log - math.log(m)),
                    "target": -0.5,
                }
            )
    return rows


def quench_table(family: MixtureFamily, n_values: Sequence[int]) -> List[Dict]:
    """
   The kernel at y = 0 is pure mu2_n. For the geometric family it is delta_n, so
   {k >= n} keeps rate 0 while {k < n} is impossible; for the Gaussian families
   (1, inf) gets no mass at y = 0 although mu1_n((1, inf)) decays only at rate 1/2.
   The nu-mass of {0} is reported since it decides whether y = 0 is a null set.
   """
    rows = []
    for n in n_values:
        if family.on_naturals:
            events = {"k_ge_n": IntervalSet(intervals=(Interval(lo=n, lo_closed=True),)),
                      "k_lt_n": IntervalSet(intervals=(Interval(hi=n),))}
        else:
            events = {"x_gt_1": IntervalSet(intervals=(Interval(lo=1.0),))}
        atom = 0.5 if family.nu_spec == "gaussian_scaled_plus_atom" else 0.0
        row = {"n": n, "nu_atom_at_0": atom}
        for name, event in events.items():
            value = mixture_kernel_eval(n, 0.0, family, event)
            row[f"log_eta0_{name}_over_n"] = math.log(value) / n if value > 0 else -math.inf
            row[f"log_mu1_{name}_over_n"] = _log_mu1(n, event, family) / n
        rows.append(row)
    return rows


def epsilon_table(n_values: Sequence[int]) -> List[Dict]:
    rows = []
    for n in n_values:
        eps = find_epsilon_n(n)
        with_alpha, without = calibrated_integrals(n, eps)
        rows.append(
            {
                "n": n,
                "epsilon_n": eps,
                "kappa_n": 1.0 / math.sqrt(n),
                "int_alpha": with_alpha,
                "int_one_minus_alpha": without,
                "residual": abs(with_alpha - 0.5 * BETA),
            }
        )
    return rows


def hypotheses_table(family: MixtureFamily, n_values: Sequence[int], events: Sequence[IntervalSet]) -> List[Dict]:
    rows = []
    for row in check_mixture_hypotheses(family, n_values, events):
        out = {"n": row.n, "log_alpha_mass_over_n": row.log_alpha_mass, "log_rest_mass_over_n": row.log_one_minus_alpha_mass}
        for i, (a, b) in enumerate(zip(row.log_mu1, row.log_mu2)):
            out[f"log_mu1_A{i}_over_n"] = a
            out[f"log_mu2_A{i}_over_n"] = b
        rows.append(out)
    return rows
