import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple
import numpy as np
from scipy.special import gammaln, rel_entr, xlogy
from src.errors import ArgumentError, InternalContractError, ResourceError
from src.models.empirical import EmpiricalMeasure
from src.models.kernels import ColumnSlice, ContingencyTable, KernelLaw
from src.models.measures import Dist, JointDist, Kernel
from src.settings import ArithmeticMode, settings
from .empirical import composition_array, enumerate_empirical, joint_empirical_law, multinomial_prob
from .finite_measures import conditional_theta, grouped_log_sum, log_sum, marginals

logger = logging.getLogger(__name__)

Predicate = Callable[[Dist], bool]


def _walk_tables(
    row_margins: Sequence[int],
    col_margins: Sequence[int],
    allowed: Optional[np.ndarray] = None,
    cap: Optional[int] = None,
) -> Iterator[np.ndarray]:
    """Depth-first over the cells in row-major order; the last row is forced by the column budgets."""
    cap = settings.TABLE_CAP if cap is None else cap
    R, S = len(row_margins), len(col_margins)
    if sum(row_margins) != sum(col_margins):
        return
    if allowed is None:
        allowed = np.ones((R, S), dtype=bool)
    table = np.zeros((R, S), dtype=np.int64)
    budget = list(col_margins)
    visited = 0

    def fill(r: int, s: int, left: int) -> Iterator[np.ndarray]:
        nonlocal visited
        visited += 1
        if visited > cap:
            raise ResourceError(f"Contingency table enumeration visited more than {cap} nodes")
        if r == R - 1:
            if any(b > 0 and not allowed[r, j] for j, b in enumerate(budget)):
                return
            table[r, :] = budget
            yield table.copy()
            table[r, :] = 0
            return
        if s == S - 1:
            if left > budget[s] or (left > 0 and not allowed[r, s]):
                return
            table[r, s] = left
            budget[s] -= left
            yield from fill(r + 1, 0, row_margins[r + 1])
            budget[s] += left
            table[r, s] = 0
            return
        top = min(left, budget[s]) if allowed[r, s] else 0
        for c in range(top, -1, -1):
            table[r, s] = c
            budget[s] -= c
            yield from fill(r, s + 1, left - c)
            budget[s] += c
        table[r, s] = 0

    if R == 0 or S == 0:
        return
    yield from fill(0, 0, row_margins[0])


def enumerate_tables(
    row_margins: Sequence[int], col_margins: Sequence[int], cap: Optional[int] = None
) -> List[ContingencyTable]:
    """
   Every nonnegative integer table with the given row and column sums.

   Raises:
       ResourceError: If the depth-first walk visits more than `cap` nodes.
   """
    rows, cols = tuple(int(x) for x in row_margins), tuple(int(x) for x in col_margins)
    return [
        ContingencyTable(counts=tuple(tuple(int(c) for c in row) for row in t), row_margins=rows, col_margins=cols)
        for t in _walk_tables(rows, cols, cap=cap)
    ]


def to_exact_weight(w) -> Fraction:
    return w if isinstance(w, Fraction) else Fraction(repr(float(w)))


def _check_levels(n: int, *measures: EmpiricalMeasure) -> None:
    for m in measures:
        if m.n != n:
            raise ArgumentError(f"Empirical measure lives on level {m.n}, expected n={n}")


def eta_point_mass(
    n: int,
    zeta: EmpiricalMeasure,
    phi: EmpiricalMeasure,
    theta: Kernel,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
):
    """
   eta_n(zeta, {phi}): sum over tables c with column sums n*zeta and row sums n*phi of
   prod_s (n zeta_s)!/prod_r c_rs! * prod theta(s, r)^c_rs.

   Cells with theta(s, r) = 0 are pruned during the walk.
   """
    _check_levels(n, zeta, phi)
    if zeta.alphabet != theta.source or phi.alphabet != theta.target:
        raise ArgumentError("eta_point_mass: zeta, phi and theta disagree on alphabets")
    weights = theta.matrix.T
    allowed = weights > 0
    tables = _walk_tables(phi.counts, zeta.counts, allowed, cap)
    if mode == ArithmeticMode.EXACT:
        th = [[to_exact_weight(theta.rows[s].weights[r]) for s in range(theta.source.size)] for r in range(theta.target.size)]
        total = Fraction(0)
        for t in tables:
            term = Fraction(1)
            for s, ns in enumerate(zeta.counts):
                term *= math.factorial(ns)
                for r in range(len(phi.counts)):
                    term = term / math.factorial(int(t[r, s])) * th[r][s] ** int(t[r, s])
            total += term
        return total
    col_log = gammaln(np.asarray(zeta.counts, dtype=np.float64) + 1).sum()
    logs = [col_log - gammaln(t + 1).sum() + xlogy(t, weights).sum() for t in tables]
    if not logs:
        return 0.0
    return math.exp(log_sum(logs))


def kernel_law(
    n: int,
    zeta: EmpiricalMeasure,
    theta: Kernel,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
) -> KernelLaw:
    """
   The full law of the R-empirical measure given zeta, as a convolution of
   one multinomial law per column: column s contributes n*zeta_s draws from theta(s, .).

   Raises:
       ResourceError: If an intermediate convolution exceeds the table cap.
   """
    _check_levels(n, zeta)
    if zeta.alphabet != theta.source:
        raise ArgumentError("kernel_law: zeta and theta disagree on the column alphabet")
    cap = settings.TABLE_CAP if cap is None else cap
    R = theta.target.size
    if mode == ArithmeticMode.EXACT:
        return _kernel_law_exact(n, zeta, theta, cap)
    keys = np.zeros((1, R), dtype=np.int64)
    logp = np.zeros(1)
    for s, ns in enumerate(zeta.counts):
        if ns == 0:
            continue
        comps = composition_array(ns, R, cap)
        col = gammaln(ns + 1) - gammaln(comps + 1).sum(axis=1) + xlogy(comps, theta.matrix[s]).sum(axis=1)
        live = np.isfinite(col)
        comps, col = comps[live], col[live]
        if len(keys) * len(comps) > cap:
            raise ResourceError(f"kernel convolution needs {len(keys) * len(comps)} terms, above the cap {cap}")
        merged = (keys[:, None, :] + comps[None, :, :]).reshape(-1, R)
        merged_logp = (logp[:, None] + col[None, :]).reshape(-1)
        keys, inverse = np.unique(merged, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        logp = grouped_log_sum(merged_logp, inverse, len(keys))
    logger.debug("kernel_law at n=%d: %d support points", n, len(keys))
    # np.unique sorts rows ascending; enumeration order is the reverse
    return KernelLaw(rows=theta.target, n=n, zeta=zeta, counts=keys[::-1], log_probs=logp[::-1])


def _kernel_law_exact(n: int, zeta: EmpiricalMeasure, theta: Kernel, cap: int) -> KernelLaw:
    R = theta.target.size
    law: Dict[Tuple[int, ...], Fraction] = {(0,) * R: Fraction(1)}
    for s, ns in enumerate(zeta.counts):
        if ns == 0:
            continue
        weights = [to_exact_weight(w) for w in theta.rows[s].weights]
        column = {}
        for comp in composition_array(ns, R, cap):
            p = multinomial_prob(comp, weights, ArithmeticMode.EXACT)
            if p:
                column[tuple(int(c) for c in comp)] = p
        if len(law) * len(column) > cap:
            raise ResourceError(f"kernel convolution needs {len(law) * len(column)} terms, above the cap {cap}")
        nxt: Dict[Tuple[int, ...], Fraction] = {}
        for key, p in law.items():
            for comp, q in column.items():
                k = tuple(a + b for a, b in zip(key, comp))
                nxt[k] = nxt.get(k, Fraction(0)) + p * q
        law = nxt
    ordered = sorted(law, reverse=True)
    probs = tuple(law[k] for k in ordered)
    with np.errstate(divide="ignore"):
        logs = np.log(np.array([float(p) for p in probs]))
    return KernelLaw(
        rows=theta.target,
        n=n,
        zeta=zeta,
        counts=np.array(ordered, dtype=np.int64).reshape(-1, R),
        log_probs=logs,
        probs=probs,
    )


def eta_event(
    n: int,
    zeta: EmpiricalMeasure,
    event: Predicate,
    theta: Kernel,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
):
    """eta_n(zeta, event): the point masses of the kernel law summed over phi in the event."""
    law = kernel_law(n, zeta, theta, mode, cap)
    mask = law.mask(event)
    if law.exact:
        return sum((p for p, hit in zip(law.probs, mask) if hit), Fraction(0))
    if not mask.any():
        return 0.0
    return min(1.0, math.exp(log_sum(law.log_probs[mask])))


def column_slice(n: int, zeta: EmpiricalMeasure, lam: JointDist, cap: Optional[int] = None) -> ColumnSlice:
    """
   All joint empirical couplings at level n with S-marginal zeta, vectorised.

   Raises:
       ResourceError: If the slice holds more tables than the table cap.
   """
    _check_levels(n, zeta)
    if zeta.alphabet != lam.cols:
        raise ArgumentError("column_slice: zeta and lambda disagree on the column alphabet")
    cap = settings.TABLE_CAP if cap is None else cap
    R, S = lam.shape
    columns = [composition_array(int(ns), R, cap) for ns in zeta.counts]
    size = math.prod(len(c) for c in columns)
    if size > cap:
        raise ResourceError(f"column slice at n={n} holds {size} tables, above the cap {cap}")
    grids = np.meshgrid(*[np.arange(len(c)) for c in columns], indexing="ij")
    tables = np.stack([columns[s][grids[s].reshape(-1)] for s in range(S)], axis=2)
    lam_arr = lam.array
    flat = tables.reshape(len(tables), -1)
    log_probs = gammaln(n + 1) - gammaln(flat + 1).sum(axis=1) + xlogy(flat, lam_arr.reshape(-1)).sum(axis=1)
    entropies = rel_entr(flat / n, lam_arr.reshape(-1)).sum(axis=1)
    logger.debug("column slice at n=%d: %d tables", n, len(tables))
    return ColumnSlice(
        rows=lam.rows,
        cols=lam.cols,
        n=n,
        zeta=zeta,
        tables=tables,
        log_probs=log_probs,
        entropies=entropies,
        r_counts=tables.sum(axis=2),
    )


def eta_via_conditioning(
    n: int,
    zeta: EmpiricalMeasure,
    event: Predicate,
    lam: JointDist,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
):
    """
   mu_n(event x {zeta}) / mu_n(P(R) x {zeta}), summed directly over the couplings with S-marginal zeta.

   Raises:
       InternalContractError: If the conditioning atom carries no mass.
   """
    cut = column_slice(n, zeta, lam, cap)
    mask = cut.r_mask(event)
    if mode == ArithmeticMode.EXACT:
        weights = [w for row in lam.to_exact().weights for w in row]
        probs = [multinomial_prob(t.reshape(-1), weights, mode) for t in cut.tables]
        total = sum(probs, Fraction(0))
        if total == 0:
            raise InternalContractError(f"mu_n(P(R) x {{zeta}}) = 0 at zeta={list(zeta.counts)}")
        return sum((p for p, hit in zip(probs, mask) if hit), Fraction(0)) / total
    if np.isneginf(cut.log_probs).all():
        raise InternalContractError(f"mu_n(P(R) x {{zeta}}) = 0 at zeta={list(zeta.counts)}")
    if not mask.any():
        return 0.0
    return min(1.0, math.exp(log_sum(cut.log_probs[mask]) - log_sum(cut.log_probs)))


def s_marginal_law(n: int, lam: JointDist, cap: Optional[int] = None) -> Tuple[List[EmpiricalMeasure], np.ndarray]:
    """Atoms of mu_n o pi^{-1}: every zeta in P_emp^n(S) with its log-probability under lambda_S."""
    _, lam_s = marginals(lam)
    zetas = enumerate_empirical(n, lam.cols, cap)
    counts = np.array([z.counts for z in zetas], dtype=np.int64)
    logs = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1) + xlogy(counts, lam_s.array).sum(axis=1)
    return zetas, logs


def verify_prcp_identity(
    n: int,
    lam: JointDist,
    A: Predicate,
    B: Predicate,
    mode: ArithmeticMode = ArithmeticMode.DOUBLE,
    cap: Optional[int] = None,
):
    """
   |mu_n(A x B) - sum_{zeta in B} eta_n(zeta, A) mu_n o pi^{-1}({zeta})|.

   Returns a Fraction in exact mode, which must be exactly 0.
   """
    lhs = joint_empirical_law(n, lam, A, B, mode, cap)
    if mode == ArithmeticMode.EXACT:
        exact = lam.to_exact()
        theta = conditional_theta(exact)
        _, lam_s = marginals(exact)
        rhs = Fraction(0)
        for zeta in enumerate_empirical(n, lam.cols, cap):
            if B(zeta.value(exact=True)):
                rhs += eta_event(n, zeta, A, theta, mode, cap) * multinomial_prob(zeta.counts, lam_s.weights, mode)
        return abs(lhs - rhs)
    theta = conditional_theta(lam)
    zetas, logs = s_marginal_law(n, lam, cap)
    terms = [
        eta_event(n, zeta, A, theta, mode, cap) * math.exp(lp)
        for zeta, lp in zip(zetas, logs)
        if B(zeta.value())
    ]
    rhs = math.fsum(terms)
    residual = abs(lhs - rhs)
    logger.debug("PRCP identity at n=%d: lhs=%r rhs=%r residual=%.3e", n, lhs, rhs, residual)
    return residual
