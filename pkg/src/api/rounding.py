import logging
import math
from fractions import Fraction
from typing import List
import numpy as np
from src.errors import ArgumentError, PreconditionError
from src.models.empirical import EmpiricalMeasure, JointEmpiricalMeasure
from src.models.measures import JointDist, to_fraction
from src.models.rounding import RoundingCertificate, RoundingCheck
from .finite_measures import marginals, prohorov_distance

logger = logging.getLogger(__name__)


def _scaled(xi: JointDist, n: int) -> List[List[Fraction]]:
    # exact n*xi; floats go through their shortest repr
    return [[to_fraction(w) * n for w in row] for row in xi.weights]


def round_to_grid(xi: JointDist, n: int) -> JointEmpiricalMeasure:
    """
   An element of P_emp^n(R x S) within 1/n of xi in every cell, charging only cells where xi does.

   Positive cells are floored to the grid; the missing units then go one at a
   time to the positive cells in decreasing order of remainder, (r, s) order on ties.
   """
    if n < 1:
        raise ArgumentError(f"round_to_grid needs n >= 1, got {n}")
    scaled = _scaled(xi, n)
    R, S = xi.shape
    counts = [[math.floor(x) for x in row] for row in scaled]
    support = [(r, s) for r in range(R) for s in range(S) if scaled[r][s] > 0]
    order = sorted(support, key=lambda cell: (-(scaled[cell[0]][cell[1]] - counts[cell[0]][cell[1]]), cell))
    missing = n - sum(map(sum, counts))
    i = 0
    while missing > 0:
        r, s = order[i % len(order)]
        counts[r][s] += 1
        missing -= 1
        i += 1
    return JointEmpiricalMeasure(rows=xi.rows, cols=xi.cols, n=n, counts=tuple(tuple(row) for row in counts))


def match_s_margin(xi: JointDist, zeta: EmpiricalMeasure, lam: JointDist) -> JointEmpiricalMeasure:
    """
   Round xi to P_emp^n(R x S), n = zeta.n, and repair each column to the exact budget n*zeta(s).

   A column over budget loses units from its cells in increasing order of
   lambda_rs; a column under budget receives the surplus on r_s = argmax_r lambda_rs.

   Raises:
       PreconditionError: If xi is not absolutely continuous w.r.t. lambda, a
           column of lambda is empty, or the alphabets disagree.
   """
    if xi.rows != lam.rows or xi.cols != lam.cols:
        raise PreconditionError("xi and lambda live on different alphabet pairs")
    if zeta.alphabet != lam.cols:
        raise PreconditionError("zeta must live on the column alphabet of lambda")
    lam_arr, xi_arr = lam.array, xi.array
    for s, label in enumerate(lam.cols.labels):
        if lam_arr[:, s].sum() <= 0:
            raise PreconditionError(f"lambda(R x {{{label}}}) = 0")
    bad = np.argwhere((xi_arr > 0) & (lam_arr == 0))
    if len(bad):
        r, s = bad[0]
        raise PreconditionError(
            f"xi is not absolutely continuous w.r.t. lambda at ({lam.rows.labels[r]}, {lam.cols.labels[s]})"
        )
    n = zeta.n
    counts = np.array(round_to_grid(xi, n).counts, dtype=np.int64)
    R = lam.rows.size
    for s, budget in enumerate(zeta.counts):
        excess = int(counts[:, s].sum()) - budget
        if excess > 0:
            for r in sorted(range(R), key=lambda r: (lam_arr[r, s], r)):
                take = min(excess, int(counts[r, s]))
                counts[r, s] -= take
                excess -= take
                if excess == 0:
                    break
        elif excess < 0:
            r_s = int(np.argmax(lam_arr[:, s]))
            counts[r_s, s] -= excess
    return JointEmpiricalMeasure.from_array(lam.rows, lam.cols, counts)


def certificate_for(xi: JointDist, delta: float) -> RoundingCertificate:
    """kappa = delta / (4 M^2) and the smallest N with (2/N)(M^3 + M^2) < delta / 2."""
    if not delta > 0:
        raise ArgumentError(f"certificate_for needs delta > 0, got {delta}")
    M = xi.M
    kappa = delta / (4 * M * M)
    N = math.floor(Fraction(4 * (M**3 + M**2)) / to_fraction(delta)) + 1
    return RoundingCertificate(delta=delta, kappa=kappa, N=N, M=M)


def check_rounding(nu: JointEmpiricalMeasure, xi: JointDist, zeta: EmpiricalMeasure, lam: JointDist) -> RoundingCheck:
    """Evaluate the four conclusions of the rounding construction for an output nu."""
    n, M = nu.n, nu.M
    _, xi_s = marginals(xi)
    kappa = float(np.abs(zeta.probabilities - xi_s.array).max())
    nu_value = nu.value()
    xi_double = xi.to_double()
    fd_joint = float(prohorov_distance(nu_value, xi_double))
    fd_r = float(prohorov_distance(marginals(nu_value)[0], marginals(xi_double)[0]))
    return RoundingCheck(
        nu=nu,
        kappa=kappa,
        s_margin_exact=tuple(int(c) for c in nu.array.sum(axis=0)) == tuple(zeta.counts),
        absolutely_continuous=not bool(((nu.array > 0) & (lam.array == 0)).any()),
        fd_joint=fd_joint,
        fd_joint_bound=M * kappa + 2.0 / n * (M * M + M),
        fd_r_marginal=fd_r,
        fd_r_marginal_bound=M * M * kappa + 2.0 / n * (M**3 + M * M),
    )
