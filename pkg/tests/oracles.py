"""Brute-force references used only by the tests."""
import itertools
import math
from fractions import Fraction
from typing import Callable
from src.models.measures import Dist, JointDist


def sequence_law(n: int, lam: JointDist, A: Callable[[Dist], bool], B: Callable[[Dist], bool]) -> Fraction:
    """mu_n(A x B) by summing over every sequence in (R x S)^n; lam must be exact."""
    R, S = lam.shape
    cells = [(r, s) for r in range(R) for s in range(S)]
    total = Fraction(0)
    for seq in itertools.product(cells, repeat=n):
        r_counts = [0] * R
        s_counts = [0] * S
        p = Fraction(1)
        for r, s in seq:
            r_counts[r] += 1
            s_counts[s] += 1
            p *= lam.weights[r][s]
        if p == 0:
            continue
        phi = Dist(alphabet=lam.rows, weights=[Fraction(c, n) for c in r_counts], exact=True)
        zeta = Dist(alphabet=lam.cols, weights=[Fraction(c, n) for c in s_counts], exact=True)
        if A(phi) and B(zeta):
            total += p
    return total


def subset_prohorov(mu: Dist, nu: Dist) -> float:
    """Discrete-metric Prohorov distance as the largest mass gap over all subsets."""
    k = mu.size
    best = 0.0
    for size in range(k + 1):
        for subset in itertools.combinations(range(k), size):
            gap = sum(float(mu.weights[i]) - float(nu.weights[i]) for i in subset)
            best = max(best, gap)
    return best


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-13) -> float:
    """Minimum value of a unimodal f on [a, b]."""
    if b <= a:
        return f(a)
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(f(a), f(b), fc, fd)
