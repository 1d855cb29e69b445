from fractions import Fraction
from pydantic import Field, model_validator
from . import Base
from .empirical import JointEmpiricalMeasure


class RoundingCertificate(Base):
    """
   Constants (kappa, N) for a target closeness delta on an alphabet pair with M cells.

   Every n >= N and every zeta in P_emp^n(S) within kappa of the S-marginal of
   the target coupling admit a matched empirical coupling within delta.
   """
    delta: float = Field(..., gt=0.0)
    kappa: float = Field(..., gt=0.0)
    N: int = Field(..., ge=1)
    M: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_invariant(self):
        M = self.M
        lhs = Fraction(M * M) * Fraction(repr(self.kappa)) + Fraction(2 * (M**3 + M**2), self.N)
        if not lhs < Fraction(repr(self.delta)):
            raise ValueError(
                f"M^2*kappa + (2/N)(M^3+M^2) = {float(lhs)} is not below delta = {self.delta}"
            )
        return self

    def joint_bound(self, n: int) -> float:
        return self.M * self.kappa + 2.0 / n * (self.M**2 + self.M)

    def marginal_bound(self, n: int) -> float:
        return self.M**2 * self.kappa + 2.0 / n * (self.M**3 + self.M**2)


class RoundingCheck(Base):
    """The four quantitative conclusions of a margin-matched rounding."""
    nu: JointEmpiricalMeasure
    kappa: float
    s_margin_exact: bool
    absolutely_continuous: bool
    fd_joint: float
    fd_joint_bound: float
    fd_r_marginal: float
    fd_r_marginal_bound: float

    @property
    def fd_joint_ok(self) -> bool:
        return self.fd_joint <= self.fd_joint_bound

    @property
    def fd_r_marginal_ok(self) -> bool:
        return self.fd_r_marginal <= self.fd_r_marginal_bound

    @property
    def passed(self) -> bool:
        return self.s_margin_exact and self.absolutely_continuous and self.fd_joint_ok and self.fd_r_marginal_ok

    def to_dict(self) -> dict:
        return {
            "nu": self.nu.to_dict(),
            "kappa": self.kappa,
            "s_margin_exact": self.s_margin_exact,
            "absolutely_continuous": self.absolutely_continuous,
            "fd_joint": self.fd_joint,
            "fd_joint_bound": self.fd_joint_bound,
            "fd_joint_ok": self.fd_joint_ok,
            "fd_r_marginal": self.fd_r_marginal,
            "fd_r_marginal_bound": self.fd_r_marginal_bound,
            "fd_r_marginal_ok": self.fd_r_marginal_ok,
            "passed": self.passed,
        }
