import math
from typing import List, Literal, Optional, Tuple
from pydantic import Field, field_validator, model_validator
from . import Base
from .empirical import EmpiricalMeasure
from .measures import Dist, JointDist
from .rate import BallComplement, HalfSpace, SetDescriptor, TVBall
from src.settings import settings


class Tolerances(Base):
    kernel_tol: float = Field(settings.KERNEL_TOL, gt=0.0)
    rate_tol: float = Field(settings.IPF_TOL, gt=0.0)
    envelope_slack: float = Field(settings.ENVELOPE_SLACK, ge=0.0)


class BallSpec(Base):
    """Conditioning ball B(center, delta) on P(S)."""
    center: Dist
    delta: float = Field(..., gt=0.0)


class ScenarioConfig(Base):
    """Everything a Sanov convergence run or a condition scan needs."""
    lambda_: JointDist = Field(..., alias="lambda")
    psi: Dist
    psi_sequence_rule: Literal["nearest_empirical", "explicit"] = "nearest_empirical"
    psi_sequence: Optional[Tuple[EmpiricalMeasure, ...]] = None
    event: SetDescriptor
    n_values: Tuple[int, ...]
    tolerances: Tolerances = Tolerances()
    epsilons: Tuple[float, ...] = (0.2, 0.1, 0.05)
    ball_grid: Optional[Tuple[BallSpec, ...]] = None
    resolution: float = Field(settings.GRID_RESOLUTION, gt=0.0)

    @field_validator("n_values")
    @classmethod
    def validate_n_values(cls, v: Tuple[int, ...]):
        if len(v) == 0:
            raise ValueError("n_values must not be empty")
        if v[0] < 1:
            raise ValueError("n_values must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"n_values must be strictly increasing: {list(v)}")
        return v

    @field_validator("epsilons")
    @classmethod
    def validate_epsilons(cls, v: Tuple[float, ...]):
        if any(not (e > 0 and math.isfinite(e)) for e in v):
            raise ValueError(f"epsilons must be positive: {list(v)}")
        return v

    @model_validator(mode="after")
    def check_scenario(self):
        lam = self.lambda_
        for s, label in enumerate(lam.cols.labels):
            if lam.column_mass(s) <= 0:
                raise ValueError(f"lambda(R x {{{label}}}) = 0 violates the Sanov support assumption")
        if self.psi.alphabet != lam.cols:
            raise ValueError("psi must live on the column alphabet of lambda")
        self._check_descriptor(self.event)
        if self.psi_sequence_rule == "explicit":
            if self.psi_sequence is None or len(self.psi_sequence) != len(self.n_values):
                raise ValueError("an explicit psi_sequence needs one empirical measure per n value")
            for n, psi_n in zip(self.n_values, self.psi_sequence):
                if psi_n.n != n or psi_n.alphabet != lam.cols:
                    raise ValueError(f"psi_sequence entry for n={n} has the wrong level or alphabet")
        for ball in self.ball_grid or ():
            if ball.center.alphabet != lam.cols:
                raise ValueError("ball_grid centers must live on the column alphabet of lambda")
        return self

    def _check_descriptor(self, descriptor):
        rows = self.lambda_.rows
        if isinstance(descriptor, HalfSpace):
            if descriptor.coordinate not in rows.labels:
                raise ValueError(f"event coordinate {descriptor.coordinate!r} is not a row symbol")
        elif isinstance(descriptor, TVBall):
            if descriptor.center.alphabet != rows:
                raise ValueError("event ball center must live on the row alphabet of lambda")
        elif isinstance(descriptor, BallComplement):
            for ball in descriptor.balls:
                self._check_descriptor(ball)

    @property
    def M(self) -> int:
        return self.lambda_.M


class ConvergenceReport(Base):
    """One row of a Sanov convergence run."""
    n: int
    psi_n: EmpiricalMeasure
    a_n: float
    envelope_lo: float
    envelope_hi: float
    target_lo: float
    target_hi: float
    wall_ms: Optional[float] = None

    @property
    def contained(self) -> bool:
        return self.envelope_lo <= self.a_n <= self.envelope_hi

    @property
    def envelope_width(self) -> float:
        return self.envelope_hi - self.envelope_lo


class ConditionalProbability(Base):
    """mu_n(A x B) / mu_n(P(R) x B), or an explicit undefined marker when the ball has no mass."""
    value: float
    log_value: float
    defined: bool
    mass: float = 0.0

    @classmethod
    def undefined(cls) -> "ConditionalProbability":
        return cls(value=math.nan, log_value=math.nan, defined=False, mass=0.0)


class EpsilonScan(Base):
    epsilon: float
    admissible_balls: int
    skipped_undefined: int
    per_n: Tuple[Tuple[int, float], ...]
    proxy: float


class ScanReport(Base):
    """Finite-n proxy of an (A2) or (B2) condition; evidence only, never a limit."""
    condition: Literal["a2", "b2"]
    rows: List[EpsilonScan]
    proxy: float
    target: float
    margin: float
    label: str = "finite proxy, not a limit"
