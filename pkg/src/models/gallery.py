import math
from typing import List, Literal, Tuple
from pydantic import Field, field_validator, model_validator
from . import Base


class GaussianPairFamily(Base):
    """eta_n(y, .) = Normal(r*y, 1/n)."""
    r: float

    @field_validator("r")
    @classmethod
    def validate_r(cls, v: float):
        if v == 0 or not math.isfinite(v):
            raise ValueError("The coupling coefficient r must be a nonzero finite real")
        return v


Mu1Spec = Literal["gaussian_scaled", "geometric_on_naturals"]
Mu2Spec = Literal["dirac_at_1_over_n", "dirac_at_n"]
NuSpec = Literal["exponential_rate_n", "gaussian_scaled", "gaussian_scaled_plus_atom"]
AlphaSpec = Literal["linear_ramp", "calibrated_phi_epsilon"]


class MixtureFamily(Base):
    """
   eta_n(y, A) = alpha_n(y) mu1_n(A) + (1 - alpha_n(y)) mu2_n(A), with y ~ nu_n.

   Only the concrete families of the convex-combination examples are allowed:
   the linear ramp goes with the exponential nu_n on [0, inf), the calibrated
   ramp with the Gaussian nu_n (optionally carrying an atom at 0).
   """
    mu1_spec: Mu1Spec = "gaussian_scaled"
    mu2_spec: Mu2Spec = "dirac_at_1_over_n"
    nu_spec: NuSpec = "exponential_rate_n"
    alpha_spec: AlphaSpec = "linear_ramp"

    @model_validator(mode="after")
    def check_compatible(self):
        if (self.alpha_spec == "linear_ramp") != (self.nu_spec == "exponential_rate_n"):
            raise ValueError(
                f"alpha_spec {self.alpha_spec!r} does not go with nu_spec {self.nu_spec!r}"
            )
        if (self.mu1_spec == "geometric_on_naturals") != (self.mu2_spec == "dirac_at_n"):
            raise ValueError(
                f"mu1_spec {self.mu1_spec!r} does not go with mu2_spec {self.mu2_spec!r}"
            )
        return self

    @property
    def on_naturals(self) -> bool:
        return self.mu1_spec == "geometric_on_naturals"

    @classmethod
    def preset(cls, name: str) -> "MixtureFamily":
        presets = {
            "exponential": cls(nu_spec="exponential_rate_n", alpha_spec="linear_ramp"),
            "gaussian": cls(nu_spec="gaussian_scaled", alpha_spec="calibrated_phi_epsilon"),
            "gaussian_atom": cls(nu_spec="gaussian_scaled_plus_atom", alpha_spec="calibrated_phi_epsilon"),
            "geometric": cls(
                mu1_spec="geometric_on_naturals",
                mu2_spec="dirac_at_n",
                nu_spec="exponential_rate_n",
                alpha_spec="linear_ramp",
            ),
        }
        if name not in presets:
            raise ValueError(f"Unknown mixture family {name!r}; choose one of {sorted(presets)}")
        return presets[name]


class Interval(Base):
    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = False
    hi_closed: bool = False

    @model_validator(mode="after")
    def check_bounds(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"Malformed interval [{self.lo}, {self.hi}]")
        return self

    def contains(self, x: float) -> bool:
        above = x > self.lo or (self.lo_closed and x == self.lo)
        below = x < self.hi or (self.hi_closed and x == self.hi)
        return above and below

    def integers(self) -> Tuple[int, float]:
        """First integer >= 1 inside the interval and the last one (may be inf); first > last means none."""
        if math.isinf(self.lo):
            first = 1
        else:
            first = max(1, math.ceil(self.lo) if self.lo_closed else math.floor(self.lo) + 1)
        if math.isinf(self.hi):
            return first, math.inf
        last = math.floor(self.hi) if self.hi_closed else math.ceil(self.hi) - 1
        return first, last


class IntervalSet(Base):
    """Finite union of pairwise disjoint intervals of the real line."""
    intervals: Tuple[Interval, ...] = Field(default_factory=tuple)

    @field_validator("intervals")
    @classmethod
    def validate_disjoint(cls, v: Tuple[Interval, ...]):
        ordered = sorted(v, key=lambda iv: iv.lo)
        for a, b in zip(ordered, ordered[1:]):
            if b.lo < a.hi or (b.lo == a.hi and a.hi_closed and b.lo_closed):
                raise ValueError("Intervals of an event must be pairwise disjoint")
        return tuple(ordered)

    @classmethod
    def whole_line(cls) -> "IntervalSet":
        return cls(intervals=(Interval(),))

    @classmethod
    def of(cls, *bounds: Tuple[float, float]) -> "IntervalSet":
        return cls(intervals=tuple(Interval(lo=lo, hi=hi) for lo, hi in bounds))

    def contains(self, x: float) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def __iter__(self):
        return iter(self.intervals)


class HypothesisRow(Base):
    """Per-n values of the convex-combination hypotheses."""
    n: int
    log_alpha_mass: float
    log_one_minus_alpha_mass: float
    log_mu1: List[float]
    log_mu2: List[float]
