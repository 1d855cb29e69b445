import math
from pydantic import Field
from . import Base


class SuiteSummary(Base):
    """Outcome of one invariant suite of the `verify` command."""
    checks: int = Field(0, ge=0)
    failures: int = Field(0, ge=0)
    max_residual: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, residual: float, ok: bool) -> "SuiteSummary":
        worst = self.max_residual
        if math.isfinite(residual):
            worst = max(worst, residual)
        return SuiteSummary(
            checks=self.checks + 1,
            failures=self.failures + (0 if ok else 1),
            max_residual=worst,
        )

    def to_dict(self) -> dict:
        return {"checks": self.checks, "failures": self.failures, "max_residual": self.max_residual}
