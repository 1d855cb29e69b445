from fractions import Fraction
from functools import cached_property
from typing import Any, Tuple
import numpy as np
from pydantic import Field, field_validator, model_validator
from . import Base
from .measures import Alphabet, Dist, JointDist


class EmpiricalMeasure(Base):
    """Element of P_emp^n on one alphabet, stored as integer counts with denominator n."""
    alphabet: Alphabet
    n: int = Field(..., ge=1)
    counts: Tuple[int, ...]

    @field_validator("counts")
    @classmethod
    def validate_counts(cls, v: Tuple[int, ...]):
        if any(c < 0 for c in v):
            raise ValueError(f"Counts must be nonnegative: {list(v)}")
        return v

    @model_validator(mode="after")
    def check_total(self):
        if len(self.counts) != self.alphabet.size:
            raise ValueError(f"{len(self.counts)} counts for {self.alphabet.size} symbols")
        if sum(self.counts) != self.n:
            raise ValueError(f"Counts {list(self.counts)} do not sum to n={self.n}")
        return self

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    @cached_property
    def probabilities(self) -> np.ndarray:
        return self.array / self.n

    def value(self, exact: bool = False) -> Dist:
        if exact:
            return Dist(alphabet=self.alphabet, weights=[Fraction(c, self.n) for c in self.counts], exact=True)
        return Dist(alphabet=self.alphabet, weights=[c / self.n for c in self.counts])

    def to_dict(self) -> dict:
        return {"alphabet": list(self.alphabet.labels), "n": self.n, "counts": list(self.counts)}


class JointEmpiricalMeasure(Base):
    """Element of P_emp^n(R x S) as an integer count matrix."""
    rows: Alphabet
    cols: Alphabet
    n: int = Field(..., ge=1)
    counts: Tuple[Tuple[int, ...], ...]

    @model_validator(mode="after")
    def check_total(self):
        if len(self.counts) != self.rows.size or any(len(r) != self.cols.size for r in self.counts):
            raise ValueError(f"Count matrix shape does not match {self.rows.size}x{self.cols.size}")
        if any(c < 0 for r in self.counts for c in r):
            raise ValueError("Counts must be nonnegative")
        if sum(sum(r) for r in self.counts) != self.n:
            raise ValueError(f"Counts do not sum to n={self.n}")
        return self

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    @property
    def M(self) -> int:
        return self.rows.size * self.cols.size

    def value(self, exact: bool = False) -> JointDist:
        if exact:
            weights = [[Fraction(c, self.n) for c in row] for row in self.counts]
        else:
            weights = [[c / self.n for c in row] for row in self.counts]
        return JointDist(rows=self.rows, cols=self.cols, weights=weights, exact=exact)

    def r_marginal(self) -> EmpiricalMeasure:
        return EmpiricalMeasure(alphabet=self.rows, n=self.n, counts=tuple(int(c) for c in self.array.sum(axis=1)))

    def s_marginal(self) -> EmpiricalMeasure:
        return EmpiricalMeasure(alphabet=self.cols, n=self.n, counts=tuple(int(c) for c in self.array.sum(axis=0)))

    @classmethod
    def from_array(cls, rows: Alphabet, cols: Alphabet, counts: Any) -> "JointEmpiricalMeasure":
        matrix = tuple(tuple(int(c) for c in row) for row in np.asarray(counts))
        return cls(rows=rows, cols=cols, n=sum(sum(r) for r in matrix), counts=matrix)

    def to_dict(self) -> dict:
        return {
            "rows": list(self.rows.labels),
            "cols": list(self.cols.labels),
            "n": self.n,
            "counts": [list(r) for r in self.counts],
        }

