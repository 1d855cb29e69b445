import math
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, Iterable, Sequence, Tuple, Union
import numpy as np
from pydantic import field_validator, model_validator
from . import Base
from src.settings import settings

Weight = Union[float, Fraction]


def to_fraction(value: Any) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its shortest repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("Boolean is not a weight")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"Weight {value!r} is not finite")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def _coerce_weights(values: Iterable[Any], exact: bool, where: str) -> Tuple[Weight, ...]:
    out = []
    for i, v in enumerate(values):
        try:
            w = to_fraction(v) if exact else float(v)
        except (TypeError, ValueError, ZeroDivisionError) as e:
            raise ValueError(f"{where}: entry {i} ({v!r}) is not a number: {e}")
        if not exact and not math.isfinite(w):
            raise ValueError(f"{where}: entry {i} is not finite")
        if w < 0:
            raise ValueError(f"{where}: entry {i} is negative ({v!r})")
        out.append(w)
    return tuple(out)


def _normalize(total: Weight, exact: bool, describe: str) -> Weight:
    """Returns the divisor to apply, or raises when the deficit is beyond tolerance."""
    if exact:
        if total != 1:
            raise ValueError(f"{describe} sum to {total}, expected exactly 1")
        return Fraction(1)
    if abs(total - 1.0) > settings.NORMALIZATION_TOL:
        raise ValueError(f"{describe} sum to {total!r}, expected 1 within {settings.NORMALIZATION_TOL}")
    return total


class Alphabet(Base):
    """Ordered finite set of distinct symbol names."""
    labels: Tuple[str, ...]

    @model_validator(mode="before")
    @classmethod
    def accept_label_list(cls, data: Any):
        if isinstance(data, (list, tuple)):
            return {"labels": tuple(data)}
        return data

    @field_validator("labels")
    @classmethod
    def validate_labels(cls, v: Tuple[str, ...]):
        if len(v) == 0:
            raise ValueError("Alphabet must contain at least one symbol")
        if len(set(v)) != len(v):
            raise ValueError(f"Alphabet labels must be distinct: {list(v)}")
        return v

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            from src.errors import ArgumentError
            raise ArgumentError(f"Unknown symbol {label!r}; alphabet is {list(self.labels)}")

    @classmethod
    def of_size(cls, k: int, prefix: str = "x") -> "Alphabet":
        return cls(labels=tuple(f"{prefix}{i + 1}" for i in range(k)))

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(self.labels)


class Dist(Base):
    """Probability vector on a finite alphabet (floats, or Fractions when `exact`)."""
    alphabet: Alphabet
    weights: Tuple[Any, ...]
    exact: bool = False

    @model_validator(mode="before")
    @classmethod
    def coerce_weights(cls, data: Any):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        exact = bool(data.get("exact", False))
        weights = _coerce_weights(data.get("weights", ()), exact, "weights")
        divisor = _normalize(sum(weights, Fraction(0) if exact else 0.0), exact, "weights")
        if divisor != 1:
            weights = tuple(w / divisor for w in weights)
        data["weights"] = weights
        return data

    @model_validator(mode="after")
    def check_shape(self):
        if len(self.weights) != self.alphabet.size:
            raise ValueError(
                f"{len(self.weights)} weights for an alphabet of {self.alphabet.size} symbols"
            )
        return self

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=np.float64)

    @property
    def size(self) -> int:
        return self.alphabet.size

    def prob(self, label: str) -> Weight:
        return self.weights[self.alphabet.index(label)]

    def to_exact(self) -> "Dist":
        if self.exact:
            return self
        weights = [to_fraction(w) for w in self.weights]
        # float weights only sum to 1 within tolerance
        total = sum(weights, Fraction(0))
        return Dist(alphabet=self.alphabet, weights=[w / total for w in weights], exact=True)

    def to_double(self) -> "Dist":
        if not self.exact:
            return self
        return Dist(alphabet=self.alphabet, weights=[float(w) for w in self.weights])

    @classmethod
    def from_array(cls, alphabet: Alphabet, values: Sequence[Any], exact: bool = False) -> "Dist":
        return cls(alphabet=alphabet, weights=tuple(values), exact=exact)

    @classmethod
    def uniform(cls, alphabet: Alphabet, exact: bool = False) -> "Dist":
        k = alphabet.size
        w = Fraction(1, k) if exact else 1.0 / k
        return cls(alphabet=alphabet, weights=(w,) * k, exact=exact)

    @classmethod
    def point_mass(cls, alphabet: Alphabet, label: str, exact: bool = False) -> "Dist":
        i = alphabet.index(label)
        return cls(alphabet=alphabet, weights=tuple(int(j == i) for j in range(alphabet.size)), exact=exact)

    @classmethod
    def from_json(cls, obj: Dict[str, Any], exact: bool = False) -> "Dist":
        return cls(alphabet=Alphabet(labels=tuple(obj["alphabet"])), weights=obj["weights"], exact=exact)

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet.labels),
            "weights": [str(w) if self.exact else w for w in self.weights],
        }


class JointDist(Base):
    """Probability matrix on R x S; rows are R, columns are S."""
    rows: Alphabet
    cols: Alphabet
    weights: Tuple[Tuple[Any, ...], ...]
    exact: bool = False

    @model_validator(mode="before")
    @classmethod
    def coerce_weights(cls, data: Any):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if "matrix" in data and "weights" not in data:
            data["weights"] = data.pop("matrix")
        exact = bool(data.get("exact", False))
        matrix = tuple(
            _coerce_weights(row, exact, f"row {i}") for i, row in enumerate(data.get("weights", ()))
        )
        zero = Fraction(0) if exact else 0.0
        row_sums = [sum(row, zero) for row in matrix]
        rows = data.get("rows")
        if isinstance(rows, Alphabet):
            names = rows.labels
        elif isinstance(rows, dict):
            names = tuple(rows.get("labels", ()))
        else:
            names = tuple(rows or ())
        detail = ", ".join(
            f"{names[i] if i < len(names) else i}={s}" for i, s in enumerate(row_sums)
        )
        divisor = _normalize(sum(row_sums, zero), exact, f"matrix entries (row sums: {detail})")
        if divisor != 1:
            matrix = tuple(tuple(w / divisor for w in row) for row in matrix)
        data["weights"] = matrix
        return data

    @model_validator(mode="after")
    def check_shape(self):
        if len(self.weights) != self.rows.size:
            raise ValueError(f"{len(self.weights)} matrix rows for {self.rows.size} row symbols")
        for label, row in zip(self.rows.labels, self.weights):
            if len(row) != self.cols.size:
                raise ValueError(
                    f"row {label!r} has {len(row)} entries for {self.cols.size} column symbols"
                )
        return self

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([[float(w) for w in row] for row in self.weights], dtype=np.float64)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows.size, self.cols.size

    @property
    def M(self) -> int:
        return self.rows.size * self.cols.size

    def entry(self, r: int, s: int) -> Weight:
        return self.weights[r][s]

    def column_mass(self, s: int) -> Weight:
        zero = Fraction(0) if self.exact else 0.0
        return sum((row[s] for row in self.weights), zero)

    def to_exact(self) -> "JointDist":
        if self.exact:
            return self
        weights = [[to_fraction(w) for w in row] for row in self.weights]
        total = sum((w for row in weights for w in row), Fraction(0))
        return JointDist(rows=self.rows, cols=self.cols, weights=[[w / total for w in row] for row in weights], exact=True)

    def to_double(self) -> "JointDist":
        if not self.exact:
            return self
        return JointDist(
            rows=self.rows, cols=self.cols, weights=[[float(w) for w in row] for row in self.weights]
        )

    @classmethod
    def from_array(cls, rows: Alphabet, cols: Alphabet, matrix: Any, exact: bool = False) -> "JointDist":
        return cls(rows=rows, cols=cols, weights=tuple(tuple(row) for row in matrix), exact=exact)

    @classmethod
    def product(cls, rho: Dist, sigma: Dist) -> "JointDist":
        exact = rho.exact and sigma.exact
        return cls(
            rows=rho.alphabet,
            cols=sigma.alphabet,
            weights=tuple(tuple(a * b for b in sigma.weights) for a in rho.weights),
            exact=exact,
        )

    @classmethod
    def from_json(cls, obj: Dict[str, Any], exact: bool = False) -> "JointDist":
        return cls(
            rows=Alphabet(labels=tuple(obj["rows"])),
            cols=Alphabet(labels=tuple(obj["cols"])),
            weights=obj["matrix"],
            exact=exact,
        )

    def to_json(self) -> dict:
        return {
            "rows": list(self.rows.labels),
            "cols": list(self.cols.labels),
            "matrix": [[str(w) if self.exact else w for w in row] for row in self.weights],
        }


class Kernel(Base):
    """Stochastic kernel from `source` symbols to distributions on `target`."""
    source: Alphabet
    target: Alphabet
    rows: Tuple[Dist, ...]

    @model_validator(mode="after")
    def check_rows(self):
        if len(self.rows) != self.source.size:
            raise ValueError(f"{len(self.rows)} kernel rows for {self.source.size} source symbols")
        for label, row in zip(self.source.labels, self.rows):
            if row.alphabet != self.target:
                raise ValueError(f"kernel row {label!r} lives on the wrong alphabet")
        return self

    @cached_property
    def matrix(self) -> np.ndarray:
        """Float matrix indexed [source, target]."""
        return np.vstack([row.array for row in self.rows])

    @property
    def exact(self) -> bool:
        return all(row.exact for row in self.rows)

    def row(self, label: str) -> Dist:
        return self.rows[self.source.index(label)]
