from functools import cached_property
from typing import Any, Callable, Optional, Tuple
import numpy as np
from pydantic import model_validator
from . import Base
from .empirical import EmpiricalMeasure
from .measures import Alphabet, Dist


class ContingencyTable(Base):
    """Nonnegative integer R x S table with its prescribed margins."""
    counts: Tuple[Tuple[int, ...], ...]
    row_margins: Tuple[int, ...]
    col_margins: Tuple[int, ...]

    @model_validator(mode="after")
    def check_margins(self):
        table = np.asarray(self.counts, dtype=np.int64).reshape(len(self.row_margins), len(self.col_margins))
        if (table < 0).any():
            raise ValueError("Table entries must be nonnegative")
        if tuple(int(x) for x in table.sum(axis=1)) != self.row_margins:
            raise ValueError("Row sums differ from row margins")
        if tuple(int(x) for x in table.sum(axis=0)) != self.col_margins:
            raise ValueError("Column sums differ from column margins")
        return self

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


class KernelLaw(Base):
    """
   The law phi -> eta_n(zeta, {phi}) on P_emp^n(R).

   `counts[i]` is n*phi for the i-th support point, in enumeration order;
   `log_probs[i]` its log-probability. Exact runs also carry `probs` as Fractions.
   """
    rows: Alphabet
    n: int
    zeta: EmpiricalMeasure
    counts: np.ndarray
    log_probs: np.ndarray
    probs: Optional[Tuple[Any, ...]] = None

    @property
    def exact(self) -> bool:
        return self.probs is not None

    def mask(self, event: Callable[[Dist], bool]) -> np.ndarray:
        return np.fromiter(
            (bool(event(Dist(alphabet=self.rows, weights=row / self.n))) for row in self.counts),
            dtype=bool,
            count=len(self.counts),
        )


class ColumnSlice(Base):
    """
   Every joint empirical coupling at level n whose S-marginal is zeta.

   Arrays are aligned on the first axis: `tables` is (K, #R, #S) counts,
   `log_probs` the log-probability of each table under the n-fold product of
   lambda, `entropies` H(table/n | lambda), and `r_counts` the row sums.
   """
    rows: Alphabet
    cols: Alphabet
    n: int
    zeta: EmpiricalMeasure
    tables: np.ndarray
    log_probs: np.ndarray
    entropies: np.ndarray
    r_counts: np.ndarray

    @cached_property
    def r_groups(self) -> Tuple[np.ndarray, np.ndarray]:
        """Distinct R-marginal count vectors and the index of each table's group."""
        unique, inverse = np.unique(self.r_counts, axis=0, return_inverse=True)
        return unique, inverse.reshape(-1)

    def r_mask(self, event: Callable[[Dist], bool]) -> np.ndarray:
        """Tables whose R-marginal lies in `event`; the event is evaluated once per distinct marginal."""
        unique, inverse = self.r_groups
        hit = np.fromiter(
            (bool(event(Dist(alphabet=self.rows, weights=row / self.n))) for row in unique),
            dtype=bool,
            count=len(unique),
        )
        return hit[inverse]

    def __len__(self) -> int:
        return len(self.tables)
