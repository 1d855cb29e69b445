import math
from typing import Annotated, Any, Callable, List, Literal, NamedTuple, Optional, Tuple, Union
import numpy as np
from pydantic import Field, model_validator
from . import Base
from .measures import Alphabet, Dist, JointDist


class RateResult(Base):
    """Value of a relative-entropy infimum with its minimiser and IPF diagnostics."""
    value: float
    minimizer: Optional[JointDist] = None
    margin_residual: float = 0.0
    iterations: int = 0
    converged: bool = True
    tol: float = 0.0
    trace: Optional[Tuple[Tuple[float, float], ...]] = None

    @model_validator(mode="after")
    def check_consistency(self):
        if math.isfinite(self.value):
            if self.minimizer is None:
                raise ValueError("A finite rate needs its minimising coupling")
            if self.margin_residual > self.tol:
                raise ValueError(f"margin residual {self.margin_residual} above tolerance {self.tol}")
        elif self.minimizer is not None:
            raise ValueError("An infinite rate has no minimiser")
        return self

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "minimizer": self.minimizer.to_json() if self.minimizer is not None else None,
            "margin_residual": self.margin_residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


class SegmentInterval(NamedTuple):
    """Interval of p = phi(first label) on the #R = 2 simplex segment [0, 1]."""
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    def nearest(self, p: float) -> float:
        return min(max(p, self.lo), self.hi)


def _clip_unit(lo: float, hi: float, lo_closed: bool, hi_closed: bool) -> Optional[SegmentInterval]:
    if lo < 0.0:
        lo, lo_closed = 0.0, True
    if hi > 1.0:
        hi, hi_closed = 1.0, True
    interval = SegmentInterval(lo, hi, lo_closed, hi_closed)
    return None if interval.empty else interval


def _complement_within_unit(removed: List[SegmentInterval]) -> List[SegmentInterval]:
    merged: List[SegmentInterval] = []
    for iv in sorted(removed, key=lambda x: (x.lo, not x.lo_closed)):
        if merged:
            last = merged[-1]
            touching = iv.lo < last.hi or (iv.lo == last.hi and (iv.lo_closed or last.hi_closed))
            if touching:
                if iv.hi > last.hi or (iv.hi == last.hi and iv.hi_closed):
                    merged[-1] = SegmentInterval(last.lo, iv.hi, last.lo_closed, iv.hi_closed)
                continue
        merged.append(iv)

    kept: List[SegmentInterval] = []
    cursor, cursor_closed = 0.0, True
    for iv in merged:
        gap = SegmentInterval(cursor, iv.lo, cursor_closed, not iv.lo_closed)
        if not gap.empty:
            kept.append(gap)
        cursor, cursor_closed = iv.hi, not iv.hi_closed
    tail = SegmentInterval(cursor, 1.0, cursor_closed, True)
    if cursor <= 1.0 and not tail.empty:
        kept.append(tail)
    return kept


def _tv(a: Dist, b: Dist) -> float:
    return 0.5 * float(np.abs(a.array - b.array).sum())


class TVBall(Base):
    """B(center, radius) = {phi : fd(phi, center) < radius}, or <= radius when closed."""
    kind: Literal["tv_ball"] = "tv_ball"
    center: Dist
    radius: float = Field(..., ge=0.0)
    closed: bool = False

    @model_validator(mode="after")
    def check_radius(self):
        if not self.closed and self.radius <= 0.0:
            raise ValueError("An open ball needs a positive radius")
        return self

    def contains(self, phi: Dist) -> bool:
        d = _tv(phi, self.center)
        return d <= self.radius if self.closed else d < self.radius

    def closure(self) -> "TVBall":
        return self.model_copy(update={"closed": True})

    def interior(self) -> "TVBall":
        if self.radius == 0.0:
            return self
        return self.model_copy(update={"closed": False})

    def segment_intervals(self) -> Optional[List[SegmentInterval]]:
        if self.center.size != 2:
            return None
        c = float(self.center.weights[0])
        iv = _clip_unit(c - self.radius, c + self.radius, self.closed, self.closed)
        return [iv] if iv is not None else []

    def anchors(self) -> List[Dist]:
        return [self.center]

    def __call__(self, phi: Dist) -> bool:
        return self.contains(phi)


class BallComplement(Base):
    """W = P(R) minus the union of balls B(x_i, r_i); `closed` keeps the spheres fd = r_i."""
    kind: Literal["complement_of_union_of_tv_balls"] = "complement_of_union_of_tv_balls"
    balls: Tuple[TVBall, ...] = ()
    closed: bool = True

    def contains(self, phi: Dist) -> bool:
        for ball in self.balls:
            d = _tv(phi, ball.center)
            if (d < ball.radius) if self.closed else (d <= ball.radius):
                return False
        return True

    def closure(self) -> "BallComplement":
        return self.model_copy(update={"closed": True})

    def interior(self) -> "BallComplement":
        return self.model_copy(update={"closed": False})

    def segment_intervals(self) -> Optional[List[SegmentInterval]]:
        if any(b.center.size != 2 for b in self.balls):
            return None
        removed = []
        for ball in self.balls:
            c = float(ball.center.weights[0])
            # removing open balls keeps the spheres, removing closed ones drops them
            removed.append(SegmentInterval(c - ball.radius, c + ball.radius, not self.closed, not self.closed))
        return _complement_within_unit([iv for iv in removed if not iv.empty])

    def anchors(self) -> List[Dist]:
        return []

    def __call__(self, phi: Dist) -> bool:
        return self.contains(phi)


_FLIP = {"ge": "le", "gt": "lt", "le": "ge", "lt": "gt"}


class HalfSpace(Base):
    """{phi : phi(coordinate) op threshold} for op in ge, gt, le, lt."""
    kind: Literal["halfspace"] = "halfspace"
    coordinate: str
    threshold: float
    op: Literal["ge", "gt", "le", "lt"] = "ge"

    def contains(self, phi: Dist) -> bool:
        v = float(phi.prob(self.coordinate))
        t = self.threshold
        return {"ge": v >= t, "gt": v > t, "le": v <= t, "lt": v < t}[self.op]

    def closure(self) -> "HalfSpace":
        return self.model_copy(update={"op": {"gt": "ge", "lt": "le"}.get(self.op, self.op)})

    def interior(self) -> "HalfSpace":
        return self.model_copy(update={"op": {"ge": "gt", "le": "lt"}.get(self.op, self.op)})

    def segment_intervals(self, alphabet: Optional[Alphabet] = None) -> Optional[List[SegmentInterval]]:
        if alphabet is None or alphabet.size != 2:
            return None
        op, t = self.op, self.threshold
        if alphabet.index(self.coordinate) == 1:
            op, t = _FLIP[op], 1.0 - t
        if op in ("ge", "gt"):
            iv = _clip_unit(t, 1.0, op == "ge", True)
        else:
            iv = _clip_unit(0.0, t, True, op == "le")
        return [iv] if iv is not None else []

    def anchors(self) -> List[Dist]:
        return []

    def __call__(self, phi: Dist) -> bool:
        return self.contains(phi)


class PredicateSet(Base):
    """Arbitrary subset of P(R) given by a predicate; no interval structure is known."""
    kind: Literal["predicate"] = "predicate"
    predicate: Callable[[Dist], bool] = Field(exclude=True)
    label: str = "predicate"

    def contains(self, phi: Dist) -> bool:
        return bool(self.predicate(phi))

    def closure(self) -> "PredicateSet":
        return self

    def interior(self) -> "PredicateSet":
        return self

    def segment_intervals(self) -> Optional[List[SegmentInterval]]:
        return None

    def anchors(self) -> List[Dist]:
        return []

    def __call__(self, phi: Dist) -> bool:
        return self.contains(phi)


SetDescriptor = Annotated[
    Union[TVBall, BallComplement, HalfSpace, PredicateSet],
    Field(discriminator="kind"),
]


def whole_simplex() -> BallComplement:
    return BallComplement(balls=())


def empty_set(alphabet: Alphabet) -> BallComplement:
    # fd never exceeds 1, so removing a radius-2 ball leaves nothing
    return BallComplement(balls=(TVBall(center=Dist.uniform(alphabet), radius=2.0),))


def segment_intervals_for(descriptor: Any, alphabet: Alphabet) -> Optional[List[SegmentInterval]]:
    if alphabet.size != 2:
        return None
    if isinstance(descriptor, HalfSpace):
        return descriptor.segment_intervals(alphabet)
    if isinstance(descriptor, (TVBall, BallComplement, PredicateSet)):
        return descriptor.segment_intervals()
    return None
