"""Computable compact prequential events: finite unions of closed boxes.

A box at horizon N constrains every forecast coordinate to a closed rational
interval and every outcome coordinate to a bit or a wildcard.  Finite unions
of such boxes are the events all exact engines operate on; closedness of the
intervals is what makes the per-step supremum over forecasts attainable, so
only closed constraints are admitted.

The forecast axis of each step is cut into a partition of maximal intervals on
which every box's interval test is constant.  Those cells are the columns of
the partition-refined game tree used by the backward-induction engines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    ONE,
    ZERO,
    PrequentialPrefix,
    as_fraction,
    check_forecast,
    check_outcome,
)

WILDCARD = None


class ArityError(ValueError):
    """Lengths or horizons of two prequential objects do not match."""


@dataclass(frozen=True)
class StepConstraint:
    """One step of a box: closed forecast interval [p_lo, p_hi], outcome bit or wildcard."""

    p_lo: Fraction
    p_hi: Fraction
    y: int | None = WILDCARD

    def __post_init__(self):
        check_forecast(self.p_lo)
        check_forecast(self.p_hi)
        if self.p_lo > self.p_hi:
            raise ValueError(f"empty interval [{self.p_lo}, {self.p_hi}]")
        if self.y is not WILDCARD:
            check_outcome(self.y)

    def accepts(self, p: Fraction, y: int) -> bool:
        return self.p_lo <= p <= self.p_hi and (self.y is WILDCARD or self.y == y)


@dataclass(frozen=True)
class Box:
    steps: tuple[StepConstraint, ...]

    @property
    def horizon(self) -> int:
        return len(self.steps)

    @classmethod
    def from_point(cls, prefix: PrequentialPrefix) -> "Box":
        """Degenerate box containing exactly one prequential prefix."""
        return cls(
            tuple(
                StepConstraint(check_forecast(p), check_forecast(p), check_outcome(y))
                for p, y in prefix
            )
        )

    def accepts(self, prefix: PrequentialPrefix) -> bool:
        return all(
            step.accepts(as_fraction(p), check_outcome(y))
            for step, (p, y) in zip(self.steps, prefix)
        )


@dataclass(frozen=True)
class EventUnion:
    horizon: int
    boxes: tuple[Box, ...]

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        for box in self.boxes:
            if box.horizon != self.horizon:
                raise ArityError(
                    f"box horizon {box.horizon} != event horizon {self.horizon}"
                )

    @classmethod
    def from_points(cls, horizon: int, points) -> "EventUnion":
        return cls(horizon, tuple(Box.from_point(pt) for pt in points))

    @classmethod
    def empty(cls, horizon: int) -> "EventUnion":
        return cls(horizon, ())

    @classmethod
    def full(cls, horizon: int) -> "EventUnion":
        one_box = Box(tuple(StepConstraint(ZERO, ONE, WILDCARD) for _ in range(horizon)))
        return cls(horizon, (one_box,))


def contains(event: EventUnion, prefix: PrequentialPrefix) -> bool:
    """Membership of a full-length prefix in the box union."""
    if len(prefix) != event.horizon:
        raise ArityError(
            f"prefix length {len(prefix)} != event horizon {event.horizon}"
        )
    return any(box.accepts(prefix) for box in event.boxes)


def union(a: EventUnion, b: EventUnion) -> EventUnion:
    if a.horizon != b.horizon:
        raise ArityError(f"horizon mismatch: {a.horizon} != {b.horizon}")
    return EventUnion(a.horizon, a.boxes + b.boxes)


def intersection(a: EventUnion, b: EventUnion) -> EventUnion:
    """Pairwise box intersection; pairs with empty interval or clashing bits drop out."""
    if a.horizon != b.horizon:
        raise ArityError(f"horizon mismatch: {a.horizon} != {b.horizon}")
    boxes = []
    for box_a in a.boxes:
        for box_b in b.boxes:
            merged = _intersect_boxes(box_a, box_b)
            if merged is not None and merged not in boxes:
                boxes.append(merged)
    return EventUnion(a.horizon, tuple(boxes))


def _intersect_boxes(a: Box, b: Box) -> Box | None:
    steps = []
    for sa, sb in zip(a.steps, b.steps):
        lo = max(sa.p_lo, sb.p_lo)
        hi = min(sa.p_hi, sb.p_hi)
        if lo > hi:
            return None
        if sa.y is WILDCARD:
            y = sb.y
        elif sb.y is WILDCARD or sb.y == sa.y:
            y = sa.y
        else:
            return None
        steps.append(StepConstraint(lo, hi, y))
    return Box(tuple(steps))


@dataclass(frozen=True)
class Cell:
    """A maximal interval of [0, 1] on which every relevant interval test is constant.

    Ends may be open after merging (e.g. the cell (1/2, 1] next to the point
    cell [1/2, 1/2]).  ``endpoints`` are the evaluation points for the
    piecewise-linear maximization: values at open ends are one-sided limits.
    """

    lo: Fraction
    hi: Fraction
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open)):
            raise ValueError("malformed cell")

    def __str__(self):
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo}, {self.hi}{right}"

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, p: Fraction) -> bool:
        if p < self.lo or p > self.hi:
            return False
        if p == self.lo and self.lo_open:
            return False
        if p == self.hi and self.hi_open:
            return False
        return True

    def endpoints(self) -> tuple[Fraction, ...]:
        return (self.lo,) if self.is_point else (self.lo, self.hi)

    def closed_endpoints(self) -> tuple[Fraction, ...]:
        pts = []
        if not self.lo_open:
            pts.append(self.lo)
        if not self.hi_open and self.hi != self.lo:
            pts.append(self.hi)
        return tuple(pts)

    def representative(self) -> Fraction:
        """Any point of the cell; used to read off the constant interval tests."""
        if not self.lo_open:
            return self.lo
        if not self.hi_open:
            return self.hi
        return (self.lo + self.hi) / 2


@dataclass(frozen=True)
class ForecastPartition:
    """Ordered, disjoint cells covering [0, 1] exactly."""

    breakpoints: tuple[Fraction, ...]
    cells: tuple[Cell, ...]

    def cell_index_of(self, p: Fraction) -> int:
        p = check_forecast(p)
        for i, cell in enumerate(self.cells):
            if cell.contains(p):
                return i
        raise ValueError(f"no cell contains {p}")  # unreachable for valid partitions


def forecast_partition(event: EventUnion, step: int) -> ForecastPartition:
    """Partition of the forecast axis at a step (1-based) of the event.

    Breakpoints are the box interval endpoints at that step plus 0 and 1;
    cells are the maximal intervals on which every box's interval test is
    constant (adjacent raw pieces with equal signatures are merged, so an
    unconstrained axis collapses to the single cell [0, 1]).
    """
    if not 1 <= step <= event.horizon:
        raise ArityError(f"step {step} outside 1..{event.horizon}")
    intervals = [(box.steps[step - 1].p_lo, box.steps[step - 1].p_hi) for box in event.boxes]
    points = sorted({ZERO, ONE, *(p for iv in intervals for p in iv)})
    pieces: list[Cell] = []
    for i, b in enumerate(points):
        pieces.append(Cell(b, b))
        if i + 1 < len(points):
            pieces.append(Cell(b, points[i + 1], lo_open=True, hi_open=True))

    def signature(cell: Cell):
        rep = cell.representative()
        return tuple(lo <= rep <= hi for lo, hi in intervals)

    merged: list[Cell] = []
    for piece in pieces:
        if merged and signature(merged[-1]) == signature(piece):
            prev = merged.pop()
            piece = Cell(prev.lo, piece.hi, prev.lo_open, piece.hi_open)
        merged.append(piece)
    return ForecastPartition(tuple(points), tuple(merged))


def event_partitions(event: EventUnion) -> tuple[ForecastPartition, ...]:
    return tuple(forecast_partition(event, i) for i in range(1, event.horizon + 1))


def step_accepts_cell(box: Box, step_index: int, cell: Cell, bit: int) -> bool:
    """Whether a box's step constraint holds for every forecast in the cell plus the bit."""
    step = box.steps[step_index]
    rep = cell.representative()
    return step.p_lo <= rep <= step.p_hi and (step.y is WILDCARD or step.y == bit)


def rasterize_event(predicate, horizon: int, breakpoints) -> EventUnion:
    """Bound a predicate-defined event by a box union; a bound, not an exact value.

    The caller supplies a membership predicate on full-length prefixes plus the
    forecast breakpoints per step.  Each combination of partition cell and
    outcome bit is tested at a representative prefix; accepted combinations
    contribute the closed box spanning the cell closure.  The result contains
    the predicate event (hence upper-bounds its probabilities) exactly when the
    predicate is constant on every cell; otherwise it is only a rasterization.
    """
    pts = sorted({ZERO, ONE, *(check_forecast(b) for b in breakpoints)})
    cells: list[Cell] = []
    for i, b in enumerate(pts):
        cells.append(Cell(b, b))
        if i + 1 < len(pts):
            cells.append(Cell(b, pts[i + 1], lo_open=True, hi_open=True))

    boxes = []

    def walk(prefix, constraints):
        if len(prefix) == horizon:
            if predicate(tuple(prefix)):
                boxes.append(Box(tuple(constraints)))
            return
        for cell in cells:
            for bit in (0, 1):
                walk(
                    prefix + [(cell.representative(), bit)],
                    constraints + [StepConstraint(cell.lo, cell.hi, bit)],
                )

    walk([], [])
    return EventUnion(horizon, tuple(boxes))


def counterexample_pair() -> tuple[EventUnion, EventUnion]:
    """The built-in two-point events at horizon 2 violating strong subadditivity."""
    half = Fraction(1, 2)
    a = EventUnion.from_points(
        2, [((ZERO, 0), (half, 0)), ((half, 0), (ZERO, 0))]
    )
    b = EventUnion.from_points(
        2, [((ZERO, 0), (half, 0)), ((half, 1), (ZERO, 0))]
    )
    return a, b


def event_to_json(event: EventUnion) -> str:
    doc = {
        "horizon": event.horizon,
        "boxes": [
            {
                "steps": [
                    {
                        "p": [str(s.p_lo), str(s.p_hi)],
                        "y": "*" if s.y is WILDCARD else s.y,
                    }
                    for s in box.steps
                ]
            }
            for box in event.boxes
        ],
    }
    return json.dumps(doc, sort_keys=True)


def event_from_json(text: str) -> EventUnion:
    doc = json.loads(text)
    horizon = int(doc["horizon"])
    boxes = []
    for box_doc in doc.get("boxes", []):
        steps = []
        for step_doc in box_doc["steps"]:
            lo, hi = (as_fraction(v) for v in step_doc["p"])
            y_raw = step_doc.get("y", "*")
            y = WILDCARD if y_raw == "*" else check_outcome(int(y_raw))
            steps.append(StepConstraint(check_forecast(lo), check_forecast(hi), y))
        boxes.append(Box(tuple(steps)))
    return EventUnion(horizon, tuple(boxes))
