"""Exact game-theoretic engine: upper probabilities by backward induction.

The upper game-theoretic probability of an event is the cheapest initial
capital of a non-negative farthingale forced to reach 1 on every sequence in
the event.  For a box union at horizon N that infimum is computed exactly by
backward induction on the partition-refined game tree:

* leaves (level N) carry the membership indicator of their cell-path;
* an interior node carries sup over forecasts p of
  (1-p) * value(child p,0) + p * value(child p,1).

Within one partition cell the two child values are constant, so the objective
is linear in p and the supremum over the cell is reached at (or approached
arbitrarily closely near) a cell endpoint.  The per-cell maximization over
endpoints therefore turns the analytic supremum into finite exact rational
arithmetic.  Because all box constraints are closed, the node value is upper
semicontinuous in p and the global supremum is attained at a closed endpoint
of some cell, which is what ``optimal_forecast_at`` returns.

The value at a node depends on the prefix only through the set of boxes still
consistent with it, so the recursion is memoized on (depth, live-box-set);
subtrees containing no live box short-circuit to zero.  All operations are
pure and the exact arithmetic makes results independent of evaluation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

from .core import ONE, ZERO, PrequentialPrefix, as_fraction, check_forecast, check_outcome
from .events import (
    ArityError,
    Cell,
    EventUnion,
    ForecastPartition,
    event_partitions,
    step_accepts_cell,
)

CellPath = tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Rational values on every node of a partition-refined prequential tree.

    A node is addressed by its cell-path: per step, the index of the chosen
    forecast cell and the outcome bit.  Canonical string encoding of a path
    joins "cell-index:bit" items with commas; the root is the empty string.
    """

    horizon: int
    partitions: tuple[ForecastPartition, ...]
    values: dict

    def value(self, path: CellPath) -> Fraction:
        return self.values[path]

    @property
    def root_value(self) -> Fraction:
        return self.values[()]

    def node_paths(self):
        """All cell-paths, shortest first."""
        level = [()]
        yield ()
        for partition in self.partitions:
            level = [
                path + ((ci, bit),)
                for path in level
                for ci in range(len(partition.cells))
                for bit in (0, 1)
            ]
            yield from level

    def is_complete(self) -> bool:
        return all(path in self.values for path in self.node_paths())

    def to_json(self) -> str:
        doc = {
            "horizon": self.horizon,
            "partitions": [
                [
                    {
                        "lo": str(c.lo),
                        "hi": str(c.hi),
                        "lo_open": c.lo_open,
                        "hi_open": c.hi_open,
                    }
                    for c in partition.cells
                ]
                for partition in self.partitions
            ],
            "values": {encode_cell_path(p): str(v) for p, v in self.values.items()},
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ValueFunction":
        doc = json.loads(text)
        partitions = []
        for cells_doc in doc["partitions"]:
            cells = tuple(
                Cell(
                    as_fraction(c["lo"]),
                    as_fraction(c["hi"]),
                    bool(c["lo_open"]),
                    bool(c["hi_open"]),
                )
                for c in cells_doc
            )
            breakpoints = tuple(sorted({c.lo for c in cells} | {c.hi for c in cells}))
            partitions.append(ForecastPartition(breakpoints, cells))
        values = {
            decode_cell_path(key): as_fraction(v) for key, v in doc["values"].items()
        }
        return cls(int(doc["horizon"]), tuple(partitions), values)


def encode_cell_path(path: CellPath) -> str:
    return ",".join(f"{ci}:{bit}" for ci, bit in path)


def decode_cell_path(text: str) -> CellPath:
    if not text:
        return ()
    items = []
    for token in text.split(","):
        ci, bit = token.split(":")
        items.append((int(ci), int(bit)))
    return tuple(items)


class _GameEngine:
    """Memoized backward induction for one event."""

    def __init__(self, event: EventUnion):
        self.event = event
        self.partitions = event_partitions(event)
        self._memo: dict = {}

    def all_live(self) -> frozenset:
        return frozenset(range(len(self.event.boxes)))

    def survivors_in_cell(self, live: frozenset, depth: int, cell: Cell, bit: int) -> frozenset:
        boxes = self.event.boxes
        return frozenset(
            i for i in live if step_accepts_cell(boxes[i], depth, cell, bit)
        )

    def survivors_at(self, live: frozenset, depth: int, p: Fraction, y: int) -> frozenset:
        boxes = self.event.boxes
        return frozenset(i for i in live if boxes[i].steps[depth].accepts(p, y))

    def live_for_prefix(self, prefix: PrequentialPrefix) -> frozenset:
        live = self.all_live()
        for depth, (p, y) in enumerate(prefix):
            live = self.survivors_at(live, depth, check_forecast(p), check_outcome(y))
        return live

    def value(self, depth: int, live: frozenset) -> Fraction:
        if not live:
            return ZERO
        if depth == self.event.horizon:
            return ONE
        key = (depth, live)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        best = ZERO
        for cell in self.partitions[depth].cells:
            v0 = self.value(depth + 1, self.survivors_in_cell(live, depth, cell, 0))
            v1 = self.value(depth + 1, self.survivors_in_cell(live, depth, cell, 1))
            for p in cell.endpoints():
                candidate = (ONE - p) * v0 + p * v1
                if candidate > best:
                    best = candidate
        self._memo[key] = best
        return best


@lru_cache(maxsize=256)
def _engine(event: EventUnion) -> _GameEngine:
    return _GameEngine(event)


def upper_game_probability(event: EventUnion) -> Fraction:
    """Root value of the backward induction: the exact upper game-theoretic probability."""
    eng = _engine(event)
    return eng.value(0, eng.all_live())


def conditional_upper_probability(event: EventUnion, x: PrequentialPrefix) -> Fraction:
    """Backward-induction value at the node reached by a prefix.

    At full length this is the membership indicator; the resulting function of
    the node is a superfarthingale.
    """
    if len(x) > event.horizon:
        raise ArityError(f"prefix length {len(x)} exceeds horizon {event.horizon}")
    eng = _engine(event)
    return eng.value(len(x), eng.live_for_prefix(x))


def witness_superfarthingale(event: EventUnion) -> ValueFunction:
    """The full cell-indexed table of conditional upper probabilities.

    Its root value equals ``upper_game_probability(event)``, its level-N values
    are the membership indicator, and it satisfies the superfarthingale
    inequality at every node and cell endpoint, which makes it the witness
    betting strategy achieving the upper probability.
    """
    eng = _engine(event)
    values: dict = {}

    def walk(path: CellPath, depth: int, live: frozenset):
        values[path] = eng.value(depth, live)
        if depth == event.horizon:
            return
        for ci, cell in enumerate(eng.partitions[depth].cells):
            for bit in (0, 1):
                walk(
                    path + ((ci, bit),),
                    depth + 1,
                    eng.survivors_in_cell(live, depth, cell, bit),
                )

    walk((), 0, eng.all_live())
    return ValueFunction(event.horizon, eng.partitions, values)


def optimal_forecast_at(event: EventUnion, x: PrequentialPrefix) -> Fraction:
    """Smallest forecast attaining the per-node supremum (ties broken toward 0).

    Closedness of the box constraints guarantees the supremum is attained at a
    closed endpoint of some partition cell, so the minimum is over a finite
    set of rationals.
    """
    if len(x) >= event.horizon:
        raise ArityError("optimal forecast is defined at interior nodes only")
    eng = _engine(event)
    depth = len(x)
    live = eng.live_for_prefix(x)
    best = ZERO
    attained: list[tuple[Fraction, Fraction]] = []
    for cell in eng.partitions[depth].cells:
        v0 = eng.value(depth + 1, eng.survivors_in_cell(live, depth, cell, 0))
        v1 = eng.value(depth + 1, eng.survivors_in_cell(live, depth, cell, 1))
        for p in cell.endpoints():
            candidate = (ONE - p) * v0 + p * v1
            if candidate > best:
                best = candidate
        for p in cell.closed_endpoints():
            attained.append((p, (ONE - p) * v0 + p * v1))
    winners = [p for p, v in attained if v == best]
    if not winners:  # impossible for closed boxes; guards engine invariants
        raise RuntimeError("supremum not attained at any closed endpoint")
    return min(winners)


@dataclass(frozen=True)
class LevyStrategy:
    """Regime-switching betting strategy driving conditional values toward 1.

    Capital starts at 1 and is frozen while the conditional upper probability
    of the target event stays at or above the threshold.  When it dips below,
    the strategy rides the witness superfarthingale rescaled to current
    capital until capital grows by the factor 1/threshold, records that
    milestone, freezes again, and waits for the next dip.  On event members
    whose prefixes the witness values positively, each completed ride
    multiplies capital by more than 1/threshold; riding a zero-valued witness
    is replaced by freezing, which keeps the process a non-negative
    farthingale vacuously (e.g. on the empty event capital stays at 1).
    """

    event: EventUnion
    threshold: Fraction
    depth: int
    live: frozenset
    capital: Fraction
    regime: str  # "waiting" or "riding"
    milestone: Fraction
    ride_base: Fraction | None
    conditional: Fraction
    milestones: tuple[Fraction, ...] = ()

    @classmethod
    def start(cls, event: EventUnion, threshold) -> "LevyStrategy":
        threshold = as_fraction(threshold)
        if not ZERO < threshold < ONE:
            raise ValueError("threshold must lie strictly between 0 and 1")
        eng = _engine(event)
        live = eng.all_live()
        w0 = eng.value(0, live)
        state = cls(
            event=event,
            threshold=threshold,
            depth=0,
            live=live,
            capital=ONE,
            regime="waiting",
            milestone=ONE,
            ride_base=None,
            conditional=w0,
        )
        return _maybe_trigger(state)


def _maybe_trigger(state: LevyStrategy) -> LevyStrategy:
    if (
        state.regime == "waiting"
        and ZERO < state.conditional < state.threshold
        and state.capital > ZERO
    ):
        return replace(
            state, regime="riding", ride_base=state.conditional, milestone=state.capital
        )
    return state


def levy_strategy_step(state: LevyStrategy, step) -> LevyStrategy:
    """Advance the strategy by one (forecast, outcome) step.

    Steps past the horizon leave the state terminal with capital frozen.
    """
    if state.depth >= state.event.horizon:
        return state
    p, y = step
    p = check_forecast(p)
    y = check_outcome(y)
    eng = _engine(state.event)
    live = eng.survivors_at(state.live, state.depth, p, y)
    depth = state.depth + 1
    w = eng.value(depth, live)
    if state.regime == "riding":
        capital = state.milestone * w / state.ride_base
        if capital >= state.milestone / state.threshold:
            state = replace(
                state,
                depth=depth,
                live=live,
                conditional=w,
                capital=capital,
                regime="waiting",
                milestone=capital,
                ride_base=None,
                milestones=state.milestones + (capital,),
            )
        else:
            state = replace(state, depth=depth, live=live, conditional=w, capital=capital)
    else:
        state = replace(state, depth=depth, live=live, conditional=w)
    return _maybe_trigger(state)


class LevyRunner:
    """Stream-driven adapter: consumes (forecast, outcome) pairs, returns capital."""

    def __init__(self, event: EventUnion, threshold):
        self._state = LevyStrategy.start(event, threshold)
        self.initial_capital = self._state.capital

    @property
    def state(self) -> LevyStrategy:
        return self._state

    def step(self, p, y) -> Fraction:
        self._state = levy_strategy_step(self._state, (p, y))
        return self._state.capital
