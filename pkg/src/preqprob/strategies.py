"""Farthingale machinery for testing probability-forecast streams.

A farthingale is a capital process on the prequential tree whose value at each
node equals the forecast-weighted average of its two successors; with ">=" the
gambler may discard capital (superfarthingale).  ``check_farthingale``
verifies either property exactly on a cell-indexed value table: within one
partition cell the successor values are constant, so the defining identity is
linear in the forecast and holds on the whole cell iff it holds at both cell
endpoints.

The calibration strategy realizes the finite-horizon bias test: with
S = sum(y_i - p_i) and A = sum(p_i (1 - p_i)) the process

    V_n = (S_n^2 - A_n + N/4) / (C^2 N + N/4)

is a non-negative farthingale (the conditional increment of S^2 is exactly
p(1 - p), cancelling the increment of A, for every forecast p), and whenever
|S_N| >= C sqrt(N) the final capital exceeds 4 C^2 times the initial one, so a
rejection is backed by the corresponding betting gain.  Capital never
overflows: everything is exact rational arithmetic.

``ville_check`` verifies the capital/probability inequality empirically: a
non-negative martingale starting at v reaches C with probability at most v/C
under the measure of the forecasting system being tested.  Strategies are
certified before sampling by replaying them over the system's whole outcome
tree and checking the martingale identity exactly, so ad hoc capital inflation
is refused rather than sampled.

Strategies consume one (forecast, outcome) pair per step and nothing else;
``run_stream`` drives any of them over a recorded stream.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    ONE,
    ZERO,
    ForecastingSystem,
    HorizonError,
    all_histories_below,
    as_fraction,
    check_forecast,
    check_outcome,
    induced_path,
    sample_outcomes,
)
from .events import Cell, ForecastPartition
from .gameprob import CellPath, ValueFunction


class IncompleteTableError(ValueError):
    """A value table is missing nodes required by its partitions."""


class CertificationError(RuntimeError):
    """A strategy failed the exact martingale certification."""


class StreamFormatError(ValueError):
    """A forecast/outcome stream row is malformed."""


@dataclass(frozen=True)
class CapitalProcess:
    """A betting strategy's value along a stream: initial capital, then one value per step."""

    initial_capital: Fraction
    trajectory: tuple[Fraction, ...]

    def __post_init__(self):
        if self.initial_capital < ZERO or any(v < ZERO for v in self.trajectory):
            raise ValueError("capital must stay non-negative")

    @property
    def final_capital(self) -> Fraction:
        return self.trajectory[-1] if self.trajectory else self.initial_capital

    @property
    def peak(self) -> Fraction:
        return max((self.initial_capital, *self.trajectory))


def check_farthingale(vf: ValueFunction, mode: str) -> tuple[bool, list]:
    """Verify the (super)farthingale identity on a complete cell-indexed table.

    mode "exact" requires equality, "super" allows the node to dominate.
    Returns (ok, violations) with the distinct (cell-path, forecast) pairs at
    which an endpoint check failed.
    """
    if mode not in ("exact", "super"):
        raise ValueError(f"mode must be 'exact' or 'super', got {mode!r}")
    if not vf.is_complete():
        raise IncompleteTableError("value table does not cover the partition tree")
    violations: list[tuple[CellPath, Fraction]] = []
    level: list[CellPath] = [()]
    for partition in vf.partitions:
        for path in level:
            parent = vf.values[path]
            for ci, cell in enumerate(partition.cells):
                v0 = vf.values[path + ((ci, 0),)]
                v1 = vf.values[path + ((ci, 1),)]
                for p in cell.endpoints():
                    rhs = (ONE - p) * v0 + p * v1
                    bad = parent != rhs if mode == "exact" else parent < rhs
                    if bad and (path, p) not in violations:
                        violations.append((path, p))
        level = [
            path + ((ci, bit),)
            for path in level
            for ci in range(len(partition.cells))
            for bit in (0, 1)
        ]
    return not violations, violations


@dataclass(frozen=True)
class CalibrationState:
    """Running sums of the calibration test after n of N steps."""

    horizon: int
    threshold_c: Fraction
    n: int = 0
    bias: Fraction = ZERO  # sum of y_i - p_i
    spread: Fraction = ZERO  # sum of p_i (1 - p_i)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        if self.threshold_c <= ZERO:
            raise ValueError("threshold must be positive")
        if abs(self.bias) > self.n or not ZERO <= self.spread <= Fraction(self.n, 4):
            raise ValueError("inconsistent calibration sums")

    @property
    def capital(self) -> Fraction:
        n_quarter = Fraction(self.horizon, 4)
        scale = self.threshold_c**2 * self.horizon + n_quarter
        return (self.bias**2 - self.spread + n_quarter) / scale


def calibration_step(state: CalibrationState, step) -> tuple[CalibrationState, Fraction]:
    """Consume one (forecast, outcome) pair; return the new state and its capital."""
    if state.n >= state.horizon:
        raise HorizonError(f"calibration horizon {state.horizon} already consumed")
    p, y = step
    p = check_forecast(p)
    y = check_outcome(y)
    new = CalibrationState(
        horizon=state.horizon,
        threshold_c=state.threshold_c,
        n=state.n + 1,
        bias=state.bias + (y - p),
        spread=state.spread + p * (ONE - p),
    )
    return new, new.capital


@dataclass(frozen=True)
class CalibrationVerdict:
    reject: bool
    ratio: Fraction
    bias: Fraction


def calibration_verdict(state: CalibrationState) -> CalibrationVerdict:
    """Decide the bias test after all N steps: reject iff S^2 >= C^2 N (exact).

    The capital ratio final/initial is reported; a rejection guarantees
    ratio >= 4 C^2.
    """
    if state.n != state.horizon:
        raise ValueError(f"verdict needs all {state.horizon} steps, have {state.n}")
    reject = state.bias**2 >= state.threshold_c**2 * state.horizon
    ratio = (state.bias**2 - state.spread + Fraction(state.horizon, 4)) / Fraction(
        state.horizon, 4
    )
    return CalibrationVerdict(reject=reject, ratio=ratio, bias=state.bias)


class CalibrationStrategy:
    """Stream-driven form of the calibration farthingale."""

    def __init__(self, horizon: int, threshold_c):
        self._state = CalibrationState(horizon, as_fraction(threshold_c))
        self.initial_capital = self._state.capital

    @property
    def state(self) -> CalibrationState:
        return self._state

    def step(self, p, y) -> Fraction:
        self._state, capital = calibration_step(self._state, (p, y))
        return capital


class ConstantStrategy:
    """Never bets; capital is constant."""

    def __init__(self, capital=ONE):
        self.initial_capital = as_fraction(capital)

    def step(self, p, y) -> Fraction:
        return self.initial_capital


class DoublingStrategy:
    """All of the capital rides on outcome 1 at even odds each step.

    Capital doubles on outcome 1 and is lost on outcome 0; a martingale under
    the constant-1/2 forecasting system (and only under it, which the
    certification step enforces).
    """

    def __init__(self):
        self.initial_capital = ONE
        self._capital = ONE

    def step(self, p, y) -> Fraction:
        self._capital = 2 * self._capital if check_outcome(y) == 1 else ZERO
        return self._capital


def run_stream(strategy, stream) -> CapitalProcess:
    """Drive a strategy over recorded (forecast, outcome) pairs.

    The strategy sees nothing but the pairs themselves (prequential
    principle).  Malformed rows raise StreamFormatError with the row index.
    """
    initial = as_fraction(strategy.initial_capital)
    trajectory = []
    for index, row in enumerate(stream):
        try:
            p, y = row
            p = check_forecast(p)
            y = check_outcome(y)
        except (TypeError, ValueError) as exc:
            raise StreamFormatError(f"row {index}: {exc}") from exc
        trajectory.append(as_fraction(strategy.step(p, y)))
    return CapitalProcess(initial, tuple(trajectory))


def point_partition(points) -> ForecastPartition:
    """Partition of [0, 1] with a degenerate cell at each given forecast value."""
    pts = sorted({ZERO, ONE, *(check_forecast(p) for p in points)})
    cells: list[Cell] = []
    for i, b in enumerate(pts):
        cells.append(Cell(b, b))
        if i + 1 < len(pts):
            cells.append(Cell(b, pts[i + 1], lo_open=True, hi_open=True))
    return ForecastPartition(tuple(pts), tuple(cells))


def strategy_value_table(strategy_factory, horizon: int, grid) -> ValueFunction:
    """Cell-indexed capital table of a stream-driven strategy on a forecast grid.

    Point cells at grid forecasts feed the strategy; on the open gaps between
    them the strategy is not consulted and capital is carried over unchanged
    (not betting is itself a farthingale move, so the table stays exact).  The
    table reproduces the strategy's capital along any stream whose forecasts
    lie on the grid and is the object ``check_farthingale`` inspects.
    """
    partition = point_partition(grid)
    partitions = tuple(partition for _ in range(horizon))
    values: dict = {}

    def capital_of(steps) -> Fraction:
        strategy = strategy_factory()
        capital = as_fraction(strategy.initial_capital)
        for p, y in steps:
            capital = as_fraction(strategy.step(p, y))
        return capital

    def walk(path: CellPath, steps: tuple):
        values[path] = capital_of(steps)
        if len(path) == horizon:
            return
        for ci, cell in enumerate(partition.cells):
            for bit in (0, 1):
                more = steps + ((cell.lo, bit),) if cell.is_point else steps
                walk(path + ((ci, bit),), more)

    walk((), ())
    return ValueFunction(horizon, partitions, values)


def certify_strategy(strategy_factory, phi: ForecastingSystem) -> tuple[bool, list]:
    """Exact martingale certification of a strategy under a forecasting system.

    Replays fresh strategy instances along every outcome history up to the
    horizon and checks capital(x) == (1-phi(x)) capital(x0) + phi(x) capital(x1)
    together with non-negativity.  Returns (ok, violating histories).
    """
    capital: dict = {}
    for history in all_histories_below(phi.horizon + 1):
        strategy = strategy_factory()
        value = as_fraction(strategy.initial_capital)
        for p, y in induced_path(phi, history):
            value = as_fraction(strategy.step(p, y))
        capital[history] = value
    violations = []
    for history, value in capital.items():
        if value < ZERO:
            violations.append(history)
            continue
        if len(history) < phi.horizon:
            p = phi.forecast(history)
            expected = (ONE - p) * capital[history + (0,)] + p * capital[history + (1,)]
            if value != expected:
                violations.append(history)
    return not violations, violations


@dataclass(frozen=True)
class VilleResult:
    frequency: float
    bound: float
    passed: bool
    samples: int
    threshold: Fraction


def ville_check(
    phi: ForecastingSystem, strategy_factory, threshold, samples: int, seed: int
) -> VilleResult:
    """Empirical check that capital reaches the threshold no more often than bound.

    The strategy must pass exact certification under ``phi`` first; sampled
    streams then estimate the frequency of sup_n V >= C, reported against the
    bound V(initial)/C with the slack 4 sqrt(bound / samples).
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    threshold = as_fraction(threshold)
    if threshold <= ZERO:
        raise ValueError("threshold must be positive")
    ok, violations = certify_strategy(strategy_factory, phi)
    if not ok:
        raise CertificationError(
            f"strategy is not a non-negative martingale under the system "
            f"(first violation at history {violations[0]})"
        )
    hits = 0
    for i in range(samples):
        omega = sample_outcomes(phi, phi.horizon, seed + i)
        strategy = strategy_factory()
        peak = as_fraction(strategy.initial_capital)
        for p, y in induced_path(phi, omega):
            peak = max(peak, as_fraction(strategy.step(p, y)))
            if peak >= threshold:
                break
        if peak >= threshold:
            hits += 1
    strategy = strategy_factory()
    bound = as_fraction(strategy.initial_capital) / threshold
    frequency = hits / samples
    passed = frequency <= float(bound) + 4.0 * math.sqrt(float(bound) / samples)
    return VilleResult(
        frequency=frequency,
        bound=float(bound),
        passed=passed,
        samples=samples,
        threshold=threshold,
    )


def parse_stream_csv(text: str) -> list[tuple[Fraction, int]]:
    """Parse the stream format: header "p,y", forecasts as decimals or num/den."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows or [field.strip() for field in rows[0]] != ["p", "y"]:
        raise StreamFormatError('stream must start with the header "p,y"')
    stream = []
    for index, row in enumerate(rows[1:], start=1):
        if len(row) != 2:
            raise StreamFormatError(f"row {index}: expected two fields, got {len(row)}")
        try:
            p = check_forecast(Fraction(row[0].strip()))
            y = check_outcome(int(row[1].strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise StreamFormatError(f"row {index}: {exc}") from exc
        stream.append((p, y))
    return stream


def format_stream_csv(stream) -> str:
    lines = ["p,y"]
    for p, y in stream:
        lines.append(f"{p},{y}")
    return "\n".join(lines) + "\n"
