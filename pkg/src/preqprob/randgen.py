"""Seeded random generation of desk-scale events and forecasting systems.

Defaults follow the sweep convention: horizon up to 3, up to 3 boxes, interval
endpoints with denominators up to 8, with degenerate point intervals drawn
often enough to exercise them.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .core import ForecastingSystem, all_histories_below
from .events import WILDCARD, Box, EventUnion, StepConstraint


def random_rational(rng: random.Random, max_denominator: int = 8) -> Fraction:
    d = rng.randint(1, max_denominator)
    return Fraction(rng.randint(0, d), d)


def random_event(
    rng: random.Random,
    max_horizon: int = 3,
    max_boxes: int = 3,
    max_denominator: int = 8,
    allow_empty: bool = False,
    horizon: int | None = None,
) -> EventUnion:
    if horizon is None:
        horizon = rng.randint(1, max_horizon)
    n_boxes = rng.randint(0 if allow_empty else 1, max_boxes)
    boxes = []
    for _ in range(n_boxes):
        steps = []
        for _ in range(horizon):
            a = random_rational(rng, max_denominator)
            if rng.random() < 0.4:
                lo = hi = a
            else:
                b = random_rational(rng, max_denominator)
                lo, hi = min(a, b), max(a, b)
            steps.append(StepConstraint(lo, hi, rng.choice((0, 1, WILDCARD))))
        boxes.append(Box(tuple(steps)))
    return EventUnion(horizon, tuple(boxes))


def random_event_on_grid(
    rng: random.Random, horizon: int, k: int, max_boxes: int = 3
) -> EventUnion:
    """Random event whose interval endpoints are all multiples of 1/k."""
    boxes = []
    for _ in range(rng.randint(1, max_boxes)):
        steps = []
        for _ in range(horizon):
            a = Fraction(rng.randint(0, k), k)
            b = Fraction(rng.randint(0, k), k)
            lo, hi = min(a, b), max(a, b)
            steps.append(StepConstraint(lo, hi, rng.choice((0, 1, WILDCARD))))
        boxes.append(Box(tuple(steps)))
    return EventUnion(horizon, tuple(boxes))


def random_forecasting_system(
    rng: random.Random, horizon: int, max_denominator: int = 8
) -> ForecastingSystem:
    table = {
        history: random_rational(rng, max_denominator)
        for history in all_histories_below(horizon)
    }
    return ForecastingSystem.from_table(table, horizon)
