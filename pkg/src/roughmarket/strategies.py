"""Simple-strategy execution engine and the explicit trading constructions.

A simple strategy is an initial capital plus an ordered sequence of
(stopping rule, position) pairs.  Rules are evaluated left to right on the
step path; each rule fires at the first sample index, at or after the
previous firing index, where its hitting condition holds (hitting a closed
level set on a step path is attained exactly at a sample).  Several rules
may fire at the same index; zero-duration holdings contribute nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    BadInterval,
    FormMismatch,
    NonAdapted,
    RuleOverflow,
    ZeroPrice,
)
from .paths import PricePath

__all__ = [
    "StoppingRule",
    "HitBelow",
    "HitAbove",
    "AtIndex",
    "SimpleStrategy",
    "CapitalTrace",
    "run_simple",
    "doob_strategy",
    "clairvoyant_strategy",
    "upper_prob_singleton",
    "borrowing_free_check",
    "BorrowReport",
]


class StoppingRule:
    """Decision procedure over path prefixes; returns a firing sample index."""

    def first_hit(self, times: np.ndarray, values: np.ndarray, start: int) -> int | None:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class HitBelow(StoppingRule):
    """Fire at the first sample with value <= level (hits [0, level])."""

    level: float

    def first_hit(self, times, values, start):
        for i in range(start, values.shape[0]):
            if values[i] <= self.level:
                return i
        return None

    def describe(self):
        return f"hit<= {self.level:g}"


@dataclass(frozen=True)
class HitAbove(StoppingRule):
    """Fire at the first sample with value >= level (hits [level, inf))."""

    level: float

    def first_hit(self, times, values, start):
        for i in range(start, values.shape[0]):
            if values[i] >= self.level:
                return i
        return None

    def describe(self):
        return f"hit>= {self.level:g}"


@dataclass(frozen=True)
class AtIndex(StoppingRule):
    """Fire at a fixed sample index (a deterministic time)."""

    index: int

    def first_hit(self, times, values, start):
        if self.index < start or self.index >= values.shape[0]:
            return None
        return self.index

    def describe(self):
        return f"at[{self.index}]"


class AlternatingHits:
    """Endless rule stream: hit [0,a] take ``h_on``, hit [b,inf) take 0."""

    def __init__(self, a: float, b: float, h_on: float = 1.0):
        self.a = a
        self.b = b
        self.h_on = h_on

    def __iter__(self) -> Iterator[tuple[StoppingRule, float]]:
        while True:
            yield HitBelow(self.a), self.h_on
            yield HitAbove(self.b), 0.0


@dataclass(frozen=True)
class SimpleStrategy:
    """Initial capital plus ordered (stopping rule, position) pairs.

    ``rules`` is any reusable iterable; it may be endless as long as only
    finitely many rules fire on any step path.  ``capital_cap`` freezes the
    strategy (position 0, rules ignored) from the first sample where its
    capital reaches the cap.
    """

    initial_capital: float
    rules: Iterable[tuple[StoppingRule, float]]
    descriptor: str = ""
    position_bound: float = math.inf
    capital_cap: float | None = None

    def describe(self) -> str:
        return self.descriptor or "strategy"


@dataclass(frozen=True)
class Firing:
    index: int
    time: float
    position: float
    rule: str


@dataclass(frozen=True)
class CapitalTrace:
    """Per-sample capital, position carried out of the sample, and cash.

    ``capital[i]`` is the strategy's wealth at ``times[i]``; ``position[i]``
    is the holding over ``(times[i], times[i+1]]``; ``cash[i]`` is
    ``capital[i] - position[i] * values[i]``, constant until the next trade.
    """

    times: np.ndarray
    capital: np.ndarray
    position: np.ndarray
    cash: np.ndarray
    firings: tuple[Firing, ...] = ()
    initial_capital: float = 0.0

    @property
    def final_capital(self) -> float:
        return float(self.capital[-1])

    @property
    def min_capital(self) -> float:
        return float(self.capital.min())


def run_simple(
    strategy: SimpleStrategy,
    path: PricePath,
    self_check: bool = False,
) -> CapitalTrace:
    """Execute a strategy on a path and return its capital trace.

    Raises :class:`RuleOverflow` if more rules fire than the path has
    samples.  With ``self_check`` a suffix perturbation is replayed and
    :class:`NonAdapted` raised if the visible prefix of the trace changes.
    """
    trace = _run(strategy, path)
    if self_check:
        _adaptedness_probe(strategy, path, trace)
    return trace


def _collect_firings(strategy: SimpleStrategy, path: PricePath) -> list[tuple[int, float, str]]:
    times, values = path.times, path.values
    n = values.shape[0]
    fired: list[tuple[int, float, str]] = []
    start = 0
    for rule, h in strategy.rules:
        if abs(h) > strategy.position_bound:
            raise ValueError(
                f"position {h} exceeds declared bound {strategy.position_bound}"
            )
        i = rule.first_hit(times, values, start)
        if i is None:
            break
        if i < start:
            raise NonAdapted(f"rule fired at {i} before search start {start}")
        fired.append((i, float(h), rule.describe()))
        if len(fired) > n:
            raise RuleOverflow(f"more than {n} firings on an {n}-sample path")
        start = i
    return fired


def _run(strategy: SimpleStrategy, path: PricePath) -> CapitalTrace:
    times, values = path.times, path.values
    n = values.shape[0]
    fired = _collect_firings(strategy, path)

    capital = np.empty(n)
    position = np.empty(n)
    cap = strategy.capital_cap
    k = float(strategy.initial_capital)
    k_c = 0.0  # Kahan compensation for the telescoping sum
    pos = 0.0
    frozen = False
    executed: list[Firing] = []
    fi = 0
    for t in range(n):
        if t > 0:
            inc = pos * (values[t] - values[t - 1])
            y = inc - k_c
            s = k + y
            k_c = (s - k) - y
            k = s
        if cap is not None and not frozen and k >= cap:
            frozen = True
            if pos != 0.0:
                executed.append(Firing(t, float(times[t]), 0.0, "cap-liquidate"))
            pos = 0.0
        while fi < len(fired) and fired[fi][0] == t:
            idx, h, desc = fired[fi]
            fi += 1
            if frozen:
                continue
            pos = h
            executed.append(Firing(idx, float(times[idx]), h, desc))
        capital[t] = k
        position[t] = pos
    cash = capital - position * values
    return CapitalTrace(
        times=times,
        capital=capital,
        position=position,
        cash=cash,
        firings=tuple(executed),
        initial_capital=float(strategy.initial_capital),
    )


def _adaptedness_probe(strategy: SimpleStrategy, path: PricePath, trace: CapitalTrace) -> None:
    n = path.n_samples
    if n < 3:
        return
    cut = n // 2
    mutated = path.values.copy()
    mutated[cut + 1 :] = mutated[cut] + 1.0  # positive, valid suffix
    alt = _run(strategy, PricePath(path.times, mutated))
    if not (
        np.array_equal(trace.capital[: cut + 1], alt.capital[: cut + 1])
        and np.array_equal(trace.position[:cut], alt.position[:cut])
    ):
        raise NonAdapted(f"{strategy.describe()} reacted to a suffix perturbation")


def doob_strategy(a: float, b: float) -> SimpleStrategy:
    """Buy one unit on hitting [0, a], sell on hitting [b, inf), repeat.

    Starts with capital a; on any positive path the capital stays positive
    and ends at least (b - a) times the number of completed up moves.
    """
    if not (0.0 <= a < b):
        raise BadInterval(f"need 0 <= a < b, got ({a}, {b})")
    return SimpleStrategy(
        initial_capital=a,
        rules=AlternatingHits(a, b),
        descriptor=f"doob({a:g},{b:g})",
        position_bound=1.0,
    )


def clairvoyant_strategy(path: PricePath) -> tuple[SimpleStrategy, float]:
    """Full reinvestment on every up move of this specific path.

    Returns the strategy (fixed positions at fixed indices, so trivially
    adapted) and the achieved growth factor, which equals
    exp(var_plus(log path)) exactly.  Factors accumulate in the log domain
    and are exponentiated once.
    """
    values = path.values
    if np.any(values == 0.0):
        raise ZeroPrice("clairvoyant reinvestment requires strictly positive prices")
    log_k = 0.0
    rules: list[tuple[StoppingRule, float]] = []
    for i in range(values.shape[0] - 1):
        if values[i + 1] > values[i]:
            h = math.exp(log_k) / values[i]
            log_k += math.log(values[i + 1]) - math.log(values[i])
        else:
            h = 0.0
        rules.append((AtIndex(i), h))
    rules.append((AtIndex(values.shape[0] - 1), 0.0))
    factor = math.exp(log_k)
    strat = SimpleStrategy(
        initial_capital=1.0,
        rules=tuple(rules),
        descriptor="clairvoyant",
        position_bound=max((abs(h) for _, h in rules), default=0.0) or 1.0,
    )
    return strat, factor


def upper_prob_singleton(path: PricePath) -> float:
    """Cheapest superhedge of the indicator of this exact path.

    Computes both closed forms, exp(-var_plus(log path)) and
    sqrt(start/end * exp(-var(log path))), checks they agree to 1e-12
    relative, and returns the second.
    """
    values = path.values
    if np.any(values == 0.0):
        raise ZeroPrice("upper probability of a singleton needs strictly positive prices")
    d = np.diff(np.log(values))
    plus = fsum(float(x) for x in d[d > 0.0])
    minus = fsum(float(-x) for x in d[d < 0.0])
    total = plus + minus
    form_up = math.exp(-plus)
    ratio = values[0] / values[-1]
    form_sqrt = math.sqrt(ratio * math.exp(-total))
    scale = max(form_up, form_sqrt, 1e-300)
    if abs(form_up - form_sqrt) > 1e-12 * scale:
        raise FormMismatch(
            f"closed forms disagree: {form_up!r} vs {form_sqrt!r}"
        )
    return form_sqrt


@dataclass(frozen=True)
class Violation:
    kind: str  # "short" (position < 0) or "cash" (cash < 0)
    index: int
    time: float
    amount: float


@dataclass(frozen=True)
class BorrowReport:
    """Outcome of the borrowing audit.

    When a violation exists, ``continuation`` is a modified path agreeing
    with the original up to the violation and ``continuation_min_capital``
    is strictly negative on it, demonstrating that a capital process that is
    positive on every positive path cannot borrow cash or security.
    """

    ok: bool
    first_violation: Violation | None = None
    continuation: PricePath | None = None
    continuation_min_capital: float | None = None


_BORROW_TOL = 1e-9  # absolute slack for cash that is zero up to roundoff


def borrowing_free_check(strategy: SimpleStrategy, path: PricePath) -> BorrowReport:
    """Check position >= 0 and cash >= 0 at every sample.

    On a violation, builds the adversarial continuation (price spike for a
    short position, price drop to zero for borrowed cash) and reports the
    strictly negative capital it produces.
    """
    trace = run_simple(strategy, path)
    values = path.values
    n = values.shape[0]
    scale = max(1.0, float(np.max(np.abs(trace.capital))))
    tol = _BORROW_TOL * scale
    if float(strategy.initial_capital) < -tol:
        violation = Violation("cash", 0, 0.0, float(strategy.initial_capital))
        return _with_continuation(strategy, path, trace, violation)
    for i in range(n - 1):  # position carried into (times[i], times[i+1]]
        if trace.position[i] < -tol:
            violation = Violation("short", i, float(path.times[i]), float(trace.position[i]))
            return _with_continuation(strategy, path, trace, violation)
        if trace.cash[i] < -tol:
            violation = Violation("cash", i, float(path.times[i]), float(trace.cash[i]))
            return _with_continuation(strategy, path, trace, violation)
    return BorrowReport(ok=True)


def _with_continuation(
    strategy: SimpleStrategy, path: PricePath, trace: CapitalTrace, violation: Violation
) -> BorrowReport:
    i = violation.index
    values = path.values.copy()
    if violation.kind == "short":
        pos = trace.position[i]
        # spike the next sample high enough that capital drops below -1
        spike = values[i] + (trace.capital[i] + 1.0) / (-pos) if pos < 0 else values[i]
        values[i + 1 :] = spike
    else:
        # drop the next sample to zero: capital becomes the (negative) cash
        values[i + 1 :] = 0.0
    continuation = PricePath(path.times, values)
    alt = run_simple(strategy, continuation)
    return BorrowReport(
        ok=False,
        first_violation=violation,
        continuation=continuation,
        continuation_min_capital=alt.min_capital,
    )
