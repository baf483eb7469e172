"""Countable strategy mixtures and their exact capital accounting.

Two representations:

* :class:`StrategyMixture` holds explicit (weight, strategy) components and
  is executed component by component.
* :class:`GridStrategyMixture` describes dyadic families of buy-low/sell-high
  band strategies (cell k at scale j trades the band (k 2^-j, (k+1) 2^-j))
  and is executed by the event-driven grid kernel, which is exact and avoids
  materializing the many components.

Components beyond the truncation cut are carried as constants: a component
replaced by a zero-position strategy with the same initial capital keeps the
mixture a genuine positive capital process with unchanged initial capital,
so a verified bound on the truncated process is a valid witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from . import _kernels
from .errors import (
    BadWeights,
    BoundViolated,
    InadmissiblePhi,
    NegativeComponent,
    TruncationUnsafe,
)
from .paths import PricePath, discretize
from .strategies import (
    AtIndex,
    CapitalTrace,
    HitAbove,
    SimpleStrategy,
    doob_strategy,
    run_simple,
)
from .variation import VariationFunctional, phi_admissible, var_p

__all__ = [
    "StrategyMixture",
    "GridLevel",
    "GridStrategyMixture",
    "Mixture",
    "run_mixture",
    "borrowing_free_mixture_check",
    "volatility_mixture",
    "Prop3Report",
    "verify_prop3_bound",
    "unboundedness_mixture",
    "crossing_explosion_mixture",
]

_NEG_TOL = 1e-9


@dataclass(frozen=True)
class StrategyMixture:
    """Weighted finite family of simple strategies plus a constant tail."""

    components: tuple[tuple[float, SimpleStrategy], ...]
    analytic_tail_capital: float = 0.0
    descriptor: str = ""

    def __post_init__(self):
        if any(w <= 0.0 or not math.isfinite(w) for w, _s in self.components):
            raise BadWeights("component weights must be positive and finite")
        if self.analytic_tail_capital < 0.0:
            raise BadWeights("tail capital must be >= 0")

    @property
    def total_initial(self) -> float:
        return (
            math.fsum(w * s.initial_capital for w, s in self.components)
            + self.analytic_tail_capital
        )


@dataclass(frozen=True)
class GridLevel:
    """One dyadic scale of one size class: cells k = 0..k_count-1 at scale j."""

    level_exp: int  # L: cells span [0, 2^L]
    scale_exp: int  # j: cell height 2^-j
    k_count: int
    cell_weight: float

    @property
    def cell_height(self) -> float:
        return math.ldexp(1.0, -self.scale_exp)

    @property
    def initial_capital(self) -> float:
        # sum over cells of weight * (k * 2^-j)
        return self.cell_weight * self.cell_height * (self.k_count * (self.k_count - 1) / 2.0)


@dataclass(frozen=True)
class GridStrategyMixture:
    """Dyadic band-trading mixture with analytic tail accounting."""

    levels: tuple[GridLevel, ...]
    analytic_tail_capital: float
    kind: str  # "prop1" or "prop3"
    descriptor: str = ""
    scale_cut: int = 0  # largest simulated scale exponent
    eps: float | None = None
    delta: float | None = None

    @property
    def total_initial(self) -> float:
        return math.fsum(lv.initial_capital for lv in self.levels) + self.analytic_tail_capital

    @property
    def n_components(self) -> int:
        return sum(lv.k_count for lv in self.levels)

    def iter_components(
        self, max_components: int = 1 << 16
    ) -> Iterator[tuple[float, SimpleStrategy]]:
        """Materialize the banded components (small grids only)."""
        if self.n_components > max_components:
            raise ValueError(f"{self.n_components} components exceed {max_components}")
        for lv in self.levels:
            h = lv.cell_height
            for k in range(lv.k_count):
                yield lv.cell_weight, doob_strategy(k * h, (k + 1) * h)


Mixture = Union[StrategyMixture, GridStrategyMixture]


def run_mixture(mixture: Mixture, path: PricePath, backend: str | None = None) -> CapitalTrace:
    """Weighted capital trace of a mixture; every component must stay >= 0."""
    if isinstance(mixture, GridStrategyMixture):
        return _run_grid(mixture, path, backend)
    n = path.n_samples
    capital = np.full(n, mixture.analytic_tail_capital, dtype=np.float64)
    position = np.zeros(n, dtype=np.float64)
    for w, strat in mixture.components:
        trace = run_simple(strat, path)
        if trace.min_capital < -_NEG_TOL * max(1.0, abs(trace.initial_capital)):
            raise NegativeComponent(
                f"component {strat.describe()} reached capital {trace.min_capital}"
            )
        capital += w * trace.capital
        position += w * trace.position
    return CapitalTrace(
        times=path.times,
        capital=capital,
        position=position,
        cash=capital - position * path.values,
        firings=(),
        initial_capital=mixture.total_initial,
    )


def _run_grid(mixture: GridStrategyMixture, path: PricePath, backend) -> CapitalTrace:
    values = path.values
    n = values.shape[0]
    capital = np.full(n, mixture.analytic_tail_capital, dtype=np.float64)
    position = np.zeros(n, dtype=np.float64)
    for lv in mixture.levels:
        agg, held = _kernels.doob_grid_trace(values, lv.scale_exp, lv.k_count, backend=backend)
        capital += lv.cell_weight * agg
        position += lv.cell_weight * held
    # cells are individually positive on positive paths (they buy at or below
    # their cash level); the aggregate check guards the implementation
    if capital.min() < -_NEG_TOL * max(1.0, mixture.total_initial):
        raise NegativeComponent(f"grid aggregate reached {capital.min()}")
    return CapitalTrace(
        times=path.times,
        capital=capital,
        position=position,
        cash=capital - position * values,
        firings=(),
        initial_capital=mixture.total_initial,
    )


def borrowing_free_mixture_check(mixture: Mixture, path: PricePath) -> "BorrowReport":
    """Aggregate no-borrowing audit: position >= 0 and cash >= 0 per sample."""
    from .strategies import BorrowReport, Violation

    trace = run_mixture(mixture, path)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(trace.capital))))
    for i in range(path.n_samples - 1):
        if trace.position[i] < -tol:
            return BorrowReport(
                ok=False,
                first_violation=Violation("short", i, float(path.times[i]), float(trace.position[i])),
            )
        if trace.cash[i] < -tol:
            return BorrowReport(
                ok=False,
                first_violation=Violation("cash", i, float(path.times[i]), float(trace.cash[i])),
            )
    return BorrowReport(ok=True)


# ---------------------------------------------------------------------------
# dyadic volatility mixtures


def _derive_scale_cut(path: PricePath) -> int:
    """Largest scale exponent worth simulating for this path.

    Scales finer than a quarter of the smallest nonzero move cannot matter
    for partition increments of the sample sequence; their cells are folded
    into the constant tail.
    """
    d = np.abs(np.diff(path.values))
    d = d[d > 0.0]
    if d.size == 0:
        return 2
    return int(math.floor(math.log2(4.0 / float(d.min()))))


def _resolve_scale_cut(
    j_policy, path_hint, j_floor: int, cell_budget: int, class_lows: list[tuple[int, int]]
) -> int:
    if j_policy is None and path_hint is None:
        raise TruncationUnsafe("need a path hint or an explicit scale cutoff")
    cut = None
    if path_hint is not None:
        cut = _derive_scale_cut(path_hint)
    if j_policy is not None:
        cut = int(j_policy) if cut is None else min(int(j_policy), cut)
    cut = max(cut, j_floor)

    def n_cells(c: int) -> int:
        return sum(1 << (L + j) for L, j_lo in class_lows for j in range(j_lo, c + 1))

    while cut > j_floor and n_cells(cut) > cell_budget:
        cut -= 1
    return cut


def volatility_mixture(
    phi: VariationFunctional | None,
    L_max: int,
    j_policy: int | None = None,
    path_hint: PricePath | None = None,
    kind: str = "prop1",
    eps: float | None = None,
    delta: float | None = None,
    cell_budget: int = 1 << 25,
) -> GridStrategyMixture:
    """Build the dyadic band mixture of the given kind.

    ``prop1``: one size class L = L_max, scales j = 0..cut, weights
    2^(2j) phi(2^-j) normalized over the active window, cell averaging
    2^-(L+j).

    ``prop3``: size classes L = 0..L_max mixed with weights
    (1 - 2^-delta) 2^(-delta L) and rescaled by 2^(1-L); inside each class,
    scales j >= 2-L with weights (1 - 2^-eps) 2^(eps(2-L)) 2^(-eps j).
    Initial capital of the full family is below 1 by construction; folded
    scales and size classes are carried as exact geometric-series constants.
    """
    if kind == "prop1":
        if phi is None:
            raise InadmissiblePhi("prop1 mixture needs a gauge")
        report = phi_admissible(phi)
        if not report.admissible:
            raise InadmissiblePhi(
                f"gauge fails the dyadic series probe (tail_trend={report.tail_trend:.3g})"
            )
        L = int(L_max)
        cut = _resolve_scale_cut(j_policy, path_hint, 0, cell_budget, [(L, 0)])
        js = np.arange(0, cut + 1)
        w_raw = np.asarray(phi(2.0 ** (-js.astype(np.float64)))) * 4.0**js
        z = float(w_raw.sum())
        if not (z > 0.0):
            raise InadmissiblePhi("gauge vanishes on the active scales")
        levels = tuple(
            GridLevel(
                level_exp=L,
                scale_exp=int(j),
                k_count=1 << (L + int(j)),
                cell_weight=float(w) / z * math.ldexp(1.0, -(L + int(j))),
            )
            for j, w in zip(js, w_raw)
        )
        return GridStrategyMixture(
            levels=levels,
            analytic_tail_capital=0.0,
            kind="prop1",
            descriptor=f"prop1(L={L},{phi.label},j<={cut})",
            scale_cut=cut,
        )

    if kind != "prop3":
        raise ValueError(f"unknown mixture kind {kind!r}")
    if eps is None or delta is None or eps <= 0.0 or delta <= 0.0:
        raise ValueError("prop3 mixture needs eps > 0 and delta > 0")
    if phi is not None and (phi.kind != "power" or abs(phi.p - (2.0 + eps)) > 1e-12):
        raise ValueError("prop3 gauge must be power(2 + eps)")
    L_top = int(L_max)
    l_exps = list(range(0, L_top + 1))
    cut = _resolve_scale_cut(
        j_policy, path_hint, 2 - L_top, cell_budget, [(L, 2 - L) for L in l_exps]
    )

    one_m_eps = 1.0 - 2.0**-eps
    one_m_del = 1.0 - 2.0**-delta
    levels = []
    tail = 0.0
    for L in l_exps:
        outer = one_m_del * 2.0 ** (-delta * L) * math.ldexp(1.0, 1 - L)
        j_lo = 2 - L
        norm = one_m_eps * 2.0 ** (eps * (2 - L))
        for j in range(j_lo, cut + 1):
            w = norm * 2.0 ** (-eps * j)
            levels.append(
                GridLevel(
                    level_exp=L,
                    scale_exp=j,
                    k_count=1 << (L + j),
                    cell_weight=outer * w * math.ldexp(1.0, -(L + j)),
                )
            )
        # scales beyond the cut: each holds its initial capital
        # sum_{j>=s} w(j) (2^L - 2^-j)/2, geometric in both terms
        s = max(cut + 1, j_lo)
        g1 = 2.0 ** (-eps * s) / one_m_eps
        g2 = 2.0 ** (-(1.0 + eps) * s) / (1.0 - 2.0 ** -(1.0 + eps))
        tail += outer * norm * 0.5 * (2.0**L * g1 - g2)
    # size classes beyond L_top: full class initial capital, independent of L
    s0 = 1.0 - (2.0**eps - 1.0) / (2.0 * (2.0 ** (1.0 + eps) - 1.0))
    tail += s0 * 2.0 ** (-delta * (L_top + 1))
    return GridStrategyMixture(
        levels=tuple(levels),
        analytic_tail_capital=tail,
        kind="prop3",
        descriptor=f"prop3(eps={eps:g},delta={delta:g},L<={L_top},j<={cut})",
        scale_cut=cut,
        eps=eps,
        delta=delta,
    )


def prop3_initial_capital(eps: float, delta: float) -> float:
    """Closed form for the full (untruncated) family's initial capital."""
    del delta  # the size-class weights sum to one
    return 1.0 - (2.0**eps - 1.0) / (2.0 * (2.0 ** (1.0 + eps) - 1.0))


# ---------------------------------------------------------------------------
# explicit capital bound


@dataclass(frozen=True)
class Prop3Report:
    eps: float
    delta: float
    N: int
    s0: float
    s_t: float
    variation: float
    sup: float
    rhs: float
    margin: float
    passed: bool
    scale_cut: int


def verify_prop3_bound(
    path: PricePath,
    eps: float,
    delta: float,
    N: int,
    j_policy: int | None = None,
    backend: str | None = None,
    raise_on_violation: bool = True,
) -> Prop3Report:
    """Check the explicit capital bound on the N-step discretization.

    Runs the truncated size/scale mixture on the resampled path and compares
    its final capital against

        (1 - 2^-eps) (1 - 2^-delta) 2^(-6-eps-delta)
            * var_{2+eps} / max(1, sup)^(2+eps+delta)  -  1/4.

    Truncation drops only positive components, so a pass is a valid witness;
    a failure raises :class:`BoundViolated` and would indicate a defect in
    the construction, not in the inequality.
    """
    if eps <= 0.0 or delta <= 0.0:
        raise ValueError("need eps > 0 and delta > 0")
    if N < 1:
        raise ValueError("need N >= 1")
    omega_n = discretize(path, N)
    sup = omega_n.sup
    l_top = max(0, math.ceil(math.log2(sup))) if sup > 1.0 else 0
    mixture = volatility_mixture(
        None,
        l_top,
        j_policy=j_policy,
        path_hint=omega_n,
        kind="prop3",
        eps=eps,
        delta=delta,
    )
    trace = run_mixture(mixture, omega_n, backend=backend)
    s_t = trace.final_capital
    variation = var_p(omega_n, 2.0 + eps, backend=backend)
    rhs = (
        (1.0 - 2.0**-eps)
        * (1.0 - 2.0**-delta)
        * 2.0 ** (-6.0 - eps - delta)
        * variation
        / max(1.0, sup) ** (2.0 + eps + delta)
        - 0.25
    )
    passed = s_t > rhs
    report = Prop3Report(
        eps=eps,
        delta=delta,
        N=N,
        s0=mixture.total_initial,
        s_t=s_t,
        variation=variation,
        sup=sup,
        rhs=rhs,
        margin=s_t - rhs,
        passed=passed,
        scale_cut=mixture.scale_cut,
    )
    if not passed and raise_on_violation:
        raise BoundViolated(f"final capital {s_t} <= bound {rhs} ({report})")
    return report


# ---------------------------------------------------------------------------
# countable families from the right-continuous extension


def unboundedness_mixture(m_max: int, omega0_hint: float) -> StrategyMixture:
    """Weighted bets that the path never doubles past each threshold 2^m.

    Component m invests everything at time 0 (one unit of cash, position
    1/start, or position 1 when the start price is 0) and liquidates on
    hitting [2^m, inf).  Weights 2^-m; initial capital 1 - 2^-m_max.
    """
    if m_max < 1:
        raise BadWeights("m_max must be >= 1")
    h1 = 1.0 if omega0_hint == 0.0 else 1.0 / omega0_hint
    comps = []
    for m in range(1, m_max + 1):
        strat = SimpleStrategy(
            initial_capital=1.0,
            rules=((AtIndex(0), h1), (HitAbove(2.0**m), 0.0)),
            descriptor=f"unbounded(m={m})",
            position_bound=max(1.0, abs(h1)),
        )
        comps.append((2.0**-m, strat))
    return StrategyMixture(
        components=tuple(comps),
        analytic_tail_capital=0.0,
        descriptor=f"unboundedness(m<={m_max})",
    )


def crossing_explosion_mixture(intervals, weights) -> StrategyMixture:
    """Capped band strategies over the given intervals.

    Each component trades its band like the upcrossing strategy but freezes
    once its capital reaches 1/weight, so it can only fire finitely often;
    total cost is sum(weight * a).  A finite list stands for the leading part
    of a unit-mass countable family, so weights must satisfy 0 < sum <= 1.
    """
    intervals = [(float(a), float(b)) for a, b in intervals]
    weights = [float(w) for w in weights]
    if len(intervals) != len(weights) or not intervals:
        raise BadWeights("need matching nonempty intervals and weights")
    if any(w <= 0.0 for w in weights):
        raise BadWeights("weights must be > 0")
    if math.fsum(weights) > 1.0 + 1e-12:
        raise BadWeights("weights must sum to at most 1")
    if any(not (0.0 <= a < b) for a, b in intervals):
        raise BadWeights("intervals must satisfy 0 <= a < b")
    cost = math.fsum(w * a for (a, _b), w in zip(intervals, weights))
    if not math.isfinite(cost):
        raise BadWeights("total cost must be finite")
    comps = []
    for (a, b), w in zip(intervals, weights):
        base = doob_strategy(a, b)
        capped = SimpleStrategy(
            initial_capital=base.initial_capital,
            rules=base.rules,
            descriptor=f"capped-{base.descriptor}@{1.0 / w:g}",
            position_bound=base.position_bound,
            capital_cap=1.0 / w,
        )
        comps.append((w, capped))
    return StrategyMixture(
        components=tuple(comps),
        analytic_tail_capital=0.0,
        descriptor="crossing-explosion",
    )
