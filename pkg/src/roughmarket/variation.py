"""Exact variation functionals, crossing counters and gauge diagnostics.

All computations are exact on step paths: any partition of [0, T] evaluates
the path at sample values, and any strictly increasing index subsequence
through the first and last sample is realizable as a partition.  The DP over
index subsequences therefore computes the true supremum, in O(n^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import fsum

import numpy as np

from . import _kernels
from ._kernels import PHI_POWER, PHI_PSI, psi_np
from .errors import BadInterval, BadStep, TooLarge
from .paths import PricePath, discretize

__all__ = [
    "VariationFunctional",
    "psi",
    "var_phi",
    "var_p",
    "brute_force_var_phi",
    "var_signed",
    "CrossingCount",
    "crossings",
    "grid_crossings",
    "phi_admissible",
    "AdmissibilityReport",
    "qvar_profile",
    "variation_growth_profile",
]


def psi(u):
    """Gauge u^2 / (2 lnstar lnstar u), lnstar u = max(1, |ln u|), psi(0) = 0."""
    if np.isscalar(u):
        return float(psi_np(np.asarray([u]))[0])
    return psi_np(u)


@dataclass(frozen=True)
class VariationFunctional:
    """Gauge phi applied to absolute partition increments; phi(0) = 0.

    Kinds: ``power`` (phi(u) = u**p, p > 0), ``psi`` (slow-growth corrected
    square gauge), ``table`` (piecewise-linear interpolation through given
    nodes, linearly continued past the last node).
    """

    kind: str
    p: float | None = None
    table_u: tuple | None = None
    table_phi: tuple | None = None

    def __post_init__(self):
        if self.kind == "power":
            if self.p is None or not (self.p > 0.0):
                raise ValueError("power gauge needs p > 0")
        elif self.kind == "psi":
            pass
        elif self.kind == "table":
            u = np.asarray(self.table_u, dtype=np.float64)
            v = np.asarray(self.table_phi, dtype=np.float64)
            if u.ndim != 1 or u.shape != v.shape or u.shape[0] < 2:
                raise ValueError("table gauge needs matching 1-d nodes")
            if u[0] != 0.0 or v[0] != 0.0:
                raise ValueError("table gauge must start at phi(0) = 0")
            if not np.all(np.diff(u) > 0):
                raise ValueError("table nodes must be strictly increasing")
            if np.any(v < 0.0):
                raise ValueError("gauge values must be >= 0")
            object.__setattr__(self, "table_u", tuple(float(x) for x in u))
            object.__setattr__(self, "table_phi", tuple(float(x) for x in v))
        else:
            raise ValueError(f"unknown gauge kind {self.kind!r}")

    @classmethod
    def power(cls, p: float) -> "VariationFunctional":
        return cls(kind="power", p=float(p))

    @classmethod
    def taylor_psi(cls) -> "VariationFunctional":
        return cls(kind="psi")

    @classmethod
    def from_table(cls, u, phi_values) -> "VariationFunctional":
        return cls(kind="table", table_u=tuple(u), table_phi=tuple(phi_values))

    def __call__(self, u):
        u_arr = np.abs(np.asarray(u, dtype=np.float64))
        if self.kind == "power":
            out = u_arr**self.p
        elif self.kind == "psi":
            out = psi_np(u_arr)
        else:
            uu = np.asarray(self.table_u)
            vv = np.asarray(self.table_phi)
            out = np.interp(u_arr, uu, vv)
            # continue the last segment linearly beyond the table
            slope = (vv[-1] - vv[-2]) / (uu[-1] - uu[-2])
            beyond = u_arr > uu[-1]
            if np.any(beyond):
                out = np.where(beyond, vv[-1] + slope * (u_arr - uu[-1]), out)
        return float(out) if np.isscalar(u) else out

    @property
    def label(self) -> str:
        if self.kind == "power":
            return f"p={self.p:g}"
        return self.kind


def _dp_table(values: np.ndarray, phi: VariationFunctional) -> float:
    n = values.shape[0]
    best = np.empty(n)
    best[0] = 0.0
    for i in range(1, n):
        d = np.abs(values[i] - values[:i])
        best[i] = np.max(best[:i] + phi(d))
    return float(best[-1])


def _var_phi_dp(path: PricePath, phi: VariationFunctional, backend=None) -> float:
    values = path.values
    if phi.kind == "power":
        return _kernels.var_dp(values, PHI_POWER, phi.p, backend=backend)
    if phi.kind == "psi":
        return _kernels.var_dp(values, PHI_PSI, 0.0, backend=backend)
    return _dp_table(values, phi)


def var_phi(path: PricePath, phi: VariationFunctional, backend: str | None = None) -> float:
    """Supremum over all partitions of sum phi(|increment|); exact on step paths.

    For power gauges with p <= 1 the finest partition is optimal
    (subadditivity), so an O(n) sum is used; the DP covers everything else.
    """
    if phi.kind == "power" and phi.p <= 1.0:
        d = np.abs(np.diff(path.values))
        return fsum(float(x) for x in d**phi.p)
    return _var_phi_dp(path, phi, backend=backend)


def var_p(path: PricePath, p: float, backend: str | None = None) -> float:
    return var_phi(path, VariationFunctional.power(p), backend=backend)


@lru_cache(maxsize=32)
def _chain_structure(n: int):
    """Flat pair indices and segment ids of every index chain 0 -> n-1.

    Chains are index subsequences through both endpoints, enumerated by
    bitmask over interior points; chain c contributes its consecutive pairs
    flattened, tagged with segment id c for a bincount reduction.
    """
    interior = n - 2
    pair_left: list[int] = []
    pair_right: list[int] = []
    seg: list[int] = []
    for mask in range(1 << interior):
        chain = [0]
        for b in range(interior):
            if mask >> b & 1:
                chain.append(b + 1)
        chain.append(n - 1)
        for a, c in zip(chain[:-1], chain[1:]):
            pair_left.append(a)
            pair_right.append(c)
            seg.append(mask)
    return (
        np.asarray(pair_left, dtype=np.int64),
        np.asarray(pair_right, dtype=np.int64),
        np.asarray(seg, dtype=np.int64),
        1 << interior,
    )


def brute_force_var_phi(path: PricePath, phi: VariationFunctional) -> float:
    """Independent oracle: enumerate every partition chain explicitly.

    Restricted to paths of at most 20 samples; raises :class:`TooLarge`
    otherwise.
    """
    values = path.values
    n = values.shape[0]
    if n > 20:
        raise TooLarge(f"{n} samples; oracle enumerates 2^(n-2) partitions")
    if n <= 13:
        left, right, seg, n_seg = _chain_structure(n)
        contrib = phi(np.abs(values[right] - values[left]))
        sums = np.bincount(seg, weights=contrib, minlength=n_seg)
        return float(sums.max())
    best = -math.inf
    interior = n - 2
    for mask in range(1 << interior):
        chain = [0] + [b + 1 for b in range(interior) if mask >> b & 1] + [n - 1]
        total = fsum(
            float(phi(abs(float(values[c]) - float(values[a]))))
            for a, c in zip(chain[:-1], chain[1:])
        )
        if total > best:
            best = total
    return best


def var_signed(path: PricePath) -> tuple[float, float, float]:
    """(var, var_plus, var_minus) of the sample sequence.

    Positive and negative parts are subadditive under merging, so the finest
    partition attains all three suprema; sums use ``math.fsum``.
    """
    d = np.diff(path.values)
    var_plus = fsum(float(x) for x in d[d > 0.0])
    var_minus = fsum(float(-x) for x in d[d < 0.0])
    return var_plus + var_minus, var_plus, var_minus


@dataclass(frozen=True)
class CrossingCount:
    """Completed up/down moves across a band; |up - down| <= 1 per band."""

    up: int
    down: int
    interval: tuple[float, float] | None = None
    step: float | None = None


def crossings(path: PricePath, a: float, b: float) -> CrossingCount:
    """Count completed moves <=a -> >=b (up) and >=b -> <=a (down).

    Matches hitting the closed sets [0, a] and [b, inf) in sample order,
    which on a step path happens exactly at sample points.
    """
    if not (0.0 <= a < b):
        raise BadInterval(f"need 0 <= a < b, got ({a}, {b})")
    values = path.values
    up = 0
    armed = False
    for x in values:
        if not armed:
            if x <= a:
                armed = True
        elif x >= b:
            up += 1
            armed = False
    down = 0
    armed = False
    for x in values:
        if not armed:
            if x >= b:
                armed = True
        elif x <= a:
            down += 1
            armed = False
    return CrossingCount(up=up, down=down, interval=(a, b))


def grid_crossings(path: PricePath, h: float) -> CrossingCount:
    """Aggregate band crossings over the grid (k*h, (k+1)*h), k*h <= sup.

    Runs one dense state machine per band, vectorized across bands; kept
    deliberately independent of the event-driven trading kernel so the two
    can certify each other.
    """
    if h <= 0.0:
        raise BadStep("h must be > 0")
    values = path.values
    sup = float(values.max())
    n_bands = int(math.floor(sup / h)) + 1
    a = h * np.arange(n_bands)
    b = a + h
    up = np.zeros(n_bands, dtype=np.int64)
    down = np.zeros(n_bands, dtype=np.int64)
    up_armed = np.zeros(n_bands, dtype=bool)
    down_armed = np.zeros(n_bands, dtype=bool)
    for x in values:
        low = x <= a
        high = x >= b
        fired = up_armed & high
        up += fired
        up_armed = (up_armed & ~fired) | low
        fired = down_armed & low
        down += fired
        down_armed = (down_armed & ~fired) | high
    return CrossingCount(up=int(up.sum()), down=int(down.sum()), step=h)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Numeric probe of the two gauge conditions needed by dyadic mixtures.

    ``partial_sum`` accumulates 2^(2j) phi(2^-j) up to j_max; ``tail_trend``
    is the relative mass of the last quarter of that sum (flat tail means the
    series is numerically Cauchy).  Advisory, not a proof.
    """

    admissible: bool
    ratio_sup_estimate: float
    partial_sum: float
    tail_trend: float
    j_max: int


def phi_admissible(
    phi: VariationFunctional, j_max: int = 64, flat_tol: float = 0.05
) -> AdmissibilityReport:
    if j_max < 8:
        raise ValueError("j_max must be >= 8")
    j = np.arange(j_max + 1, dtype=np.float64)
    w = np.asarray(phi(2.0**-j)) * 4.0**j
    partial = np.cumsum(w)
    total = float(partial[-1])
    q3 = (3 * j_max) // 4
    tail_trend = float((partial[-1] - partial[q3]) / max(total, 1e-300))
    # doubling-ratio probe of sup phi(s)/phi(t) over t <= s <= 2t
    ratio_sup = 0.0
    for u in np.logspace(-9, 2, 45):
        base = float(np.asarray(phi(u)))
        if base <= 0.0:
            continue
        for s in np.linspace(u, 2.0 * u, 5):
            r = float(np.asarray(phi(s))) / base
            ratio_sup = max(ratio_sup, r)
    admissible = tail_trend <= flat_tol and math.isfinite(total)
    return AdmissibilityReport(
        admissible=admissible,
        ratio_sup_estimate=ratio_sup,
        partial_sum=total,
        tail_trend=tail_trend,
        j_max=j_max,
    )


@dataclass(frozen=True)
class QvarPoint:
    delta: float
    value: float
    degenerate: bool  # no skip transition was feasible at this mesh


def qvar_profile(
    path: PricePath, deltas, backend: str | None = None
) -> list[QvarPoint]:
    """Mesh-constrained psi-variation for each mesh bound in ``deltas``.

    Partition points range over all of [0, T], so capturing one jump is
    always feasible (approach it from the left); the mesh bound only limits
    skipping over intermediate samples.  Values are non-increasing as delta
    decreases and bounded by the unconstrained psi-variation.
    """
    deltas = [float(d) for d in deltas]
    if any(d <= 0.0 for d in deltas):
        raise BadStep("all mesh bounds must be > 0")
    if any(d2 >= d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise BadStep("mesh bounds must be strictly decreasing")
    min_gap = float(np.diff(path.times).min())
    out = []
    for d in deltas:
        value = _kernels.qvar_dp(path.times, path.values, d, backend=backend)
        out.append(QvarPoint(delta=d, value=value, degenerate=d <= min_gap))
    return out


def variation_growth_profile(path: PricePath, p_grid, N_grid, backend=None) -> dict:
    """Table var_p(path discretized to N steps) over p_grid x N_grid.

    Finite-sample diagnostic for how variation grows under refinement; a
    direction-only probe, never a point estimate of a variation index.
    """
    N_grid = [int(N) for N in N_grid]
    if any(n2 <= n1 for n1, n2 in zip(N_grid, N_grid[1:])):
        raise ValueError("N_grid must be strictly increasing")
    table = {}
    for N in N_grid:
        sub = discretize(path, N)
        for p in p_grid:
            table[(float(p), N)] = var_p(sub, float(p), backend=backend)
    return table
