"""Hot numeric kernels: variation DP, mesh-constrained DP, dyadic grid trading.

Each kernel has two implementations with identical semantics:

* a loop form compiled with numba ``@njit`` (used by default when numba
  imports cleanly), and
* a vectorized pure-numpy form.

Set ``ROUGHMARKET_NUMBA=0`` in the environment to force the numpy path.
Callers may also pass ``backend="numpy"`` / ``backend="numba"`` explicitly,
which is how the benchmark and the backend-equality tests exercise both.

Dyadic arithmetic note: grid scales are powers of two, so ``x * 2**j`` is an
exponent shift and exact in float64.  Cell-boundary comparisons inside the
grid kernel therefore involve no rounding.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "default_backend",
    "var_dp",
    "qvar_dp",
    "doob_grid_trace",
    "warmup",
]

PHI_POWER = 0
PHI_PSI = 1

_env = os.environ.get("ROUGHMARKET_NUMBA", "").strip().lower()
_NUMBA_DISABLED = _env in ("0", "off", "false", "no")

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def default_backend() -> str:
    return "numba" if (HAVE_NUMBA and not _NUMBA_DISABLED) else "numpy"


def _resolve(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


# ---------------------------------------------------------------------------
# scalar gauges


def _psi_scalar(u: float) -> float:
    """u^2 / (2 * lnstar(lnstar(u))) with lnstar(u) = max(1, |ln u|); 0 at 0."""
    if u <= 0.0:
        return 0.0
    lu = abs(math.log(u))
    if lu < 1.0:
        lu = 1.0
    llu = math.log(lu)  # lu >= 1 so log >= 0
    if llu < 1.0:
        llu = 1.0
    return u * u / (2.0 * llu)


def psi_np(u):
    """Vectorized psi gauge."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    pos = u > 0.0
    up = u[pos]
    lu = np.maximum(1.0, np.abs(np.log(up)))
    llu = np.maximum(1.0, np.log(lu))
    out[pos] = up * up / (2.0 * llu)
    return out


def _phi_np(d, kind: int, p: float):
    if kind == PHI_POWER:
        return d**p
    return psi_np(d)


# ---------------------------------------------------------------------------
# variation DP: best[i] = max_{j<i} best[j] + phi(|x_i - x_j|)


def _var_dp_loop(values, kind, p):
    n = values.shape[0]
    best = np.empty(n, dtype=np.float64)
    best[0] = 0.0
    for i in range(1, n):
        xi = values[i]
        m = -1.0
        for j in range(i):
            d = xi - values[j]
            if d < 0.0:
                d = -d
            if kind == PHI_POWER:
                v = best[j] + d**p
            else:
                v = best[j] + _psi_scalar(d)
            if v > m:
                m = v
        best[i] = m
    return best[n - 1]


def _var_dp_numpy(values, kind, p):
    n = values.shape[0]
    best = np.empty(n, dtype=np.float64)
    best[0] = 0.0
    for i in range(1, n):
        d = np.abs(values[i] - values[:i])
        best[i] = np.max(best[:i] + _phi_np(d, kind, p))
    return best[n - 1]


def var_dp(values: np.ndarray, kind: int, p: float, backend: str | None = None) -> float:
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        return 0.0
    if _resolve(backend) == "numba":
        return float(_var_dp_numba(values, kind, p))
    return float(_var_dp_numpy(values, kind, p))


# ---------------------------------------------------------------------------
# mesh-constrained DP for the psi gauge.
#
# A transition j -> i is feasible iff a partition of [0,T] with mesh < delta
# can evaluate the step path at consecutive points carrying values x_j then
# x_i.  Landing anywhere in block j and departing just before times[j+1], the
# condition is times[i] - times[j+1] < delta; adjacent blocks always qualify.


def _qvar_dp_loop(times, values, delta):
    n = values.shape[0]
    best = np.empty(n, dtype=np.float64)
    best[0] = 0.0
    lo = 0
    for i in range(1, n):
        ti = times[i]
        while times[lo + 1] <= ti - delta:
            lo += 1
        xi = values[i]
        m = -1.0
        for j in range(lo, i):
            d = xi - values[j]
            if d < 0.0:
                d = -d
            v = best[j] + _psi_scalar(d)
            if v > m:
                m = v
        best[i] = m
    return best[n - 1]


def _qvar_dp_numpy(times, values, delta):
    n = values.shape[0]
    best = np.empty(n, dtype=np.float64)
    best[0] = 0.0
    lo = 0
    for i in range(1, n):
        ti = times[i]
        while times[lo + 1] <= ti - delta:
            lo += 1
        d = np.abs(values[i] - values[lo:i])
        best[i] = np.max(best[lo:i] + psi_np(d))
    return best[n - 1]


def qvar_dp(times: np.ndarray, values: np.ndarray, delta: float, backend: str | None = None) -> float:
    times = np.ascontiguousarray(times, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        return 0.0
    if _resolve(backend) == "numba":
        return float(_qvar_dp_numba(times, values, delta))
    return float(_qvar_dp_numpy(times, values, delta))


# ---------------------------------------------------------------------------
# dyadic grid of buy-low/sell-high cells.
#
# Cell k at scale j trades the band (k*h, (k+1)*h), h = 2^-j: it buys one
# unit at the first sample <= k*h, sells at the first later sample
# >= (k+1)*h, and repeats.  The kernel simulates cells k = 0..k_cap-1 in one
# pass, touching only the cells whose state can change at each price move:
#
#   after a sample x, every cell with k*h >= x holds and every cell with
#   (k+1)*h <= x is flat; only the band between consecutive samples needs
#   inspection, so total work is O(sum |dx| * 2^j + n + k_cap).
#
# Outputs per sample: total capital of all cells (initial cash k*h each,
# accrued gains, mark-to-market of held units) and the held-unit count.


def _doob_grid_loop(values, j_exp, k_cap):
    n = values.shape[0]
    state = np.zeros(k_cap, dtype=np.uint8)  # 0 flat, 1 holding
    buy = np.zeros(k_cap, dtype=np.float64)
    h = math.ldexp(1.0, -j_exp)
    init_sum = h * (k_cap * (k_cap - 1) / 2.0)

    agg = np.empty(n, dtype=np.float64)
    held = np.empty(n, dtype=np.int64)

    gain = 0.0
    gain_c = 0.0  # Kahan compensation
    sum_buy = 0.0
    sum_buy_c = 0.0
    n_hold = 0

    for t in range(n):
        x = values[t]
        q = math.ldexp(x, j_exp)  # exact: x / h
        if t == 0:
            k_lo = int(math.ceil(q))
            if k_lo < 0:
                k_lo = 0
            for k in range(k_lo, k_cap):
                state[k] = 1
                buy[k] = x
                n_hold += 1
                y = x - sum_buy_c
                s = sum_buy + y
                sum_buy_c = (s - sum_buy) - y
                sum_buy = s
        else:
            u = values[t - 1]
            if x < u:
                qp = math.ldexp(u, j_exp)
                k_lo = int(math.ceil(q))
                if k_lo < 0:
                    k_lo = 0
                k_hi = int(math.ceil(qp))
                if k_hi > k_cap:
                    k_hi = k_cap
                for k in range(k_lo, k_hi):
                    if state[k] == 0:
                        state[k] = 1
                        buy[k] = x
                        n_hold += 1
                        y = x - sum_buy_c
                        s = sum_buy + y
                        sum_buy_c = (s - sum_buy) - y
                        sum_buy = s
            elif x > u:
                qp = math.ldexp(u, j_exp)
                k_lo = int(math.floor(qp))
                if k_lo < 0:
                    k_lo = 0
                k_hi = int(math.floor(q))  # sell cells k <= floor(q) - 1
                if k_hi > k_cap:
                    k_hi = k_cap
                for k in range(k_lo, k_hi):
                    if state[k] == 1:
                        state[k] = 0
                        g = x - buy[k]
                        y = g - gain_c
                        s = gain + y
                        gain_c = (s - gain) - y
                        gain = s
                        n_hold -= 1
                        y = -buy[k] - sum_buy_c
                        s = sum_buy + y
                        sum_buy_c = (s - sum_buy) - y
                        sum_buy = s
        agg[t] = init_sum + gain + n_hold * x - sum_buy
        held[t] = n_hold
    return agg, held


def _doob_grid_numpy(values, j_exp, k_cap):
    n = values.shape[0]
    state = np.zeros(k_cap, dtype=bool)
    buy = np.zeros(k_cap, dtype=np.float64)
    h = math.ldexp(1.0, -j_exp)
    init_sum = h * (k_cap * (k_cap - 1) / 2.0)

    agg = np.empty(n, dtype=np.float64)
    held = np.empty(n, dtype=np.int64)

    gain = 0.0
    sum_buy = 0.0
    n_hold = 0

    for t in range(n):
        x = float(values[t])
        q = math.ldexp(x, j_exp)
        if t == 0:
            k_lo = max(int(math.ceil(q)), 0)
            k_hi = k_cap
            if k_lo < k_hi:
                state[k_lo:k_hi] = True
                buy[k_lo:k_hi] = x
                cnt = k_hi - k_lo
                n_hold += cnt
                sum_buy += x * cnt
        else:
            u = float(values[t - 1])
            if x < u:
                qp = math.ldexp(u, j_exp)
                k_lo = max(int(math.ceil(q)), 0)
                k_hi = min(int(math.ceil(qp)), k_cap)
                if k_lo < k_hi:
                    seg = state[k_lo:k_hi]
                    fresh = ~seg
                    cnt = int(fresh.sum())
                    if cnt:
                        buy[k_lo:k_hi][fresh] = x
                        seg[fresh] = True
                        n_hold += cnt
                        sum_buy += x * cnt
            elif x > u:
                qp = math.ldexp(u, j_exp)
                k_lo = max(int(math.floor(qp)), 0)
                k_hi = min(int(math.floor(q)), k_cap)
                if k_lo < k_hi:
                    seg = state[k_lo:k_hi]
                    bseg = buy[k_lo:k_hi]
                    cnt = int(seg.sum())
                    if cnt:
                        sold = bseg[seg]
                        gain += float(x * cnt - sold.sum())
                        sum_buy -= float(sold.sum())
                        n_hold -= cnt
                        seg[:] = False
        agg[t] = init_sum + gain + n_hold * x - sum_buy
        held[t] = n_hold
    return agg, held


def doob_grid_trace(
    values: np.ndarray, j_exp: int, k_cap: int, backend: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample aggregate capital and held-unit count of a dyadic cell grid.

    ``j_exp`` is the scale exponent (cell height ``2**-j_exp``; may be
    negative), ``k_cap`` the number of cells simulated, ``k = 0..k_cap-1``.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    if k_cap <= 0:
        n = values.shape[0]
        return np.zeros(n), np.zeros(n, dtype=np.int64)
    if _resolve(backend) == "numba":
        return _doob_grid_numba(values, j_exp, k_cap)
    return _doob_grid_numpy(values, j_exp, k_cap)


# ---------------------------------------------------------------------------
# compiled twins

if HAVE_NUMBA:
    _psi_scalar = _njit(cache=True)(_psi_scalar)
    _var_dp_numba = _njit(cache=True)(_var_dp_loop)
    _qvar_dp_numba = _njit(cache=True)(_qvar_dp_loop)
    _doob_grid_numba = _njit(cache=True)(_doob_grid_loop)
else:  # pragma: no cover
    _var_dp_numba = _var_dp_loop
    _qvar_dp_numba = _qvar_dp_loop
    _doob_grid_numba = _doob_grid_loop


def warmup() -> None:
    """Trigger JIT compilation so timed runs measure the algorithms only."""
    if default_backend() != "numba":
        return
    v = np.array([1.0, 0.5, 1.5, 0.25], dtype=np.float64)
    t = np.array([0.0, 0.25, 0.5, 1.0], dtype=np.float64)
    var_dp(v, PHI_POWER, 2.0)
    var_dp(v, PHI_PSI, 0.0)
    qvar_dp(t, v, 0.3)
    doob_grid_trace(v, 2, 8)
