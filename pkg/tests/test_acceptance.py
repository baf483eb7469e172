"""Acceptance suite: one test per exit criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the summary lines.
Random fixtures that feed exact (tolerance-free) comparisons are snapped to
dyadic grids so every capital sum is exact in float64.
"""

import math
import time

import numpy as np

from roughmarket import (
    AtIndex,
    GeneratorSpec,
    PricePath,
    SimpleStrategy,
    VariationFunctional,
    borrowing_free_check,
    brute_force_var_phi,
    clairvoyant_strategy,
    crossings,
    discretize,
    doob_strategy,
    generate,
    grid_crossings,
    psi,
    qvar_profile,
    run_mixture,
    run_simple,
    upper_prob_singleton,
    var_p,
    var_phi,
    var_signed,
    verify_prop3_bound,
    volatility_mixture,
)
from roughmarket.mixtures import borrowing_free_mixture_check

from conftest import step_path


def _announce(num: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\n[criterion {num}] {status} - {detail}")
    assert ok, detail


def _dyadic(values, bits=20):
    scale = 2.0**bits
    return np.maximum(np.round(np.asarray(values) * scale) / scale, 0.0)


def _quantized_walk(seed: int, n_max: int = 200, sigma: float = 0.4) -> PricePath:
    rng = np.random.default_rng(np.uint64(seed))
    n = int(rng.integers(4, n_max + 1))
    values = np.exp(np.cumsum(rng.normal(0.0, sigma, size=n)))
    values = values * float(rng.uniform(0.5, 2.0)) / max(values.max(), 1e-9)
    return step_path(_dyadic(2.0 * values))


def _positive_walk(seed: int, n_max: int = 120, sigma: float = 0.35) -> PricePath:
    rng = np.random.default_rng(np.uint64(seed))
    n = int(rng.integers(4, n_max + 1))
    values = np.exp(np.cumsum(rng.normal(0.0, sigma, size=n)))
    return step_path(values)


def test_criterion_1_oracle_equivalence():
    gauges = [VariationFunctional.power(p) for p in (0.5, 1.0, 2.0, 2.5, 3.0)]
    gauges.append(VariationFunctional.taylor_psi())
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(500):
        rng = np.random.default_rng(np.uint64(seed))
        n = int(rng.integers(3, 13))
        path = step_path(np.abs(rng.normal(1.0, 0.8, size=n)))
        for phi in gauges:
            fast = var_phi(path, phi)
            slow = brute_force_var_phi(path, phi)
            worst = max(worst, abs(fast - slow) / max(abs(slow), 1e-300))
    elapsed = time.perf_counter() - t0
    _announce(
        1,
        worst <= 1e-12 and elapsed < 10.0,
        f"DP vs exhaustive oracle on 500 paths x 6 gauges: "
        f"max rel err {worst:.2e} (tol 1e-12), {elapsed:.2f}s (limit 10s)",
    )


def test_criterion_2_doob_bound_exact():
    t0 = time.perf_counter()
    violations = 0
    grid = 2.0**-10
    for seed in range(1000):
        path = _quantized_walk(seed)
        rng = np.random.default_rng(np.uint64(seed) + 10_000)
        hi = max(int(path.sup / grid), 2)
        a_i, b_i = sorted(int(x) for x in rng.choice(hi, size=2, replace=False))
        a, b = a_i * grid, (b_i + 1) * grid  # dyadic, 0 <= a < b <= sup
        trace = run_simple(doob_strategy(a, b), path)
        ups = crossings(path, a, b).up
        if trace.min_capital < 0.0 or trace.final_capital < (b - a) * ups:
            violations += 1
    elapsed = time.perf_counter() - t0
    _announce(
        2,
        violations == 0 and elapsed < 5.0,
        f"band strategy on 1000 paths: trace >= 0 and final >= width*upcrossings "
        f"exactly, {violations} violations, {elapsed:.2f}s (limit 5s)",
    )


def test_criterion_3_growth_and_superhedge_identities():
    worst_factor = 0.0
    worst_forms = 0.0
    for seed in range(1000):
        path = _positive_walk(seed)
        strat, factor = clairvoyant_strategy(path)
        trace = run_simple(strat, path)
        realized = trace.final_capital / trace.initial_capital
        d = np.diff(np.log(path.values))
        plus = float(np.sum(d[d > 0.0]))
        minus = float(-np.sum(d[d < 0.0]))
        worst_factor = max(
            worst_factor,
            abs(realized - math.exp(plus)) / math.exp(plus),
            abs(factor - math.exp(plus)) / math.exp(plus),
        )
        form_up = math.exp(-plus)
        form_sqrt = math.sqrt(path.values[0] / path.values[-1] * math.exp(-(plus + minus)))
        worst_forms = max(worst_forms, abs(form_up - form_sqrt) / max(form_up, form_sqrt))
        value = upper_prob_singleton(path)  # raises FormMismatch beyond 1e-12
        assert abs(value - form_sqrt) <= 1e-12 * form_sqrt
    ramp = generate(GeneratorSpec(kind="linear-drift", n_samples=64, eps=1.0))
    ramp_err = abs(upper_prob_singleton(ramp) - 0.5)
    ok = worst_factor <= 1e-9 and worst_forms <= 1e-12 and ramp_err <= 1e-12
    _announce(
        3,
        ok,
        f"reinvestment factor vs exp(var+(log)) rel {worst_factor:.2e} (tol 1e-9); "
        f"superhedge closed forms rel {worst_forms:.2e} (tol 1e-12); "
        f"ramp path value err {ramp_err:.2e} (tol 1e-12)",
    )


def test_criterion_4_explicit_variation_bound():
    t0 = time.perf_counter()
    margins = []
    violations = 0
    cases = 0
    for hurst in (0.4, 0.5, 0.6):
        for seed in range(50):
            path = generate(
                GeneratorSpec(
                    kind="exp-fractional", n_samples=4097, hurst=hurst, sigma=0.5, seed=seed
                )
            )
            for n_steps in (64, 256, 1024):
                for eps in (0.5, 1.0):
                    for delta in (0.5, 1.0):
                        rep = verify_prop3_bound(
                            path, eps, delta, n_steps, raise_on_violation=False
                        )
                        cases += 1
                        margins.append(rep.margin)
                        violations += 0 if rep.passed else 1
    saw = step_path([0.0, 1.0, 0.0, 1.0])
    for eps in (0.5, 1.0):
        for delta in (0.5, 1.0):
            rep = verify_prop3_bound(saw, eps, delta, 3, raise_on_violation=False)
            cases += 1
            margins.append(rep.margin)
            violations += 0 if rep.passed else 1
    elapsed = time.perf_counter() - t0
    _announce(
        4,
        violations == 0 and elapsed < 120.0,
        f"explicit capital bound on {cases} cases (eps,delta in {{0.5,1}}, "
        f"N in {{64,256,1024}}, 3 Hurst values x 50 seeds + sawtooth): "
        f"{violations} violations, min margin {min(margins):.4f}, "
        f"{elapsed:.1f}s (limit 120s)",
    )


def test_criterion_5_scale_mixture_crossing_inequality():
    phi = VariationFunctional.power(2.5)
    violations = 0
    mixes = {L: volatility_mixture(phi, L, j_policy=8, kind="prop1") for L in (0, 1, 2)}
    for seed in range(200):
        rng = np.random.default_rng(np.uint64(seed) + 77)
        L = int(rng.integers(0, 3))
        path = _quantized_walk(seed, n_max=200, sigma=0.35)
        path = step_path(_dyadic(path.values * (2.0**L * 0.45 / max(path.sup, 1e-9))))
        mix = mixes[L]
        s_t = run_mixture(mix, path).final_capital
        rhs = sum(
            lv.cell_weight * lv.cell_height * grid_crossings(path, lv.cell_height).up
            for lv in mix.levels
        )
        if s_t < rhs:
            violations += 1
    _announce(
        5,
        violations == 0,
        f"scale mixture final capital >= weighted band-crossing sum "
        f"(independent counter) on 200 paths: {violations} violations",
    )


def test_criterion_6_variation_algebra():
    worst = 0.0
    for seed in range(1000):
        path = _positive_walk(seed, n_max=80)
        total, plus, minus = var_signed(path)
        dx = float(path.values[-1] - path.values[0])
        worst = max(worst, abs(total - (plus + minus)), abs((plus - minus) - dx))
    psi_exact = psi(1.0) == 0.5
    monotone_fail = 0
    for seed in range(100):
        path = _positive_walk(seed, n_max=60)
        pts = qvar_profile(path, [1.0, 0.4, 0.15, 0.05, 0.01])
        vals = [pt.value for pt in pts]
        if any(b > a + 1e-12 for a, b in zip(vals, vals[1:])):
            monotone_fail += 1
    _announce(
        6,
        worst <= 1e-9 and psi_exact and monotone_fail == 0,
        f"signed variation identities within {worst:.2e} (tol 1e-9) on 1000 paths; "
        f"psi(1)=0.5 exactly: {psi_exact}; mesh profile monotone on 100 paths "
        f"({monotone_fail} failures)",
    )


def test_criterion_7_borrowing_audit():
    phi = VariationFunctional.power(2.5)
    prop1 = volatility_mixture(phi, 1, j_policy=6, kind="prop1")
    prop3 = volatility_mixture(None, 1, j_policy=6, kind="prop3", eps=1.0, delta=1.0)
    clean_fail = 0
    violator_fail = 0
    for seed in range(500):
        path = _positive_walk(seed, n_max=60)
        ok = borrowing_free_check(doob_strategy(0.25, 0.75), path).ok
        ok &= borrowing_free_check(clairvoyant_strategy(path)[0], path).ok
        ok &= borrowing_free_mixture_check(prop1, path).ok
        ok &= borrowing_free_mixture_check(prop3, path).ok
        if not ok:
            clean_fail += 1
        short = SimpleStrategy(1.0, ((AtIndex(0), -1.0),), descriptor="short")
        rep = borrowing_free_check(short, path)
        bad = rep.ok or rep.continuation_min_capital >= 0.0
        lev_h = 2.0 / float(path.values[0])
        leveraged = SimpleStrategy(
            1.0, ((AtIndex(0), lev_h),), descriptor="leveraged", position_bound=max(lev_h, 1.0)
        )
        rep = borrowing_free_check(leveraged, path)
        bad |= rep.ok or rep.continuation_min_capital >= 0.0
        if bad:
            violator_fail += 1
    _announce(
        7,
        clean_fail == 0 and violator_fail == 0,
        f"band/scale-mixture/reinvestment strategies borrowing-free on 500 paths "
        f"({clean_fail} failures); short and leveraged violators each exhibit "
        f"strictly negative capital on the adversarial continuation "
        f"({violator_fail} failures)",
    )


def test_criterion_8_direction_only_refinement():
    n_grid = (256, 1024, 4096)
    var_cols = {n: [] for n in n_grid}
    st_cols = {n: [] for n in n_grid}
    for seed in range(50):
        path = generate(
            GeneratorSpec(kind="exp-fractional", n_samples=4097, hurst=0.4, sigma=0.5, seed=seed)
        )
        for n_steps in n_grid:
            sub = discretize(path, n_steps)
            var_cols[n_steps].append(var_p(sub, 2.5))
            rep = verify_prop3_bound(
                path, 0.5, 0.5, n_steps, j_policy=14, raise_on_violation=False
            )
            st_cols[n_steps].append(rep.s_t)
    med_var = [float(np.median(var_cols[n])) for n in n_grid]
    med_st = [float(np.median(st_cols[n])) for n in n_grid]
    var_increasing = all(b > a for a, b in zip(med_var, med_var[1:]))
    st_nondecreasing = all(b >= a for a, b in zip(med_st, med_st[1:]))
    _announce(
        8,
        var_increasing and st_nondecreasing,
        f"H=0.4 medians over 50 seeds across N=256/1024/4096: "
        f"var_2.5 [{', '.join(f'{v:.3f}' for v in med_var)}] strictly increasing: {var_increasing}; "
        f"mixture final capital [{', '.join(f'{v:.3f}' for v in med_st)}] non-decreasing: {st_nondecreasing}",
    )
