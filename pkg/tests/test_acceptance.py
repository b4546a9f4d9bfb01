"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run pytest with -s to see them all;
failures carry the same line in the assertion message).
"""
import itertools
import time

import numpy as np
import pytest

from cavsim import (ResourceGraph, fairness_index, fixed_window_run,
                    global_fairness, knee_from_sweep, load_bundled,
                    max_min_fair_allocation, run)
from cavsim.report import build_report, trace_to_string
from cavsim.router_policy import iterative_fair_share
from cavsim.scenario import RunControls, Scenario, ServerSpec, UserSpec

from conftest import adjustments
from oracles import grid_max_min, lex_less_or_close, replay_queue_areas, \
    waterfill_level


def report(number, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    if not ok:
        pytest.fail(line)


def test_criterion_01_case1_knee_sweep():
    """Fixed-window sweep over 1..25 locates the knee at window 15 or 16
    in under ten seconds."""
    sc = load_bundled("case1")
    started = time.perf_counter()
    points = [fixed_window_run(sc, w).sweep_point("u1") for w in range(1, 26)]
    elapsed = time.perf_counter() - started
    window, peak = knee_from_sweep(points)
    ok = window in (15, 16) and elapsed < 10.0
    report(1, ok, f"knee at window {window} (power {peak:.6g}), "
                  f"swept 25 windows in {elapsed:.2f}s")


def test_criterion_02_case1_adaptive_ramp_and_band(case1_result):
    """Adaptive run ramps monotonically in unit steps to 16, then holds a
    band of width at most 4 inside [12, 17]."""
    adj = adjustments(case1_result, "u1")
    first_dec = next(i for i, a in enumerate(adj) if a[1] == "decrease")
    ramp = [a[2] for a in adj[:first_dec]]
    post = [a[2] for a in adj[first_dec:]]
    monotone = ramp == list(range(2, ramp[-1] + 1))
    peak_16 = ramp[-1] == 16
    in_band = min(post) >= 12 and max(post) <= 17
    narrow = max(post) - min(post) <= 4
    ok = monotone and peak_16 and in_band and narrow
    report(2, ok,
           f"ramp 1->{ramp[-1]} monotone={monotone}, oscillation "
           f"[{min(post)}, {max(post)}] width {max(post) - min(post)}")


def test_criterion_03_case2_convergence(case2_result):
    """With the second user active, windows settle near (10, 5) and each
    user carries 0.1 +- 20% packets per unit time."""
    steady_from = 0.6 * case2_result.scenario.run.end_time
    w1 = [a[2] for a in adjustments(case2_result, "u1") if a[0] >= steady_from]
    w2 = [a[2] for a in adjustments(case2_result, "u2") if a[0] >= steady_from]
    t1 = case2_result.users["u1"].throughput
    t2 = case2_result.users["u2"].throughput
    w1_ok = w1 and all(8 <= w <= 12 for w in w1)
    w2_ok = w2 and all(3 <= w <= 7 for w in w2)
    t_ok = 0.08 <= t1 <= 0.12 and 0.08 <= t2 <= 0.12
    ok = w1_ok and w2_ok and t_ok
    report(3, ok,
           f"w1 in [{min(w1)},{max(w1)}] (want 10+-2), "
           f"w2 in [{min(w2)},{max(w2)}] (want 5+-2), "
           f"throughputs ({t1:.4f}, {t2:.4f}) (want 0.1+-20%)")


def test_criterion_04_case2_global_fairness(case2_result):
    """Fairness of the measured allocation against the max-min optimum
    over the steady-state window is at least 0.95."""
    rep = build_report(case2_result)
    ok = rep.global_fairness >= 0.95
    report(4, ok, f"global fairness {rep.global_fairness:.4f} "
                  f"(optimal {rep.optimal_allocations})")


def test_criterion_05_fair_share_oracle_equivalence():
    """The iterative fair-share procedure agrees with an independent
    bisection water-fill on 1200 random demand tables."""
    rng = np.random.default_rng(20260809)
    worst = 0.0
    for i in range(1200):
        n = int(rng.integers(1, 9))
        # positive demands: a flow is in the table because it sent packets
        demands = rng.uniform(0.01, 100.0, size=n)
        factor = 0.9 if i % 2 == 0 else float(rng.uniform(0.3, 0.95))
        capacity = factor * float(demands.sum())
        share = iterative_fair_share(list(demands), capacity)
        level = waterfill_level(list(demands), capacity)
        worst = max(worst, abs(share - level))
    ok = worst <= 1e-9
    report(5, ok, f"1200 tables (n <= 8), worst |share - oracle| = {worst:.3g}")


def test_criterion_06_max_min_grid_oracle():
    """Progressive water-filling matches exhaustive lexicographic search
    on every path assignment over fixed 1-3 resource graphs."""
    capacity_sets = {1: {"a": 2.0}, 2: {"a": 2.0, "b": 1.0},
                     3: {"a": 2.0, "b": 1.0, "c": 4.0}}
    step = 0.25
    checked = 0
    for m, caps in capacity_sets.items():
        subsets = [c for k in range(1, m + 1)
                   for c in itertools.combinations(sorted(caps), k)]
        for n in range(1, 5):
            for paths in itertools.combinations_with_replacement(subsets, n):
                graph = ResourceGraph(caps, list(paths))
                opt = max_min_fair_allocation(graph)
                for name, cap in caps.items():
                    used = sum(a for a, p in zip(opt.allocations, paths)
                               if name in p)
                    assert used <= cap + 1e-9
                best = grid_max_min(caps, paths, step)
                assert lex_less_or_close(
                    np.sort(best), np.sort(opt.allocations), step + 1e-9
                ), f"grid oracle beats water-filling on {caps} {paths}"
                checked += 1
    report(6, True, f"{checked} resource graphs vs grid oracle at step {step}")


def test_criterion_07_fairness_property_suite():
    """Bounds, scale invariance, and equality-iff-uniform over 10,000
    random vectors with zero violations."""
    rng = np.random.default_rng(42)
    violations = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 21))
        x = rng.gamma(0.7, 2.0, size=n)
        x[rng.random(n) < 0.2] = 0.0
        if x.sum() <= 0:
            x[int(rng.integers(0, n))] = 1.0
        f = fairness_index(x)
        if not (1.0 / n - 1e-12 <= f <= 1.0 + 1e-12):
            violations += 1
        c = float(rng.uniform(1e-3, 1e3))
        if abs(fairness_index(c * x) - f) > 1e-9:
            violations += 1
        uniform = np.full(n, float(rng.uniform(0.1, 10.0)))
        if abs(fairness_index(uniform) - 1.0) > 1e-12:
            violations += 1
        if n > 1:
            skewed = uniform.copy()
            skewed[0] *= 2.0
            if not fairness_index(skewed) < 1.0:
                violations += 1
    ok = violations == 0
    report(7, ok, f"10000 vectors, {violations} violations")


def test_criterion_08_area_accounting(case1_result, case2_result, mm1_result,
                                      case1_pinned15):
    """Router (area + prev_area) matches an independent trace integrator
    exactly, for every trace in the suite."""
    checked = 0
    for result in (case1_result, case2_result, mm1_result, case1_pinned15):
        for name, policy in result.policies.items():
            area, prev_area, prev_begin, q = replay_queue_areas(
                result.trace, name)
            assert area == policy.area, f"{name}: area mismatch"
            assert prev_area == policy.prev_area, f"{name}: prev_area mismatch"
            assert prev_begin == policy.prev_cycle_begin_time
            assert q == policy.q_length
            checked += 1
    report(8, True, f"{checked} router histories re-integrated exactly")


def test_criterion_09_mm1_knee_queue_of_one():
    """Exponential service with pinned windows: at the measured
    power-optimal load the mean queue length is 1.0 +- 0.2 over at least
    1e5 service completions."""
    def mm1(speed, end_time):
        return Scenario(
            routers=[ServerSpec("m1", "exponential", 1.0)],
            users=[UserSpec("u", ("m1",), w_max=4, speed=speed, window=1)],
            run=RunControls(end_time=end_time, seed=7, mode="fixed",
                            warmup_fraction=0.2),
        )

    speeds = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    powers = {}
    for speed in speeds:
        res = fixed_window_run(mm1(speed, 6000.0), 1)
        r = res.routers["m1"]
        powers[speed] = r.throughput / r.mean_sojourn
    best = max(speeds, key=lambda s: powers[s])

    long = fixed_window_run(mm1(best, 135_000.0), 1)
    r = long.routers["m1"]
    ok = r.completions_measured >= 100_000 and 0.8 <= r.mean_queue <= 1.2
    report(9, ok,
           f"power-optimal offered load at speed {best}: mean queue "
           f"{r.mean_queue:.3f} over {r.completions_measured} completions")


def test_criterion_10_determinism(case1_result, case2_result, mm1_result):
    """Re-running every bundled scenario with its seed reproduces the
    trace byte for byte."""
    names = []
    for first in (case1_result, case2_result, mm1_result):
        sc = first.scenario
        again = run(sc)
        a = trace_to_string(first.trace, seed=first.seed)
        b = trace_to_string(again.trace, seed=again.seed)
        assert a == b, "trace differs between identical runs"
        names.append(f"{len(a)} bytes")
    report(10, True, f"byte-identical traces for case1, case2, mm1 "
                     f"({', '.join(names)})")
