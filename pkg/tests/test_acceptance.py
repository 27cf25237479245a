"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line.

Criterion 7 needs a converted MIT-BIH Record 100 and is skipped unless
``GCCD_RECORD100`` names a signal file (``rate=360 id=100`` header, one
sample per line). Its reference R peaks are read from ``GCCD_RECORD100_ANN``
or, if unset, from the signal path with ``.ann`` appended (0-based indices).
"""

import math
import os
import random
import statistics
import time
from dataclasses import replace

import pytest

from gccd import io
from gccd.evaluation import MatchResult, compute_metrics, match_detections, tolerance_samples
from gccd.learning import LearnConfig, find_graph_candidates, learn, peak_bands
from gccd.model import ConstraintGraph, Signal, evaluate_constraint, two_state_graph, validate_graph
from gccd.pwq import add_constant, add_point_loss, min_envelope, min_less, min_more
from gccd.solver import extract_peaks, solve, solve_with_value
from gccd.synth import noisy_ecg, pulse_train
from oracles import ParabolaFamily, grid_dp_cost, random_graph

LO, HI = -10.0, 10.0


def test_c1_oracle_equivalence(criterion):
    rng = random.Random(1)
    t0 = time.perf_counter()
    worst_gap, worst_violation, misses = 0.0, 0.0, 0
    for _ in range(500):
        g = random_graph(rng)
        z = [rng.randint(0, 9) for _ in range(rng.randint(1, 12))]
        seg, value = solve_with_value(z, g)
        diff = abs(grid_dp_cost(z, g) - value)
        worst_gap = max(worst_gap, diff / (3 * len(z) * 1e-3))
        misses += diff > 3 * len(z) * 1e-3
        for k, eid in enumerate(seg.edge_trace):
            v = evaluate_constraint(g.edge(eid), seg.segment_means[k], seg.segment_means[k + 1])
            worst_violation = max(worst_violation, v)
    elapsed = time.perf_counter() - t0
    ok = misses == 0 and worst_violation <= 1e-9 and elapsed < 120
    criterion(
        1,
        "oracle equivalence on 500 instances",
        ok,
        f"misses={misses} worst cost gap/tolerance={worst_gap:.3f} worst g_e={worst_violation:.2e} time={elapsed:.1f}s",
    )


def _rel_close(x, y, rel=1e-9):
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= rel * max(1.0, abs(y))


def test_c2_pwq_soundness(criterion):
    rng = random.Random(2)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(100):
        ff, fg = ParabolaFamily.random(rng), ParabolaFamily.random(rng)
        f, g = ff.to_pwq(), fg.to_pwq()
        z, k, gap = rng.uniform(-9, 9), rng.uniform(-20, 20), rng.choice([0.0, 0.5, 1.0, 3.0])
        loss, const, env = add_point_loss(f, z), add_constant(f, k), min_envelope(f, g)
        less, more = min_less(f, gap), min_more(f, gap)
        for _ in range(1000):
            x = rng.uniform(LO, HI)
            checks = (
                (loss(x), ff(x) + (x - z) ** 2),
                (const(x), ff(x) + k),
                (env(x), min(ff(x), fg(x))),
                (less(x), ff.min_over(LO, x - gap)),
                (more(x), ff.min_over(x + gap, HI)),
            )
            failures += sum(not _rel_close(a, b) for a, b in checks)
    elapsed = time.perf_counter() - t0
    criterion(2, "pwq pointwise soundness, 100 pairs x 1000 points", failures == 0 and elapsed < 10, f"failures={failures} time={elapsed:.1f}s")


def _continuous_graph(rng):
    g = random_graph(rng)
    edges = tuple(replace(e, gap=rng.uniform(0.1, 3.0), penalty=rng.uniform(0.1, 10.0)) for e in g.edges)
    return ConstraintGraph(g.vertices, edges)


def test_c3_equivariance(criterion):
    rng = random.Random(3)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(100):
        g = _continuous_graph(rng)
        z = [rng.uniform(0, 9) for _ in range(rng.randint(1, 25))]
        base = solve(z, g)
        k, alpha = rng.uniform(-100, 100), rng.uniform(0.2, 5.0)
        shifted = solve([x + k for x in z], g)
        scaled_g = ConstraintGraph(g.vertices, tuple(replace(e, gap=e.gap * alpha, penalty=e.penalty * alpha**2) for e in g.edges))
        scaled = solve([x * alpha for x in z], scaled_g, margin=alpha)
        for other, fn in ((shifted, lambda m: m + k), (scaled, lambda m: m * alpha)):
            same = other.boundaries == base.boundaries and other.segment_states == base.segment_states
            means = all(abs(fn(m) - n) <= 1e-9 * (1 + abs(n)) for m, n in zip(base.segment_means, other.segment_means))
            bad += not (same and means)
    elapsed = time.perf_counter() - t0
    criterion(3, "offset and scale equivariance on 100 instances", bad == 0 and elapsed < 30, f"violations={bad} time={elapsed:.1f}s")


def _pulse_learn():
    signal, centres = pulse_train(200, seed=0, amplitude=5.0)
    labels = peak_bands(centres, 6, len(signal))
    graph, trace = learn(signal, labels, two_state_graph(8.0, 1.0), LearnConfig(8.0, 1.0, max_iterations=10))
    return io.format_graph(graph), trace


def test_c4_greedy_learning(criterion):
    t0 = time.perf_counter()
    graph_a, trace_a = _pulse_learn()
    graph_b, trace_b = _pulse_learn()
    elapsed = time.perf_counter() - t0
    errors = trace_a.errors
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    same = graph_a == graph_b and trace_a.to_text() == trace_b.to_text()
    ok = decreasing and errors[-1] == 0 and same and elapsed < 60
    criterion(4, "pulse-train learning", ok, f"errors={errors} identical_rerun={same} time={elapsed:.1f}s")


def test_c5_candidate_count(criterion):
    t0 = time.perf_counter()
    cands = find_graph_candidates(two_state_graph(100, 5e5), LearnConfig())
    elapsed = time.perf_counter() - t0
    valid = all(validate_graph(g) == [] for g in cands)
    criterion(5, "candidate-count bound", len(cands) <= 22 and valid and elapsed < 1, f"candidates={len(cands)} all_valid={valid}")


def test_c6_metric_arithmetic(criterion):
    rng = random.Random(6)
    mismatches = 0
    for _ in range(1000):
        tp, fp, fn = rng.randint(1, 10**6), rng.randint(0, 10**4), rng.randint(0, 10**4)
        m = compute_metrics(MatchResult(tp, fp, fn))
        want = (tp / (tp + fn) * 100, tp / (tp + fp) * 100, (fn + fp) / (tp + fn) * 100)
        mismatches += any(abs(a - b) > 1e-12 * max(1.0, b) for a, b in zip(m, want))
    # 109,494 beats; 258 missed and 347 spurious detections give the manual-graph reference row
    row = compute_metrics(MatchResult(tp=109236, fp=347, fn=258))
    rounded = tuple(round(x, 2) for x in row)
    ok = mismatches == 0 and rounded == (99.76, 99.68, 0.55)
    criterion(6, "metric arithmetic and manual-graph row", ok, f"mismatches={mismatches} row={rounded}")


def _record100():
    path = os.environ.get("GCCD_RECORD100")
    if not path:
        return None
    ann = os.environ.get("GCCD_RECORD100_ANN") or f"{path}.ann"
    return io.read_signal(path), io.read_annotations(ann)


def test_c7_record_100(criterion):
    data = _record100()
    if data is None:
        from acceptance_log import LINES

        LINES.append("criterion 7 [SKIP] Record 100 spot-check: set GCCD_RECORD100 to a converted record")
        pytest.skip("no converted Record 100 supplied (GCCD_RECORD100)")
    signal, ann = data
    n = min(len(signal), int(300 * signal.rate))
    head = Signal(signal.samples[:n], signal.rate, signal.id)
    graph = io.bundled_graph("manual_ecg")
    t0 = time.perf_counter()
    peaks = extract_peaks(solve(head, graph), graph.vertex_by_name("R").id)
    elapsed = time.perf_counter() - t0
    result = match_detections([a for a in ann if a <= n], peaks, tolerance_samples(150, signal.rate))
    m = compute_metrics(result)
    ok = m.sen >= 99.0 and m.ppr >= 99.0 and elapsed < 120
    criterion(7, "Record 100 first 5 minutes", ok, f"Sen={m.sen:.2f} PPR={m.ppr:.2f} time={elapsed:.1f}s")


def test_c8_runtime_scaling(criterion):
    graph = io.bundled_graph("manual_ecg")
    sizes = (10_000, 20_000, 40_000, 80_000)
    times = []
    for n in sizes:
        signal, _ = noisy_ecg(n, seed=8)
        t0 = time.perf_counter()
        solve(signal, graph)
        times.append(time.perf_counter() - t0)
    ratios = [b / a for a, b in zip(times, times[1:])]
    med = statistics.median(ratios)
    detail = " ".join(f"{n}:{t:.1f}s" for n, t in zip(sizes, times)) + f" median ratio={med:.2f}"
    criterion(8, "runtime scaling per doubling", med <= 2.5 and sum(times) < 300, detail)
