"""Globally optimal graph-constrained changepoint detection.

For every sample ``t`` and vertex ``v`` the solver keeps ``C[v](mu)``, the
cheapest cost of a feasible model of samples ``1..t`` that ends in state
``v`` with current segment mean ``mu``::

    C[v]_t = min(C[v]_{t-1},
                 min over edges e: u -> v of  op_e(C[u]_{t-1}, gap_e) + penalty_e)
             + (mu - z_t)**2

where ``op_e`` is :func:`~gccd.pwq.min_less` for up edges and
:func:`~gccd.pwq.min_more` for down edges.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Collection, Sequence

from .model import UP, ConstraintGraph, Segmentation, Signal, validate_graph
from .pwq import (
    INF,
    InfeasibleModel,
    PiecewiseQuadratic,
    add_point_loss,
    min_envelope,
    min_less,
    min_more,
    piece_min,
)

DOMAIN_MARGIN = 1.0
EDGE_PAD = 1e-9


class SolverError(RuntimeError):
    """Internal invariant failure while decoding the optimal path."""


@dataclass
class SolverState:
    """Everything needed to decode an optimum after the forward pass.

    ``trace[t][k]`` holds the piece start points and provenance tags of
    ``C[vertex k]`` after sample ``t + 1``. A tag is
    ``(last_change, previous_vertex, edge_id, argmin_rule)``.
    """

    graph: ConstraintGraph
    samples: tuple[float, ...]
    vertex_ids: tuple[int, ...]
    cost_functions: list[PiecewiseQuadratic]
    trace: list[list[tuple[list[float], list]]]
    domain: tuple[float, float]


def _check_states(graph: ConstraintGraph, states, what: str) -> set[int] | None:
    if states is None or states == "any":
        return None
    ids = {v.id for v in graph.vertices}
    chosen = set(states)
    unknown = chosen - ids
    if unknown:
        raise ValueError(f"unknown {what} state(s): {sorted(unknown)}")
    return chosen


def _prune(f: PiecewiseQuadratic, bound: float) -> PiecewiseQuadratic:
    limit = bound + 1e-9 * (1.0 + abs(bound))
    pieces = f.pieces
    if not any(p[4] != INF and piece_min(p)[0] > limit for p in pieces):
        return f
    out = [p if p[4] == INF or piece_min(p)[0] <= limit else (p[0], p[1], 0.0, 0.0, INF, None) for p in pieces]
    merged: list = []
    for p in out:
        if merged and merged[-1][4] == INF and p[4] == INF:
            merged[-1] = (merged[-1][0], p[1], 0.0, 0.0, INF, None)
        else:
            merged.append(p)
    return PiecewiseQuadratic(merged)


def forward(
    samples: Sequence[float],
    graph: ConstraintGraph,
    start_states: Collection[int] | str | None = None,
    end_states: Collection[int] | str | None = None,
    margin: float = DOMAIN_MARGIN,
) -> SolverState:
    """Run the dynamic program and keep what backtracking needs."""
    problems = validate_graph(graph)
    if problems:
        raise ValueError("invalid constraint graph: " + "; ".join(problems))
    zs = tuple(float(z) for z in samples)
    if not zs:
        raise ValueError("signal must contain at least one sample")
    if any(not math.isfinite(z) for z in zs):
        raise ValueError("signal contains NaN or infinite samples")
    starts = _check_states(graph, start_states, "start")
    ends = _check_states(graph, end_states, "end")

    lo, hi = min(zs) - margin, max(zs) + margin
    # closed-domain endpoints must survive the half-open piece intervals
    pad = EDGE_PAD * (1.0 + hi - lo)
    lo, hi = lo - pad, hi + pad
    vids = tuple(v.id for v in graph.vertices)
    index = {vid: k for k, vid in enumerate(vids)}
    incoming = [
        [(index[e.source], e) for e in sorted(graph.in_edges(vid), key=lambda e: e.id)] for vid in vids
    ]

    # a single segment in a vertex that may both start and end is feasible
    mean = sum(zs) / len(zs)
    single = sum((z - mean) ** 2 for z in zs)
    bound = single if any((starts is None or v in starts) and (ends is None or v in ends) for v in vids) else INF

    origin = (0, None, None, None)
    z1 = zs[0]
    funcs = []
    for vid in vids:
        if starts is None or vid in starts:
            funcs.append(PiecewiseQuadratic.quadratic(lo, hi, 1.0, -2.0 * z1, z1 * z1, origin))
        else:
            funcs.append(PiecewiseQuadratic.infinite(lo, hi))
    trace = [[([p[0] for p in f.pieces], [p[5] for p in f.pieces]) for f in funcs]]

    for t in range(2, len(zs) + 1):
        z = zs[t - 1]
        changed: dict = {}
        new_funcs = []
        for k in range(len(vids)):
            candidates = []
            for src, e in incoming[k]:
                key = (src, e.direction, e.gap)
                moved = changed.get(key)
                if moved is None:
                    op = min_less if e.direction == UP else min_more
                    moved = changed[key] = op(funcs[src], e.gap)
                tag_head = (t - 1, vids[src], e.id)
                lam = e.penalty
                candidates.append(
                    PiecewiseQuadratic(
                        p if p[4] == INF else (p[0], p[1], p[2], p[3], p[4] + lam, tag_head + (p[5],))
                        for p in moved.pieces
                    )
                )
            # ties prefer the latest changepoint, then the lowest edge id
            candidates.append(funcs[k])
            best = candidates[0]
            for g in candidates[1:]:
                best = min_envelope(best, g)
            best = add_point_loss(best, z)
            if bound < INF:
                best = _prune(best, bound)
            new_funcs.append(best)
        funcs = new_funcs
        trace.append([([p[0] for p in f.pieces], [p[5] for p in f.pieces]) for f in funcs])

    if ends is not None:
        funcs_end = [f if vid in ends else PiecewiseQuadratic.infinite(lo, hi) for f, vid in zip(funcs, vids)]
    else:
        funcs_end = funcs
    return SolverState(graph, zs, vids, funcs_end, trace, (lo, hi))


def best_end(state: SolverState) -> tuple[int, float, float]:
    """Choose ``(vertex, mean, cost)`` for the last segment.

    Exact cost ties go to the path whose final changepoint is latest, then to
    the smaller mean, then to the lower vertex id.
    """
    best = None
    for vid, f in zip(state.vertex_ids, state.cost_functions):
        for p in f.pieces:
            if p[4] == INF:
                continue
            value, mu = piece_min(p)
            key = (value, -p[5][0], mu, vid)
            if best is None:
                best = key
                continue
            tol = 1e-12 * (1.0 + abs(best[0]))
            if value < best[0] - tol or (abs(value - best[0]) <= tol and key[1:] < best[1:]):
                best = key
    if best is None:
        raise InfeasibleModel("infeasible model: no path through the constraint graph fits the start/end states")
    return best[3], best[2], best[0]


def _lookup(los: list[float], tags: list, mu: float):
    i = bisect_right(los, mu) - 1
    i = min(max(i, 0), len(los) - 1)
    if tags[i] is not None:
        return tags[i]
    for j in (i - 1, i + 1):
        if 0 <= j < len(tags) and tags[j] is not None:
            return tags[j]
    return None


def backtrack(state: SolverState, end_choice: tuple[int, float]) -> Segmentation:
    """Decode the optimal path ending in ``end_choice = (vertex, mean)``."""
    graph = state.graph
    index = {vid: k for k, vid in enumerate(state.vertex_ids)}
    n = len(state.samples)
    t, (vid, mu) = n, end_choice
    segments = []
    while True:
        los, tags = state.trace[t - 1][index[vid]]
        tag = _lookup(los, tags, mu)
        if tag is None:
            raise SolverError(f"no finite cost recorded at sample {t}, vertex {vid}, mean {mu}")
        tau, prev, eid, rule = tag
        if not 0 <= tau < t:
            raise SolverError(f"backpointer to sample {tau} from sample {t}")
        segments.append((tau, mu, vid, eid))
        if tau == 0:
            break
        edge = graph.edge(eid)
        if rule[0] == "fixed":
            mu = rule[1]
        else:
            mu = mu - edge.gap if edge.direction == UP else mu + edge.gap
        t, vid = tau, prev
    segments.reverse()
    boundaries = [s[0] for s in segments[1:]]
    means = [s[1] for s in segments]
    states = [s[2] for s in segments]
    edges = [s[3] for s in segments[1:]]
    fit = 0.0
    starts = [0] + boundaries
    stops = boundaries + [n]
    for a, b, m in zip(starts, stops, means):
        fit += sum((z - m) ** 2 for z in state.samples[a:b])
    cost = fit + sum(graph.edge(e).penalty for e in edges)
    return Segmentation(tuple(boundaries), tuple(means), tuple(states), tuple(edges), cost, n)


def solve(
    signal: Signal | Sequence[float],
    graph: ConstraintGraph,
    start_states: Collection[int] | str | None = "any",
    end_states: Collection[int] | str | None = "any",
    margin: float = DOMAIN_MARGIN,
) -> Segmentation:
    """Exact minimiser of squared error plus edge penalties under ``graph``.

    Segment means are restricted to ``[min(z) - margin, max(z) + margin]``.
    ``total_cost`` of the result is the objective recomputed from the decoded
    means and changepoints.

    Raises
    ------
    InfeasibleModel
        If no path through the graph is compatible with the start and end
        state restrictions.
    ValueError
        If the graph is invalid or the signal has non-finite samples.
    """
    samples = signal.samples if isinstance(signal, Signal) else signal
    state = forward(samples, graph, start_states, end_states, margin)
    vid, mu, _ = best_end(state)
    return backtrack(state, (vid, mu))


def solve_with_value(signal, graph, start_states="any", end_states="any", margin=DOMAIN_MARGIN):
    """Like :func:`solve` but also return the optimal value found by the DP."""
    samples = signal.samples if isinstance(signal, Signal) else signal
    state = forward(samples, graph, start_states, end_states, margin)
    vid, mu, value = best_end(state)
    return backtrack(state, (vid, mu)), value


def extract_peaks(seg: Segmentation, peak_state: int) -> list[int]:
    """Midpoint ``floor((first + last) / 2)`` of every run of ``peak_state`` (1-based)."""
    peaks = []
    run_start = None
    prev_last = None
    for (first, last), s in zip(seg.segments(), seg.segment_states):
        if s == peak_state:
            if run_start is None:
                run_start = first
            prev_last = last
        elif run_start is not None:
            peaks.append((run_start + prev_last) // 2)
            run_start = None
    if run_start is not None:
        peaks.append((run_start + prev_last) // 2)
    return peaks
