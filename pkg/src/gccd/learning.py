"""Greedy structure search over constraint graphs driven by label errors."""

from __future__ import annotations

import math
import os
import random
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import DOWN, UP, ConstraintGraph, Edge, LabelSet, Signal, Vertex, validate_graph
from .pwq import InfeasibleModel
from .solver import extract_peaks, solve

EDIT_KINDS = (
    "add-node-v1",
    "add-node-v2",
    "add-node-v3",
    "delete-node-v1",
    "delete-node-v2",
    "add-two-nodes",
    "flip-direction",
    "penalty-up",
    "penalty-down",
    "gap-up",
    "gap-down",
)


@dataclass(frozen=True)
class EditCandidate:
    kind: str
    anchor_edge: int

    def __post_init__(self):
        if self.kind not in EDIT_KINDS:
            raise ValueError(f"unknown edit kind {self.kind!r}")


@dataclass(frozen=True)
class LearnConfig:
    """Initial edge values and search settings.

    ``peak_name`` names the vertex whose segments mark peaks; it is never
    deleted by an edit.
    """

    initial_gap: float = 100.0
    initial_penalty: float = 5e5
    penalty_step: float = 2.0
    gap_step: float = 2.0
    max_iterations: int = 50
    peak_name: str = "R"
    workers: int = 1

    def __post_init__(self):
        if self.initial_gap < 0 or self.initial_penalty < 0:
            raise ValueError("initial gap and penalty must be non-negative")
        if not (self.penalty_step > 1 and self.gap_step > 1):
            raise ValueError("penalty and gap steps must be greater than 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


class LabelError(NamedTuple):
    fp: int
    fn: int
    total: int


@dataclass
class TraceRecord:
    iteration: int
    graph: ConstraintGraph
    error: int
    n_candidates: int
    edit: EditCandidate | None = None


@dataclass
class TrainingTrace:
    records: list[TraceRecord] = field(default_factory=list)

    @property
    def errors(self) -> list[int]:
        return [r.error for r in self.records]

    def to_text(self) -> str:
        lines = ["iter error n_candidates edit_kind anchor_edge"]
        for r in self.records:
            kind = r.edit.kind if r.edit else "init"
            anchor = str(r.edit.anchor_edge) if r.edit else "-"
            lines.append(f"{r.iteration} {r.error} {r.n_candidates} {kind} {anchor}")
        return "\n".join(lines) + "\n"


def _flip(direction: str) -> str:
    return DOWN if direction == UP else UP


def _with_edges(graph: ConstraintGraph, drop: set[int], add: list[Edge], vertices=None) -> ConstraintGraph:
    edges = [e for e in graph.edges if e.id not in drop] + add
    return ConstraintGraph(tuple(vertices if vertices is not None else graph.vertices), tuple(edges))


def _insert_path(graph: ConstraintGraph, e: Edge, steps: list[tuple[str, float]]) -> ConstraintGraph:
    """Replace ``e`` by a path through ``len(steps) - 1`` new vertices."""
    vid, eid = graph.next_vertex_id, graph.next_edge_id
    new_vertices = [Vertex(vid + i, f"V{vid + i}") for i in range(len(steps) - 1)]
    chain = [e.source] + [v.id for v in new_vertices] + [e.target]
    new_edges = [
        Edge(eid + i, chain[i], chain[i + 1], direction, gap, e.penalty) for i, (direction, gap) in enumerate(steps)
    ]
    return _with_edges(graph, {e.id}, new_edges, graph.vertices + tuple(new_vertices))


def _delete_vertex(graph: ConstraintGraph, victim: int, keep: Edge, protected: set[int]) -> ConstraintGraph | None:
    """Remove ``victim`` and splice its neighbours with an edge copying ``keep``."""
    if victim in protected or len(graph.vertices) < 3:
        return None
    ins, outs = graph.in_edges(victim), graph.out_edges(victim)
    if len(ins) != 1 or len(outs) != 1 or ins[0].source == victim:
        return None
    pred, succ = ins[0].source, outs[0].target
    splice = Edge(graph.next_edge_id, pred, succ, keep.direction, keep.gap, keep.penalty)
    vertices = tuple(v for v in graph.vertices if v.id != victim)
    return _with_edges(graph, {ins[0].id, outs[0].id}, [splice], vertices)


def apply_edit(graph: ConstraintGraph, cand: EditCandidate, config: LearnConfig) -> ConstraintGraph | None:
    """The edited graph, or ``None`` when the edit does not apply to this edge."""
    e = graph.edge(cand.anchor_edge)
    kind = cand.kind
    d, g = e.direction, e.gap
    protected = set()
    try:
        protected.add(graph.vertex_by_name(config.peak_name).id)
    except KeyError:
        pass
    if kind == "add-node-v1":
        return _insert_path(graph, e, [(d, g), (d, g)])
    if kind == "add-node-v2":
        return _insert_path(graph, e, [(d, g), (_flip(d), g)])
    if kind == "add-node-v3":
        if g == config.initial_gap:
            return None
        g0 = config.initial_gap
        return _insert_path(graph, e, [(d, g0), (_flip(d), g0)])
    if kind == "add-two-nodes":
        return _insert_path(graph, e, [(UP, g), (DOWN, g), (d, g)])
    if kind == "delete-node-v1":
        ins = graph.in_edges(e.source)
        return _delete_vertex(graph, e.source, ins[0], protected) if ins else None
    if kind == "delete-node-v2":
        return _delete_vertex(graph, e.target, e, protected)
    if kind == "flip-direction":
        return graph.replace_edge(e.id, direction=_flip(d))
    if kind == "penalty-up":
        return graph.replace_edge(e.id, penalty=e.penalty * config.penalty_step) if e.penalty > 0 else None
    if kind == "penalty-down":
        return graph.replace_edge(e.id, penalty=e.penalty / config.penalty_step) if e.penalty > 0 else None
    if kind == "gap-up":
        return graph.replace_edge(e.id, gap=g * config.gap_step) if g > 0 else None
    if kind == "gap-down":
        return graph.replace_edge(e.id, gap=g / config.gap_step) if g > 0 else None
    raise ValueError(kind)


def graph_candidates(graph: ConstraintGraph, config: LearnConfig) -> list[tuple[EditCandidate, ConstraintGraph]]:
    """Every applicable edit of every edge, in edge-id then kind order."""
    out = []
    for e in sorted(graph.edges, key=lambda e: e.id):
        for kind in EDIT_KINDS:
            cand = EditCandidate(kind, e.id)
            edited = apply_edit(graph, cand, config)
            if edited is not None and not validate_graph(edited):
                out.append((cand, edited))
    return out


def find_graph_candidates(graph: ConstraintGraph, config: LearnConfig) -> list[ConstraintGraph]:
    return [g for _, g in graph_candidates(graph, config)]


def count_label_errors(peaks: list[int], labels: LabelSet, ignore: LabelSet | None = None) -> LabelError:
    """Region-containment counting of false positives and false negatives.

    A region with no peak is one FN; a region with ``k > 1`` peaks adds
    ``k - 1`` FP; a peak outside every region is one FP. Peaks inside an
    ``ignore`` region are not counted at all.
    """
    starts = [r[0] for r in labels.regions]
    hits = [0] * len(labels.regions)
    skip = [r[0] for r in ignore.regions] if ignore else []
    fp = 0
    for p in peaks:
        if skip:
            j = bisect_right(skip, p) - 1
            if j >= 0 and p <= ignore.regions[j][1]:
                continue
        i = bisect_right(starts, p) - 1
        if i >= 0 and p <= labels.regions[i][1]:
            hits[i] += 1
        else:
            fp += 1
    fn = sum(1 for h in hits if h == 0)
    fp += sum(h - 1 for h in hits if h > 1)
    return LabelError(fp, fn, fp + fn)


def label_error(
    signal: Signal,
    graph: ConstraintGraph,
    labels: LabelSet,
    peak_state: int,
    ignore: LabelSet | None = None,
) -> LabelError:
    seg = solve(signal, graph)
    return count_label_errors(extract_peaks(seg, peak_state), labels, ignore)


def _score(args) -> float:
    signal, graph, labels, peak_state, ignore = args
    try:
        return label_error(signal, graph, labels, peak_state, ignore).total
    except InfeasibleModel:
        return math.inf


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GCCD_THREADS", "1")))
    except ValueError:
        return 1


def learn(
    signal: Signal,
    labels: LabelSet,
    initial: ConstraintGraph,
    config: LearnConfig = LearnConfig(),
    ignore: LabelSet | None = None,
) -> tuple[ConstraintGraph, TrainingTrace]:
    """Greedy graph learning.

    Each sweep scores every candidate edit of the current graph and moves to
    the best one if it strictly lowers the label error; ties go to the graph
    with fewer edges, then to the earlier candidate. Stops when a sweep finds
    no strict improvement or after ``config.max_iterations`` sweeps.
    """
    problems = validate_graph(initial)
    if problems:
        raise ValueError("invalid initial graph: " + "; ".join(problems))
    if not len(labels):
        raise ValueError("need at least one label region")
    peak = initial.vertex_by_name(config.peak_name).id
    current = initial
    error = label_error(signal, current, labels, peak, ignore).total
    trace = TrainingTrace([TraceRecord(0, current, error, 0)])
    workers = config.workers if config.workers > 1 else _default_workers()

    best_cost = math.inf
    t = 0
    while error < best_cost and t < config.max_iterations:
        best_cost = error
        t += 1
        cands = graph_candidates(current, config)
        jobs = [(signal, g, labels, peak, ignore) for _, g in cands]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                scores = list(pool.map(_score, jobs))
        else:
            scores = [_score(j) for j in jobs]
        ranked = sorted(range(len(cands)), key=lambda i: (scores[i], len(cands[i][1].edges), i))
        if ranked and scores[ranked[0]] < error:
            i = ranked[0]
            current, error = cands[i][1], int(scores[i])
            trace.records.append(TraceRecord(t, current, error, len(cands), cands[i][0]))
    return current, trace


def split_folds(labels: LabelSet, k: int = 5, seed: int = 0) -> list[tuple[LabelSet, LabelSet]]:
    """``k`` contiguous validation folds; the seed fixes the order of the folds."""
    n = len(labels)
    if k < 2:
        raise ValueError("need at least two folds")
    if n < k:
        raise ValueError(f"cannot split {n} label regions into {k} folds")
    blocks = [list(b) for b in np.array_split(np.arange(n), k)]
    order = list(range(k))
    random.Random(seed).shuffle(order)
    out = []
    for f in order:
        val = set(blocks[f])
        out.append((labels.subset(i for i in range(n) if i not in val), labels.subset(val)))
    return out


def holdout_split(labels: LabelSet, test_fraction: float = 0.25, seed: int = 0) -> tuple[LabelSet, LabelSet]:
    """Random train/test split of label regions (3:1 by default)."""
    n = len(labels)
    n_test = int(round(n * test_fraction))
    test = set(random.Random(seed).sample(range(n), n_test))
    return labels.subset(i for i in range(n) if i not in test), labels.subset(test)


def peak_bands(peaks: list[int], half_width: int, n: int) -> LabelSet:
    """Coverage bands of ``+/- half_width`` samples around 1-based peaks, clipped to neighbours."""
    bands = []
    for i, p in enumerate(peaks):
        lo, hi = max(1, p - half_width), min(n, p + half_width)
        if bands and lo <= bands[-1][1]:
            mid = (peaks[i - 1] + p) // 2
            bands[-1] = (bands[-1][0], mid)
            lo = mid + 1
        bands.append((lo, hi))
    return LabelSet.from_bands(bands)
