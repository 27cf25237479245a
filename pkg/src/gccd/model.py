"""Domain types shared by the solver, the graph learner and the evaluator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

UP = "up"
DOWN = "down"
DIRECTIONS = (UP, DOWN)


@dataclass(frozen=True)
class Signal:
    """A uniformly sampled 1-D series."""

    samples: tuple[float, ...]
    rate: float = 360.0
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(float(x) for x in self.samples))
        if len(self.samples) < 1:
            raise ValueError("signal must contain at least one sample")
        if not self.rate > 0:
            raise ValueError(f"sampling rate must be positive, got {self.rate}")
        for i, x in enumerate(self.samples):
            if not math.isfinite(x):
                raise ValueError(f"sample {i + 1} is not finite: {x}")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Vertex:
    id: int
    name: str


@dataclass(frozen=True)
class Edge:
    """A typed changepoint from ``source`` to ``target``.

    ``direction`` is ``"up"`` (the next mean must be at least ``gap`` above the
    previous one) or ``"down"`` (at least ``gap`` below).
    """

    id: int
    source: int
    target: int
    direction: str
    gap: float
    penalty: float

    @property
    def sign(self) -> int:
        return 1 if self.direction == UP else -1


@dataclass(frozen=True)
class ConstraintGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))

    def vertex(self, vid: int) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def vertex_by_name(self, name: str) -> Vertex:
        for v in self.vertices:
            if v.name == name:
                return v
        raise KeyError(name)

    def edge(self, eid: int) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def out_edges(self, vid: int) -> list[Edge]:
        return [e for e in self.edges if e.source == vid]

    def in_edges(self, vid: int) -> list[Edge]:
        return [e for e in self.edges if e.target == vid]

    def replace_edge(self, eid: int, **changes) -> ConstraintGraph:
        edges = tuple(replace(e, **changes) if e.id == eid else e for e in self.edges)
        return ConstraintGraph(self.vertices, edges)

    @property
    def next_vertex_id(self) -> int:
        return max((v.id for v in self.vertices), default=-1) + 1

    @property
    def next_edge_id(self) -> int:
        return max((e.id for e in self.edges), default=-1) + 1


def two_state_graph(gap: float, penalty: float) -> ConstraintGraph:
    """Alternative segment ``A`` and R-peak segment ``R`` in one cycle."""
    return ConstraintGraph(
        vertices=(Vertex(0, "A"), Vertex(1, "R")),
        edges=(
            Edge(0, 0, 1, UP, gap, penalty),
            Edge(1, 1, 0, DOWN, gap, penalty),
        ),
    )


def validate_graph(graph: ConstraintGraph, cyclic: bool = True) -> list[str]:
    """Return one message per broken invariant; an empty list means valid.

    With ``cyclic`` every vertex must have at least one incoming and one
    outgoing edge (the circular-path rule used for ECG cycles). A graph with a
    single vertex and no edges is always accepted, since it encodes the
    no-change model.
    """
    problems: list[str] = []
    if not graph.vertices:
        problems.append("graph has no vertices")
        return problems
    ids = [v.id for v in graph.vertices]
    seen: set[int] = set()
    for vid in ids:
        if vid < 0:
            problems.append(f"vertex {vid}: id must be non-negative")
        if vid in seen:
            problems.append(f"vertex {vid}: duplicate id")
        seen.add(vid)
    edge_ids: set[int] = set()
    for e in graph.edges:
        if e.id < 0:
            problems.append(f"edge {e.id}: id must be non-negative")
        if e.id in edge_ids:
            problems.append(f"edge {e.id}: duplicate id")
        edge_ids.add(e.id)
        if e.source not in seen:
            problems.append(f"edge {e.id}: unknown source vertex {e.source}")
        if e.target not in seen:
            problems.append(f"edge {e.id}: unknown target vertex {e.target}")
        if e.direction not in DIRECTIONS:
            problems.append(f"edge {e.id}: direction must be up or down, got {e.direction!r}")
        if not (math.isfinite(e.penalty) and e.penalty >= 0):
            problems.append(f"edge {e.id}: penalty must be non-negative, got {e.penalty}")
        if not (math.isfinite(e.gap) and e.gap >= 0):
            problems.append(f"edge {e.id}: gap must be non-negative, got {e.gap}")
    if cyclic and graph.edges:
        for v in graph.vertices:
            name = f"vertex {v.id} ({v.name})"
            if not any(e.source == v.id for e in graph.edges):
                problems.append(f"{name}: no outgoing edge, breaks the circular path")
            if not any(e.target == v.id for e in graph.edges):
                problems.append(f"{name}: no incoming edge, breaks the circular path")
    return problems


def evaluate_constraint(edge: Edge, m_before: float, m_after: float) -> float:
    """Constraint value ``sign * (m_before - m_after) + gap``; feasible iff <= 0."""
    return edge.sign * (m_before - m_after) + edge.gap


@dataclass(frozen=True)
class Segmentation:
    """Optimal piecewise-constant model.

    ``boundaries`` are 1-based: boundary ``i`` separates samples ``i`` and
    ``i + 1``. ``edge_trace[k]`` is the edge taken at ``boundaries[k]``.
    """

    boundaries: tuple[int, ...]
    segment_means: tuple[float, ...]
    segment_states: tuple[int, ...]
    edge_trace: tuple[int, ...]
    total_cost: float
    n: int = 0

    def __post_init__(self):
        for name in ("boundaries", "segment_means", "segment_states", "edge_trace"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        k = len(self.boundaries)
        if len(self.segment_means) != k + 1 or len(self.segment_states) != k + 1:
            raise ValueError("need exactly one mean and one state per segment")
        if len(self.edge_trace) != k:
            raise ValueError("need exactly one edge per changepoint")
        if any(b2 <= b1 for b1, b2 in zip(self.boundaries, self.boundaries[1:])):
            raise ValueError("boundaries must be strictly increasing")
        if self.n and self.boundaries and not (1 <= self.boundaries[0] and self.boundaries[-1] <= self.n - 1):
            raise ValueError("boundaries must lie in [1, N-1]")

    def segments(self) -> list[tuple[int, int]]:
        """1-based inclusive ``(first, last)`` sample range of every segment."""
        starts = (1,) + tuple(b + 1 for b in self.boundaries)
        ends = self.boundaries + (self.n,)
        return list(zip(starts, ends))

    def sample_states(self) -> list[int]:
        out: list[int] = []
        for (first, last), s in zip(self.segments(), self.segment_states):
            out.extend([s] * (last - first + 1))
        return out

    def sample_means(self) -> list[float]:
        out: list[float] = []
        for (first, last), m in zip(self.segments(), self.segment_means):
            out.extend([m] * (last - first + 1))
        return out


def objective(samples: Sequence[float], seg: Segmentation, graph: ConstraintGraph) -> float:
    """Squared-error fit plus the penalty of every changepoint taken."""
    fit = sum((z - m) ** 2 for z, m in zip(samples, seg.sample_means()))
    return fit + sum(graph.edge(e).penalty for e in seg.edge_trace)


PEAK = "peak-present"


@dataclass(frozen=True)
class LabelSet:
    """Coverage bands, 1-based inclusive ``(start, end, kind)``."""

    regions: tuple[tuple[int, int, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        regions = tuple((int(s), int(e), k) for s, e, k in self.regions)
        object.__setattr__(self, "regions", regions)
        for s, e, k in regions:
            if s > e:
                raise ValueError(f"label region start {s} exceeds end {e}")
            if k != PEAK:
                raise ValueError(f"unsupported label kind {k!r}")
        for (s1, e1, _), (s2, e2, _) in zip(regions, regions[1:]):
            if s2 <= e1:
                raise ValueError(f"label regions ({s1}, {e1}) and ({s2}, {e2}) overlap or are unsorted")

    @classmethod
    def from_bands(cls, bands: Iterable[tuple[int, int]]) -> LabelSet:
        return cls(tuple((s, e, PEAK) for s, e in bands))

    def __len__(self) -> int:
        return len(self.regions)

    def subset(self, indices: Iterable[int]) -> LabelSet:
        return LabelSet(tuple(self.regions[i] for i in sorted(indices)))
