"""Plain-text file formats.

Sample indices in every file are 0-based (the convention of MIT-BIH
annotation exports); in memory they are 1-based. The conversion happens here
and nowhere else.
"""

from __future__ import annotations

from pathlib import Path

from .model import ConstraintGraph, Edge, LabelSet, Segmentation, Signal, Vertex, validate_graph


class FormatError(ValueError):
    pass


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc


# graphs


def format_graph(graph: ConstraintGraph) -> str:
    out = ["# vertex <id> <name>", "# edge <id> <source> <target> <up|down> <gap> <penalty>"]
    out += [f"vertex {v.id} {v.name}" for v in graph.vertices]
    out += [
        f"edge {e.id} {e.source} {e.target} {e.direction} {float(e.gap)!r} {float(e.penalty)!r}" for e in graph.edges
    ]
    return "\n".join(out) + "\n"


def parse_graph(text: str) -> ConstraintGraph:
    vertices, edges = [], []
    for lineno, line in _lines(text):
        parts = line.split()
        try:
            if parts[0] == "vertex" and len(parts) == 3:
                vertices.append(Vertex(int(parts[1]), parts[2]))
            elif parts[0] == "edge" and len(parts) == 7:
                eid, src, dst = (int(x) for x in parts[1:4])
                edges.append(Edge(eid, src, dst, parts[4], float(parts[5]), float(parts[6])))
            else:
                raise FormatError(f"line {lineno}: expected 'vertex' or 'edge' record, got {line!r}")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {lineno}: {exc}") from exc
    graph = ConstraintGraph(tuple(vertices), tuple(edges))
    problems = validate_graph(graph)
    if problems:
        raise FormatError("invalid graph: " + "; ".join(problems))
    return graph


def read_graph(path) -> ConstraintGraph:
    try:
        return parse_graph(read_text(path))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_graph(path, graph: ConstraintGraph) -> None:
    Path(path).write_text(format_graph(graph))


# signals


def format_signal(signal: Signal) -> str:
    rate = int(signal.rate) if float(signal.rate).is_integer() else signal.rate
    body = "\n".join(repr(x) for x in signal.samples)
    return f"rate={rate} id={signal.id or 'unknown'}\n{body}\n"


def parse_signal(text: str) -> Signal:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty signal file")
    header = dict(tok.split("=", 1) for tok in lines[0].split() if "=" in tok)
    if "rate" not in header:
        raise FormatError("first line must be a header 'rate=<Hz> id=<record>'")
    try:
        rate = float(header["rate"])
        samples = [float(x) for x in (ln.strip() for ln in lines[1:]) if x]
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    try:
        return Signal(tuple(samples), rate, header.get("id", ""))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def read_signal(path) -> Signal:
    try:
        return parse_signal(read_text(path))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_signal(path, signal: Signal) -> None:
    Path(path).write_text(format_signal(signal))


# annotations


def parse_annotations(text: str, n: int | None = None) -> list[int] | LabelSet:
    """Peak indices (one per line) or coverage bands (``start end`` per line).

    Returns 1-based peak indices or a 1-based :class:`LabelSet`.
    """
    rows = []
    for lineno, line in _lines(text):
        try:
            rows.append((lineno, [int(x) for x in line.split()]))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    widths = {len(r) for _, r in rows}
    if widths - {1, 2} or len(widths) > 1:
        raise FormatError("annotation lines must all hold one index or all hold 'start end'")
    flat = [x for _, r in rows for x in r]
    if any(x < 0 or (n is not None and x >= n) for x in flat):
        raise FormatError("annotation index outside the signal")
    if widths == {2}:
        try:
            return LabelSet.from_bands((s + 1, e + 1) for _, (s, e) in rows)
        except ValueError as exc:
            raise FormatError(str(exc)) from exc
    if any(b < a for a, b in zip(flat, flat[1:])):
        raise FormatError("annotation indices must be sorted ascending")
    return [x + 1 for x in flat]


def read_annotations(path, n: int | None = None):
    try:
        return parse_annotations(read_text(path), n)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def format_indices(indices) -> str:
    return "".join(f"{i - 1}\n" for i in indices)


def format_bands(labels: LabelSet) -> str:
    return "".join(f"{s - 1} {e - 1}\n" for s, e, _ in labels.regions)


# segmentations


SEGMENT_HEADER = "start\tend\tmean\tstate\tedge"


def format_segmentation(seg: Segmentation, graph: ConstraintGraph) -> str:
    out = [f"# total_cost={seg.total_cost!r} n={seg.n}", SEGMENT_HEADER]
    edges = ("-",) + tuple(str(e) for e in seg.edge_trace)
    for (first, last), m, s, e in zip(seg.segments(), seg.segment_means, seg.segment_states, edges):
        out.append(f"{first - 1}\t{last - 1}\t{m!r}\t{graph.vertex(s).name}\t{e}")
    return "\n".join(out) + "\n"


def parse_segmentation(text: str) -> list[tuple[int, int, float, str]]:
    """Rows ``(first, last, mean, state_name)`` with 1-based inclusive ranges."""
    rows = []
    for lineno, line in _lines(text):
        if line.replace(" ", "\t") == SEGMENT_HEADER or line.startswith("start"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FormatError(f"line {lineno}: expected 5 columns")
        try:
            rows.append((int(parts[0]) + 1, int(parts[1]) + 1, float(parts[2]), parts[3]))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    expected = 1
    for first, last, _, _ in rows:
        if first != expected or last < first:
            raise FormatError("segments must tile the signal contiguously")
        expected = last + 1
    return rows


def bundled_graph(name: str) -> ConstraintGraph:
    """One of the graphs shipped in ``gccd/graphs`` (``manual_ecg``, ``two_state``)."""
    path = Path(__file__).parent / "graphs" / f"{name}.graph"
    return read_graph(path)
