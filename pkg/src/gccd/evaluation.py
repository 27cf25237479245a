"""Beat-by-beat scoring of detections against reference annotations."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

DEFAULT_TOLERANCE_MS = 150.0


class UndefinedMetric(ZeroDivisionError):
    def __init__(self, metric: str):
        super().__init__(f"undefined metric {metric}: zero denominator")
        self.metric = metric


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    matches: list[tuple[int, int, int]] = field(default_factory=list)


class Metrics(NamedTuple):
    sen: float
    ppr: float
    der: float


def tolerance_samples(tolerance_ms: float, rate: float) -> int:
    return int(round(tolerance_ms * rate / 1000.0))


def match_detections(annotations: Sequence[int], detections: Sequence[int], tolerance: int) -> MatchResult:
    """Greedy nearest-neighbour matching within ``+/- tolerance`` samples.

    Annotations are visited left to right; each takes the closest unmatched
    detection in its window, the left one when two are equally close.
    ``matches`` holds ``(annotation index, detection index, offset)``.
    """
    dets = list(detections)
    used = [False] * len(dets)
    matches = []
    for ai, a in enumerate(annotations):
        j = bisect_left(dets, a - tolerance)
        best = None
        while j < len(dets) and dets[j] <= a + tolerance:
            if not used[j]:
                d = abs(dets[j] - a)
                if best is None or d < abs(dets[best] - a):
                    best = j
            j += 1
        if best is not None:
            used[best] = True
            matches.append((ai, best, dets[best] - a))
    tp = len(matches)
    return MatchResult(tp, len(dets) - tp, len(annotations) - tp, matches)


def compute_metrics(result: MatchResult) -> Metrics:
    """Sensitivity, positive predictivity and detection error rate, in percent."""
    tp, fp, fn = result.tp, result.fp, result.fn
    if tp + fn == 0:
        raise UndefinedMetric("Sen")
    if tp + fp == 0:
        raise UndefinedMetric("PPR")
    return Metrics(
        100.0 * tp / (tp + fn),
        100.0 * tp / (tp + fp),
        100.0 * (fn + fp) / (tp + fn),
    )


def format_report(rows: Sequence[tuple[str, MatchResult]]) -> str:
    """Text table with columns ``method Sen PPR DER``; undefined values print as ``n/a``."""
    lines = ["method\tSen\tPPR\tDER"]
    for method, result in rows:
        tp, fp, fn = result.tp, result.fp, result.fn
        sen = f"{100.0 * tp / (tp + fn):.2f}" if tp + fn else "n/a"
        ppr = f"{100.0 * tp / (tp + fp):.2f}" if tp + fp else "n/a"
        der = f"{100.0 * (fn + fp) / (tp + fn):.2f}" if tp + fn else "n/a"
        lines.append(f"{method}\t{sen}\t{ppr}\t{der}")
    return "\n".join(lines) + "\n"
