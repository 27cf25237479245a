"""Exact algebra on piecewise-quadratic functions of a candidate mean.

A function is stored as an ordered tuple of pieces ``(lo, hi, a, b, c, tag)``
meaning ``a*mu**2 + b*mu + c`` on ``[lo, hi)`` (the last piece is closed at
the domain maximum). Regions where the function is infinite are stored as a
sentinel piece with ``c == inf`` and ``tag is None``; no large finite
constants stand in for infinity.

``min_less`` and ``min_more`` replace the tags of their output with an
argmin rule telling where the minimum over the admissible previous means is
attained: ``("shift", 0.0)`` for pieces copied from the (shifted) input, where
the previous mean is the current one moved back by the gap, and
``("fixed", x)`` for flat pieces whose minimum sits at ``x``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Any, Iterable

INF = math.inf
COEF_TOL = 1e-12
DISC_TOL = 1e-12

SHIFT = ("shift", 0.0)


class InfeasibleModel(ValueError):
    """Raised when no finite cost exists (no admissible path through the graph)."""


class PiecewiseQuadratic:
    __slots__ = ("pieces", "_los")

    def __init__(self, pieces: Iterable[tuple]):
        self.pieces = tuple(pieces)
        if not self.pieces:
            raise ValueError("a piecewise quadratic needs at least one piece")
        self._los = None

    @classmethod
    def quadratic(cls, lo: float, hi: float, a: float = 0.0, b: float = 0.0, c: float = 0.0, tag: Any = None):
        return cls(((lo, hi, a, b, c, tag),))

    @classmethod
    def infinite(cls, lo: float, hi: float):
        return cls(((lo, hi, 0.0, 0.0, INF, None),))

    @property
    def lo(self) -> float:
        return self.pieces[0][0]

    @property
    def hi(self) -> float:
        return self.pieces[-1][1]

    def __len__(self) -> int:
        return len(self.pieces)

    def __repr__(self) -> str:
        return f"PiecewiseQuadratic({len(self.pieces)} pieces on [{self.lo}, {self.hi}])"

    def piece_at(self, mu: float) -> tuple:
        if self._los is None:
            self._los = [p[0] for p in self.pieces]
        i = bisect_right(self._los, mu) - 1
        return self.pieces[min(max(i, 0), len(self.pieces) - 1)]

    def __call__(self, mu: float) -> float:
        _, _, a, b, c, _ = self.piece_at(mu)
        if c == INF:
            return INF
        return (a * mu + b) * mu + c

    def is_feasible(self) -> bool:
        return any(p[4] != INF for p in self.pieces)

    def dump(self) -> str:
        """One line per piece: ``lo hi a b c tag``."""
        lines = []
        for lo, hi, a, b, c, tag in self.pieces:
            t = "-" if tag is None else "/".join(str(x) for x in (tag if isinstance(tag, tuple) else (tag,)))
            lines.append(f"{lo!r} {hi!r} {a!r} {b!r} {c!r} {t}")
        return "\n".join(lines) + "\n"


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= COEF_TOL * (1.0 + abs(x) + abs(y))


def _merge(pieces: list) -> tuple:
    """Drop empty pieces and fuse neighbours that are the same function."""
    out: list = []
    for p in pieces:
        if p[1] <= p[0]:
            continue
        if out:
            q = out[-1]
            if q[4] == INF and p[4] == INF:
                out[-1] = (q[0], p[1], 0.0, 0.0, INF, None)
                continue
            if q[5] == p[5] and q[4] != INF and p[4] != INF and _close(q[2], p[2]) and _close(q[3], p[3]) and _close(q[4], p[4]):
                out[-1] = (q[0], p[1], q[2], q[3], q[4], q[5])
                continue
        out.append(p)
    if not out:
        # a degenerate domain keeps its first piece
        out.append(pieces[0])
    return tuple(out)


def add_point_loss(f: PiecewiseQuadratic, z: float) -> PiecewiseQuadratic:
    """Add the squared error ``(mu - z)**2`` to every piece."""
    zz = z * z
    tz = 2.0 * z
    return PiecewiseQuadratic(
        p if p[4] == INF else (p[0], p[1], p[2] + 1.0, p[3] - tz, p[4] + zz, p[5])
        for p in f.pieces
    )


def add_constant(f: PiecewiseQuadratic, k: float) -> PiecewiseQuadratic:
    if k == 0:
        return f
    return PiecewiseQuadratic(
        p if p[4] == INF else (p[0], p[1], p[2], p[3], p[4] + k, p[5]) for p in f.pieces
    )


def retag(f: PiecewiseQuadratic, fn) -> PiecewiseQuadratic:
    """Map ``fn`` over the tag of every finite piece."""
    return PiecewiseQuadratic(
        p if p[4] == INF else (p[0], p[1], p[2], p[3], p[4], fn(p[5])) for p in f.pieces
    )


def roots_in(a: float, b: float, c: float, lo: float, hi: float) -> list[float]:
    """Real roots of ``a x^2 + b x + c`` strictly inside ``(lo, hi)``.

    Near-tangent quadratics (discriminant below the relative cutoff) are
    reported as having no crossing.
    """
    if abs(a) <= COEF_TOL * (abs(b) + abs(c)) or a == 0.0:
        if b == 0.0:
            return []
        rs = [-c / b]
    else:
        disc = b * b - 4.0 * a * c
        if disc <= DISC_TOL * (b * b + abs(4.0 * a * c)):
            return []
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        rs = [q / a]
        if q != 0.0:
            rs.append(c / q)
        rs.sort()
    return [r for r in rs if lo < r < hi]


def _emit_min(out: list, lo: float, hi: float, p: tuple, q: tuple) -> None:
    if q[4] == INF:
        out.append((lo, hi) + p[2:])
        return
    if p[4] == INF:
        out.append((lo, hi) + q[2:])
        return
    da, db, dc = p[2] - q[2], p[3] - q[3], p[4] - q[4]
    cuts = [lo] + roots_in(da, db, dc, lo, hi) + [hi]
    for l, h in zip(cuts, cuts[1:]):
        x = 0.5 * (l + h)
        if (da * x + db) * x + dc <= 0.0:
            out.append((l, h) + p[2:])
        else:
            out.append((l, h) + q[2:])


def min_envelope(f: PiecewiseQuadratic, g: PiecewiseQuadratic) -> PiecewiseQuadratic:
    """Pointwise minimum; on exact ties the piece from ``f`` is kept."""
    fp, gp = f.pieces, g.pieces
    out: list = []
    i = j = 0
    lo = fp[0][0]
    nf, ng = len(fp), len(gp)
    while i < nf and j < ng:
        p, q = fp[i], gp[j]
        hi = p[1] if p[1] < q[1] else q[1]
        if i == nf - 1 and j == ng - 1:
            hi = max(p[1], q[1])
        if hi > lo:
            _emit_min(out, lo, hi, p, q)
            lo = hi
        if p[1] <= hi:
            i += 1
        if q[1] <= hi:
            j += 1
    return PiecewiseQuadratic(_merge(out))


def _running_min(pieces: tuple) -> list:
    """Running minimum from the left, tagged with argmin rules."""
    out: list = []
    m = INF
    arg = None
    for l, h, a, b, c, _ in pieces:
        if c == INF:
            if m == INF:
                out.append((l, h, 0.0, 0.0, INF, None))
            else:
                out.append((l, h, 0.0, 0.0, m, ("fixed", arg)))
            continue
        if a > 0.0:
            e = -b / (2.0 * a)
            e = l if e < l else (h if e > h else e)
        elif b < 0.0:
            e = h
        else:
            e = l
        if e > l:
            ql = (a * l + b) * l + c
            qe = (a * e + b) * e + c
            if ql <= m:
                out.append((l, e, a, b, c, SHIFT))
            elif qe >= m:
                out.append((l, e, 0.0, 0.0, m, ("fixed", arg)))
            else:
                if a > 0.0:
                    disc = b * b - 4.0 * a * (c - m)
                    x0 = (-b - math.sqrt(max(disc, 0.0))) / (2.0 * a)
                else:
                    x0 = (m - c) / b
                x0 = l if x0 < l else (e if x0 > e else x0)
                out.append((l, x0, 0.0, 0.0, m, ("fixed", arg)))
                out.append((x0, e, a, b, c, SHIFT))
            if qe < m:
                m, arg = qe, e
        else:
            qe = (a * e + b) * e + c
            if qe < m:
                m, arg = qe, e
        if h > e:
            out.append((e, h, 0.0, 0.0, m, ("fixed", arg)))
    return out


def _shift_right(pieces: list, gap: float, lo: float, hi: float) -> list:
    if gap == 0.0:
        return pieces
    out = [(lo, lo + gap, 0.0, 0.0, INF, None)]
    for l, h, a, b, c, tag in pieces:
        nl = l + gap
        if nl >= hi:
            break
        if c == INF or a == 0.0 and b == 0.0:
            out.append((nl, h + gap, a, b, c, tag))
        else:
            out.append((nl, h + gap, a, b - 2.0 * a * gap, (a * gap - b) * gap + c, tag))
    last = out[-1]
    out[-1] = (last[0], hi) + last[2:]
    return out


def min_less(f: PiecewiseQuadratic, gap: float) -> PiecewiseQuadratic:
    """``h(mu) = min over mu' <= mu - gap of f(mu')`` on the same domain.

    Where ``mu - gap`` falls below the domain the result is the infinite
    sentinel.
    """
    if gap < 0:
        raise ValueError(f"gap must be non-negative, got {gap}")
    lo, hi = f.lo, f.hi
    if gap >= hi - lo:
        return PiecewiseQuadratic.infinite(lo, hi)
    return PiecewiseQuadratic(_merge(_shift_right(_running_min(f.pieces), gap, lo, hi)))


def _negate_rule(tag):
    if isinstance(tag, tuple) and tag and tag[0] == "fixed":
        return ("fixed", -tag[1])
    return tag


def reflect(f: PiecewiseQuadratic, tag_map=None) -> PiecewiseQuadratic:
    """``g(mu) = f(-mu)`` on the mirrored domain."""
    if tag_map is None:
        return PiecewiseQuadratic((-h, -l, a, -b, c, t) for l, h, a, b, c, t in reversed(f.pieces))
    return PiecewiseQuadratic(
        (-h, -l, a, -b, c, t if c == INF else tag_map(t)) for l, h, a, b, c, t in reversed(f.pieces)
    )


def min_more(f: PiecewiseQuadratic, gap: float) -> PiecewiseQuadratic:
    """``h(mu) = min over mu' >= mu + gap of f(mu')``; mirror of :func:`min_less`."""
    return reflect(min_less(reflect(f), gap), _negate_rule)


def piece_min(p: tuple) -> tuple[float, float]:
    """Minimum value and leftmost minimiser of one piece over ``[lo, hi]``."""
    l, h, a, b, c, _ = p
    if c == INF:
        return INF, l
    if a > 0.0:
        x = -b / (2.0 * a)
        x = l if x < l else (h if x > h else x)
    elif b > 0.0:
        x = l
    elif b < 0.0:
        x = h
    else:
        x = l
    return (a * x + b) * x + c, x


def global_min(f: PiecewiseQuadratic) -> tuple[float, float]:
    """Exact minimum and its smallest minimiser."""
    best, arg = INF, None
    for p in f.pieces:
        v, x = piece_min(p)
        if v < best:
            best, arg = v, x
    if arg is None:
        raise InfeasibleModel("infeasible model: the cost function is infinite everywhere")
    return best, arg
