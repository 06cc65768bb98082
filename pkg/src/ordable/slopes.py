"""Exact slopes on a boundary torus, orderings of Z^2, and slope arcs.

A peripheral element ``m^u l^v`` is the lattice point ``(u, v)``; the slope
``p/q`` is the line through ``(p, q)`` and ``inf`` is the line through
``(1, 0)``.  Arcs live on the circle Q u {inf} with its natural cyclic
order, running in the direction of increasing slope from ``lo`` to ``hi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from .words import IDENTITY, Word, multiply, power


@dataclass(frozen=True, order=True)
class SlopeQ:
    p: int
    q: int

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("denominator must be nonnegative")
        if self.q == 0 and self.p != 1:
            raise ValueError("infinity is encoded as (1, 0)")
        if gcd(abs(self.p), self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not in lowest terms")

    @property
    def is_inf(self) -> bool:
        return self.q == 0

    def value(self):
        """Fraction, or ``None`` for infinity."""
        return None if self.q == 0 else Fraction(self.p, self.q)

    @classmethod
    def parse(cls, text: str) -> "SlopeQ":
        t = text.strip().lower()
        if t in ("inf", "infinity", "oo", "1/0"):
            return INF
        if "/" in t:
            a, b = t.split("/", 1)
            p, q = int(a), int(b)
            if q < 0:
                p, q = -p, -q
            s = cls(p, q) if q else INF
            return s
        return cls(int(t), 1)

    @classmethod
    def of(cls, x) -> "SlopeQ":
        if isinstance(x, SlopeQ):
            return x
        if x is None:
            return INF
        f = Fraction(x)
        return cls(f.numerator, f.denominator)

    def __str__(self):
        return "inf" if self.q == 0 else (f"{self.p}" if self.q == 1 else f"{self.p}/{self.q}")


INF = SlopeQ(1, 0)


def slope_from_pair(p: int, q: int) -> SlopeQ:
    """Slope of the lattice direction ``(p, q)``; sign-normalised, reduced."""
    if p == 0 and q == 0:
        raise ValueError("(0, 0) has no slope")
    g = gcd(abs(p), abs(q))
    p, q = p // g, q // g
    if q < 0 or (q == 0 and p < 0):
        p, q = -p, -q
    return SlopeQ(p, q)


def filling_word(boundary, s: SlopeQ) -> Word:
    """``meridian^p * longitude^q`` for a peripheral system (``inf`` gives the meridian)."""
    if s.is_inf:
        return boundary.meridian
    return multiply(power(boundary.meridian, s.p), power(boundary.longitude, s.q))


def _sgn(x) -> int:
    return (x > 0) - (x < 0)


def det(d, v) -> int:
    return d[0] * v[1] - d[1] * v[0]


@dataclass(frozen=True)
class Z2Ordering:
    """One of the four left-orderings of Z^2 whose line has a given rational slope.

    Off the line, a point is positive iff ``side_sign * det((p, q), point) > 0``;
    on the line ``t * (p, q)`` it has the sign of ``line_sign * t``.
    """
    slope: SlopeQ
    side_sign: int
    line_sign: int

    def sign_of(self, point) -> int:
        return sign_of(self, point)

    def opposite(self) -> "Z2Ordering":
        return Z2Ordering(self.slope, -self.side_sign, -self.line_sign)


def enumerate_orderings(s: SlopeQ) -> list:
    return [Z2Ordering(s, e, f) for e in (1, -1) for f in (1, -1)]


def sign_of(o: Z2Ordering, point) -> int:
    u, v = point
    if u == 0 and v == 0:
        return 0
    d = (o.slope.p, o.slope.q)
    x = det(d, (u, v))
    if x:
        return o.side_sign * _sgn(x)
    # on the line: point = t * d with d primitive
    t = u // d[0] if d[0] else v // d[1]
    return o.line_sign * _sgn(t)


# --- arcs --------------------------------------------------------------

def _key(s: SlopeQ):
    return (1, 0) if s.is_inf else (0, s.value())


@dataclass(frozen=True)
class Arc:
    """Arc of Q u {inf} from ``lo`` to ``hi`` in the increasing direction.

    ``full`` and ``empty`` arcs ignore the endpoint fields.  Degenerate
    ``lo == hi`` with both ends closed is the single point.
    """
    lo: SlopeQ | None = None
    hi: SlopeQ | None = None
    lo_closed: bool = False
    hi_closed: bool = False
    full: bool = False
    empty: bool = False

    @classmethod
    def full_circle(cls) -> "Arc":
        return cls(full=True)

    @classmethod
    def empty_arc(cls) -> "Arc":
        return cls(empty=True)

    @classmethod
    def point(cls, s: SlopeQ) -> "Arc":
        return cls(s, s, True, True)

    @classmethod
    def parse(cls, text: str) -> "Arc":
        t = text.strip()
        if t in ("full", "RP1"):
            return cls.full_circle()
        if t in ("empty", "{}"):
            return cls.empty_arc()
        lc, rc = t[0], t[-1]
        lo, hi = (x.strip() for x in t[1:-1].split(","))
        return cls(SlopeQ.parse(lo), SlopeQ.parse(hi), lc == "[", rc == "]")

    def contains(self, s: SlopeQ) -> bool:
        if self.full:
            return True
        if self.empty:
            return False
        k, lo, hi = _key(s), _key(self.lo), _key(self.hi)
        if s == self.lo:
            return self.lo_closed
        if s == self.hi:
            return self.hi_closed
        if lo < hi:
            return lo < k < hi
        if lo == hi:
            return False
        # wraps through inf (inf is the largest key and also below every rational)
        return k > lo or k < hi or s.is_inf

    def __str__(self):
        if self.full:
            return "full"
        if self.empty:
            return "empty"
        return f"{'[' if self.lo_closed else '('}{self.lo},{self.hi}{']' if self.hi_closed else ')'}"


def _all_positive_strictly(points, d) -> int:
    """Return +1/-1 if every point lies strictly on that side of line d, else 0."""
    sides = {_sgn(det(d, v)) for v in points}
    if sides == {1}:
        return 1
    if sides == {-1}:
        return -1
    return 0


def compatible_slope_arc(constraints: Iterable) -> Arc:
    """Slopes admitting a Z^2 ordering that gives each point its required sign.

    ``constraints`` is a sequence of ``((u, v), sign)``.  The computation is
    geometric: the points ``sign * (u, v)`` must all be positive, which is
    possible exactly for lines avoiding the interior of their cone.
    """
    pts = []
    for (u, v), sgn in constraints:
        if (u, v) == (0, 0):
            raise ValueError("constraint point must be nonzero")
        pts.append((sgn * u, sgn * v))
    if not pts:
        return Arc.full_circle()

    def line_ok(d):
        # every point strictly on one side, or on d's line along the same ray
        side = 0
        for v in pts:
            x = _sgn(det(d, v))
            if x == 0:
                if d[0] * v[0] + d[1] * v[1] <= 0:
                    return False
                continue
            if side and x != side:
                return False
            side = x
        return True

    boundary = []
    for v in pts:
        s = slope_from_pair(*v)
        if s not in boundary and line_ok(v):
            boundary.append(s)
    if not boundary:
        return Arc.empty_arc()
    if len(boundary) == 1:
        return Arc.full_circle()
    if len(boundary) > 2:  # pragma: no cover - impossible for a pointed cone
        raise AssertionError("more than two extreme lines")
    s1, s2 = sorted(boundary, key=_key)
    # decide which of the two arcs between s1 and s2 is feasible
    mid = _midpoint(s1, s2)
    d = (mid.p, mid.q)
    if _all_positive_strictly(pts, d):
        return Arc(s1, s2, True, True)
    return Arc(s2, s1, True, True)


def _midpoint(s1: SlopeQ, s2: SlopeQ) -> SlopeQ:
    """A slope strictly inside the non-wrapping arc (s1, s2), keys s1 < s2."""
    if s2.is_inf:
        return SlopeQ.of(s1.value() + 1)
    return SlopeQ.of((s1.value() + s2.value()) / 2)


@dataclass(frozen=True)
class DetectionTuple:
    J: frozenset
    K: frozenset
    slopes: tuple

    def __post_init__(self):
        if not set(self.J) <= set(self.K):
            raise ValueError("J must be a subset of K")
        n = len(self.slopes)
        if not set(self.K) <= set(range(1, n + 1)):
            raise ValueError("K must index boundary components 1..n")


def arc_constraints_for(s: SlopeQ, points: Sequence, orientation: int = 1) -> dict:
    """Signs forced on ``points`` by the ordering with slope ``s`` and given side sign.

    Points on the line are omitted (their sign is the free line sign).
    """
    o = Z2Ordering(s, orientation, 1)
    out = {}
    for pt in points:
        if det((s.p, s.q), pt):
            out[tuple(pt)] = sign_of(o, pt)
    return out


__all__ = [
    "SlopeQ", "INF", "slope_from_pair", "filling_word", "Z2Ordering",
    "enumerate_orderings", "sign_of", "Arc", "compatible_slope_arc",
    "DetectionTuple", "IDENTITY",
]
