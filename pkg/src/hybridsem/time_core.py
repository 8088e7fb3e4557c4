"""Exact time points and intervals.

All finite time values are `fractions.Fraction`; the unbounded upper
endpoint is the distinguished value INF (and the empty configuration's
end time is NEG_INF).  No floats appear anywhere in verdicts.

Intervals are left-closed, right-open by default; a closed right end
marks a final configuration.  Every interval constructed through
interval_make has duration at least zeta, the system-level minimum
configuration duration that rules out zeno behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import DurationBelowZeta, NegativeTime

__all__ = [
    "Q",
    "INF",
    "NEG_INF",
    "TimeInterval",
    "interval_make",
    "interval_closure",
    "interval_intersect",
    "is_finite",
    "tmin",
    "tmax",
    "time_str",
]

Q = Fraction


class _Extended:
    """Signed infinity, totally ordered against exact rationals."""

    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = sign

    def __repr__(self):
        return "+inf" if self.sign > 0 else "-inf"

    def __eq__(self, other):
        return isinstance(other, _Extended) and other.sign == self.sign

    def __hash__(self):
        return hash(("extended-time", self.sign))

    def __lt__(self, other):
        if isinstance(other, _Extended):
            return self.sign < other.sign
        if isinstance(other, Rational):
            return self.sign < 0
        return NotImplemented

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        if isinstance(other, _Extended):
            return self.sign > other.sign
        if isinstance(other, Rational):
            return self.sign > 0
        return NotImplemented

    def __ge__(self, other):
        return self == other or self > other

    # arithmetic only where the sign is unambiguous
    def __add__(self, other):
        if isinstance(other, Rational):
            return self
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Rational):
            return self
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Rational):
            return _Extended(-self.sign)
        return NotImplemented


INF = _Extended(1)
NEG_INF = _Extended(-1)


def is_finite(t) -> bool:
    return not isinstance(t, _Extended)


def tmin(*ts):
    out = ts[0]
    for t in ts[1:]:
        if t < out:
            out = t
    return out


def tmax(*ts):
    out = ts[0]
    for t in ts[1:]:
        if t > out:
            out = t
    return out


def time_str(t) -> str:
    if t is INF:
        return "inf"
    if t is NEG_INF:
        return "-inf"
    return str(t)


@dataclass(frozen=True)
class TimeInterval:
    lo: Fraction
    hi: object  # Fraction or INF
    closed_hi: bool = False

    @property
    def b(self):
        return self.lo

    @property
    def e(self):
        return self.hi

    @property
    def d(self):
        return self.hi - self.lo

    def contains(self, t) -> bool:
        if not is_finite(t):
            return False
        if t < self.lo:
            return False
        if t < self.hi:
            return True
        return self.closed_hi and t == self.hi

    def subset_of(self, other: "TimeInterval") -> bool:
        if self.lo < other.lo:
            return False
        if self.hi < other.hi:
            return True
        if self.hi == other.hi:
            return other.closed_hi or not self.closed_hi
        return False

    def __repr__(self):
        close = "]" if self.closed_hi else ")"
        return f"[{time_str(self.lo)},{time_str(self.hi)}{close}"


def interval_make(lo, hi, zeta, closed_hi: bool = False) -> TimeInterval:
    lo = Q(lo)
    if lo < 0:
        raise NegativeTime(f"interval start {lo} < 0")
    if is_finite(hi):
        hi = Q(hi)
        if hi - lo < zeta:
            raise DurationBelowZeta(f"duration {hi - lo} < zeta {zeta}")
    else:
        if closed_hi:
            raise DurationBelowZeta("unbounded interval cannot be closed")
        hi = INF
    return TimeInterval(lo, hi, closed_hi)


def interval_closure(i: TimeInterval) -> TimeInterval:
    # cl([t1,inf[) = [t1,inf[
    if not is_finite(i.hi) or i.closed_hi:
        return i
    return TimeInterval(i.lo, i.hi, True)


def interval_intersect(i: TimeInterval, j: TimeInterval):
    """Exact set intersection; returns None when empty.

    Sub-zeta intersections are reported as-is; callers that need the
    minimum-duration guarantee enforce it themselves.
    """
    lo = tmax(i.lo, j.lo)
    hi = tmin(i.hi, j.hi)
    if not is_finite(hi):
        return TimeInterval(lo, INF, False)
    if lo > hi:
        return None
    closed = i.contains(hi) and j.contains(hi)
    if lo == hi and not closed:
        return None
    return TimeInterval(lo, hi, closed)
