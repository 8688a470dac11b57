"""Jam detection, basin of attraction and closed-form jam life-time.

A jam is a maximal block of particles with velocities in ``[0, 1)`` that
has a hole behind it and a hole or a moving particle in front of it.  Its
basin of attraction is found by scanning left from the jam with a running
weight.  A particle joins the basin when its own weight plus the holes
passed so far fits into the running weight, which then grows by ``w``.
The scan stops at the first particle that cannot join or once the holes
outnumber the weight.  The life-time of the jam equals the final weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .errors import DomainError, ModeError
from .model import ZERO, Cell, Configuration, ModelParams, Tail, Trajectory


@dataclass(frozen=True)
class JamRecord:
    """Jam occupying ``[start, end]``; ``start`` is ``None`` for a jam that
    extends into a stopped left tail."""

    start: Optional[int]
    end: int
    leading_velocity: Fraction

    @property
    def length(self) -> Union[int, float]:
        return math.inf if self.start is None else self.end - self.start + 1


@dataclass(frozen=True)
class BasinRecord:
    """Basin ``[left, right]``; ``left is None`` means the basin is the whole left tail."""

    left: Optional[int]
    right: int
    weight: Optional[int]
    lifetime: Union[int, float]

    @property
    def finite(self) -> bool:
        return self.left is not None


def weight_fn(z: Cell, p: ModelParams) -> int:
    """Steps a particle with velocity ``z`` needs to reach velocity 1."""
    if z is None or z < 0:
        return 0
    return math.ceil((1 - z) / p.a)


def _slow(v: Cell) -> bool:
    return v is not None and 0 <= v < 1


def _require_main(c: Configuration):
    if any(v is not None and v < 0 for v in c.cells):
        raise ModeError("jam analysis needs nonnegative velocities")


def jam_ending_at(c: Configuration, m: int) -> Optional[JamRecord]:
    """The jam whose leading particle sits at ``m``, if there is one."""
    if c.is_ring and c.cells:
        m = c.origin + (m - c.origin) % len(c)
    lead = c.at(m)
    if not _slow(lead):
        return None
    ahead = c.at(m + 1)
    if ahead is not None and ahead < 1:
        return None
    n = m
    if c.is_ring:
        size = len(c)
        while _slow(c.at(n - 1)):
            n -= 1
            if m - n + 1 >= size:
                return None
    else:
        while _slow(c.at(n - 1)):
            n -= 1
            if n < c.origin and c.boundary.left is Tail.ZEROS:
                return JamRecord(None, m, lead)
    if c.at(n - 1) is not None:
        return None
    return JamRecord(n, m, lead)


def find_jams(c: Configuration) -> List[JamRecord]:
    """All jams of ``c`` ordered by their leading site.

    On a ring every leading site lies in ``[origin, origin + len)``; a jam
    crossing the seam gets a ``start`` below ``origin``.
    """
    _require_main(c)
    if c.is_ring:
        if not c.cells:
            return []
        if all(v is not None for v in c.cells):
            raise DomainError("no hole on ring")
    jams = []
    for m in range(c.origin, c.end + 1):
        j = jam_ending_at(c, m)
        if j is not None:
            jams.append(j)
    return jams


def segment_weight(c: Configuration, n: int, m: int, p: ModelParams) -> int:
    """``w`` per particle in ``[n, m-1]`` plus the weight of the particle at ``m``."""
    if n > m:
        raise DomainError("segment must satisfy n <= m")
    lead = c.at(m)
    if lead is None:
        raise DomainError(f"site {m} holds a hole, not a leading particle")
    count = sum(1 for i in range(n, m) if c.at(i) is not None)
    return p.w * count + weight_fn(lead, p)


def _joins(v: Cell, holes: int, weight: int, p: ModelParams) -> bool:
    # a free particle reaches the rear of the jam after w(v) + holes steps
    return weight_fn(v, p) + holes <= weight


def basin_of_attraction(c: Configuration, j: JamRecord, p: ModelParams) -> BasinRecord:
    """Basin of jam ``j``: every particle that joins it before it dissolves.

    Scanning left from the rear of the jam, a particle joins when it can
    reach the rear of the queue before the last particle already counted
    leaves it.  The reported left edge is the site ``k`` with
    ``m - k + 2 = W + ceil(W / w)``, so that the segment holds ``W - 1``
    cells that are not basin particles.
    """
    if p.vmax != 1:
        raise ModeError("basin analysis is only available for vmax = 1")
    _require_main(c)
    m = j.end
    infinite = BasinRecord(None, m, None, math.inf)
    if j.start is None:
        return infinite
    weight = weight_fn(c.at(m), p) + p.w * (m - j.start)
    members = m - j.start + 1
    holes = 0
    zero_tail = not c.is_ring and c.boundary.left is Tail.ZEROS
    q = j.start - 1
    while holes <= weight:
        if c.is_ring and m - q >= len(c):
            return infinite
        if zero_tail and q < c.origin:
            if _joins(ZERO, holes, weight, p):
                return infinite
            break
        v = c.at(q)
        if v is None:
            holes += 1
        elif _joins(v, holes, weight, p):
            weight += p.w
            members += 1
        else:
            break
        q -= 1
    return BasinRecord(m - weight - members + 2, m, weight, weight)


def lifetime(c: Configuration, j: JamRecord, p: ModelParams) -> Union[int, float]:
    return basin_of_attraction(c, j, p).lifetime


@dataclass
class JamTrack:
    extents: List[Tuple[int, Tuple[Optional[int], int]]]
    observed_lifetime: Optional[int]

    @property
    def censored(self) -> bool:
        return self.observed_lifetime is None


def follow(c: Configuration, m: int) -> Optional[JamRecord]:
    """Successor in ``c`` of a jam that was led from ``m`` one step earlier."""
    lead = c.at(m)
    if _slow(lead):
        return jam_ending_at(c, m)
    return jam_ending_at(c, m - 1)


def track_jam(t: Trajectory, j: JamRecord) -> JamTrack:
    """Follow jam ``j`` of ``t[0]`` until it disappears or the horizon ends.

    The leader of a jam never moves while it is in the jam, so the jam one
    step later is led either from the same site or from the site behind it.
    """
    extents = [(0, (j.start, j.end))]
    current = j
    for step in range(1, len(t)):
        current = follow(t[step], current.end)
        if current is None:
            return JamTrack(extents, step)
        extents.append((step, (current.start, current.end)))
    return JamTrack(extents, None)


def basin_extents(t: Trajectory, j: JamRecord) -> List[Optional[Tuple[Optional[int], int]]]:
    """Basin ``(left, right)`` of the tracked jam at every step, ``None`` once it is gone."""
    p = t.params
    out: List[Optional[Tuple[Optional[int], int]]] = []
    current: Optional[JamRecord] = j
    for step in range(len(t)):
        if step:
            current = follow(t[step], current.end) if current is not None else None
        if current is None:
            out.append(None)
            continue
        b = basin_of_attraction(t[step], current, p)
        out.append((b.left, b.right))
    return out
