"""Configurations of the particle-hopping model and its one-step dynamics.

A configuration is a finite run of cells.  Each cell is either a hole
(``None``) or a particle carrying an exact :class:`~fractions.Fraction`
velocity.  The finite run is closed up either as a ring, or as a segment
of the infinite line whose two tails are declared to be all holes or all
stopped particles.

Both updates are computed on the list of particles rather than on cells:
every particle is shifted by the integer part of its velocity, accelerated
by ``a`` up to ``vmax`` and then capped by the number of free sites in
front of it.  The general (signed) update additionally corrects negative
velocities against the particle behind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .errors import CollisionError, DomainError, ModeError, WindowError

HOLE = None
Cell = Optional[Fraction]

ZERO = Fraction(0)


class Tail(str, Enum):
    HOLES = "holes"
    ZEROS = "zeros"


class NegShift(str, Enum):
    """How a negative velocity is turned into an integer displacement."""

    FLOOR = "floor"
    TOWARD_ZERO = "toward_zero"


@dataclass(frozen=True)
class Ring:
    pass


@dataclass(frozen=True)
class Line:
    left: Tail = Tail.HOLES
    right: Tail = Tail.HOLES

    def __post_init__(self):
        object.__setattr__(self, "left", Tail(self.left))
        object.__setattr__(self, "right", Tail(self.right))


RING = Ring()
Boundary = Union[Ring, Line]


@dataclass(frozen=True)
class ModelParams:
    """Acceleration ``a``, maximal velocity ``vmax`` and ``w = ceil(1/a)``."""

    a: Fraction
    vmax: int = 1
    w: int = field(init=False)

    def __post_init__(self):
        a = Fraction(self.a)
        if not isinstance(self.vmax, int) or self.vmax < 1:
            raise DomainError(f"vmax must be a positive integer, got {self.vmax!r}")
        if a <= 0 or a > self.vmax:
            raise DomainError(f"acceleration must satisfy 0 < a <= vmax, got a={a}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "w", math.ceil(1 / a))


def make_params(a, vmax: int = 1) -> ModelParams:
    return ModelParams(Fraction(a), vmax)


def _as_cell(value) -> Cell:
    if value is None:
        return None
    return Fraction(value)


@dataclass(frozen=True)
class Configuration:
    """Immutable finite cell sequence plus boundary closure.

    ``origin`` is the lattice coordinate of ``cells[0]``.  On a ring the
    coordinate is taken modulo the ring length.
    """

    cells: Tuple[Cell, ...]
    boundary: Boundary = RING
    origin: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(_as_cell(c) for c in self.cells))

    def __len__(self):
        return len(self.cells)

    @property
    def is_ring(self) -> bool:
        return isinstance(self.boundary, Ring)

    @property
    def end(self) -> int:
        """Lattice coordinate of the last explicit cell."""
        return self.origin + len(self.cells) - 1

    def at(self, i: int) -> Cell:
        """Cell at lattice coordinate ``i``, consulting the ring or the tails."""
        if self.is_ring:
            if not self.cells:
                raise WindowError("empty ring has no sites")
            return self.cells[(i - self.origin) % len(self.cells)]
        if i < self.origin:
            return ZERO if self.boundary.left is Tail.ZEROS else None
        if i > self.end:
            return ZERO if self.boundary.right is Tail.ZEROS else None
        return self.cells[i - self.origin]

    def window(self, lo: int, hi: int) -> Tuple[Cell, ...]:
        if lo > hi + 1:
            raise WindowError(f"empty or reversed window [{lo}, {hi}]")
        return tuple(self.at(i) for i in range(lo, hi + 1))

    def particles(self) -> List[Tuple[int, Fraction]]:
        """``(site, velocity)`` of every explicit particle, left to right."""
        return [(self.origin + k, v) for k, v in enumerate(self.cells) if v is not None]

    @property
    def n_particles(self) -> int:
        return sum(1 for v in self.cells if v is not None)

    def replace_cells(self, cells: Iterable[Cell]) -> "Configuration":
        return Configuration(tuple(cells), self.boundary, self.origin)


def ring(cells: Sequence, origin: int = 0) -> Configuration:
    return Configuration(tuple(cells), RING, origin)


def line(cells: Sequence, left=Tail.HOLES, right=Tail.HOLES, origin: int = 0) -> Configuration:
    return Configuration(tuple(cells), Line(left, right), origin)


# -- admissibility -----------------------------------------------------------


def _neighbour_pairs(c: Configuration):
    """Consecutive particle pairs ``((i-, x-), (i+, x+))`` including tails."""
    parts = c.particles()
    if c.is_ring:
        n = len(c.cells)
        for k, (i, x) in enumerate(parts):
            if k + 1 < len(parts):
                yield (i, x), parts[k + 1]
            else:
                j, y = parts[0]
                yield (i, x), (j + n, y)
        return
    seq = list(parts)
    if c.boundary.left is Tail.ZEROS:
        seq.insert(0, (c.origin - 1, ZERO))
    if c.boundary.right is Tail.ZEROS:
        seq.append((c.end + 1, ZERO))
    for k in range(len(seq) - 1):
        yield seq[k], seq[k + 1]


def is_admissible(c: Configuration, p: ModelParams, general: bool = False) -> bool:
    """Whether all particles can be moved by their velocities without collision.

    In main mode velocities must lie in ``[0, vmax]`` and every particle must
    satisfy ``i + x_i < next particle site``.  With ``general=True`` velocities
    may be negative and the signed inequality is used instead.
    """
    for _, x in c.particles():
        if general:
            if abs(x) > p.vmax:
                return False
        elif not 0 <= x <= p.vmax:
            return False
    for (i, x), (j, y) in _neighbour_pairs(c):
        if general:
            if not j - i > max(0, x, -y, x - y):
                return False
        elif not i + x < j:
            return False
    return True


# -- particle-level stepping -------------------------------------------------


@dataclass
class _State:
    ids: List[int]
    pos: List[int]
    vel: List[Fraction]
    lo: int
    hi: int
    next_tail_id: int = -1


def _state_of(c: Configuration) -> _State:
    parts = c.particles()
    return _State(
        ids=list(range(len(parts))),
        pos=[q for q, _ in parts],
        vel=[v for _, v in parts],
        lo=c.origin,
        hi=c.end,
    )


def _config_of(s: _State, boundary: Boundary) -> Configuration:
    n = s.hi - s.lo + 1
    cells: List[Cell] = [None] * n
    if isinstance(boundary, Ring):
        for q, v in zip(s.pos, s.vel):
            cells[(q - s.lo) % n] = v
    else:
        for q, v in zip(s.pos, s.vel):
            cells[q - s.lo] = v
    return Configuration(tuple(cells), boundary, s.lo)


def _shift(v: Fraction, neg_shift: NegShift) -> int:
    if v < 0 and neg_shift is NegShift.TOWARD_ZERO:
        return -math.floor(-v)
    return math.floor(v)


def _advance(s: _State, boundary: Boundary, p: ModelParams, general: bool,
             neg_shift: NegShift) -> _State:
    ids, pos, vel = list(s.ids), list(s.pos), list(s.vel)
    lo, hi, next_tail_id = s.lo, s.hi, s.next_tail_id
    is_ring = isinstance(boundary, Ring)
    length = hi - lo + 1

    if not is_ring and boundary.left is Tail.ZEROS:
        # the implicit tail stays frozen only while its front neighbour does not move
        if not (pos and pos[0] == lo and _shift(vel[0], neg_shift) == 0):
            ids.insert(0, next_tail_id)
            pos.insert(0, lo - 1)
            vel.insert(0, ZERO)
            next_tail_id -= 1
            lo -= 1

    n = len(pos)
    new_pos = [q + _shift(v, neg_shift) for q, v in zip(pos, vel)]

    for k in range(n - 1):
        if new_pos[k + 1] <= new_pos[k]:
            raise CollisionError(f"particles {ids[k]} and {ids[k + 1]} collide at site {new_pos[k + 1]}")
    if is_ring and n > 1 and new_pos[-1] >= new_pos[0] + length:
        raise CollisionError(f"particles {ids[-1]} and {ids[0]} collide across the ring seam")
    if not is_ring and boundary.right is Tail.ZEROS and n and new_pos[-1] > hi:
        raise CollisionError(f"particle {ids[-1]} runs into the stopped right tail")
    if not is_ring and boundary.left is Tail.ZEROS and n and new_pos[0] < lo:
        raise CollisionError(f"particle {ids[0]} runs into the stopped left tail")

    new_vel = []
    for k in range(n):
        x = min(vel[k] + p.a, p.vmax)
        if k + 1 < n:
            nxt = new_pos[k + 1]
        elif is_ring:
            nxt = new_pos[0] + length
        elif boundary.right is Tail.ZEROS:
            nxt = hi + 1
        else:
            nxt = None
        if nxt is not None:
            x = min(x, nxt - new_pos[k] - 1)
        new_vel.append(x)

    if general:
        capped = list(new_vel)
        for k in range(n):
            if capped[k] >= 0:
                continue
            if k > 0:
                prev, prev_v = new_pos[k - 1], capped[k - 1]
            elif is_ring:
                prev, prev_v = new_pos[-1] - length, capped[-1]
            elif boundary.left is Tail.ZEROS:
                prev, prev_v = lo - 1, ZERO
            else:
                continue
            bound = -(new_pos[k] - prev - 1 - max(0, prev_v))
            new_vel[k] = max(capped[k], bound)

    if not is_ring and n:
        if boundary.right is Tail.HOLES:
            hi = max(hi, new_pos[-1])
        if boundary.left is Tail.HOLES:
            lo = min(lo, new_pos[0])
    return _State(ids, new_pos, new_vel, lo, hi, next_tail_id)


def _check_main(c: Configuration):
    if any(v is not None and v < 0 for v in c.cells):
        raise ModeError("main-mode step requires nonnegative velocities; use general_step")


def step(c: Configuration, p: ModelParams) -> Configuration:
    """One application of the shift-then-accelerate map to ``c``."""
    _check_main(c)
    if not c.cells:
        return c
    return _config_of(_advance(_state_of(c), c.boundary, p, False, NegShift.FLOOR), c.boundary)


def general_step(c: Configuration, p: ModelParams,
                 neg_shift: NegShift = NegShift.TOWARD_ZERO) -> Configuration:
    """One step of the signed-velocity dynamics with collision corrections."""
    if not c.cells:
        return c
    return _config_of(_advance(_state_of(c), c.boundary, p, True, NegShift(neg_shift)), c.boundary)


# -- trajectories ------------------------------------------------------------


@dataclass
class Trajectory:
    """Configurations at times ``0..horizon`` plus particle identities.

    ``ids[t][k]`` names the ``k``-th particle (in left-to-right order along
    the unwrapped lattice) at time ``t``; ``positions[t][k]`` is its
    unwrapped site.  Initial particles are numbered ``0, 1, ...``; particles
    released from a stopped left tail get negative ids.
    """

    params: ModelParams
    configs: List[Configuration]
    ids: List[Tuple[int, ...]]
    positions: List[Tuple[int, ...]]

    def __len__(self):
        return len(self.configs)

    def __getitem__(self, t):
        return self.configs[t]

    def __iter__(self):
        return iter(self.configs)

    @property
    def horizon(self) -> int:
        return len(self.configs) - 1

    def position_of(self, pid: int, t: int) -> int:
        return self.positions[t][self.ids[t].index(pid)]

    def rows(self, lo: Optional[int] = None, hi: Optional[int] = None) -> List[Tuple[Cell, ...]]:
        """Cell rows restricted to ``[lo, hi]`` (default: the initial window)."""
        first = self.configs[0]
        lo = first.origin if lo is None else lo
        hi = first.end if hi is None else hi
        if first.is_ring and hi - lo + 1 > len(first):
            raise WindowError(f"window [{lo}, {hi}] is longer than the ring")
        return [c.window(lo, hi) for c in self.configs]


def simulate(c: Configuration, p: ModelParams, horizon: int, general: bool = False,
             neg_shift: NegShift = NegShift.TOWARD_ZERO) -> Trajectory:
    """Iterate the dynamics ``horizon`` times; index 0 is the input."""
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    if not general:
        _check_main(c)
    neg_shift = NegShift(neg_shift)
    state = _state_of(c)
    configs, ids, positions = [c], [tuple(state.ids)], [tuple(state.pos)]
    for _ in range(horizon):
        if c.cells:
            state = _advance(state, c.boundary, p, general, neg_shift)
        configs.append(_config_of(state, c.boundary) if c.cells else c)
        ids.append(tuple(state.ids))
        positions.append(tuple(state.pos))
    return Trajectory(p, configs, ids, positions)
