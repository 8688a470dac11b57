"""Densities, average velocities, hole defects and the fundamental diagram.

Every estimator works on finite data and returns exact fractions.  Limits
of the infinite model are approximated over declared windows: a burn-in
index for spatial statistics and a confirmation length for temporal ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import DomainError
from .jams import basin_of_attraction, find_jams
from .model import Configuration, ModelParams, Tail, Trajectory


@dataclass(frozen=True)
class DensityEstimate:
    values: Tuple[Tuple[int, Fraction], ...]
    liminf_est: Fraction
    limsup_est: Fraction


@dataclass(frozen=True)
class HoleStats:
    """Transient statistics of the hole initially at ``initial_site``.

    ``theta`` is ``None`` when no periodic regime was confirmed before the
    horizon; ``k_count`` and ``defect`` are then ``None`` as well.
    """

    initial_site: int
    theta: Optional[int]
    k_count: Optional[int]
    defect: Optional[Fraction]
    move_times: Tuple[int, ...] = ()

    @property
    def censored(self) -> bool:
        return self.theta is None


@dataclass(frozen=True)
class FdPrediction:
    lower_branch: Fraction
    upper_branch_present: bool
    upper_branch: Optional[Fraction]
    gamma1: Fraction
    gamma2: Fraction

    def values(self) -> Tuple[Fraction, ...]:
        if self.upper_branch_present and self.upper_branch != self.lower_branch:
            return (self.lower_branch, self.upper_branch)
        return (self.lower_branch,)


def density(c: Configuration, n: int, m: int) -> Fraction:
    """Fraction of occupied sites in ``[n, m]``; tails count as declared."""
    if n > m:
        raise DomainError("segment must satisfy n <= m")
    count = sum(1 for i in range(n, m + 1) if c.at(i) is not None)
    return Fraction(count, m - n + 1)


def density_profile(c: Configuration, max_n: int,
                    tail_fraction: Fraction = Fraction(1, 2)) -> DensityEstimate:
    """Partial densities of ``x[origin, origin + n - 1]`` for ``n = 1..max_n``.

    The lower and upper density estimates are the extremes of the profile
    over its last ``tail_fraction`` share.  A ring is a periodic lattice, so
    both estimates equal its exact density.
    """
    if max_n < 1:
        raise DomainError("max_n must be positive")
    values = []
    count = 0
    for n in range(1, max_n + 1):
        if c.at(c.origin + n - 1) is not None:
            count += 1
        values.append((n, Fraction(count, n)))
    if c.is_ring:
        exact = Fraction(c.n_particles, len(c)) if len(c) else Fraction(0)
        return DensityEstimate(tuple(values), exact, exact)
    first = max_n - max(1, math.floor(max_n * Fraction(tail_fraction)))
    tail = [rho for _, rho in values[first:]]
    return DensityEstimate(tuple(values), min(tail), max(tail))


def time_avg_velocity(t: Trajectory, i: int) -> List[Tuple[int, Fraction]]:
    """``V(x, i, s) = displacement / s`` for the particle starting at site ``i``.

    Only whole-site moves count; fractional velocity never enters.
    """
    start = t[0]
    if start.at(i) is None:
        raise DomainError(f"site {i} holds no particle")
    if start.is_ring:
        i = start.origin + (i - start.origin) % len(start)
    k = t.positions[0].index(i)
    pid = t.ids[0][k]
    out = []
    for s in range(1, len(t)):
        out.append((s, Fraction(t.position_of(pid, s) - i, s)))
    return out


def space_avg_velocity(c: Configuration, n: int, m: int) -> Fraction:
    """Mean integer part of the velocities of the particles in ``[n, m]``."""
    speeds = [math.floor(v) for v in (c.at(i) for i in range(n, m + 1)) if v is not None]
    if not speeds:
        raise DomainError("segment holds no particle")
    return Fraction(sum(speeds), len(speeds))


def hole_moves(t: Trajectory) -> Dict[int, List[int]]:
    """Steps at which each initial hole moved one site to the left.

    With ``vmax = 1`` a hole at ``q`` moves exactly when the particle at
    ``q - 1`` jumps into it, so holes keep their identity.  Keys are the
    initial sites of the holes in the window of ``t[0]``.
    """
    first = t[0]
    size = len(first)
    at = {q: q for q in range(first.origin, first.end + 1) if first.at(q) is None}
    moves: Dict[int, List[int]] = {q: [] for q in at}
    for s in range(1, len(t)):
        row = t[s]
        for origin_site, q in at.items():
            if row.at(q) is not None:
                q -= 1
                if first.is_ring:
                    q = first.origin + (q - first.origin) % size
                at[origin_site] = q
                moves[origin_site].append(s)
    return moves


def periodic_onset(moves: Sequence[int], horizon: int, w: int,
                   confirm: Optional[int] = None) -> Optional[int]:
    """Time of the first move of the final run of moves spaced exactly ``w``.

    The run has to reach the horizon (no move is missing at the end) and
    span at least ``confirm`` steps, ``4 * w`` by default.
    """
    confirm = 4 * w if confirm is None else confirm
    if not moves or horizon - moves[-1] >= w:
        return None
    r = len(moves) - 1
    while r > 0 and moves[r] - moves[r - 1] == w:
        r -= 1
    onset = moves[r]
    if horizon - onset < confirm:
        return None
    return onset


def hole_defects(t: Trajectory, p: ModelParams, confirm: Optional[int] = None) -> List[HoleStats]:
    """Transient length, particles met and defect for every initial hole."""
    if p.vmax != 1:
        raise DomainError("hole statistics need vmax = 1")
    out = []
    for site, moves in sorted(hole_moves(t).items()):
        theta = periodic_onset(moves, t.horizon, p.w, confirm)
        if theta is None:
            out.append(HoleStats(site, None, None, None, tuple(moves)))
            continue
        k_count = sum(1 for s in moves if s <= theta)
        out.append(HoleStats(site, theta, k_count, k_count - Fraction(theta, p.w), tuple(moves)))
    return out


def infinite_jams(c: Configuration, p: ModelParams):
    """Jams of ``c`` whose basin of attraction is infinite."""
    return [j for j in find_jams(c) if not basin_of_attraction(c, j, p).finite]


def gaps_between_infinite_jams(c: Configuration, p: ModelParams) -> List[Tuple[int, int]]:
    """Extents ``(n_k, m_k)`` strictly between successive infinite-lifetime jams.

    A left tail of zeros counts as an infinite jam ending just before the
    origin.
    """
    ends = [(j.start, j.end) for j in infinite_jams(c, p)]
    if not c.is_ring and c.boundary.left is Tail.ZEROS and (not ends or ends[0][0] is not None):
        ends.insert(0, (None, c.origin - 1))
    out = []
    for (_, left_end), (right_start, _) in zip(ends, ends[1:]):
        if right_start is not None and right_start - 1 >= left_end + 1:
            out.append((left_end + 1, right_start - 1))
    return out


def reg_estimates(c: Configuration, t: Trajectory, p: ModelParams,
                  burn_in: int = 0, confirm: Optional[int] = None) -> Tuple[Fraction, Fraction]:
    """Windowed regularity functionals ``(reg, regbar)``.

    Sites are numbered from 1 at ``c.origin``.  Only holes lying in a gap
    between two detected infinite-lifetime jams take part.  ``reg`` is the
    largest normalized defect ``|D_j| / j`` over those holes with
    ``j > burn_in`` whose transient ended inside the horizon; ``regbar`` the
    largest ``|G_k| / m_k`` over gaps with ``m_k > burn_in``.
    """
    gaps = gaps_between_infinite_jams(c, p)
    if not gaps and not infinite_jams(c, p):
        raise DomainError("no infinite-lifetime jam: regularity is undefined")
    reg = Fraction(0)
    for h in hole_defects(t, p, confirm):
        j = h.initial_site - c.origin + 1
        if h.censored or j <= burn_in or not any(n <= h.initial_site <= m for n, m in gaps):
            continue
        reg = max(reg, abs(h.defect) / j)
    regbar = Fraction(0)
    for n, m in gaps:
        right = m - c.origin + 1
        if right > burn_in:
            regbar = max(regbar, Fraction(m - n + 1, right))
    return reg, regbar


def fd_predict(rho, p: ModelParams) -> FdPrediction:
    """Branches of the fundamental diagram at density ``rho``."""
    rho = Fraction(rho)
    if not 0 < rho <= 1:
        raise DomainError("density must lie in (0, 1]")
    v = Fraction(p.vmax)
    gamma1 = 1 / (1 + p.w * v)
    gamma2 = 1 / (1 + v)
    lower = min(v, (1 / rho - 1) / p.w)
    upper = gamma1 <= rho <= gamma2
    return FdPrediction(lower, upper, v if upper else None, gamma1, gamma2)
