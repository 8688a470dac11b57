"""Compiled kernels for long ring runs and exhaustive life-time checks.

Velocities are stored as integers in units of ``1/D`` where ``D`` is the
denominator of the acceleration, so the arithmetic stays exact.  The
kernels mirror :mod:`jamflow.model` and :mod:`jamflow.jams`; the test suite
checks them against those reference implementations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from numba import njit

from .errors import DomainError, ModeError
from .model import Configuration, ModelParams

HOLE = -1


def velocity_units(p: ModelParams):
    """``(A, D)`` with ``a = A / D``."""
    return p.a.numerator, p.a.denominator


def encode_cells(cells, p: ModelParams) -> np.ndarray:
    d = p.a.denominator
    out = np.empty(len(cells), dtype=np.int64)
    for k, v in enumerate(cells):
        if v is None:
            out[k] = HOLE
        else:
            scaled = v * d
            if scaled.denominator != 1 or v < 0:
                raise DomainError(f"velocity {v} is not a nonnegative multiple of 1/{d}")
            out[k] = scaled.numerator
    return out


# -- ring engine -------------------------------------------------------------


@njit(cache=True)
def _ring_run(pos, vel, length, accel, denom, vmax, horizon, burn_in,
              record_holes, probe, leader):
    n = pos.shape[0]
    top = vmax * denom
    occ_old = np.zeros(length, dtype=np.int64)
    occ_new = np.zeros(length, dtype=np.int64)
    for k in range(n):
        occ_old[pos[k] % length] = k + 1

    n_holes = length - n if record_holes else 0
    hole_site = np.empty(n_holes, dtype=np.int64)
    hole_init = np.empty(n_holes, dtype=np.int64)
    h = 0
    if record_holes:
        for q in range(length):
            if occ_old[q] == 0:
                hole_site[h] = q
                hole_init[h] = q
                h += 1
    move_cap = horizon if record_holes else 0
    moves = np.zeros((n_holes, move_cap), dtype=np.int32)
    move_count = np.zeros(n_holes, dtype=np.int64)
    meet = np.full(n_holes, -1, dtype=np.int64)

    pos_burn = pos.copy()
    new_pos = np.empty(n, dtype=np.int64)
    violations = 0
    first_violation = -1
    total_flux = 0
    jam_len = np.full(horizon + 1, -1, dtype=np.int64)
    jam_end = -1
    m = leader

    if leader >= 0:
        jam_len[0] = _slow_run(occ_old, vel, length, denom, m)

    for s in range(1, horizon + 1):
        disp = 0
        for k in range(n):
            d = vel[k] // denom
            new_pos[k] = pos[k] + d
            disp += d
        for k in range(n):
            if k + 1 < n:
                nxt = new_pos[k + 1]
            else:
                nxt = new_pos[0] + length
            x = vel[k] + accel
            if x > top:
                x = top
            cap = (nxt - new_pos[k] - 1) * denom
            if x > cap:
                x = cap
            vel[k] = x
        for q in range(length):
            occ_new[q] = 0
        for k in range(n):
            occ_new[new_pos[k] % length] = k + 1

        swaps = 0
        for q in range(length):
            if occ_new[q] != 0 and occ_old[q] == 0:
                swaps += 1
        hole_disp = 0
        if record_holes:
            for h in range(n_holes):
                q = hole_site[h]
                if occ_new[q] != 0:
                    if occ_new[q] - 1 == probe and meet[h] < 0:
                        meet[h] = s
                    hole_site[h] = (q - 1) % length
                    moves[h, move_count[h]] = s
                    move_count[h] += 1
                    hole_disp += 1
        else:
            hole_disp = swaps
        if not (disp == swaps and swaps == hole_disp):
            violations += 1
            if first_violation < 0:
                first_violation = s
        total_flux += disp

        for k in range(n):
            pos[k] = new_pos[k]
        tmp = occ_old
        occ_old = occ_new
        occ_new = tmp
        if s == burn_in:
            pos_burn[:] = pos

        if leader >= 0 and jam_end < 0:
            if not _is_slow(occ_old, vel, denom, m):
                m = (m - 1) % length
                if not _is_slow(occ_old, vel, denom, m):
                    jam_end = s
            if jam_end < 0:
                jam_len[s] = _slow_run(occ_old, vel, length, denom, m)
            else:
                jam_len[s] = 0

    return (pos, vel, pos_burn, hole_init, moves, move_count, meet,
            violations, first_violation, total_flux, jam_len, jam_end)


@njit(cache=True)
def _is_slow(occ, vel, denom, q):
    k = occ[q] - 1
    return k >= 0 and vel[k] < denom


@njit(cache=True)
def _slow_run(occ, vel, length, denom, m):
    count = 0
    q = m
    while count < length and _is_slow(occ, vel, denom, q):
        count += 1
        q = (q - 1) % length
    return count


@dataclass
class RingRun:
    """Result of :func:`run_ring`; positions are unwrapped lattice sites."""

    params: ModelParams
    length: int
    horizon: int
    burn_in: int
    initial_positions: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    positions_at_burn_in: np.ndarray
    hole_sites: np.ndarray
    hole_moves: np.ndarray
    hole_move_counts: np.ndarray
    probe_meet: np.ndarray
    audit_violations: int
    first_violation: Optional[int]
    total_flux: int
    jam_lengths: np.ndarray
    jam_end: Optional[int]

    def moves_of(self, h: int) -> np.ndarray:
        return self.hole_moves[h, : self.hole_move_counts[h]]

    def velocity(self, k: int = 0) -> Fraction:
        """Time-average velocity of particle ``k`` after burn-in."""
        span = self.horizon - self.burn_in
        return Fraction(int(self.positions[k] - self.positions_at_burn_in[k]), span)

    def final_velocities(self):
        d = self.params.a.denominator
        return [Fraction(int(v), d) for v in self.velocities]


def run_ring(c: Configuration, p: ModelParams, horizon: int, burn_in: int = 0,
             record_holes: bool = False, probe: int = -1,
             leader: Optional[int] = None) -> RingRun:
    """Iterate a ring configuration with compiled code.

    ``probe`` is the index (left to right from ``c.origin``) of a particle
    whose first meeting with every hole is logged.  ``leader`` is a site
    leading a jam that is followed step by step.
    """
    if not c.is_ring:
        raise ModeError("run_ring needs a ring configuration")
    if any(v is not None and v < 0 for v in c.cells):
        raise ModeError("run_ring needs nonnegative velocities")
    if not 0 <= burn_in <= horizon:
        raise DomainError("need 0 <= burn_in <= horizon")
    cells = encode_cells(c.cells, p)
    pos = np.nonzero(cells != HOLE)[0].astype(np.int64)
    vel = cells[pos].copy()
    accel, denom = velocity_units(p)
    lead = -1 if leader is None else (leader - c.origin) % len(c)
    out = _ring_run(pos.copy(), vel, len(c), accel, denom, p.vmax, horizon, burn_in,
                    record_holes, probe, lead)
    (pos_f, vel_f, pos_b, hole_init, moves, counts, meet,
     violations, first, flux, jam_len, jam_end) = out
    return RingRun(p, len(c), horizon, burn_in, pos + c.origin, pos_f + c.origin, vel_f,
                   pos_b + c.origin, hole_init + c.origin, moves, counts, meet,
                   int(violations), None if first < 0 else int(first), int(flux),
                   jam_len, None if jam_end < 0 else int(jam_end))


# -- line life-time oracle ---------------------------------------------------


@njit(cache=True)
def _weight(v, accel, denom):
    if v < 0:
        return 0
    return (denom - v + accel - 1) // accel


@njit(cache=True)
def closed_form_lifetime(cells, start, m, accel, denom):
    """Basin weight of the jam ``[start, m]`` of a line with hole tails."""
    w = (denom + accel - 1) // accel
    weight = _weight(cells[m], accel, denom) + w * (m - start)
    holes = 0
    q = start - 1
    while holes <= weight:
        v = cells[q] if q >= 0 else HOLE
        if v == HOLE:
            holes += 1
        elif _weight(v, accel, denom) + holes <= weight:
            weight += w
        else:
            break
        q -= 1
    return weight


@njit(cache=True)
def _find(pos, n, q):
    k = np.searchsorted(pos[:n], q)
    if k < n and pos[k] == q:
        return k
    return -1


@njit(cache=True)
def _slow_at(pos, vel, n, q, denom):
    k = _find(pos, n, q)
    return k >= 0 and vel[k] < denom


@njit(cache=True)
def simulated_lifetime(cells, m, accel, denom, max_steps, upto):
    """First step at which the jam led from ``m`` is empty, or -1.

    Particles at sites ``<= upto`` are simulated; everything to the right
    of ``upto`` is treated as holes.
    """
    n = 0
    for q in range(upto + 1):
        if cells[q] != HOLE:
            n += 1
    pos = np.empty(n, dtype=np.int64)
    vel = np.empty(n, dtype=np.int64)
    k = 0
    for q in range(upto + 1):
        if cells[q] != HOLE:
            pos[k] = q
            vel[k] = cells[q]
            k += 1
    new_pos = np.empty(n, dtype=np.int64)
    lead = m
    for s in range(1, max_steps + 1):
        for k in range(n):
            new_pos[k] = pos[k] + vel[k] // denom
        for k in range(n):
            x = vel[k] + accel
            if x > denom:
                x = denom
            if k + 1 < n:
                cap = (new_pos[k + 1] - new_pos[k] - 1) * denom
                if x > cap:
                    x = cap
            vel[k] = x
            pos[k] = new_pos[k]
        if not _slow_at(pos, vel, n, lead, denom):
            lead -= 1
            if not _slow_at(pos, vel, n, lead, denom):
                return s
    return -1


@njit(cache=True)
def _admissible_units(cells, denom):
    n = cells.shape[0]
    for q in range(n - 1):
        if cells[q] >= denom and cells[q + 1] != HOLE:
            return False
    return True


@njit(cache=True)
def _decode(index, n, alphabet, cells):
    base = alphabet.shape[0]
    for q in range(n - 1, -1, -1):
        cells[q] = alphabet[index % base]
        index //= base


@njit(cache=True)
def exhaustive_all(n, alphabet, accel, denom, max_steps):
    """Check every jam of every admissible line configuration of length ``n``.

    Returns ``(configs, jams, mismatches, first_bad_index)``.
    """
    base = alphabet.shape[0]
    total = base ** n
    cells = np.empty(n, dtype=np.int64)
    configs = 0
    jams = 0
    bad = 0
    first_bad = -1
    for index in range(total):
        _decode(index, n, alphabet, cells)
        if not _admissible_units(cells, denom):
            continue
        configs += 1
        for m in range(n):
            v = cells[m]
            if v == HOLE or v >= denom:
                continue
            if m + 1 < n and cells[m + 1] != HOLE and cells[m + 1] < denom:
                continue
            start = m
            while start > 0 and cells[start - 1] != HOLE and cells[start - 1] < denom:
                start -= 1
            if start > 0 and cells[start - 1] != HOLE:
                continue
            jams += 1
            expected = closed_form_lifetime(cells, start, m, accel, denom)
            seen = simulated_lifetime(cells, m, accel, denom, max_steps, n - 1)
            if seen != expected:
                bad += 1
                if first_bad < 0:
                    first_bad = index
    return configs, jams, bad, first_bad


@njit(cache=True)
def exhaustive_prefixes(n, alphabet, accel, denom, max_steps):
    """Check the jam led from the last cell of every admissible prefix of length ``n``.

    A prefix starts with a particle and ends with a slow particle.  Returns
    ``(prefixes, mismatches, first_bad_index)`` where the index enumerates
    the middle cells.
    """
    base = alphabet.shape[0]
    middle = n - 2 if n >= 2 else 0
    total = base ** middle
    cells = np.empty(n, dtype=np.int64)
    mid = np.empty(middle, dtype=np.int64)
    checked = 0
    bad = 0
    first_bad = -1
    for first in alphabet:
        if first == HOLE:
            continue
        for last in alphabet:
            if last == HOLE or last >= denom:
                continue
            if n == 1 and first != last:
                continue
            for index in range(total):
                _decode(index, middle, alphabet, mid)
                cells[0] = first
                for q in range(middle):
                    cells[q + 1] = mid[q]
                cells[n - 1] = last
                if not _admissible_units(cells, denom):
                    continue
                start = n - 1
                while start > 0 and cells[start - 1] != HOLE and cells[start - 1] < denom:
                    start -= 1
                checked += 1
                expected = closed_form_lifetime(cells, start, n - 1, accel, denom)
                seen = simulated_lifetime(cells, n - 1, accel, denom, max_steps, n - 1)
                if seen != expected:
                    bad += 1
                    if first_bad < 0:
                        first_bad = index
    return checked, bad, first_bad


def velocity_alphabet(p: ModelParams) -> np.ndarray:
    """Holes plus the velocities ``0, a, 2a, ..., 1`` in units of ``1/D``."""
    accel, denom = velocity_units(p)
    values = [HOLE] + list(range(0, denom + 1, accel))
    if values[-1] != denom:
        values.append(denom)
    return np.array(values, dtype=np.int64)
