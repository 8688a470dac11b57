"""Configuration families and perturbations used by the experiments."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import AdmissibilityError, DensityError, DomainError, SizeError
from .model import (
    RING, ZERO, Cell, Configuration, Line, ModelParams, Tail, is_admissible, make_params,
)

ONE = Fraction(1)


@dataclass(frozen=True)
class PatternSpec:
    """A unit pattern tiled ``repeats`` times around a ring."""

    tokens: Tuple[Cell, ...]
    repeats: int = 1


def periodic_pattern(spec: PatternSpec, p: Optional[ModelParams] = None) -> Configuration:
    if not spec.tokens:
        raise DomainError("pattern must not be empty")
    if spec.repeats < 1:
        raise DomainError("repeats must be positive")
    p = p or make_params(1)
    c = Configuration(tuple(spec.tokens) * spec.repeats, RING)
    general = any(v is not None and v < 0 for v in c.cells)
    if not is_admissible(c, p, general=general):
        raise AdmissibilityError("tiled pattern is not admissible")
    return c


def block_ring(holes: int, particles: int, repeats: int = 1) -> Configuration:
    """Ring of ``repeats`` periods, each ``holes`` holes then ``particles`` stopped particles."""
    if holes < 1 or particles < 0:
        raise DomainError("a block period needs at least one hole")
    return periodic_pattern(PatternSpec((None,) * holes + (ZERO,) * particles, repeats))


def jammed_block(length: int, count: int) -> Configuration:
    """Ring with one contiguous block of ``count`` stopped particles."""
    if not 0 <= count < length:
        raise DensityError(f"need 0 <= count < length, got {count} of {length}")
    return Configuration((ZERO,) * count + (None,) * (length - count), RING)


def free_flow(length: int, count: int, even_sites: bool = False) -> Configuration:
    """Ring of ``count`` velocity-1 particles spread as evenly as possible.

    Particle ``i`` sits at ``ceil(i * length / count)``, so the wider
    spacings come first.  With ``even_sites`` the particles are spread the
    same way over the even sites only (``length`` must then be even).
    """
    if length < 1:
        raise DomainError("length must be positive")
    if count < 0 or 2 * count > length:
        raise DensityError(f"{count} free particles do not fit on a ring of {length}")
    cells: List[Cell] = [None] * length
    if even_sites:
        if length % 2:
            raise DomainError("even-site free flow needs an even length")
        slots = length // 2
        for i in range(count):
            cells[2 * (-(-i * slots // count))] = ONE
    else:
        for i in range(count):
            cells[-(-i * length // count)] = ONE
    return Configuration(tuple(cells), RING)


def exp_block_lengths(k_max: int, w: int) -> List[int]:
    """Block lengths ``l_1 = 1``, ``l_{k+1} = w ** n_k`` with ``n_k = l_1 + ... + l_k``."""
    lengths, total = [], 0
    for k in range(k_max):
        size = 1 if k == 0 else w ** total
        lengths.append(size)
        total += size
    return lengths


def exp_blocks(k_max: int, p: ModelParams, max_cells: int = 10 ** 6) -> Configuration:
    """Line starting at site 1 with alternating stopped-particle and hole blocks.

    Odd blocks hold particles.  Block lengths grow as a tower of powers of
    ``w``, so partial densities swing between values near 0 and near 1.
    """
    if k_max < 1:
        raise DomainError("k_max must be positive")
    total = 0
    for k in range(k_max):
        # w ** total exceeds max_cells long before the power gets expensive
        too_big = p.w > 1 and total > max_cells.bit_length()
        size = 1 if k == 0 else (None if too_big else p.w ** total)
        if size is None or total + size > max_cells:
            raise SizeError(f"block {k + 1} does not fit in {max_cells} cells")
        total += size
    cells: List[Cell] = []
    for k, size in enumerate(exp_block_lengths(k_max, p.w)):
        cells.extend([ZERO if k % 2 == 0 else None] * size)
    return Configuration(tuple(cells), Line(Tail.HOLES, Tail.HOLES), origin=1)


def local_maxima_sites(c: Configuration, lo: int, hi: int, threshold: Fraction) -> List[int]:
    """Successive first local maxima above ``threshold`` of the running density.

    Starting with ``start = lo``, the running density over ``[start, k]`` is
    evaluated at particle sites ``k``.  The first local maximum above the
    threshold becomes the next site and the scan restarts right after it.
    A plateau counts at its leftmost site.
    """
    sites = []
    start = lo
    while start <= hi:
        seq = []
        count = 0
        for k in range(start, hi + 1):
            if c.at(k) is not None:
                count += 1
                seq.append((k, Fraction(count, k - start + 1)))
        found = None
        for r, (k, s) in enumerate(seq):
            if s <= threshold or (r and seq[r - 1][1] >= s):
                continue
            nxt = next((t for _, t in seq[r + 1:] if t != s), None)
            if nxt is not None and nxt < s:
                found = k
                break
        if found is None:
            break
        sites.append(found)
        start = found + 1
    return sites


def spaced_subsequence(sites: Sequence[int]) -> List[int]:
    """Greedy subsequence whose ``i``-th spacing is at least ``2 ** i``."""
    out: List[int] = []
    for s in sites:
        if not out or s - out[-1] >= 2 ** len(out):
            out.append(s)
    return out


def zero_density_perturbation(c: Configuration, p: ModelParams) -> Tuple[Configuration, Tuple[int, ...]]:
    """Stop a sparse set of particles so that every stop heads a lasting jam.

    Sites come from :func:`local_maxima_sites` with threshold ``1/(1+w)``,
    thinned so that the ``i``-th spacing is at least ``2 ** i``.  On a line
    the left tail is replaced by stopped particles.
    """
    gamma1 = Fraction(1, 1 + p.w * p.vmax)
    rho = Fraction(c.n_particles, len(c)) if len(c) else Fraction(0)
    if rho <= gamma1:
        raise DomainError(f"density {rho} does not exceed {gamma1}")
    chosen = spaced_subsequence(local_maxima_sites(c, c.origin, c.end, gamma1))
    cells = list(c.cells)
    for s in chosen:
        cells[s - c.origin] = ZERO
    if c.is_ring:
        return c.replace_cells(cells), tuple(chosen)
    boundary = Line(Tail.ZEROS, c.boundary.right)
    return Configuration(tuple(cells), boundary, c.origin), tuple(chosen)


def single_site_stop(c: Configuration, site: int) -> Configuration:
    if c.at(site) is None:
        raise DomainError(f"site {site} holds a hole")
    if c.is_ring:
        site = c.origin + (site - c.origin) % len(c)
    elif not c.origin <= site <= c.end:
        raise DomainError(f"site {site} is outside the explicit window")
    cells = list(c.cells)
    cells[site - c.origin] = ZERO
    return c.replace_cells(cells)


def stability_constants(holes: int, particles: int, k: int, p: ModelParams) -> Tuple[int, int]:
    """``(A, B)`` with ``B = 2k(N+M)`` and ``A = floor(((w+1) rho - 1) / (w-1) * B)``."""
    if p.w < 2:
        raise DomainError("stability constants need w >= 2")
    rho = Fraction(particles, holes + particles)
    b = 2 * k * (holes + particles)
    a = math.floor(((p.w + 1) * rho - 1) / (p.w - 1) * b)
    return a, b


def stability_perturbation(holes: int, particles: int, k: int, windows: int, p: ModelParams,
                           seed: int = 0, remove: bool = False) -> Tuple[Configuration, Tuple[int, ...]]:
    """Block ring of ``windows`` segments of length ``B``, ``A - 1`` changes per segment.

    A changed particle is released (given the largest admissible velocity:
    1 in front of a hole, ``1 - a`` otherwise) or, with ``remove``, deleted.
    """
    a_count, b = stability_constants(holes, particles, k, p)
    if a_count < 1:
        raise DomainError("k is too small: the perturbation budget A is zero")
    base = block_ring(holes, particles, repeats=2 * k * windows)
    rng = random.Random(seed)
    cells = list(base.cells)
    changed = []
    for win in range(windows):
        candidates = [i for i in range(win * b, (win + 1) * b) if cells[i] is not None]
        for i in sorted(rng.sample(candidates, min(a_count - 1, len(candidates)))):
            if remove:
                cells[i] = None
            else:
                cells[i] = ONE if cells[(i + 1) % len(cells)] is None else 1 - p.a
            changed.append(i)
    out = base.replace_cells(cells)
    if not is_admissible(out, p):
        raise AdmissibilityError("perturbation produced an inadmissible ring")
    return out, tuple(changed)
