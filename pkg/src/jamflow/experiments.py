"""Experiment harness: sweeps, hysteresis, life-time campaigns and audits.

Ring experiments run on the compiled engine in :mod:`jamflow.fast`; every
task is a pure function of its inputs and aggregated results are sorted by
key, so output never depends on scheduling or worker count.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from . import fast
from .errors import AuditError, DensityError, DomainError, ModeError
from .generators import (
    free_flow, jammed_block, stability_perturbation, zero_density_perturbation,
)
from .jams import basin_of_attraction, find_jams, follow, lifetime, track_jam
from .model import (
    Configuration, Line, ModelParams, Tail, Trajectory, is_admissible, make_params, simulate,
)
from .stats import fd_predict, periodic_onset

JAMMED = "jammed_block"
FREE = "free_flow"


@dataclass(frozen=True)
class SweepSpec:
    a_values: Tuple[Fraction, ...]
    densities: Tuple[Fraction, ...]
    lattice_length: int = 120
    horizon: int = 10_000
    burn_in: int = 1_000
    inits: Tuple[str, ...] = (JAMMED, FREE)
    seeds: Tuple[int, ...] = (0,)
    tolerance: Fraction = Fraction(1, 50)
    confirm: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.burn_in < self.horizon:
            raise DomainError("need 0 <= burn_in < horizon")
        for rho in self.densities:
            if not 0 < Fraction(rho) < 1:
                raise DensityError(f"density {rho} outside (0, 1)")
        for init in self.inits:
            if init not in (JAMMED, FREE):
                raise DomainError(f"unknown init {init!r}")


@dataclass(frozen=True)
class SweepRow:
    a: Fraction
    w: int
    rho_requested: Fraction
    rho_actual: Fraction
    init: str
    seed: int
    tagged: int
    measured_V: Fraction
    predicted_lower: Fraction
    predicted_upper_present: bool
    matched: Fraction
    abs_error_vs_matched_branch: Fraction
    audit_violations: int
    holes_checked: int
    holes_periodic: int
    holes_censored: int

    @property
    def key(self):
        return (self.a, self.rho_requested, self.init, self.seed)


def particle_count(length: int, rho: Fraction) -> int:
    return int(round(Fraction(rho) * length))


def initial_ring(init: str, length: int, count: int) -> Configuration:
    if init == JAMMED:
        return jammed_block(length, count)
    return free_flow(length, count)


def hole_periodicity(run: "fast.RingRun", w: int, confirm: Optional[int] = None) -> Tuple[int, int, int]:
    """``(checked, periodic, censored)`` over the holes of a run with a probe.

    A hole is checked when it met the probe particle at least ``confirm``
    steps before the horizon; it is periodic when from that meeting on it
    moved exactly every ``w`` steps up to the horizon.
    """
    confirm = 4 * w if confirm is None else confirm
    checked = periodic = censored = 0
    for h in range(len(run.hole_sites)):
        meet = int(run.probe_meet[h])
        if meet < 0 or run.horizon - meet < confirm:
            censored += 1
            continue
        checked += 1
        moves = run.moves_of(h)
        tail = moves[moves >= meet]
        ok = (len(tail) > 0 and tail[0] == meet and run.horizon - tail[-1] < w
              and bool(np.all(np.diff(tail) == w)))
        onset = periodic_onset([int(s) for s in moves], run.horizon, w, confirm)
        if ok and onset is not None and onset <= meet:
            periodic += 1
    return checked, periodic, censored


def sweep_point(a: Fraction, rho: Fraction, init: str, seed: int, spec: SweepSpec) -> Optional[SweepRow]:
    """One sweep task; ``None`` when free flow cannot hold the density."""
    p = make_params(a)
    count = particle_count(spec.lattice_length, rho)
    rho_actual = Fraction(count, spec.lattice_length)
    pred = fd_predict(rho_actual, p)
    if init == FREE and rho_actual > pred.gamma2:
        return None
    c = initial_ring(init, spec.lattice_length, count)
    tagged = random.Random(seed).randrange(count)
    probe = count - 1 if init == JAMMED else -1
    run = fast.run_ring(c, p, spec.horizon, spec.burn_in, record_holes=True, probe=probe)
    measured = run.velocity(tagged)
    if init == FREE and pred.upper_branch_present:
        matched = pred.upper_branch
    else:
        matched = pred.lower_branch
    if init == JAMMED:
        checked, periodic, censored = hole_periodicity(run, p.w, spec.confirm)
    else:
        checked = periodic = censored = 0
    return SweepRow(a, p.w, Fraction(rho), rho_actual, init, seed, tagged, measured,
                    pred.lower_branch, pred.upper_branch_present, matched,
                    abs(measured - matched), run.audit_violations, checked, periodic, censored)


def _task(args):
    return sweep_point(*args)


def fd_sweep(spec: SweepSpec, workers: int = 1) -> List[SweepRow]:
    """Measured time-average velocity over the (a, density, init, seed) grid."""
    tasks = [(Fraction(a), Fraction(rho), init, seed, spec)
             for a in spec.a_values for rho in spec.densities
             for init in spec.inits for seed in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    return sorted((r for r in results if r is not None), key=lambda r: r.key)


def fd_grid(step: Fraction = Fraction(1, 24)) -> Tuple[Fraction, ...]:
    step = Fraction(step)
    return tuple(k * step for k in range(1, int(1 / step)))


# -- hysteresis and stability --------------------------------------------------


@dataclass(frozen=True)
class HysteresisReport:
    rho: Fraction
    before_V: Fraction
    after_V: Fraction
    perturbed_sites: Tuple[int, ...]
    predicted_lower: Fraction
    predicted_upper: Fraction
    ultimately_jammed: bool


def _velocity_range(run) -> Tuple[Fraction, Fraction]:
    vs = [run.velocity(k) for k in range(len(run.positions))]
    return min(vs), max(vs)


def hysteresis_run(rho, p: ModelParams, length: int = 120, horizon: int = 10_000,
                   burn_in: int = 1_000) -> HysteresisReport:
    """Free flow inside the hysteresis band, before and after a sparse stop set.

    ``ultimately_jammed`` is the finite-ring proxy: some jam of the
    perturbed ring has an infinite basin.
    """
    rho = Fraction(rho)
    pred = fd_predict(rho, p)
    if not pred.gamma1 < rho < pred.gamma2:
        raise DomainError(f"density {rho} is outside the band ({pred.gamma1}, {pred.gamma2})")
    count = particle_count(length, rho)
    c = free_flow(length, count)
    before = fast.run_ring(c, p, horizon, burn_in)
    perturbed, sites = zero_density_perturbation(c, p)
    after = fast.run_ring(perturbed, p, horizon, burn_in)
    jammed = any(not basin_of_attraction(perturbed, j, p).finite for j in find_jams(perturbed))
    return HysteresisReport(Fraction(count, length), before.velocity(0), after.velocity(0),
                            sites, pred.lower_branch, pred.upper_branch, jammed)


@dataclass(frozen=True)
class StabilityReport:
    rho: Fraction
    budget: int
    window: int
    changed_sites: Tuple[int, ...]
    measured_V: Fraction
    predicted_lower: Fraction
    velocity_spread: Tuple[Fraction, Fraction]


def stability_run(holes: int, particles: int, k: int, windows: int, p: ModelParams,
                  horizon: int = 10_000, burn_in: int = 1_000, seed: int = 0,
                  remove: bool = False) -> StabilityReport:
    """Block ring with a sub-threshold perturbation; measures the velocity."""
    rho = Fraction(particles, holes + particles)
    pred = fd_predict(rho, p)
    if not pred.gamma1 < rho < pred.gamma2:
        raise DomainError(f"block density {rho} is outside the band ({pred.gamma1}, {pred.gamma2})")
    c, changed = stability_perturbation(holes, particles, k, windows, p, seed, remove)
    run = fast.run_ring(c, p, horizon, burn_in)
    rho_y = Fraction(c.n_particles, len(c))
    a_count = (len(changed) // windows) + 1
    return StabilityReport(rho_y, a_count, len(c) // windows, changed, run.velocity(0),
                           fd_predict(rho_y, p).lower_branch, _velocity_range(run))


# -- life-time campaign --------------------------------------------------------


@dataclass
class CampaignPart:
    a: Fraction
    exhaustive_prefixes: int = 0
    exhaustive_mismatches: int = 0
    full_configs: int = 0
    full_jams: int = 0
    full_mismatches: int = 0
    random_configs: int = 0
    random_jams: int = 0
    random_mismatches: int = 0
    port_mismatches: int = 0
    reference_jams: int = 0
    reference_mismatches: int = 0
    examples: List[str] = field(default_factory=list)

    @property
    def mismatches(self) -> int:
        return (self.exhaustive_mismatches + self.full_mismatches + self.random_mismatches
                + self.port_mismatches + self.reference_mismatches)


@dataclass
class CampaignReport:
    parts: List[CampaignPart]
    fixed_cases: List[Tuple[str, int, int]]

    @property
    def mismatches(self) -> int:
        fixed = sum(1 for _, want, got in self.fixed_cases if want != got)
        return fixed + sum(part.mismatches for part in self.parts)


BASIN_CASES = (". . . 1 . . 0", ". 0 . . . 0 0")


def _random_line(rng: random.Random, p: ModelParams, max_len: int) -> Configuration:
    alphabet = [None] + [Fraction(int(v), p.a.denominator) for v in fast.velocity_alphabet(p)[1:]]
    while True:
        n = rng.randint(1, max_len)
        c = Configuration(tuple(rng.choice(alphabet) for _ in range(n)), Line(Tail.HOLES, Tail.HOLES))
        if is_admissible(c, p):
            return c


def _max_steps(p: ModelParams, n: int) -> int:
    return p.w * (n + 2) + 2


def lifetime_campaign(count: int = 10_000, max_len: int = 30, a_values=(1, Fraction(1, 2), Fraction(1, 3)),
                      seed: int = 0, exhaustive_len: int = 12, full_len: int = 8,
                      reference_count: int = 200) -> CampaignReport:
    """Compare the closed-form life-time with simulation.

    * every admissible line configuration up to ``full_len`` cells, all jams;
    * every admissible prefix up to ``exhaustive_len`` cells that starts with
      a particle and ends with a jam leader (the life-time of a jam does not
      depend on cells to the right of its leader, which the full check above
      covers);
    * ``count`` random configurations up to ``max_len`` cells: closed form
      (reference code) against the compiled simulation, the compiled closed
      form against the reference one, and for the first
      ``reference_count`` of them the reference simulation as well.
    """
    from .tokens import parse_config

    fixed = []
    p_half = make_params(Fraction(1, 2))
    for text in BASIN_CASES:
        c = parse_config(text, p_half, boundary=Line(Tail.HOLES, Tail.HOLES))
        j = find_jams(c)[-1]
        t = simulate(c, p_half, 20)
        fixed.append((text, lifetime(c, j, p_half), track_jam(t, j).observed_lifetime))

    parts = []
    for a in a_values:
        p = make_params(a)
        part = CampaignPart(p.a)
        alphabet = fast.velocity_alphabet(p)
        accel, denom = fast.velocity_units(p)
        for n in range(1, full_len + 1):
            configs, jams, bad, _ = fast.exhaustive_all(n, alphabet, accel, denom, _max_steps(p, n))
            part.full_configs += configs
            part.full_jams += jams
            part.full_mismatches += bad
        for n in range(1, exhaustive_len + 1):
            checked, bad, _ = fast.exhaustive_prefixes(n, alphabet, accel, denom, _max_steps(p, n))
            part.exhaustive_prefixes += checked
            part.exhaustive_mismatches += bad
        rng = random.Random(f"{seed}:{p.a}")
        for k in range(count):
            c = _random_line(rng, p, max_len)
            cells = fast.encode_cells(c.cells, p)
            part.random_configs += 1
            jams = find_jams(c)
            trajectory = simulate(c, p, _max_steps(p, len(c))) if k < reference_count else None
            for j in jams:
                want = lifetime(c, j, p)
                got = fast.simulated_lifetime(cells, j.end, accel, denom, _max_steps(p, len(c)), len(c) - 1)
                port = fast.closed_form_lifetime(cells, j.start, j.end, accel, denom)
                part.random_jams += 1
                if got != want:
                    part.random_mismatches += 1
                    part.examples.append(f"{c.cells} jam={j} closed={want} simulated={got}")
                if port != want:
                    part.port_mismatches += 1
                if trajectory is not None:
                    part.reference_jams += 1
                    if track_jam(trajectory, j).observed_lifetime != want:
                        part.reference_mismatches += 1
        parts.append(part)
    return CampaignReport(parts, fixed)


# -- jam growth ----------------------------------------------------------------


@dataclass(frozen=True)
class GrowthReport:
    lengths: Tuple[int, ...]
    slope: float
    reference_slope: float
    max_residual: float
    lifetime: Optional[int]

    def within(self, bound: float = 2) -> bool:
        return self.max_residual <= bound


def jam_growth(c: Configuration, p: ModelParams, horizon: int, leader: int,
               expected_slope: Optional[float] = None) -> GrowthReport:
    """Length of the jam led from ``leader`` over time and its growth rate.

    The residual is measured against ``expected_slope`` when given, else
    against the least-squares slope through the origin offset.
    """
    if c.is_ring:
        run = fast.run_ring(c, p, horizon, leader=leader)
        lengths = [int(x) for x in run.jam_lengths]
        end = run.jam_end
        if end is not None:
            lengths = lengths[: end + 1]
    else:
        j = next((j for j in find_jams(c) if j.end == leader), None)
        if j is None:
            raise DomainError(f"no jam is led from site {leader}")
        track = track_jam(simulate(c, p, horizon), j)
        lengths = [0 if start is None else end - start + 1 for _, (start, end) in track.extents]
        end = track.observed_lifetime
        if end is not None:
            lengths.append(0)
    ts = np.arange(len(lengths), dtype=float)
    ys = np.array(lengths, dtype=float)
    slope = float(np.polyfit(ts, ys, 1)[0]) if len(lengths) > 1 else 0.0
    ref = slope if expected_slope is None else float(expected_slope)
    residual = float(np.max(np.abs(ys - ref * ts))) if len(lengths) else 0.0
    return GrowthReport(tuple(lengths), slope, ref, residual, end)


# -- flux audit ----------------------------------------------------------------


@dataclass(frozen=True)
class FluxStep:
    step: int
    particle_displacement: int
    swaps: int
    hole_displacement: int


@dataclass(frozen=True)
class GapAudit:
    """Segment between the leaders of two successive tracked jams."""

    left_leader: int
    right_leader: int
    holes: int
    particle_counts: Tuple[int, ...]
    pump_ratio: Fraction


@dataclass(frozen=True)
class FluxAudit:
    steps: Tuple[FluxStep, ...]
    gaps: Tuple[GapAudit, ...]
    mean_velocity: Fraction


def _segment_counts(c: Configuration, left: int, right: int) -> Tuple[int, int]:
    # sites strictly after ``left`` up to ``right`` going around the ring
    size = len(c)
    span = (right - left) % size or size
    particles = sum(1 for k in range(1, span + 1) if c.at(left + k) is not None)
    return particles, span - particles


def flux_balance(t: Trajectory, burn_in: int = 0) -> FluxAudit:
    """Per-step flux identities and gap invariants of a ring trajectory.

    Each step must satisfy: total particle displacement = number of sites
    entered by a particle = number of hole moves.  Between two successive
    jams with infinite basins the hole count must stay fixed and the
    particle count may change by at most one per step.  ``mean_velocity``
    averages over the steps after ``burn_in``.
    """
    first = t[0]
    p = t.params
    if not first.is_ring:
        raise ModeError("flux audit needs a ring")
    if p.vmax != 1:
        raise ModeError("flux audit needs vmax = 1")
    size = len(first)
    holes = [q for q in range(first.origin, first.end + 1) if first.at(q) is None]
    steps = []
    for s in range(1, len(t)):
        old, new = t[s - 1], t[s]
        disp = sum(b - a for a, b in zip(t.positions[s - 1], t.positions[s]))
        swaps = sum(1 for q in range(first.origin, first.end + 1)
                    if new.at(q) is not None and old.at(q) is None)
        moved = 0
        for h, q in enumerate(holes):
            if new.at(q) is not None:
                holes[h] = first.origin + (q - 1 - first.origin) % size
                moved += 1
        if not disp == swaps == moved:
            raise AuditError(f"flux identity fails: displacement {disp}, swaps {swaps}, "
                             f"hole moves {moved}", s)
        steps.append(FluxStep(s, disp, swaps, moved))

    gaps = []
    lasting = [j for j in find_jams(first) if not basin_of_attraction(first, j, p).finite] if first.n_particles < size else []
    if len(lasting) > 1 or (len(lasting) == 1 and size > 1):
        leaders = [[j.end] for j in lasting]
        alive = True
        for s in range(1, len(t)):
            for track in leaders:
                nxt = follow(t[s], track[-1])
                if nxt is None:
                    alive = False
                    break
                track.append(nxt.end)
            if not alive:
                break
        horizon = min(len(track) for track in leaders)
        for i in range(len(leaders)):
            lt, rt = leaders[i], leaders[(i + 1) % len(leaders)]
            counts = []
            hole_counts = set()
            for s in range(horizon):
                np_, nh = _segment_counts(t[s], lt[s], rt[s])
                counts.append(np_)
                hole_counts.add(nh)
            if len(hole_counts) > 1:
                raise AuditError(f"hole count between jams {i} and {i + 1} changed: {sorted(hole_counts)}", None)
            for s in range(1, horizon):
                if abs(counts[s] - counts[s - 1]) > 1:
                    raise AuditError(f"particle count between jams {i} and {i + 1} jumped", s)
            nh = hole_counts.pop()
            ratio = Fraction(nh, counts[0] * p.w) if counts[0] else Fraction(0)
            gaps.append(GapAudit(lt[0], rt[0], nh, tuple(counts), ratio))
    n = first.n_particles
    span = t.horizon - burn_in
    total = sum(st.particle_displacement for st in steps if st.step > burn_in)
    mean_v = Fraction(total, n * span) if n and span > 0 else Fraction(0)
    return FluxAudit(tuple(steps), tuple(gaps), mean_v)
