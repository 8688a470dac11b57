from fractions import Fraction as F

import pytest

from jamflow import experiments as ex
from jamflow.errors import AuditError, DensityError, DomainError, ModeError
from jamflow.generators import block_ring, free_flow, single_site_stop
from jamflow.model import Trajectory, line, make_params, ring, simulate

HALF = make_params(F(1, 2))


def small_spec(**kw):
    base = dict(a_values=(F(1, 2),), densities=(F(1, 4), F(2, 5), F(3, 5)), lattice_length=40,
                horizon=1200, burn_in=200)
    base.update(kw)
    return ex.SweepSpec(**base)


def test_sweep_spec_validation():
    with pytest.raises(DomainError):
        small_spec(burn_in=1200)
    with pytest.raises(DensityError):
        small_spec(densities=(F(1),))
    with pytest.raises(DomainError):
        small_spec(inits=("shuffled",))


def test_fd_grid():
    grid = ex.fd_grid(F(1, 4))
    assert grid == (F(1, 4), F(1, 2), F(3, 4))
    assert len(ex.fd_grid()) == 23


def test_particle_count_rounds():
    assert ex.particle_count(120, F(2, 5)) == 48
    assert ex.particle_count(40, F(1, 24)) == 2


def test_small_sweep_matches_prediction():
    rows = ex.fd_sweep(small_spec())
    # free flow cannot hold 3/5 > 1/2
    assert [(r.rho_requested, r.init) for r in rows] == [
        (F(1, 4), "free_flow"), (F(1, 4), "jammed_block"),
        (F(2, 5), "free_flow"), (F(2, 5), "jammed_block"),
        (F(3, 5), "jammed_block"),
    ]
    for r in rows:
        assert r.abs_error_vs_matched_branch <= F(1, 50)
        assert r.audit_violations == 0
    by = {(r.rho_requested, r.init): r for r in rows}
    assert by[(F(2, 5), "free_flow")].measured_V == 1
    assert by[(F(2, 5), "jammed_block")].matched == F(3, 4)
    jammed = by[(F(3, 5), "jammed_block")]
    assert jammed.holes_checked > 0 and jammed.holes_checked == jammed.holes_periodic


def test_sweep_is_independent_of_workers():
    spec = small_spec(densities=(F(1, 3), F(1, 2)), seeds=(0, 1))
    assert ex.fd_sweep(spec, workers=1) == ex.fd_sweep(spec, workers=2)


def test_hysteresis_run():
    r = ex.hysteresis_run(F(2, 5), HALF, length=120, horizon=3000, burn_in=600)
    assert r.before_V == 1
    assert abs(r.after_V - F(3, 4)) <= F(1, 50)
    assert r.perturbed_sites == (0, 5, 10, 20, 40, 75)
    assert r.ultimately_jammed
    with pytest.raises(DomainError):
        ex.hysteresis_run(F(3, 5), HALF)


def test_stability_run():
    r = ex.stability_run(5, 4, 1, 3, HALF, horizon=3000, burn_in=600)
    assert r.rho == F(4, 9)
    assert r.budget == 6 and r.window == 18
    assert abs(r.measured_V - F(5, 8)) <= F(1, 50)
    with pytest.raises(DomainError):
        ex.stability_run(1, 4, 1, 1, HALF)


def test_lifetime_campaign_small():
    report = ex.lifetime_campaign(count=150, max_len=14, exhaustive_len=7, full_len=5, reference_count=40)
    assert report.mismatches == 0
    assert [(case, want) for case, want, _ in report.fixed_cases] == [
        (". . . 1 . . 0", 4), (". 0 . . . 0 0", 4)]
    for part in report.parts:
        assert part.random_jams > 0 and part.reference_jams > 0 and part.full_jams > 0


def test_jam_growth_ring():
    base = free_flow(1000, 500, even_sites=True)
    c = single_site_stop(base, 998)
    r = ex.jam_growth(c, HALF, 300, 998, expected_slope=F(1, 2))
    assert r.within(2)
    assert r.lifetime is None
    assert abs(r.slope - 0.5) < 0.02


def test_jam_growth_dies_at_low_density():
    base = free_flow(60, 10)
    leader = base.particles()[-1][0]
    r = ex.jam_growth(single_site_stop(base, leader), HALF, 50, leader)
    assert r.lifetime == 2
    assert r.lengths[-1] == 0


def test_jam_growth_line():
    c = line([F(1), None, F(1), None, F(0)], origin=0)
    r = ex.jam_growth(c, HALF, 10, 4)
    assert r.lengths[0] == 1
    with pytest.raises(DomainError):
        ex.jam_growth(c, HALF, 10, 2)


def test_flux_balance_block_ring():
    c = block_ring(5, 4, repeats=3)
    audit = ex.flux_balance(simulate(c, HALF, 400), burn_in=80)
    assert len(audit.steps) == 400
    assert all(s.particle_displacement == s.swaps == s.hole_displacement for s in audit.steps)
    assert audit.mean_velocity == F(5, 8)


def test_flux_balance_gaps_between_lasting_jams():
    c = ring([None, F(0), F(0), F(0), None, None, F(0), F(0), F(0), None])
    audit = ex.flux_balance(simulate(c, HALF, 60))
    assert len(audit.gaps) == 2
    for g in audit.gaps:
        assert all(abs(b - a) <= 1 for a, b in zip(g.particle_counts, g.particle_counts[1:]))


def test_flux_balance_detects_tampering():
    c = ring([F(1), None, None, None])
    t = simulate(c, HALF, 3)
    bad = Trajectory(t.params, [t[0], t[0], t[2], t[3]], t.ids, t.positions)
    with pytest.raises(AuditError) as err:
        ex.flux_balance(bad)
    assert err.value.step == 1


def test_flux_balance_needs_ring():
    with pytest.raises(ModeError):
        ex.flux_balance(simulate(line([F(1)]), HALF, 2))
