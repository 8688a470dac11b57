import random
from fractions import Fraction as F

import pytest

from jamflow.errors import CollisionError, DomainError, ModeError, WindowError
from jamflow.model import (
    RING, Configuration, Line, NegShift, Tail, general_step, is_admissible, line, make_params,
    ring, simulate, step,
)
from jamflow.tokens import parse_config, render_config

from oracle import oracle_step

HALF = make_params(F(1, 2))


def test_params_derive_w():
    assert make_params(1).w == 1
    assert make_params(F(1, 2)).w == 2
    assert make_params(F(1, 3)).w == 3
    assert make_params(F(2, 5)).w == 3
    assert make_params(F(3, 2), vmax=2).w == 1


@pytest.mark.parametrize("a, vmax", [(0, 1), (F(-1, 2), 1), (2, 1), (F(1, 2), 0)])
def test_params_reject_bad_values(a, vmax):
    with pytest.raises(DomainError):
        make_params(a, vmax)


def test_at_consults_ring_and_tails():
    c = ring([None, F(1), F(0)])
    assert c.at(4) == F(1)
    assert c.at(-1) == F(0)
    z = line([F(1), None], Tail.ZEROS, Tail.HOLES, origin=5)
    assert z.at(4) == 0
    assert z.at(7) is None
    assert z.window(3, 7) == (F(0), F(0), F(1), None, None)


def test_window_errors():
    with pytest.raises(WindowError):
        ring([]).at(0)
    with pytest.raises(WindowError):
        line([None]).window(3, 1)


def test_admissibility_main_mode():
    assert is_admissible(parse_config(". 1 . . 0", HALF), HALF)
    assert not is_admissible(parse_config("1 0 .", HALF), HALF)
    assert is_admissible(parse_config("a 0 .", HALF), HALF)
    # on a ring the last particle looks across the seam
    assert not is_admissible(ring([None, F(1)]).replace_cells([F(0), F(1)]), HALF)
    assert not is_admissible(line([F(1)], right=Tail.ZEROS), HALF)
    assert is_admissible(line([F(1)], right=Tail.HOLES), HALF)


def test_admissibility_general_mode():
    c = parse_config("1 . . . . . -1 . 1 . 0 0 0 . 0 0 . . . . .", HALF, general=True)
    assert is_admissible(c, HALF, general=True)
    assert not is_admissible(c, HALF)
    assert not is_admissible(parse_config("0 -1", HALF, general=True), HALF, general=True)


def test_step_single_particle_examples():
    c = parse_config(". 1 . . 0", HALF, boundary=Line())
    assert render_config(step(c, HALF), HALF) == ". . 1 . a"
    # a particle in front of a stopped one stays capped by the gap
    c = parse_config("1 0 . .", HALF, boundary=Line())
    with pytest.raises(CollisionError):
        step(c, HALF)


def test_step_rejects_negative_velocities():
    with pytest.raises(ModeError):
        step(parse_config("-1 . .", HALF, general=True), HALF)


def test_line_grows_to_the_right():
    c = line([F(1)])
    t = simulate(c, HALF, 3)
    assert [cfg.end for cfg in t] == [0, 1, 2, 3]
    assert t.position_of(0, 3) == 3


def test_zero_tail_releases_particles():
    c = line([None, None], Tail.ZEROS, Tail.HOLES)
    t = simulate(c, HALF, 4)
    # the tail front accelerates away; newly released particles get negative ids
    assert t.ids[0] == ()
    assert min(t.ids[4]) < 0
    assert t[2].at(-1) == 1
    assert t[2].at(-2) == 0


def test_ring_matches_oracle():
    rng = random.Random(7)
    for _ in range(300):
        p = make_params(rng.choice([1, F(1, 2), F(1, 3), F(2, 3)]))
        n = rng.randint(2, 14)
        vals = [None, None, F(0), p.a, F(1)]
        cells = [rng.choice(vals) for _ in range(n)]
        c = ring(cells)
        if not is_admissible(c, p):
            continue
        row = list(cells)
        for cfg in simulate(c, p, 12).configs[1:]:
            row = oracle_step(row, p.a)
            assert list(cfg.cells) == row


def test_simulate_horizon_zero_and_empty():
    c = ring([None, F(1)])
    assert len(simulate(c, HALF, 0)) == 1
    e = ring([])
    t = simulate(e, HALF, 3)
    assert all(len(cfg) == 0 for cfg in t)
    with pytest.raises(DomainError):
        simulate(c, HALF, -1)


def test_general_step_examples():
    # a negative velocity is bounded by the particle behind
    c = parse_config("0 . -1", HALF, general=True, boundary=Line())
    assert render_config(general_step(c, HALF), HALF) == "0 0 ."
    c = parse_config("0 . . -1", HALF, general=True, boundary=Line())
    assert render_config(general_step(c, HALF), HALF) == "a . -a ."
    floor = general_step(parse_config(". -a .", HALF, general=True, boundary=Line()), HALF, NegShift.FLOOR)
    assert floor.at(0) == 0


def test_floor_shift_can_collide():
    c = parse_config("0 -a", HALF, general=True, boundary=Line())
    with pytest.raises(CollisionError):
        general_step(c, HALF, NegShift.FLOOR)
    assert render_config(general_step(c, HALF, NegShift.TOWARD_ZERO), HALF) == "0 0"


def test_trajectory_rows_window():
    c = ring([F(1), None, None])
    t = simulate(c, HALF, 2)
    assert t.rows(0, 2)[1] == (None, F(1), None)
    with pytest.raises(WindowError):
        t.rows(0, 3)


def test_configuration_is_immutable_and_normalizes():
    c = Configuration((1, None, F(1, 2)), RING)
    assert c.cells == (F(1), None, F(1, 2))
    with pytest.raises(Exception):
        c.origin = 3
