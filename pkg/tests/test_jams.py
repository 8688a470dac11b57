import math
import random
from fractions import Fraction as F

import pytest

from jamflow.errors import DomainError, ModeError
from jamflow.jams import (
    JamRecord, basin_extents, basin_of_attraction, find_jams, jam_ending_at, lifetime,
    segment_weight, track_jam, weight_fn,
)
from jamflow.model import Line, Tail, is_admissible, line, make_params, ring, simulate
from jamflow.tokens import parse_config

from oracle import oracle_lifetime

HALF = make_params(F(1, 2))
HOLES = Line(Tail.HOLES, Tail.HOLES)


def cfg(text, p=HALF, boundary=HOLES):
    return parse_config(text, p, boundary=boundary)


def test_weight_fn():
    third = make_params(F(1, 3))
    assert [weight_fn(v, third) for v in (F(0), F(1, 3), F(2, 3), F(1))] == [3, 2, 1, 0]
    assert weight_fn(None, third) == 0
    assert [weight_fn(v, make_params(F(2, 5))) for v in (F(0), F(2, 5), F(4, 5))] == [3, 2, 1]


def test_segment_weight():
    c = cfg(". 1 . 0 0")
    assert segment_weight(c, 1, 4, HALF) == 2 * 2 + 2
    with pytest.raises(DomainError):
        segment_weight(c, 3, 2, HALF)
    with pytest.raises(DomainError):
        segment_weight(c, 0, 2, HALF)


def test_find_jams():
    c = cfg(". 1 . 0 . a 0 . 0 1")
    assert find_jams(c) == [JamRecord(3, 3, F(0)), JamRecord(5, 6, F(0)), JamRecord(8, 8, F(0))]
    # a slow particle with a slow one ahead does not lead a jam
    assert jam_ending_at(c, 5) is None


def test_jam_into_zero_tail():
    c = cfg("0 a . 1", boundary=Line(Tail.ZEROS, Tail.HOLES))
    (j,) = find_jams(c)
    assert j.start is None and j.end == 1
    assert lifetime(c, j, HALF) == math.inf


def test_ring_jams_and_seam():
    c = ring([F(0), None, None, F(1), None, F(0)])
    jams = find_jams(c)
    assert [(j.start, j.end) for j in jams] == [(-1, 0)]
    with pytest.raises(DomainError):
        find_jams(ring([F(0), F(0)]))


def test_negative_velocities_rejected():
    c = parse_config("0 . -1", HALF, general=True, boundary=HOLES)
    with pytest.raises(ModeError):
        find_jams(c)


def test_lifetime_small_example():
    c = cfg(". 1 . . 0")
    (j,) = find_jams(c)
    b = basin_of_attraction(c, j, HALF)
    assert (b.left, b.right, b.lifetime) == (0, 4, 4)


@pytest.mark.parametrize("text", [". . . 1 . . 0", ". 0 . . . 0 0"])
def test_bracketed_lifetimes(text):
    c = cfg(text)
    j = find_jams(c)[-1]
    b = basin_of_attraction(c, j, HALF)
    assert (b.left, b.right, b.lifetime) == (2, 6, 4)
    assert track_jam(simulate(c, HALF, 10), j).observed_lifetime == 4


def test_faster_rear_particle_widens_basin():
    c = cfg(". a . . . 0 0")
    j = find_jams(c)[-1]
    b = basin_of_attraction(c, j, HALF)
    assert (b.left, b.lifetime) == (-1, 6)
    assert track_jam(simulate(c, HALF, 12), j).observed_lifetime == 6


def test_vmax_above_one_rejected():
    p = make_params(F(1, 2), vmax=2)
    c = cfg(". 1 . 0", p)
    with pytest.raises(ModeError):
        basin_of_attraction(c, find_jams(c)[0], p)


def test_ring_wrap_gives_infinite_basin():
    c = ring([F(0), F(0), F(0), None])
    (j,) = find_jams(c)
    assert lifetime(c, j, HALF) == math.inf


def test_basin_extents_track_until_death():
    c = cfg(". . . 1 . . 0")
    t = simulate(c, HALF, 6)
    marks = basin_extents(t, find_jams(c)[-1])
    assert marks[:4] == [(2, 6), (3, 6), (4, 5), (5, 5)]
    assert marks[4:] == [None, None, None]


def _random_config(rng, p, n):
    vals = [None] + [k * p.a for k in range(math.ceil(1 / p.a))] + [F(1)]
    while True:
        cells = [rng.choice(vals) for _ in range(n)]
        c = line(cells)
        if is_admissible(c, p):
            return c


@pytest.mark.parametrize("a", [1, F(1, 2), F(1, 3), F(2, 5)])
def test_closed_form_matches_cell_oracle(a):
    p = make_params(a)
    rng = random.Random(11)
    checked = 0
    for _ in range(150):
        c = _random_config(rng, p, rng.randint(1, 14))
        for j in find_jams(c):
            want = lifetime(c, j, p)
            got = oracle_lifetime(list(c.cells), j.end, p.a, p.w * (len(c) + 2) + 2)
            assert want == got, (c.cells, j)
            checked += 1
    assert checked > 50
