from __future__ import annotations

import math

import numpy as np
import pytest

from slit_fringe.core import (
    Grid,
    Level,
    NladParams,
    Normalization,
    Profile,
    SeParams,
    SlitPair,
    mass,
    nlad_params_for,
    standard_nlad_params,
    standard_slits,
)
from slit_fringe.utils import DomainError, GridError, ParameterError


def test_normalized_heights():
    assert standard_slits().height == pytest.approx(2.5)
    assert standard_slits(Normalization.AMPLITUDE).height == pytest.approx(math.sqrt(2.5))
    p = SlitPair.normalized(3.0, 0.5)
    assert 4 * p.b * p.height == pytest.approx(1.0)


@pytest.mark.parametrize('s, b', [(1.0, -0.1), (1.0, 0.0), (0.1, 0.1), (-1.0, 0.1), (math.inf, 0.1)])
def test_slit_pair_rejects_bad_geometry(s, b):
    with pytest.raises(ParameterError):
        SlitPair.normalized(s, b)


def test_slit_pair_sample():
    values = standard_slits().sample([-1.0, -0.5, 0.0, 0.95, 1.0])
    assert values.tolist() == [2.5, 0.0, 0.0, 2.5, 2.5]
    assert SlitPair(1.0, 0.5, 2.0).sample([1.5])[0] == 1.0


def test_grid():
    g = Grid.symmetric(40.0, 0.01)
    assert g.n == 8001
    assert g.dx == pytest.approx(0.01)
    assert g.x[0] == -40.0 and g.x[-1] == 40.0
    with pytest.raises(ValueError):
        g.x[0] = 1.0
    assert g.contains(-40.0, 40.0)
    assert not g.contains(-40.1, 0.0)
    assert g.scaled(0.5) == Grid(-20.0, 20.0, 8001)


@pytest.mark.parametrize('args', [(0.0, 0.0, 5), (1.0, 0.0, 5), (0.0, 1.0, 1), (0.0, math.nan, 5)])
def test_grid_rejects_bad_shape(args):
    with pytest.raises(GridError):
        Grid(*args)


def test_profile_validation():
    g = Grid(0.0, 1.0, 11)
    with pytest.raises(GridError):
        Profile(g, np.zeros(10))
    with pytest.raises(DomainError):
        Profile(g, np.full(11, math.nan))
    with pytest.raises(DomainError):
        Profile(g, np.zeros(11), time=-1.0)
    p = Profile(g, np.ones(11))
    assert not p.values.flags.writeable


def test_mass_and_restrict():
    g = Grid.symmetric(2.0, 0.5)
    p = Profile(g, np.ones(g.n))
    assert mass(p) == pytest.approx(4.0)
    assert p.mass == pytest.approx(4.0)
    sub = p.restrict(-1.0, 0.75)
    assert sub.grid == Grid(-1.0, 0.5, 4)
    assert sub.mass == pytest.approx(1.5)
    with pytest.raises(DomainError):
        p.restrict(0.1, 0.2)


def test_nlad_params_validation():
    with pytest.raises(ParameterError):
        NladParams(0.0, (Level(1.0, 1.0),))
    with pytest.raises(ParameterError):
        NladParams(1.0, ())
    with pytest.raises(ParameterError):
        NladParams(1.0, tuple(Level(float(d), 1.0) for d in range(1, 10)))
    with pytest.raises(ParameterError):
        NladParams(1.0, (Level(2.0, 1.0), Level(1.0, 1.0)))
    with pytest.raises(ParameterError):
        NladParams(1.0, (Level(1.0, -1.0),))
    assert NladParams(1.0, ((1, 0),)).levels == (Level(1.0, 0.0),)


def test_standard_params():
    p = standard_nlad_params()
    assert p.alpha == pytest.approx(1 / math.pi**3)
    assert [lv.shift for lv in p.levels] == [1.0, 15.0, 25.0]
    assert p.levels[0].rate == 12.5
    assert p.max_shift == 25.0
    derived = nlad_params_for(standard_slits())
    for a, b in zip(p.levels, derived.levels):
        assert a.shift == pytest.approx(b.shift)
        assert a.rate == pytest.approx(b.rate)


def test_se_params():
    assert SeParams().scale == 1.0
    with pytest.raises(ParameterError):
        SeParams(0.0)


def test_mass_under_refinement():
    def parabola(n):
        g = Grid(0.0, 1.0, n)
        return Profile(g, g.x**2).mass

    coarse, fine = parabola(11), parabola(21)
    assert coarse - 1 / 3 == pytest.approx(4 * (fine - 1 / 3), rel=1e-9)
    assert (4 * fine - coarse) / 3 == pytest.approx(1 / 3, abs=1e-14)

    masses = []
    for dx in (0.02, 0.01, 0.005):
        g = Grid.symmetric(10.0, dx)
        masses.append(Profile(g, np.exp(-g.x * g.x / 2) / math.sqrt(2 * math.pi)).mass)
    assert masses == pytest.approx([1.0] * 3, abs=1e-12)
