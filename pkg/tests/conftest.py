from __future__ import annotations

import math

import pytest

from slit_fringe.core import Grid, Normalization, standard_nlad_params, standard_slits
from slit_fringe.nlad import evolve_factorized, evolve_spectral
from slit_fringe.schrodinger import rho_profile

T1 = 1.0 / math.pi


@pytest.fixture(scope='session')
def slits():
    return standard_slits()


@pytest.fixture(scope='session')
def amp_slits():
    return standard_slits(Normalization.AMPLITUDE)


@pytest.fixture(scope='session')
def params():
    return standard_nlad_params()


@pytest.fixture(scope='session')
def desk_grid():
    return Grid.symmetric(40.0, 0.01)


@pytest.fixture(scope='session')
def omega_t1(params, slits, desk_grid):
    return evolve_factorized(params, slits, T1, desk_grid)


@pytest.fixture(scope='session')
def omega_t1_spectral(params, slits, desk_grid):
    return evolve_spectral(params, slits, T1, desk_grid)


@pytest.fixture(scope='session')
def rho_t1(amp_slits, desk_grid):
    return rho_profile(amp_slits, T1, desk_grid)


SNAPSHOT_TIMES = [v / math.pi for v in (0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0)]


def snapshot_grid(t: float) -> Grid:
    'the default scenario grid: [-40m, 40m] with step 0.01m, m = max(1, t*pi)'
    m = max(1.0, t * math.pi)
    return Grid.symmetric(40.0 * m, 0.01 * m)
