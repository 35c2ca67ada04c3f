from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid

from .utils import DomainError, GridError, ParameterError

MAX_LEVELS = 8


class Normalization(Enum):
    DENSITY = 'density'  # 4 b h = 1, h is the plateau of omega_0
    AMPLITUDE = 'amplitude'  # 4 b h^2 = 1, h is the plateau of psi_0


@dataclass(frozen=True)
class SlitPair:
    s: float
    b: float
    height: float

    def __post_init__(self):
        for name in ('s', 'b', 'height'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f'{name}={value} must be positive')
        if not self.b < self.s:
            raise ParameterError(f'b={self.b} must be smaller than s={self.s}')

    @classmethod
    def normalized(cls, s: float, b: float, mode: Normalization = Normalization.DENSITY) -> SlitPair:
        if not b > 0:
            raise ParameterError(f'b={b} must be positive')
        height = 1.0 / (4.0 * b)
        if mode is Normalization.AMPLITUDE:
            height = math.sqrt(height)
        return cls(s, b, height)

    def with_mode(self, mode: Normalization) -> SlitPair:
        return SlitPair.normalized(self.s, self.b, mode)

    @property
    def centers(self) -> tuple[float, float]:
        return (-self.s, self.s)

    def sample(self, x: ArrayLike) -> NDArray[np.float64]:
        'the initial step data, height/2 on the edges'
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c in self.centers:
            ay = np.abs(x - c)
            out += np.where(ay < self.b, self.height, np.where(ay == self.b, 0.5 * self.height, 0.0))
        return out


def standard_slits(mode: Normalization = Normalization.DENSITY) -> SlitPair:
    return SlitPair.normalized(1.0, 0.1, mode)


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise GridError(f'grid bounds must be finite: [{self.x_min}, {self.x_max}]')
        if not self.x_min < self.x_max:
            raise GridError(f'x_min={self.x_min} must be smaller than x_max={self.x_max}')
        if int(self.n) != self.n or self.n < 2:
            raise GridError(f'n={self.n} must be an integer >= 2')

    @classmethod
    def from_step(cls, x_min: float, x_max: float, dx: float) -> Grid:
        if not dx > 0:
            raise GridError(f'dx={dx} must be positive')
        return cls(x_min, x_max, int(round((x_max - x_min) / dx)) + 1)

    @classmethod
    def symmetric(cls, half_width: float, dx: float) -> Grid:
        return cls.from_step(-half_width, half_width, dx)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> NDArray[np.float64]:
        x = np.linspace(self.x_min, self.x_max, self.n)
        x.setflags(write=False)
        return x

    def scaled(self, factor: float) -> Grid:
        return Grid(self.x_min * factor, self.x_max * factor, self.n)

    def contains(self, lo: float, hi: float) -> bool:
        eps = 1e-9 * self.dx
        return self.x_min - eps <= lo <= hi <= self.x_max + eps


@dataclass(frozen=True, eq=False)
class Profile:
    grid: Grid
    values: NDArray[np.float64]
    time: float = 0.0
    slits: SlitPair | None = None  # set by the evolvers

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise GridError(f'{values.shape[0] if values.ndim else 0} values for a grid of {self.grid.n} points')
        if not np.all(np.isfinite(values)):
            raise DomainError('profile values must be finite')
        if not self.time >= 0:
            raise DomainError(f'time={self.time} must be nonnegative')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @cached_property
    def mass(self) -> float:
        return mass(self)

    @property
    def x(self) -> NDArray[np.float64]:
        return self.grid.x

    def restrict(self, lo: float, hi: float) -> Profile:
        x = self.grid.x
        idx = np.nonzero((x >= lo) & (x <= hi))[0]
        if idx.size < 2:
            raise DomainError(f'[{lo}, {hi}] holds fewer than 2 grid nodes')
        i, j = int(idx[0]), int(idx[-1])
        return Profile(Grid(float(x[i]), float(x[j]), j - i + 1), self.values[i : j + 1], self.time, self.slits)


def mass(p: Profile) -> float:
    return float(trapezoid(p.values, dx=p.grid.dx))


class Level(NamedTuple):
    shift: float
    rate: float


@dataclass(frozen=True)
class NladParams:
    alpha: float
    levels: tuple[Level, ...]

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f'alpha={self.alpha} must be positive')
        levels = tuple(Level(float(d), float(r)) for d, r in self.levels)
        if not 1 <= len(levels) <= MAX_LEVELS:
            raise ParameterError(f'{len(levels)} levels, expected 1..{MAX_LEVELS}')
        for d, r in levels:
            if not (math.isfinite(d) and d > 0):
                raise ParameterError(f'shift={d} must be positive')
            if not (math.isfinite(r) and r >= 0):
                raise ParameterError(f'rate={r} must be nonnegative')
        if any(a.shift >= b.shift for a, b in zip(levels, levels[1:])):
            raise ParameterError('level shifts must be strictly increasing')
        object.__setattr__(self, 'levels', levels)

    @property
    def max_shift(self) -> float:
        return self.levels[-1].shift


def nlad_params_for(slits: SlitPair, alpha: float = 1.0 / math.pi**3) -> NladParams:
    'three-level parameters scaled to a slit geometry'
    s, b = slits.s, slits.b
    d1 = 3.0 * s / (2.0 * b)
    d2 = 5.0 * s / (2.0 * b)
    return NladParams(
        alpha,
        (
            Level(s, 1.0 / (8.0 * b * b)),
            Level(d1, math.pi / (2.0 * b * d1 * d1)),
            Level(d2, math.pi / (2.0 * b * d2 * d2)),
        ),
    )


def standard_nlad_params() -> NladParams:
    # nlad_params_for(standard_slits()) with the shifts pinned to 1, 15, 25
    return NladParams(
        1.0 / math.pi**3,
        (Level(1.0, 12.5), Level(15.0, math.pi / 45.0), Level(25.0, math.pi / 125.0)),
    )


@dataclass(frozen=True)
class SeParams:
    scale: float = 1.0  # the reduced coefficient multiplying t in the free propagator

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ParameterError(f'scale={self.scale} must be positive')
