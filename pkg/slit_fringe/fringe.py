from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import trapezoid

from .core import Grid, Profile
from .utils import DomainError, InsufficientDataError

logger = logging.getLogger(__name__)

DEFAULT_NOISE_FLOOR = 1e-9


class Extremum(NamedTuple):
    x: float
    value: float


@dataclass(frozen=True)
class ExtremaReport:
    minima: list[Extremum]
    maxima: list[Extremum]
    window: tuple[float, float]
    refined: bool = True

    def sorted_extrema(self) -> list[tuple[Extremum, bool]]:
        'all extrema by position, paired with True for maxima'
        both = [(e, False) for e in self.minima] + [(e, True) for e in self.maxima]
        return sorted(both, key=lambda pair: pair[0].x)


@dataclass(frozen=True)
class SpacingStats:
    gaps: list[float]
    mean: float
    max_abs_dev: float


class FringeGroup(NamedTuple):
    lo: float
    hi: float
    mass: float
    peak_x: float
    peak: float


def _window_slice(p: Profile, window: tuple[float, float]) -> tuple[int, int]:
    lo, hi = window
    if not lo < hi:
        raise DomainError(f'window [{lo}, {hi}] is empty')
    if not p.grid.contains(lo, hi):
        raise DomainError(f'window [{lo}, {hi}] is outside the grid [{p.grid.x_min}, {p.grid.x_max}]')
    x = p.grid.x
    eps = 1e-9 * p.grid.dx
    i = int(np.searchsorted(x, lo - eps, side='left'))
    j = int(np.searchsorted(x, hi + eps, side='right'))
    if j - i < 3:
        raise InsufficientDataError(f'window [{lo}, {hi}] holds {j - i} grid nodes')
    return i, j


def _discrete_extrema(y: np.ndarray) -> list[tuple[int, bool]]:
    '''
    (index, is_max) at each change of slope sign

    flat runs carry the previous slope; a flat run between opposite slopes
    reports its midpoint
    '''
    sign = np.sign(np.diff(y))
    if not np.any(sign):
        return []
    # forward fill zeros, back fill a flat start
    idx = np.where(sign != 0, np.arange(sign.size), 0)
    np.maximum.accumulate(idx, out=idx)
    filled = sign[idx]
    first = int(np.flatnonzero(sign)[0])
    filled[:first] = sign[first]

    out = []
    run_start = 0
    for k in range(1, filled.size):
        if sign[k - 1] != 0:
            run_start = k
        if filled[k] != filled[k - 1]:
            # the slope changed at node k; a preceding flat run shares the extremum
            start = run_start if sign[k - 1] == 0 else k
            out.append(((start + k) // 2, bool(filled[k - 1] > 0)))
    return out


def _drop_shallow(y: np.ndarray, found: list[tuple[int, bool]], noise_floor: float) -> list[tuple[int, bool]]:
    'repeatedly drop the adjacent min/max pair with the smallest value gap below noise_floor'
    found = list(found)
    while len(found) >= 2:
        gaps = [abs(y[a] - y[b]) for (a, _), (b, _) in zip(found, found[1:])]
        k = int(np.argmin(gaps))
        if gaps[k] >= noise_floor:
            break
        del found[k : k + 2]
    return found


def _refine(x: np.ndarray, y: np.ndarray, i: int) -> Extremum:
    'vertex of the parabola through i - 1, i, i + 1, kept within one cell'
    if i <= 0 or i >= y.size - 1:
        return Extremum(float(x[i]), float(y[i]))
    ym, y0, yp = y[i - 1], y[i], y[i + 1]
    denom = ym - 2.0 * y0 + yp
    if denom == 0:
        return Extremum(float(x[i]), float(y0))
    delta = float(np.clip(0.5 * (ym - yp) / denom, -0.5, 0.5))
    dx = x[i + 1] - x[i]
    return Extremum(float(x[i] + delta * dx), float(y0 - 0.25 * (ym - yp) * delta))


def find_extrema(
    p: Profile, window: tuple[float, float], noise_floor: float = DEFAULT_NOISE_FLOOR, refine: bool = True
) -> ExtremaReport:
    if not noise_floor >= 0:
        raise DomainError(f'noise_floor={noise_floor} must be nonnegative')
    i, j = _window_slice(p, window)
    x = p.grid.x[i:j]
    y = p.values[i:j]
    found = _drop_shallow(y, _discrete_extrema(y), noise_floor)
    minima, maxima = [], []
    for k, is_max in found:
        e = _refine(x, y, k) if refine else Extremum(float(x[k]), float(y[k]))
        (maxima if is_max else minima).append(e)
    logger.debug('find_extrema %s: %d minima, %d maxima', window, len(minima), len(maxima))
    return ExtremaReport(minima, maxima, (float(window[0]), float(window[1])), refine)


def spacing_stats(report: ExtremaReport) -> SpacingStats:
    if len(report.minima) < 3:
        raise InsufficientDataError(f'{len(report.minima)} minima in {report.window}, need at least 3')
    xs = np.array([e.x for e in report.minima])
    gaps = np.diff(xs)
    mean = float(np.mean(gaps))
    return SpacingStats(gaps.tolist(), mean, float(np.max(np.abs(gaps - mean))))


def dilate(p: Profile, m: float, target_grid: Grid) -> Profile:
    '(1/m) p(x/m) on target_grid, linear between samples'
    if not m > 0:
        raise DomainError(f'm={m} must be positive')
    src = target_grid.x / m
    if not p.grid.contains(float(src[0]), float(src[-1])):
        raise DomainError(
            f'[{target_grid.x_min}, {target_grid.x_max}] / {m} is outside the grid [{p.grid.x_min}, {p.grid.x_max}]'
        )
    # clipping keeps the end nodes exact against rounding in x / m
    src = np.clip(src, p.grid.x_min, p.grid.x_max)
    return Profile(target_grid, np.interp(src, p.grid.x, p.values) / m, p.time, p.slits)


def compare(a: Profile, b: Profile) -> tuple[float, float]:
    if a.grid != b.grid:
        raise DomainError(f'grids differ: {a.grid} vs {b.grid}')
    diff = np.abs(a.values - b.values)
    return float(np.max(diff)), float(trapezoid(diff, dx=a.grid.dx))


def second_phase_contrast(omega: Profile, rho: Profile, window: tuple[float, float]) -> tuple[float, float]:
    '''
    smallest local-minimum value of each profile inside window

    the nonlocal model lifts its minima off zero in the second phase while the
    free evolution keeps them near zero
    '''
    out = []
    for name, p in (('omega', omega), ('rho', rho)):
        minima = find_extrema(p, window).minima
        if not minima:
            raise InsufficientDataError(f'{name} has no local minima in {window}')
        out.append(min(e.value for e in minima))
    return out[0], out[1]


def fringe_groups(p: Profile, period: float, count: int) -> list[FringeGroup]:
    'the central group [-period, period] and count groups on each side of it'
    if not period > 0:
        raise DomainError(f'period={period} must be positive')
    if count < 0:
        raise DomainError(f'count={count} must be nonnegative')
    reach = period * (count + 1)
    if not p.grid.contains(-reach, reach):
        raise DomainError(f'groups span [{-reach}, {reach}], outside the grid [{p.grid.x_min}, {p.grid.x_max}]')
    edges = [-period * (count + 1) + period * k for k in range(count)]
    bounds = [(lo, lo + period) for lo in edges] + [(-period, period)]
    bounds += [(period * k, period * (k + 1)) for k in range(1, count + 1)]
    groups = []
    for lo, hi in bounds:
        sub = p.restrict(lo, hi)
        k = int(np.argmax(sub.values))
        groups.append(FringeGroup(lo, hi, sub.mass, float(sub.x[k]), float(sub.values[k])))
    return groups


def visibility(report: ExtremaReport) -> float:
    '(max - min) / (max + min) over the reported extrema'
    if not report.minima or not report.maxima:
        raise InsufficientDataError(f'no minimum/maximum pair in {report.window}')
    hi = max(e.value for e in report.maxima)
    lo = min(e.value for e in report.minima)
    if hi + lo <= 0:
        return 0.0
    return (hi - lo) / (hi + lo)
