'''
Nonlocal advection-diffusion density

    d/dt w = alpha w'' + sum_i beta_i (w(x + d_i) - 2 w(x) + w(x - d_i))

evaluated two independent ways:

- evolve_factorized: heat semigroup times the product of exp(t B_i); each exp(t B_i)
  is a symmetric series of shifts by j * d_i (numerics.shift_weights), so the
  solution is a weighted superposition of shifted heat-evolved steps
- evolve_spectral: cosine transform with the symbol
  sigma(k) = -alpha k^2 - sum_i 2 beta_i (1 - cos(k d_i))
'''

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid, simpson

from .core import Grid, NladParams, Profile, SlitPair
from .numerics import (
    Tolerance,
    heat_reach,
    heat_step_array,
    heat_step_integral,
    shift_weights,
)
from .utils import DomainError, GridError

logger = logging.getLogger(__name__)

_TOL = Tolerance()
_COMMENSURATE_EPS = 1e-12
_NODES_PER_PERIOD = 10
_CHUNK = 1 << 21  # cos(k x) elements evaluated at once


@dataclass(frozen=True)
class MultiplierTable:
    k_max: float
    dk: float
    symbol_values: NDArray[np.float64]
    transform_values: NDArray[np.float64]

    @property
    def k(self) -> NDArray[np.float64]:
        return self.dk * np.arange(self.symbol_values.size)


def _shift_nodes(shift: float, dx: float) -> int:
    k = round(shift / dx)
    if abs(k * dx - shift) > _COMMENSURATE_EPS * max(1.0, abs(shift)):
        raise GridError(f'shift {shift} is not a multiple of dx={dx}')
    return int(k)


def _read_shifted(values: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    'values at x + k dx, zero outside the grid'
    n = values.size
    out = np.zeros_like(values)
    if abs(k) >= n:
        return out
    if k >= 0:
        out[: n - k] = values[k:]
    else:
        out[-k:] = values[: n + k]
    return out


def _second_difference(p: Profile, shift: float, interpolate: bool = False) -> NDArray[np.float64]:
    'w(x + shift) - 2 w(x) + w(x - shift), reading zero off the grid'
    values = p.values
    if interpolate:
        x = p.grid.x
        plus = np.interp(x + shift, x, values, left=0.0, right=0.0)
        minus = np.interp(x - shift, x, values, left=0.0, right=0.0)
    else:
        k = _shift_nodes(shift, p.grid.dx)
        plus = _read_shifted(values, k)
        minus = _read_shifted(values, -k)
    return plus - 2.0 * values + minus


def apply_difference(level_shift: float, level_rate: float, p: Profile, interpolate: bool = False) -> Profile:
    return Profile(p.grid, level_rate * _second_difference(p, level_shift, interpolate), p.time, p.slits)


def _interior(grid: Grid, margin: float) -> NDArray[np.bool_]:
    x = grid.x
    inside = (x >= grid.x_min + margin) & (x <= grid.x_max - margin)
    if not np.any(inside):
        raise DomainError(f'grid [{grid.x_min}, {grid.x_max}] has no nodes farther than {margin} from its ends')
    return inside


def integral_form_residual(level_shift: float, level_rate: float, test_profile: Profile) -> float:
    '''
    sup | d/dx int_{-d}^{d} beta w(x + u) sign(u) du - beta (w(x + d) - 2 w(x) + w(x - d)) |

    the integral is F(x + d) - 2 F(x) + F(x - d) for the running trapezoid
    antiderivative F (0 left of the grid, the total right of it)
    '''
    grid = test_profile.grid
    dx = grid.dx
    k = _shift_nodes(level_shift, dx)
    f = cumulative_trapezoid(test_profile.values, dx=dx, initial=0.0)
    n = f.size
    idx = np.arange(n)

    def antiderivative(i: NDArray[np.int64]) -> NDArray[np.float64]:
        return np.where(i < 0, 0.0, f[np.clip(i, 0, n - 1)])

    g = level_rate * (antiderivative(idx + k) - 2.0 * f + antiderivative(idx - k))
    lhs = np.gradient(g, dx)
    rhs = level_rate * _second_difference(test_profile, level_shift)
    inside = _interior(grid, level_shift + 2.0 * dx)
    return float(np.max(np.abs(lhs - rhs)[inside]))


def _combined_shifts(
    params: NladParams, t: float, tol: Tolerance, order: Sequence[int] | None
) -> dict[float, float]:
    'net shift -> weight of exp(t B_0) ... exp(t B_m)'
    order = range(len(params.levels)) if order is None else order
    if sorted(order) != list(range(len(params.levels))):
        raise DomainError(f'level order {list(order)} is not a permutation')
    prune = 1e-6 * tol.tail_eps
    combined = {0.0: 1.0}
    for i in order:
        d, rate = params.levels[i]
        sw = shift_weights(rate * t, tol.tail_eps)
        nxt: dict[float, float] = {}
        for shift, w in combined.items():
            for j, wj in zip(sw.offsets.tolist(), sw.weights.tolist()):
                ww = w * wj
                if ww < prune:
                    continue
                key = shift + j * d
                nxt[key] = nxt.get(key, 0.0) + ww
        combined = nxt
    return combined


def evolve_factorized(
    params: NladParams,
    slits: SlitPair,
    t: float,
    grid: Grid,
    tol: Tolerance = _TOL,
    level_order: Sequence[int] | None = None,
) -> Profile:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    if not t >= 0:
        raise DomainError(f't={t} must be nonnegative')
    combined = _combined_shifts(params, t, tol, level_order)
    x = grid.x
    values = np.zeros(grid.n)
    reach = heat_reach(slits.b, params.alpha, t)
    for shift, w in combined.items():
        for c in slits.centers:
            # exp(t B) f (x) = sum w f(x + shift): the step moves to c - shift
            center = c - shift
            lo = np.searchsorted(x, center - reach, side='left')
            hi = np.searchsorted(x, center + reach, side='right')
            if lo < hi:
                values[lo:hi] += w * heat_step_array(center, slits.b, slits.height, params.alpha, t, x[lo:hi])
    logger.debug('evolve_factorized t=%g: %d net shifts', t, len(combined))
    return Profile(grid, values, t, slits)


def window_mass(
    params: NladParams, slits: SlitPair, t: float, lo: float, hi: float, tol: Tolerance = _TOL
) -> float:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    'int_lo^hi w(x, t) dx from the factorized series'
    total = 0.0
    for shift, w in _combined_shifts(params, t, tol, None).items():
        for c in slits.centers:
            total += w * heat_step_integral(c - shift, slits.b, slits.height, params.alpha, t, lo, hi)
    return total


def support_radius(params: NladParams, slits: SlitPair, t: float, tol: Tolerance = _TOL) -> float:
    'distance from the origin beyond which w(., t) carries at most the series tail budget'
    reach = heat_reach(slits.b, params.alpha, t) + slits.s
    for d, rate in params.levels:
        reach += shift_weights(rate * t, tol.tail_eps).half_width * d
    return reach


def symbol(params: NladParams, k: NDArray[np.float64]) -> NDArray[np.float64]:
    out = -params.alpha * k * k
    for d, rate in params.levels:
        out -= 2.0 * rate * (1.0 - np.cos(k * d))
    return out


def initial_transform(slits: SlitPair, k: NDArray[np.float64]) -> NDArray[np.float64]:
    'int w_0(x) exp(-i k x) dx; the two steps are even about the origin'
    b = slits.b
    return 2.0 * slits.height * (2.0 * b * np.sinc(k * b / np.pi)) * np.cos(k * slits.s)


def multiplier_table(
    params: NladParams, slits: SlitPair, t: float, grid: Grid, tol: Tolerance = _TOL
) -> MultiplierTable:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    if not t > 0:
        raise DomainError(f't={t} must be positive, sample the initial data at t = 0')
    # exp(t sigma(k)) <= exp(-alpha t k^2) < tail_eps past k_max
    k_max = math.sqrt(math.log(1.0 / tol.tail_eps) / (params.alpha * t))
    x_extent = max(abs(grid.x_min), abs(grid.x_max))
    d_max = max(slits.s, params.max_shift)
    dk = min(
        2.0 * math.pi / (_NODES_PER_PERIOD * max(x_extent, d_max)),
        # Simpson's coarse half sums the images w(x + m pi / dk)
        math.pi / (x_extent + support_radius(params, slits, t, tol)),
    )
    intervals = math.ceil(k_max / dk)
    intervals += intervals % 2
    k = np.linspace(0.0, k_max, intervals + 1)
    return MultiplierTable(k_max, float(k[1] - k[0]), symbol(params, k), initial_transform(slits, k))


def evolve_spectral(
    params: NladParams, slits: SlitPair, t: float, grid: Grid, tol: Tolerance = _TOL
) -> Profile:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    table = multiplier_table(params, slits, t, grid, tol)
    k = table.k
    amplitude = np.exp(t * table.symbol_values) * table.transform_values
    x = grid.x
    values = np.empty(grid.n)
    step = max(1, _CHUNK // k.size)
    for i in range(0, grid.n, step):
        xs = x[i : i + step]
        integrand = np.cos(np.outer(xs, k)) * amplitude
        values[i : i + step] = simpson(integrand, dx=table.dk, axis=1) / math.pi
    logger.debug('evolve_spectral t=%g: %d k nodes, k_max=%g', t, k.size, table.k_max)
    return Profile(grid, values, t, slits)


def _generator(params: NladParams, p: Profile) -> NDArray[np.float64]:
    dx = p.grid.dx
    out = params.alpha * _second_difference(p, dx) / (dx * dx)
    for d, rate in params.levels:
        out += apply_difference(d, rate, p).values
    return out


def euler_step_residual(
    params: NladParams, p: Profile, dt: float, advanced: Profile | None = None, tol: Tolerance = _TOL
) -> float:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    '''
    sup | (w(t + dt) - w(t)) / dt - (alpha w'' + sum B_i w) | over interior nodes

    w(t + dt) is recomputed from the slit pair on p unless given
    '''
    if not dt > 0:
        raise DomainError(f'dt={dt} must be positive')
    if advanced is None:
        if p.slits is None:
            raise DomainError('profile carries no slit pair, pass the advanced profile')
        advanced = evolve_factorized(params, p.slits, p.time + dt, p.grid, tol)
    if advanced.grid != p.grid:
        raise GridError('advanced profile is on a different grid')
    quotient = (advanced.values - p.values) / dt
    inside = _interior(p.grid, params.max_shift + p.grid.dx)
    return float(np.max(np.abs(quotient - _generator(params, p))[inside]))


def time_derivative_scale(params: NladParams, p: Profile) -> float:
    'sup |alpha w'' + sum B_i w| over interior nodes'
    inside = _interior(p.grid, params.max_shift + p.grid.dx)
    return float(np.max(np.abs(_generator(params, p))[inside]))
