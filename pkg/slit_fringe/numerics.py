'''
Special functions and kernels shared by both models.

fresnel:     C(z), S(z) with the pi*w**2/2 convention
erf:         error function
heat_step:   heat semigroup applied to height * indicator([center - hw, center + hw])
shift_weights: coefficients of exp(t*B) for B f = beta * (f(x + d) - 2 f(x) + f(x - d))
'''

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .utils import DomainError, ParameterError, ResourceError, check_finite

logger = logging.getLogger(__name__)

FRESNEL_SEAM = 1.6  # power series below, continued fraction above
MAX_SHIFT_HALF_WIDTH = 10_000

_SERIES_EPS = 1e-17
_SERIES_MAX_TERMS = 200
_CF_EPS = 1e-15
_CF_MAX_TERMS = 1000
_FPMIN = 1e-300
_POISSON_EPS = 1e-18
_HEAT_REACH = 16.0  # erfc(8) ~ 1e-29


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    tail_eps: float = 1e-12

    def __post_init__(self):
        for name in ('abs_tol', 'rel_tol', 'tail_eps'):
            value = getattr(self, name)
            if not 0.0 < value <= 1e-2:
                raise ParameterError(f'{name}={value} must be in (0, 1e-2]')


@dataclass(frozen=True)
class ShiftWeights:
    half_width: int
    weights: NDArray[np.float64]  # w_j for j = -J..J
    rate_time: float

    @property
    def offsets(self) -> NDArray[np.int64]:
        return np.arange(-self.half_width, self.half_width + 1)

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    def weight(self, j: int) -> float:
        if abs(j) > self.half_width:
            return 0.0
        return float(self.weights[j + self.half_width])


def _as_finite_array(name: str, z: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f'{name}: non-finite input')
    return arr


def _fresnel_series(ax: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    # term_k = ax * (pi ax^2 / 2)^k / k!, feeding C for even k and S for odd k
    fact = 0.5 * np.pi * ax * ax
    term = ax.copy()
    c = ax.copy()
    s = np.zeros_like(ax)
    for k in range(1, _SERIES_MAX_TERMS):
        term = term * fact / k
        contrib = term / (2 * k + 1)
        r = k % 4
        if r == 0:
            c += contrib
        elif r == 1:
            s += contrib
        elif r == 2:
            c -= contrib
        else:
            s -= contrib
        if np.all(term < _SERIES_EPS):
            break
    return c, s


def _fresnel_continued_fraction(ax: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    # modified Lentz evaluation of the complementary error function of (1 - i) sqrt(pi) ax / 2
    pix2 = np.pi * ax * ax
    b = 1.0 - 1j * pix2
    cc = np.full(ax.shape, 1.0 / _FPMIN, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    n = -1
    for _ in range(2, _CF_MAX_TERMS):
        n += 2
        a = -n * (n + 1.0)
        b = b + 4.0
        d = 1.0 / (a * d + b)
        cc = b + a / cc
        delta = cc * d
        h = h * delta
        if np.all(np.abs(delta.real - 1.0) + np.abs(delta.imag) < _CF_EPS):
            break
    h = h * (ax - 1j * ax)
    cs = (0.5 + 0.5j) * (1.0 - np.exp(0.5j * pix2) * h)
    return cs.real, cs.imag


def fresnel_array(z: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    z = _as_finite_array('fresnel', z)
    ax = np.abs(z)
    c = np.empty_like(ax)
    s = np.empty_like(ax)
    small = ax <= FRESNEL_SEAM
    if np.any(small):
        c[small], s[small] = _fresnel_series(ax[small])
    if not np.all(small):
        large = ~small
        c[large], s[large] = _fresnel_continued_fraction(ax[large])
    sign = np.sign(z)
    return sign * c, sign * s


def fresnel(z: float) -> tuple[float, float]:
    z = check_finite('z', z)
    c, s = fresnel_array(np.array([z]))
    return float(c[0]), float(s[0])


def erf_array(z: ArrayLike) -> NDArray[np.float64]:
    return special.erf(_as_finite_array('erf', z))


def erf(z: float) -> float:
    return float(special.erf(check_finite('z', z)))


def _check_heat(half_width: float, height: float, sigma: float, t: float):
    if not sigma > 0:
        raise ParameterError(f'sigma={sigma} must be positive')
    if not half_width > 0:
        raise ParameterError(f'half_width={half_width} must be positive')
    if not height >= 0:
        raise ParameterError(f'height={height} must be nonnegative')
    if not t >= 0:
        raise ParameterError(f't={t} must be nonnegative')


def heat_step_array(
    center: float, half_width: float, height: float, sigma: float, t: float, x: ArrayLike
):  # pylint: disable=too-many-arguments,too-many-positional-arguments
    _check_heat(half_width, height, sigma, t)
    x = _as_finite_array('heat_step', x)
    y = x - center
    if t == 0:
        ay = np.abs(y)
        return np.where(ay < half_width, height, np.where(ay == half_width, 0.5 * height, 0.0))
    scale = 2.0 * math.sqrt(sigma * t)
    u = (y + half_width) / scale
    v = (y - half_width) / scale
    # erf(u) - erf(v) written with erfc on the far side of the step
    right = u + v > 0
    p = np.where(right, v, -u)
    q = np.where(right, u, -v)
    return 0.5 * height * (special.erfc(p) - special.erfc(q))


def heat_step(
    center: float, half_width: float, height: float, sigma: float, t: float, x: float
) -> float:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    x = check_finite('x', x)
    return float(heat_step_array(center, half_width, height, sigma, t, np.array([x]))[0])


def heat_reach(half_width: float, sigma: float, t: float) -> float:
    'distance from the step center beyond which heat_step is below 1e-28 of its plateau'
    return half_width + _HEAT_REACH * math.sqrt(sigma * t)


def _erf_antiderivative(y: float, scale: float) -> float:
    # d/dy of this is erf(y / scale)
    return y * math.erf(y / scale) + scale / math.sqrt(math.pi) * math.exp(-((y / scale) ** 2))


def heat_step_integral(
    center: float, half_width: float, height: float, sigma: float, t: float, a: float, b: float
) -> float:  # pylint: disable=too-many-arguments,too-many-positional-arguments
    _check_heat(half_width, height, sigma, t)
    if b < a:
        return -heat_step_integral(center, half_width, height, sigma, t, b, a)
    lo = max(a, center - half_width)
    hi = min(b, center + half_width)
    if t == 0:
        return height * max(hi - lo, 0.0)
    scale = 2.0 * math.sqrt(sigma * t)
    e = _erf_antiderivative
    ya = a - center
    yb = b - center
    return (
        0.5
        * height
        * (
            e(yb + half_width, scale)
            - e(ya + half_width, scale)
            - e(yb - half_width, scale)
            + e(ya - half_width, scale)
        )
    )


def _poisson_pair_sum(j: int, x: float) -> float:
    '''
    sum_{n >= 0} exp(-2x) x^(j + 2n) / ((j + n)! n!)

    the (j, n) term of exp(t B+) exp(t B-) landing on net shift j
    '''
    log_x = math.log(x)
    step = 2.0 * log_x
    log_term = j * log_x - math.lgamma(j + 1) - 2.0 * x
    terms = []
    acc = 0.0
    n = 0
    while True:
        term = math.exp(log_term)
        terms.append(term)
        acc += term
        # past the peak the ratio x^2 / ((j + n + 1)(n + 1)) only shrinks
        if (j + n + 1) * (n + 1) > x * x and term <= _POISSON_EPS * acc:
            break
        n += 1
        log_term += step - math.log(j + n) - math.log(n)
    return math.fsum(terms)


def _estimated_half_width(x: float, tail_eps: float) -> int:
    # net shift has variance 2x; gaussian tail plus a margin for skewless heavier tails
    k = math.sqrt(2.0 * math.log(1.0 / tail_eps)) + 1.0
    return int(math.ceil(k * math.sqrt(2.0 * x) + 1.0))


def shift_weights(rate_time: float, tail_eps: float, max_half_width: int = MAX_SHIFT_HALF_WIDTH) -> ShiftWeights:
    x = check_finite('rate_time', rate_time)
    if x < 0:
        raise ParameterError(f'rate_time={x} must be nonnegative')
    if not 0.0 < tail_eps < 1e-3:
        raise ParameterError(f'tail_eps={tail_eps} must be in (0, 1e-3)')
    if x == 0:
        return ShiftWeights(0, np.ones(1), 0.0)
    if _estimated_half_width(x, tail_eps) > max_half_width:
        raise ResourceError(f'rate_time={x} needs more than {max_half_width} shifts')

    half = [_poisson_pair_sum(0, x)]
    total = half[0]
    j = 0
    while 1.0 - total >= tail_eps:
        j += 1
        if j > max_half_width:
            raise ResourceError(f'rate_time={x} needs more than {max_half_width} shifts')
        w = _poisson_pair_sum(j, x)
        half.append(w)
        total += 2.0 * w
        if w == 0.0 and j > x:
            raise ResourceError(f'rate_time={x}: weights underflow at j={j} with {1.0 - total:.3g} of the mass missing')

    right = np.array(half)
    weights = np.concatenate([right[:0:-1], right])
    s = math.fsum(weights)
    if s > 1.0:
        weights = weights / s
    logger.debug('shift_weights(%g): J=%d, sum=%.17g', x, j, s)
    return ShiftWeights(j, weights, x)
