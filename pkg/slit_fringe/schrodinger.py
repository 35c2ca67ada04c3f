'''
Free Schroedinger evolution of the two-rectangle amplitude.

For one rectangle [c - b, c + b] the propagator integral reduces to Fresnel
integrals with w = (y - x) / sqrt(pi t):

    int exp(i (x - y)^2 / 2t) dy = sqrt(pi t) * ((C(v) - C(u)) + i (S(v) - S(u)))

and the prefactor 1 / sqrt(2 pi i t) equals (1 - i) / (2 sqrt(pi t)), so

    psi = (h / 2) * (1 - i) * (dC + i dS),   rho = (h^2 / 2) * (dC^2 + dS^2)

with dC, dS summed over both rectangles.
'''

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .core import Grid, Profile, SeParams, SlitPair, mass
from .numerics import fresnel_array
from .utils import DomainError, check_finite

_SE = SeParams()


@dataclass(frozen=True)
class Amplitude:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError(f'non-finite amplitude ({self.re}, {self.im})')

    @property
    def density(self) -> float:
        return self.re * self.re + self.im * self.im


@dataclass(frozen=True)
class DilationReport:
    t: float
    T: float
    lhs_sup: float
    rhs_bound: float
    moment1: float
    moment2: float

    @property
    def holds(self) -> bool:
        return self.lhs_sup <= self.rhs_bound * (1.0 + 1e-12) + 1e-15


def psi0_moments(slits: SlitPair) -> tuple[float, float]:
    'int |psi_0| and int y^2 |psi_0|'
    s, b, h = slits.s, slits.b, slits.height
    m0 = 4.0 * b * h
    m2 = 2.0 * h / 3.0 * ((s + b) ** 3 - (s - b) ** 3)
    return m0, m2


def _check_time(t: float, se: SeParams) -> float:
    t = check_finite('t', t)
    if not t > 0:
        raise DomainError(f't={t} must be positive')
    return se.scale * t


def _fresnel_sums(slits: SlitPair, tau: float, x: NDArray[np.float64]) -> tuple[NDArray, NDArray]:
    root = math.sqrt(math.pi * tau)
    dc = np.zeros_like(x)
    ds = np.zeros_like(x)
    for c in slits.centers:
        cu, su = fresnel_array((c - slits.b - x) / root)
        cv, sv = fresnel_array((c + slits.b - x) / root)
        dc += cv - cu
        ds += sv - su
    return dc, ds


def psi_array(slits: SlitPair, t: float, x: ArrayLike, se: SeParams = _SE) -> NDArray[np.complex128]:
    tau = _check_time(t, se)
    dc, ds = _fresnel_sums(slits, tau, np.asarray(x, dtype=float))
    return 0.5 * slits.height * (1.0 - 1.0j) * (dc + 1.0j * ds)


def psi(slits: SlitPair, t: float, x: float, se: SeParams = _SE) -> Amplitude:
    x = check_finite('x', x)
    z = psi_array(slits, t, np.array([x]), se)[0]
    return Amplitude(float(z.real), float(z.imag))


def rho_array(slits: SlitPair, t: float, x: ArrayLike, se: SeParams = _SE) -> NDArray[np.float64]:
    tau = _check_time(t, se)
    dc, ds = _fresnel_sums(slits, tau, np.asarray(x, dtype=float))
    return 0.5 * slits.height**2 * (dc * dc + ds * ds)


def rho(slits: SlitPair, t: float, x: float, se: SeParams = _SE) -> float:
    x = check_finite('x', x)
    return float(rho_array(slits, t, np.array([x]), se)[0])


def rho_profile(slits: SlitPair, t: float, grid: Grid, se: SeParams = _SE) -> Profile:
    return Profile(grid, rho_array(slits, t, grid.x, se), t, slits)


def dilation_bound(slits: SlitPair, t: float, T: float, se: SeParams = _SE) -> float:
    m0, m2 = psi0_moments(slits)
    T = se.scale * T
    return math.sqrt(2.0) / (math.pi * t * T * T) * m2 * m0


def dilation_check(slits: SlitPair, t: float, T: float, grid: Grid, se: SeParams = _SE) -> DilationReport:
    if not t >= 1:
        raise DomainError(f't={t} must be >= 1')
    if not T > 0:
        raise DomainError(f'T={T} must be positive')
    x = grid.x
    diff = rho_array(slits, t * T, x, se) - rho_array(slits, T, x / t, se) / t
    m0, m2 = psi0_moments(slits)
    return DilationReport(t, T, float(np.max(np.abs(diff))), dilation_bound(slits, t, T, se), m0, m2)


def asymptotic_limit(slits: SlitPair) -> float:
    'lim t * rho(x, t) = |int psi_0|^2 / (2 pi)'
    m0, _ = psi0_moments(slits)
    return m0 * m0 / (2.0 * math.pi)


def _cos_tail(delta: float, k: float) -> float:
    'int_k^inf cos(delta q) / q^2 dq, delta >= 0'
    if delta == 0:
        return 1.0 / k
    si, _ = special.sici(k * delta)
    return math.cos(k * delta) / k - delta * (0.5 * math.pi - si)


def tail_mass(slits: SlitPair, t: float, radius: float, se: SeParams = _SE) -> float:
    '''
    int_{|x| > radius} rho(x, t) dx to leading order in t / radius

    rho(x, t) = |phi^(x / t)|^2 / (2 pi t) with phi = psi_0 * exp(i y^2 / 2t), and
    the four jumps of phi set the 1/k decay of phi^
    '''
    tau = _check_time(t, se)
    if not radius > slits.s + slits.b:
        raise DomainError(f'radius={radius} must lie outside the slits')
    k = radius / tau
    h = slits.height
    edges = []
    for c in slits.centers:
        edges.append((c - slits.b, h))
        edges.append((c + slits.b, -h))
    total = 0.0
    for yj, jj in edges:
        for yl, jl in edges:
            phase = (yj * yj - yl * yl) / (2.0 * tau)
            total += jj * jl * math.cos(phase) * _cos_tail(abs(yj - yl), k)
    return total / math.pi


def mass_estimate(p: Profile, slits: SlitPair | None = None, se: SeParams = _SE) -> float:
    'trapezoid mass on the grid plus the analytic tails beyond both ends'
    slits = slits or p.slits
    if slits is None:
        raise DomainError('profile carries no slit pair')
    lo, hi = -p.grid.x_min, p.grid.x_max
    return mass(p) + 0.5 * tail_mass(slits, p.time, lo, se) + 0.5 * tail_mass(slits, p.time, hi, se)
