'''
Scenario configuration and runner.

A scenario is a JSON object; every key is optional and unknown keys are rejected:

    {
      "name": "first_phase",
      "slits": {"s": 1.0, "b": 0.1},
      "nlad": {"alpha": 0.032, "levels": [[1, 12.5], [15, 0.0698], [25, 0.0251]]},
      "se": {"scale": 1.0},
      "times": [0.1, 0.25, 0.5, 1.0],
      "pi_units": true,
      "grid": {"x_min": -40, "x_max": 40, "dx": 0.01},
      "methods": ["se", "nlad_factorized", "nlad_spectral"],
      "dilation_factors": [1, 1, 1, 1],
      "tolerances": {"abs_tol": 1e-8, "rel_tol": 1e-6, "tail_eps": 1e-12},
      "extrema_window": [0.2, 8.8],
      "noise_floor": 1e-9,
      "output_dir": "out"
    }
'''

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable

from . import fringe, nlad, schrodinger, store
from .core import (
    Grid,
    Level,
    NladParams,
    Normalization,
    Profile,
    SeParams,
    SlitPair,
    nlad_params_for,
    standard_nlad_params,
    standard_slits,
)
from .numerics import Tolerance
from .utils import (
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    FringeException,
    InsufficientDataError,
    NumericFailure,
    ParameterError,
    worker_count,
)

logger = logging.getLogger(__name__)

SE = 'se'
FACTORIZED = 'nlad_factorized'
SPECTRAL = 'nlad_spectral'
METHODS = (SE, FACTORIZED, SPECTRAL)

SE_MASS_TOL = 1e-4
FACTORIZED_MASS_TOL = 1e-6
SPECTRAL_MASS_TOL = 1e-5
FAILURE_FACTOR = 100.0
POSITIVITY_FLOOR = -1e-8

GRID_HALF_WIDTH = 40.0
GRID_STEP = 0.01
SIMILARITY_HALF_WIDTH = 20.0
CONTRAST_HALF_WIDTH = 10.0
DEFAULT_EXTREMA_WINDOW = (0.2, 8.8)
SECOND_PHASE = 2.0  # in units of 1/pi

_KEYS = {
    '': {
        'name',
        'slits',
        'nlad',
        'se',
        'times',
        'pi_units',
        'grid',
        'methods',
        'dilation_factors',
        'tolerances',
        'extrema_window',
        'noise_floor',
        'output_dir',
    },
    'slits': {'s', 'b'},
    'nlad': {'alpha', 'levels'},
    'se': {'scale'},
    'grid': {'x_min', 'x_max', 'n', 'dx'},
    'tolerances': {'abs_tol', 'rel_tol', 'tail_eps'},
}


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n: int | None = None
    dx: float | None = None

    def grid(self) -> Grid:
        if self.n is not None:
            return Grid(self.x_min, self.x_max, self.n)
        assert self.dx is not None
        return Grid.from_step(self.x_min, self.x_max, self.dx)


@dataclass(frozen=True)
class ScenarioConfig:  # pylint: disable=too-many-instance-attributes
    name: str = 'standard'
    slits: SlitPair = field(default_factory=standard_slits)
    nlad: NladParams = field(default_factory=standard_nlad_params)
    se: SeParams = SeParams()
    times: tuple[float, ...] = (0.1, 0.25, 0.5, 1.0)
    pi_units: bool = True
    grid: GridSpec | None = None
    methods: tuple[str, ...] = METHODS
    dilation_factors: tuple[float, ...] | None = None
    tolerances: Tolerance = Tolerance()
    extrema_window: tuple[float, float] | None = None
    noise_floor: float = fringe.DEFAULT_NOISE_FLOOR
    output_dir: Path | None = None

    def time(self, value: float) -> float:
        'model time of a configured time value'
        return value / math.pi if self.pi_units else value

    def factor(self, value: float) -> float:
        'pattern scale m = max(1, t*pi) for model time t: 1 in the first phase, the dilation factor in the second'
        return max(1.0, value if self.pi_units else value * math.pi)

    def grid_for(self, value: float) -> Grid:
        if self.grid is not None:
            return self.grid.grid()
        m = self.factor(value)
        return Grid.symmetric(GRID_HALF_WIDTH * m, GRID_STEP * m)

    def window_for(self, value: float) -> tuple[float, float]:
        lo, hi = self.extrema_window or DEFAULT_EXTREMA_WINDOW
        if self.extrema_window is None:
            m = self.factor(value)
            return lo * m, hi * m
        return lo, hi

    def file_name(self, value: float) -> str:
        if self.pi_units:
            return f'profile_t{value:g}over_pi.csv'
        return f'profile_t{value:g}.csv'

    def to_dict(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'slits': {'s': self.slits.s, 'b': self.slits.b},
            'nlad': {'alpha': self.nlad.alpha, 'levels': [list(lv) for lv in self.nlad.levels]},
            'se': {'scale': self.se.scale},
            'times': list(self.times),
            'pi_units': self.pi_units,
            'grid': None if self.grid is None else {k: v for k, v in vars(self.grid).items() if v is not None},
            'methods': list(self.methods),
            'dilation_factors': None if self.dilation_factors is None else list(self.dilation_factors),
            'tolerances': vars(self.tolerances).copy(),
            'extrema_window': None if self.extrema_window is None else list(self.extrema_window),
            'noise_floor': self.noise_floor,
            'output_dir': None if self.output_dir is None else str(self.output_dir),
        }


def _check_keys(d: Any, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigValidationError(where or '(root)', 'expected an object')
    if unknown := sorted(set(d) - _KEYS[where]):
        prefix = f'{where}.' if where else ''
        raise ConfigValidationError(f'{prefix}{unknown[0]}', 'unknown key')
    return d


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigValidationError(name, f'expected a finite number, got {value!r}')
    return float(value)


def _positive(value: Any, name: str) -> float:
    x = _number(value, name)
    if not x > 0:
        raise ConfigValidationError(name, f'must be positive, got {x:g}')
    return x


def _numbers(value: Any, name: str, convert: Callable[[Any, str], float] = _number) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigValidationError(name, 'expected a nonempty list')
    return tuple(convert(v, f'{name}[{i}]') for i, v in enumerate(value))


def _slits(d: dict) -> SlitPair:
    d = _check_keys(d, 'slits')
    ref = standard_slits()
    s = _positive(d.get('s', ref.s), 'slits.s')
    b = _positive(d.get('b', ref.b), 'slits.b')
    try:
        return SlitPair.normalized(s, b)
    except ParameterError as e:
        raise ConfigValidationError('slits', str(e)) from e


def _nlad(d: dict | None, slits: SlitPair) -> NladParams:
    d = _check_keys({} if d is None else d, 'nlad')
    if slits == standard_slits():
        derived = standard_nlad_params()
    else:
        derived = nlad_params_for(slits)
    alpha = _positive(d.get('alpha', derived.alpha), 'nlad.alpha')
    levels = derived.levels
    if 'levels' in d:
        raw = d['levels']
        if not isinstance(raw, list):
            raise ConfigValidationError('nlad.levels', 'expected a list of [shift, rate] pairs')
        pairs = []
        for i, pair in enumerate(raw):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ConfigValidationError(f'nlad.levels[{i}]', 'expected [shift, rate]')
            pairs.append(Level(_number(pair[0], f'nlad.levels[{i}]'), _number(pair[1], f'nlad.levels[{i}]')))
        levels = tuple(pairs)
    try:
        return NladParams(alpha, levels)
    except ParameterError as e:
        raise ConfigValidationError('nlad', str(e)) from e


def _grid(d: dict) -> GridSpec:
    d = _check_keys(d, 'grid')
    for key in ('x_min', 'x_max'):
        if key not in d:
            raise ConfigValidationError(f'grid.{key}', 'missing')
    if ('n' in d) == ('dx' in d):
        raise ConfigValidationError('grid', 'give exactly one of n and dx')
    x_min = _number(d['x_min'], 'grid.x_min')
    x_max = _number(d['x_max'], 'grid.x_max')
    if not x_min < x_max:
        raise ConfigValidationError('grid.x_max', 'must exceed x_min')
    if 'n' in d:
        n = d['n']
        if isinstance(n, bool) or not isinstance(n, int) or n < 2:
            raise ConfigValidationError('grid.n', f'expected an integer >= 2, got {n!r}')
        return GridSpec(x_min, x_max, n=n)
    return GridSpec(x_min, x_max, dx=_positive(d['dx'], 'grid.dx'))


def _methods(value: Any) -> tuple[str, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigValidationError('methods', 'expected a nonempty list')
    for m in value:
        if m not in METHODS:
            raise ConfigValidationError('methods', f'unknown method {m!r}, expected one of {", ".join(METHODS)}')
    if len(set(value)) != len(value):
        raise ConfigValidationError('methods', 'duplicate method')
    return tuple(m for m in METHODS if m in value)


def _tolerances(d: dict) -> Tolerance:
    d = _check_keys(d, 'tolerances')
    values = {k: _number(v, f'tolerances.{k}') for k, v in d.items()}
    try:
        return Tolerance(**values)
    except ParameterError as e:
        key = next(k for k in values if str(e).startswith(f'{k}='))
        raise ConfigValidationError(f'tolerances.{key}', str(e)) from e


def _window(value: Any) -> tuple[float, float]:
    if not (isinstance(value, list) and len(value) == 2):
        raise ConfigValidationError('extrema_window', 'expected [lo, hi]')
    lo, hi = _numbers(value, 'extrema_window')
    if not lo < hi:
        raise ConfigValidationError('extrema_window', f'lo={lo:g} must be below hi={hi:g}')
    return lo, hi


def _name(value: Any) -> str:
    if not isinstance(value, str) or not value or '/' in value or value in ('.', '..'):
        raise ConfigValidationError('name', f'expected a plain file name, got {value!r}')
    return value


def from_dict(d: Any) -> ScenarioConfig:  # pylint: disable=too-many-branches
    d = _check_keys(d, '')
    kw: dict[str, Any] = {}
    if 'name' in d:
        kw['name'] = _name(d['name'])
    slits = _slits(d['slits']) if 'slits' in d else standard_slits()
    kw['slits'] = slits
    kw['nlad'] = _nlad(d.get('nlad'), slits)
    if 'se' in d:
        se = _check_keys(d['se'], 'se')
        kw['se'] = SeParams(_positive(se.get('scale', 1.0), 'se.scale'))
    if 'times' in d:
        times = _numbers(d['times'], 'times', _positive)
        if any(a >= b for a, b in zip(times, times[1:])):
            raise ConfigValidationError('times', 'must be strictly increasing')
        kw['times'] = times
    if 'pi_units' in d:
        if not isinstance(d['pi_units'], bool):
            raise ConfigValidationError('pi_units', 'expected true or false')
        kw['pi_units'] = d['pi_units']
    if d.get('grid') is not None:
        kw['grid'] = _grid(d['grid'])
    if 'methods' in d:
        kw['methods'] = _methods(d['methods'])
    if d.get('dilation_factors') is not None:
        factors = _numbers(d['dilation_factors'], 'dilation_factors', _positive)
        if len(factors) != len(kw.get('times', ScenarioConfig.times)):
            raise ConfigValidationError('dilation_factors', 'needs one factor per time')
        kw['dilation_factors'] = factors
    if 'tolerances' in d:
        kw['tolerances'] = _tolerances(d['tolerances'])
    if d.get('extrema_window') is not None:
        kw['extrema_window'] = _window(d['extrema_window'])
    if 'noise_floor' in d:
        floor = _number(d['noise_floor'], 'noise_floor')
        if floor < 0:
            raise ConfigValidationError('noise_floor', 'must be nonnegative')
        kw['noise_floor'] = floor
    if d.get('output_dir') is not None:
        if not isinstance(d['output_dir'], str) or not d['output_dir']:
            raise ConfigValidationError('output_dir', 'expected a path')
        kw['output_dir'] = Path(d['output_dir'])
    return ScenarioConfig(**kw)


def parse_config(text: bytes | str) -> ScenarioConfig:
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            raise ConfigParseError(f'not UTF-8: {e.reason} at byte {e.start}') from e
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(e.msg, e.lineno, e.colno) from e
    return from_dict(d)


def load_config(path: Path) -> ScenarioConfig:
    try:
        text = path.read_bytes()
    except OSError as e:
        raise ConfigError(f'{path}: {e.strerror}') from e
    return parse_config(text)


def scenario_names() -> list[str]:
    root = resources.files(__package__) / 'scenarios'
    return sorted(p.name.removesuffix('.json') for p in root.iterdir() if p.name.endswith('.json'))


def load_scenario(name: str) -> ScenarioConfig:
    if name not in scenario_names():
        raise ConfigError(f'unknown scenario {name!r}, expected one of {", ".join(scenario_names())}')
    return parse_config((resources.files(__package__) / 'scenarios' / f'{name}.json').read_bytes())


@dataclass
class TimeResult:
    value: float
    file: str
    summary: dict[str, Any]
    failures: list[str]


@dataclass
class RunSummary:
    out_dir: Path
    summary: dict[str, Any]
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def _extrema_summary(p: Profile, window: tuple[float, float], noise_floor: float) -> dict[str, Any]:
    report = fringe.find_extrema(p, window, noise_floor)
    out: dict[str, Any] = {
        'window': list(report.window),
        'minima': [list(e) for e in report.minima],
        'maxima': [list(e) for e in report.maxima],
    }
    try:
        stats = fringe.spacing_stats(report)
        out['spacing'] = {'gaps': stats.gaps, 'mean': stats.mean, 'max_abs_dev': stats.max_abs_dev}
    except InsufficientDataError:
        out['spacing'] = None
    try:
        out['visibility'] = fringe.visibility(report)
    except InsufficientDataError:
        out['visibility'] = None
    return out


class _TimeRun:
    'one configured time value: evaluations, checks and the CSV table'

    def __init__(self, cfg: ScenarioConfig, index: int):
        self.cfg = cfg
        self.value = cfg.times[index]
        self.t = cfg.time(self.value)
        self.m = cfg.factor(self.value)
        self.dilation = cfg.dilation_factors[index] if cfg.dilation_factors else None
        self.grid = cfg.grid_for(self.value)
        g = self.grid
        self.summary: dict[str, Any] = {'t': self.t, 'value': self.value, 'grid': [g.x_min, g.x_max, g.n]}
        self.failures: list[str] = []

    def _check(self, what: str, deviation: float, tol: float):
        if deviation > FAILURE_FACTOR * tol:
            self.failures.append(f't={self.value:g}: {what} deviates by {deviation:.3g} (tolerance {tol:g})')
        elif deviation > tol:
            logger.warning('t=%g: %s deviates by %.3g (tolerance %g)', self.value, what, deviation, tol)

    def _se(self) -> Profile:
        cfg = self.cfg
        amp = cfg.slits.with_mode(Normalization.AMPLITUDE)
        rho = schrodinger.rho_profile(amp, self.t, self.grid, cfg.se)
        reach = amp.s + amp.b
        info: dict[str, Any] = {'mass': rho.mass, 'min': float(rho.values.min())}
        if -self.grid.x_min > reach and self.grid.x_max > reach:
            estimate = schrodinger.mass_estimate(rho, amp, cfg.se)
            info['mass_estimate'] = estimate
            self._check('se mass', abs(estimate - 1.0), SE_MASS_TOL)
        else:
            logger.warning('t=%g: grid does not enclose the slits, se mass not checked', self.value)
        self.summary[SE] = info
        return rho

    def _nlad(self, method: str, grid: Grid | None = None) -> Profile:
        cfg = self.cfg
        grid = grid or self.grid
        if method == SPECTRAL:
            p = nlad.evolve_spectral(cfg.nlad, cfg.slits, self.t, grid, cfg.tolerances)
        else:
            p = nlad.evolve_factorized(cfg.nlad, cfg.slits, self.t, grid, cfg.tolerances)
        return p

    def _nlad_checks(self, method: str, p: Profile):
        cfg = self.cfg
        exact = nlad.window_mass(cfg.nlad, cfg.slits, self.t, self.grid.x_min, self.grid.x_max, cfg.tolerances)
        lowest = float(p.values.min())
        self.summary[method] = {'mass': p.mass, 'window_mass': exact, 'min': lowest}
        tol = SPECTRAL_MASS_TOL if method == SPECTRAL else FACTORIZED_MASS_TOL
        self._check(f'{method} mass', abs(p.mass - exact), tol)
        if lowest < POSITIVITY_FLOOR:
            self.failures.append(f't={self.value:g}: {method} minimum {lowest:.3g} is negative')

    def run(self) -> tuple[store.ProfileTable, TimeResult]:
        cfg = self.cfg
        unit = '/pi' if cfg.pi_units else ''
        logger.info('t=%g%s: %d nodes on [%g, %g]', self.value, unit, self.grid.n, self.grid.x_min, self.grid.x_max)
        table = store.ProfileTable(self.grid.x.copy())
        rho = self._se() if SE in cfg.methods else None
        if rho is not None:
            table.add('rho_se', rho.values)

        omegas = {}
        for method in (FACTORIZED, SPECTRAL):
            if method in cfg.methods:
                omegas[method] = p = self._nlad(method)
                self._nlad_checks(method, p)
        if len(omegas) == 2:
            sup, l1 = fringe.compare(omegas[FACTORIZED], omegas[SPECTRAL])
            self.summary['dual_method'] = {'sup_diff': sup, 'l1_diff': l1}
            self._check('dual-method difference', sup, cfg.tolerances.rel_tol)
        omega = omegas.get(SPECTRAL) or omegas.get(FACTORIZED)
        dilated = None
        if omega is not None:
            table.add('omega_nlad', omega.values)
            if self.dilation is not None:
                method = SPECTRAL if SPECTRAL in omegas else FACTORIZED
                compressed = self._nlad(method, self.grid.scaled(1.0 / self.dilation))
                dilated = fringe.dilate(compressed, self.dilation, self.grid)
                table.add('omega_nlad_dilated', dilated.values)
                self.summary['dilation_factor'] = self.dilation

        self._analysis(rho, dilated or omega)
        return table, TimeResult(self.value, cfg.file_name(self.value), self.summary, self.failures)

    def _analysis(self, rho: Profile | None, omega: Profile | None):
        cfg = self.cfg
        window = cfg.window_for(self.value)
        profiles = {'rho_se': rho, 'omega_nlad': omega}
        extrema = {}
        for name, p in profiles.items():
            if p is None:
                continue
            try:
                extrema[name] = _extrema_summary(p, window, cfg.noise_floor)
            except FringeException as e:
                logger.warning('t=%g: no extrema for %s: %s', self.value, name, e)
        self.summary['extrema'] = extrema

        if omega is not None:
            period = cfg.slits.s / cfg.slits.b * self.m
            count = min(3, int(self.grid.x_max / period - 1e-9) - 1, int(-self.grid.x_min / period - 1e-9) - 1)
            if count >= 0:
                self.summary['fringe_groups'] = [g._asdict() for g in fringe.fringe_groups(omega, period, count)]

        if rho is None or omega is None:
            return
        half = SIMILARITY_HALF_WIDTH * self.m
        if self.grid.contains(-half, half):
            sup, l1 = fringe.compare(rho.restrict(-half, half), omega.restrict(-half, half))
            self.summary['similarity'] = {'window': [-half, half], 'sup_diff': sup, 'l1_diff': l1}
        half = CONTRAST_HALF_WIDTH * self.m
        phase_two = self.value >= SECOND_PHASE if cfg.pi_units else self.t * math.pi >= SECOND_PHASE
        if phase_two and self.grid.contains(-half, half):
            try:
                lo_omega, lo_rho = fringe.second_phase_contrast(omega, rho, (-half, half))
                self.summary['contrast'] = {'window': [-half, half], 'min_omega': lo_omega, 'min_rho': lo_rho}
            except InsufficientDataError as e:
                logger.warning('t=%g: %s', self.value, e)


def resolve_output_dir(cfg: ScenarioConfig, out: Path | None = None) -> Path:
    return out or cfg.output_dir or store.default_output_dir(cfg.name)


def run_scenario(cfg: ScenarioConfig, out: Path | None = None) -> RunSummary:
    out_dir = resolve_output_dir(cfg, out)
    out_dir.mkdir(parents=True, exist_ok=True)
    store.clear_failed(out_dir)

    def work(index: int) -> TimeResult:
        value = cfg.times[index]
        try:
            table, result = _TimeRun(cfg, index).run()
            table.save(out_dir / result.file)
        except FringeException as e:
            summary = {'t': cfg.time(value), 'value': value, 'error': str(e)}
            return TimeResult(value, cfg.file_name(value), summary, [f't={value:g}: {e}'])
        return result

    with ThreadPoolExecutor(max_workers=min(worker_count(), len(cfg.times))) as pool:
        results = list(pool.map(work, range(len(cfg.times))))

    failures = [f for r in results for f in r.failures]
    summary = {
        'name': cfg.name,
        'config': cfg.to_dict(),
        'status': 'FAILED' if failures else 'OK',
        'failures': failures,
        'times': [{'file': r.file, **r.summary} for r in results],
    }
    store.save_summary(out_dir, summary)
    if failures:
        store.mark_failed(out_dir, failures)
        for f in failures:
            logger.error('%s', f)
    logger.info('%s: %d profiles written to %s', cfg.name, len(results), out_dir)
    return RunSummary(out_dir, summary, failures)


def run_or_fail(cfg: ScenarioConfig, out: Path | None = None) -> RunSummary:
    result = run_scenario(cfg, out)
    if not result.ok:
        raise NumericFailure(f'{len(result.failures)} check(s) failed, see {result.out_dir / store.FAILED}')
    return result


@dataclass(frozen=True)
class BoundsReport:
    reports: list[schrodinger.DilationReport]

    @property
    def passed(self) -> bool:
        return all(r.holds for r in self.reports)

    def to_dict(self) -> dict[str, Any]:
        return {'passed': self.passed, 'pairs': [dict(vars(r), holds=r.holds) for r in self.reports]}


def check_bounds(cfg: ScenarioConfig, pairs: Iterable[tuple[float, float]]) -> BoundsReport:
    amp = cfg.slits.with_mode(Normalization.AMPLITUDE)
    reports = []
    for t, T in pairs:
        grid = cfg.grid.grid() if cfg.grid is not None else Grid.symmetric(GRID_HALF_WIDTH * t, 2 * GRID_STEP * t)
        report = schrodinger.dilation_check(amp, t, cfg.time(T), grid, cfg.se)
        status = 'ok' if report.holds else 'FAILED'
        logger.info('t=%g T=%g: sup %.6g <= %.6g %s', t, T, report.lhs_sup, report.rhs_bound, status)
        reports.append(report)
    return BoundsReport(reports)
