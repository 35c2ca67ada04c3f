from __future__ import annotations

import json
import math
import time

import pytest

from slit_fringe import scenario, store
from slit_fringe.core import Grid, standard_nlad_params, standard_slits
from slit_fringe.scenario import ScenarioConfig, check_bounds, from_dict, parse_config, run_or_fail, run_scenario
from slit_fringe.utils import (
    THREADS_ENV,
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    NumericFailure,
    worker_count,
)

TINY = {'name': 'tiny', 'grid': {'x_min': -20, 'x_max': 20, 'dx': 0.02}, 'times': [1]}


def test_empty_config_is_standard():
    cfg = parse_config('{}')
    assert cfg == ScenarioConfig()
    assert cfg.slits == standard_slits()
    assert cfg.nlad == standard_nlad_params()
    assert cfg.nlad.alpha == pytest.approx(1 / math.pi**3)
    assert cfg.time(1.0) == pytest.approx(1 / math.pi)
    assert cfg.file_name(0.25) == 'profile_t0.25over_pi.csv'


def test_plain_time_units():
    cfg = parse_config('{"pi_units": false, "times": [0.5]}')
    assert cfg.time(0.5) == 0.5
    assert cfg.file_name(0.5) == 'profile_t0.5.csv'


def test_other_slits_derive_levels():
    cfg = parse_config('{"slits": {"s": 2.0, "b": 0.25}}')
    assert cfg.slits.height == pytest.approx(1.0)
    assert cfg.nlad != standard_nlad_params()


@pytest.mark.parametrize(
    'text, field',
    [
        ('{"slits": {"b": -0.1}}', 'slits.b'),
        ('{"slitz": 1}', 'slitz'),
        ('{"slits": {"q": 1}}', 'slits.q'),
        ('{"times": [1, 2], "dilation_factors": [2]}', 'dilation_factors'),
        ('{"times": [2, 1]}', 'times'),
        ('{"grid": {"x_min": -1, "x_max": 1, "n": 11, "dx": 0.2}}', 'grid'),
        ('{"methods": ["euler"]}', 'methods'),
        ('{"tolerances": {"tail_eps": 0.5}}', 'tolerances.tail_eps'),
        ('{"pi_units": 1}', 'pi_units'),
        ('{"name": "../up"}', 'name'),
        ('[]', '(root)'),
    ],
)
def test_validation_errors(text, field):
    with pytest.raises(ConfigValidationError) as e:
        parse_config(text)
    assert e.value.field == field


def test_parse_error_position():
    with pytest.raises(ConfigParseError) as e:
        parse_config('{\n  "times": [1,, 2]\n}')
    assert e.value.line == 2
    assert e.value.column > 0
    with pytest.raises(ConfigParseError):
        parse_config(b'\xff')


def test_to_dict_reloads():
    cfg = parse_config(json.dumps({**TINY, 'methods': ['se'], 'extrema_window': [1, 5]}))
    assert from_dict(cfg.to_dict()) == cfg


def test_load_config(tmp_path):
    path = tmp_path / 'tiny.json'
    path.write_text(json.dumps(TINY))
    assert scenario.load_config(path).name == 'tiny'
    with pytest.raises(ConfigError):
        scenario.load_config(tmp_path / 'missing.json')


def test_builtin_scenarios():
    assert scenario.scenario_names() == ['first_phase', 'rho_snapshot', 'second_phase', 'single_level']
    cfg = scenario.load_scenario('second_phase')
    assert cfg.dilation_factors == (2.0, 3.0, 4.0, 6.0)
    assert scenario.load_scenario('single_level').nlad.max_shift == 1.0
    with pytest.raises(ConfigError):
        scenario.load_scenario('nope')


@pytest.mark.slow
def test_run_scenario(tmp_path):
    cfg = from_dict(TINY)
    result = run_scenario(cfg, tmp_path / 'a')
    assert result.ok
    csv_path = tmp_path / 'a' / 'profile_t1over_pi.csv'
    header = csv_path.read_text().splitlines()[0]
    assert header == 'x,rho_se,omega_nlad,log10_rho_se,log10_omega_nlad'
    summary = json.loads((tmp_path / 'a' / store.SUMMARY).read_text())
    assert summary['status'] == 'OK'
    assert not (tmp_path / 'a' / store.FAILED).exists()
    entry = summary['times'][0]
    assert entry['grid'] == [-20.0, 20.0, 2001]
    assert entry['dual_method']['sup_diff'] <= 1e-6
    assert entry['nlad_factorized']['mass'] == pytest.approx(entry['nlad_factorized']['window_mass'], abs=1e-6)
    assert len(entry['extrema']['omega_nlad']['minima']) >= 8
    assert 'similarity' in entry

    again = run_scenario(cfg, tmp_path / 'b')
    assert again.ok
    assert (tmp_path / 'b' / csv_path.name).read_bytes() == csv_path.read_bytes()


def test_se_only_columns(tmp_path):
    run_scenario(from_dict({**TINY, 'methods': ['se']}), tmp_path)
    table = store.ProfileTable.load(tmp_path / 'profile_t1over_pi.csv')
    assert table.header == ['x', 'rho_se', 'log10_rho_se']
    assert table.grid().n == 2001
    assert table.profile('rho_se').values.min() >= 0.0


@pytest.mark.slow
def test_dilated_column(tmp_path):
    cfg = from_dict(
        {
            'times': [2],
            'dilation_factors': [2],
            'methods': ['nlad_factorized'],
            'grid': {'x_min': -40, 'x_max': 40, 'dx': 0.04},
        }
    )
    result = run_scenario(cfg, tmp_path)
    assert result.ok
    table = store.ProfileTable.load(tmp_path / 'profile_t2over_pi.csv')
    assert 'omega_nlad_dilated' in table.header
    assert result.summary['times'][0]['dilation_factor'] == 2.0


def test_failed_checks_leave_marker(tmp_path, monkeypatch):
    cfg = from_dict({**TINY, 'methods': ['nlad_factorized'], 'grid': {'x_min': -10, 'x_max': 10, 'dx': 0.02}})
    monkeypatch.setattr(scenario, 'POSITIVITY_FLOOR', 1.0)
    result = run_scenario(cfg, tmp_path)
    assert not result.ok
    assert (tmp_path / store.FAILED).exists()
    assert json.loads((tmp_path / store.SUMMARY).read_text())['status'] == 'FAILED'
    with pytest.raises(NumericFailure):
        run_or_fail(cfg, tmp_path)

    monkeypatch.undo()
    assert run_scenario(cfg, tmp_path).ok
    assert not (tmp_path / store.FAILED).exists()


def test_output_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv('XDG_DATA_HOME', str(tmp_path / 'data'))
    cfg = ScenarioConfig(name='demo')
    assert scenario.resolve_output_dir(cfg) == tmp_path / 'data' / 'slit-fringe' / 'demo'
    assert scenario.resolve_output_dir(cfg, tmp_path / 'x') == tmp_path / 'x'
    cfg = from_dict({'output_dir': str(tmp_path / 'y')})
    assert scenario.resolve_output_dir(cfg) == tmp_path / 'y'


def test_check_bounds():
    report = check_bounds(ScenarioConfig(), [(1.0, 1.0), (2.0, 1.0)])
    assert report.passed
    assert [r.t for r in report.reports] == [1.0, 2.0]
    assert report.reports[0].lhs_sup == 0.0
    assert report.to_dict()['passed'] is True


def test_grid_scale_follows_model_time():
    plain = from_dict({'pi_units': False})
    assert plain.grid_for(0.25) == Grid.symmetric(40.0, 0.01)
    assert plain.grid_for(2 / math.pi).x_max == pytest.approx(80.0)
    assert plain.window_for(2 / math.pi) == pytest.approx((0.4, 17.6))
    scaled = ScenarioConfig()
    assert scaled.grid_for(1.0) == Grid.symmetric(40.0, 0.01)
    assert scaled.grid_for(2.0).x_max == pytest.approx(80.0)
    assert scaled.factor(6.0) == pytest.approx(plain.factor(6 / math.pi))


def test_failing_time_keeps_other_outputs(tmp_path):
    cfg = from_dict(
        {
            'pi_units': False,
            'times': [0.3, 60000],
            'methods': ['nlad_factorized'],
            'grid': {'x_min': -10, 'x_max': 10, 'dx': 0.02},
        }
    )
    result = run_scenario(cfg, tmp_path)
    assert not result.ok
    assert len(result.failures) == 1 and 't=60000' in result.failures[0]
    assert (tmp_path / 'profile_t0.3.csv').exists()
    assert not (tmp_path / 'profile_t60000.csv').exists()
    assert (tmp_path / store.FAILED).exists()
    summary = json.loads((tmp_path / store.SUMMARY).read_text())
    assert summary['status'] == 'FAILED'
    assert 'error' in summary['times'][1]
    assert 'error' not in summary['times'][0]


def test_worker_count(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, '3')
    assert worker_count() == 3
    for bad in ('0', '-2', 'four'):
        monkeypatch.setenv(THREADS_ENV, bad)
        with pytest.raises(ConfigError):
            worker_count()
    monkeypatch.delenv(THREADS_ENV)
    assert worker_count() >= 1


@pytest.mark.slow
def test_builtin_scenarios_end_to_end(tmp_path, monkeypatch):
    start = time.perf_counter()
    for name in scenario.scenario_names():
        result = run_scenario(scenario.load_scenario(name), tmp_path / name)
        assert result.ok, result.failures
        assert len(list((tmp_path / name).glob('profile_*.csv'))) == len(result.summary['times'])
    assert time.perf_counter() - start < 60.0

    monkeypatch.setenv(THREADS_ENV, '1')
    assert run_scenario(scenario.load_scenario('first_phase'), tmp_path / 'again').ok
    for path in sorted((tmp_path / 'first_phase').glob('*.csv')):
        assert (tmp_path / 'again' / path.name).read_bytes() == path.read_bytes()
