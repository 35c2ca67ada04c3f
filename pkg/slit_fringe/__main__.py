from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import NoReturn

from . import __project_name__, __version__, fringe, scenario, store
from .scenario import ScenarioConfig
from .utils import FringeException, NumericFailure, ResourceError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def parse_range(s: str) -> tuple[float, float]:
    'lo:hi'
    try:
        lo, hi = (float(v) for v in s.split(':'))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'expected lo:hi, got {s!r}') from e
    if not lo < hi:
        raise argparse.ArgumentTypeError(f'{s!r}: lo must be below hi')
    return lo, hi


def parse_pairs(s: str) -> list[tuple[float, float]]:
    't:T,t:T,...'
    pairs = []
    for item in s.split(','):
        try:
            t, T = (float(v) for v in item.split(':'))
        except ValueError as e:
            raise argparse.ArgumentTypeError(f'expected t:T, got {item!r}') from e
        pairs.append((t, T))
    return pairs


def _dump(obj):
    json.dump(store.jsonable(obj), sys.stdout, indent=2)
    sys.stdout.write('\n')


class Main:
    def __init__(self, args: argparse.Namespace):
        self.args = args

    def config(self) -> ScenarioConfig:
        if getattr(self.args, 'scenario', None):
            return scenario.load_scenario(self.args.scenario)
        if self.args.config:
            return scenario.load_config(self.args.config)
        return ScenarioConfig()

    def simulate(self) -> int:
        result = scenario.run_scenario(self.config(), self.args.out)
        _dump({'status': result.summary['status'], 'out_dir': str(result.out_dir), 'failures': result.failures})
        if not result.ok:
            raise NumericFailure(f'{len(result.failures)} check(s) failed')
        return EXIT_OK

    def extrema(self) -> int:
        table = store.ProfileTable.load(self.args.input)
        p = table.profile(self.args.column)
        report = fringe.find_extrema(p, self.args.window, self.args.noise_floor)
        out = {
            'column': self.args.column,
            'window': list(report.window),
            'minima': [list(e) for e in report.minima],
            'maxima': [list(e) for e in report.maxima],
        }
        if len(report.minima) >= 3:
            stats = fringe.spacing_stats(report)
            out['spacing'] = {'gaps': stats.gaps, 'mean': stats.mean, 'max_abs_dev': stats.max_abs_dev}
        _dump(out)
        return EXIT_OK

    def check_bounds(self) -> int:
        report = scenario.check_bounds(self.config(), self.args.pairs)
        _dump(report.to_dict())
        if not report.passed:
            raise NumericFailure('dilation bound violated')
        return EXIT_OK

    def compare(self) -> int:
        a = store.ProfileTable.load(self.args.a)
        b = store.ProfileTable.load(self.args.b)
        if self.args.column:
            columns = [self.args.column]
        else:
            columns = [c for c in a.columns if c in b.columns and c not in store.LOG_COLUMNS]
        out = {}
        for c in columns:
            sup, l1 = fringe.compare(a.profile(c), b.profile(c))
            out[c] = {'sup_diff': sup, 'l1_diff': l1}
        _dump(out)
        return EXIT_OK

    def scenarios(self) -> int:
        for name in scenario.scenario_names():
            print(name)
        return EXIT_OK


class ArgumentParser(argparse.ArgumentParser):
    'usage errors exit with EXIT_CONFIG'

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f'{self.prog}: error: {message}\n')


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog=__project_name__, description='two-slit SE and NLAD fringe simulations')
    parser.add_argument('-V', '--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='run a scenario, write CSV profiles and summary.json')
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument('--config', type=Path, help='scenario JSON file')
    g.add_argument('--scenario', help='built-in scenario name')
    p.add_argument('--out', type=Path, help='output directory')

    p = sub.add_parser('extrema', help='local minima and maxima of a CSV column')
    p.add_argument('--in', dest='input', type=Path, required=True, help='profile CSV')
    p.add_argument('--column', required=True, help='column name')
    p.add_argument('--window', type=parse_range, required=True, help='lo:hi (use --window=-a:b for negative lo)')
    p.add_argument('--noise-floor', type=float, default=fringe.DEFAULT_NOISE_FLOOR)

    p = sub.add_parser('check-bounds', help='space-time dilation bound of the SE density')
    p.add_argument('--config', type=Path, help='scenario JSON file (standard slits if omitted)')
    p.add_argument('--pairs', type=parse_pairs, required=True, help='t:T,... with t >= 1')

    p = sub.add_parser('compare', help='sup and L1 distances between two profile CSVs')
    p.add_argument('--a', type=Path, required=True)
    p.add_argument('--b', type=Path, required=True)
    p.add_argument('--column', help='column to compare (all shared columns if omitted)')

    sub.add_parser('scenarios', help='list built-in scenarios')
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.INFO if args.command == 'simulate' else logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)

    app = Main(args)
    try:
        return getattr(app, args.command.replace('-', '_'))()
    except (NumericFailure, ResourceError) as e:
        logger.error('%s', e)
        return EXIT_NUMERIC
    except FringeException as e:
        logger.error('%s', e)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
