from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray
from xdg_base_dirs import xdg_data_home

from . import __project_name__
from .core import Grid, Profile
from .utils import DomainError, FringeException, GridError, atomic_write

COLUMNS = ('x', 'rho_se', 'omega_nlad', 'omega_nlad_dilated', 'log10_rho_se', 'log10_omega_nlad')
LOG_COLUMNS = {'log10_rho_se': 'rho_se', 'log10_omega_nlad': 'omega_nlad'}
LOG_FLOOR = -300.0
SUMMARY = 'summary.json'
FAILED = 'FAILED'


def default_output_dir(name: str) -> Path:
    return xdg_data_home() / __project_name__ / name


def log10_clipped(values: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.full(values.shape, LOG_FLOOR)
    pos = values > 0
    out[pos] = np.maximum(np.log10(values[pos]), LOG_FLOOR)
    return out


def _fmt(v: float) -> str:
    return '%.17g' % v  # pylint: disable=consider-using-f-string


@dataclass
class ProfileTable:
    x: NDArray[np.float64]
    columns: dict[str, NDArray[np.float64]] = field(default_factory=dict)

    def add(self, name: str, values: NDArray[np.float64]):
        if name not in COLUMNS or name == 'x':
            raise DomainError(f'unknown column {name!r}')
        if values.shape != self.x.shape:
            raise GridError(f'column {name}: {values.size} values for {self.x.size} rows')
        self.columns[name] = values
        if log := next((k for k, v in LOG_COLUMNS.items() if v == name), None):
            self.columns[log] = log10_clipped(values)

    @property
    def header(self) -> list[str]:
        return [c for c in COLUMNS if c == 'x' or c in self.columns]

    def grid(self) -> Grid:
        n = self.x.size
        if n < 2:
            raise GridError(f'{n} rows, need at least 2')
        grid = Grid(float(self.x[0]), float(self.x[-1]), n)
        if not np.allclose(self.x, grid.x, rtol=0, atol=1e-9 * grid.dx):
            raise GridError('x column is not uniformly spaced')
        return grid

    def profile(self, column: str, time: float = 0.0) -> Profile:
        if column not in self.columns:
            raise DomainError(f'no column {column!r}, have {", ".join(self.columns)}')
        return Profile(self.grid(), self.columns[column], time)

    def save(self, path: Path):
        header = self.header
        data = [self.x] + [self.columns[c] for c in header[1:]]
        with atomic_write(path, newline='') as fp:
            w = csv.writer(fp, lineterminator='\n')
            w.writerow(header)
            for row in zip(*data):
                w.writerow([_fmt(v) for v in row])

    @classmethod
    def load(cls, path: Path) -> ProfileTable:
        try:
            with open(path, encoding='utf-8', newline='') as fp:
                rows = list(csv.reader(fp))
        except OSError as e:
            raise FringeException(f'{path}: {e.strerror}') from e
        if not rows or rows[0][:1] != ['x']:
            raise DomainError(f'{path}: header must start with x')
        header = rows[0]
        if unknown := [c for c in header if c not in COLUMNS]:
            raise DomainError(f'{path}: unknown columns {unknown}')
        try:
            data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
        except ValueError as e:
            raise DomainError(f'{path}: {e}') from e
        if data.ndim != 2 or data.shape[1] != len(header):
            raise DomainError(f'{path}: ragged or empty table')
        table = cls(data[:, 0].copy())
        for k, name in enumerate(header[1:], start=1):
            table.columns[name] = data[:, k].copy()
        return table


def jsonable(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    return obj


def save_summary(out_dir: Path, summary: dict):
    with atomic_write(out_dir / SUMMARY) as fp:
        json.dump(jsonable(summary), fp, indent=2)
        fp.write('\n')


def mark_failed(out_dir: Path, reasons: list[str]):
    with atomic_write(out_dir / FAILED) as fp:
        fp.write(''.join(f'{r}\n' for r in reasons))


def clear_failed(out_dir: Path):
    (out_dir / FAILED).unlink(missing_ok=True)
