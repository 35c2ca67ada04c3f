from __future__ import annotations

import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator

THREADS_ENV = 'SLIT_FRINGE_THREADS'


class FringeException(Exception):
    pass


class DomainError(FringeException, ValueError):
    pass


class ParameterError(FringeException, ValueError):
    pass


class GridError(FringeException, ValueError):
    pass


class ResourceError(FringeException):
    pass


class InsufficientDataError(FringeException):
    pass


class NumericFailure(FringeException):
    pass


class ConfigError(FringeException):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, msg: str, line: int = 0, column: int = 0):
        super().__init__(f'{msg} (line {line}, column {column})' if line else msg)
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    def __init__(self, field: str, msg: str):
        super().__init__(f'{field}: {msg}')
        self.field = field


def check_finite(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise DomainError(f'{name} must be a real number, got {value!r}') from e
    if not math.isfinite(value):
        raise DomainError(f'{name} must be finite, got {value}')
    return value


def worker_count() -> int:
    'SLIT_FRINGE_THREADS or the available parallelism'
    if s := os.environ.get(THREADS_ENV):
        try:
            n = int(s)
        except ValueError as e:
            raise ConfigError(f'{THREADS_ENV}={s!r} is not an integer') from e
        if n < 1:
            raise ConfigError(f'{THREADS_ENV}={n} must be positive')
        return n
    if hasattr(os, 'sched_getaffinity'):
        return len(os.sched_getaffinity(0)) or 1
    return os.cpu_count() or 1


@contextmanager
def atomic_write(path: Path, newline: str | None = None) -> Iterator[IO[str]]:
    'write to a temp file in the same directory, rename over path on success'
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f'.{path.name}.', suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline=newline) as fp:
            yield fp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
