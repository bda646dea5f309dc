#!/usr/bin/env python
"""
Module miscellaneous utilities
"""
import os
import sys
import pathlib
import multiprocessing
from collections import namedtuple

import numpy as np
from scipy import stats


__all__ = ['compare_given_and_required', 'Singleton', 'say',
           'ConfigurationError', 'NumericalError', 'IntegrationError', 'ConvergenceError', 'SnapshotFormatError',
           'resolve_workers', 'parallel_map', 'batch_mean_stderr', 'FitResult', 'linear_fit', 'to_jsonable', 'phi1']


class ConfigurationError(ValueError):
    """
    Invalid grid or experiment configuration. Carries the dotted key path
    and, when known, the line of the JSON document it refers to.
    """
    def __init__(self, message, key=None, line=None) -> None:
        self.key = key
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(RuntimeError):
    pass


class IntegrationError(NumericalError):
    def __init__(self, message, time=None) -> None:
        self.time = time
        if time is not None:
            message = f"{message} (t={time:.6g})"
        super().__init__(message)


class ConvergenceError(NumericalError):
    pass


class SnapshotFormatError(ValueError):
    pass


# force printing to the terminal even if stdout was redirected
def say(text):
    text += ' '
    sys.stdout.write(text)
    sys.stdout.flush()
    if not sys.stdout.isatty():
        # output was redirected, but we still try to send the message to the terminal
        try:
            if pathlib.Path('/dev/tty').exists():
                with open('/dev/tty', 'w') as out:
                    out.write(text)
                    out.flush()
        except (OSError, PermissionError):
            # /dev/tty may not exist or may not be writable!
            pass


def compare_given_and_required(given, required=set(), optional=set(), error_message="Given configuration covers wrong set of keys", prefix=''):
    given = set(given)
    required = set(required)
    optional = set(optional)
    if given-optional != required:
        missing = required.difference(given)
        extra = given.difference(required.union(optional))
        dotted = lambda keys: {f"{prefix}{key}" for key in keys}
        key = sorted(dotted(missing) or dotted(extra))[0]
        missing = f"misses {dotted(missing)}" if missing else ""
        extra = f"misincludes {dotted(extra)}" if extra else ""
        raise ConfigurationError(f"{error_message}: {missing}{' & ' if missing and extra else ''}{extra}", key=key)


class Singleton(type):
    """
    Singleton metaclass. Directly taken from
    https://stackoverflow.com/questions/6760685/creating-a-singleton-in-python
    """
    _instances = {}
    def __call__(cls, *args, **kwargs):
        if cls not in cls._instances:
            cls._instances[cls] = super(Singleton, cls).__call__(*args, **kwargs)
        return cls._instances[cls]


def resolve_workers(workers=None, env_var='ANDERSON_PHI42_WORKERS'):
    if workers is None:
        workers = os.environ.get(env_var, 1)
    try:
        workers = int(workers)
    except (TypeError, ValueError):
        raise ConfigurationError(f"Worker count must be an integer, got {workers!r}", key='workers')
    if workers < 1:
        raise ConfigurationError(f"Worker count must be positive, got {workers}", key='workers')
    return workers


def parallel_map(func, items, workers=1):
    """
    Ordered map of func over items, in a process pool when workers > 1.
    Results come back in input order whatever the pool size.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    processes = min(workers, len(items))
    with multiprocessing.Pool(processes=processes) as pool:
        return pool.map(func, items, chunksize=max(1, len(items) // (4*processes)))


def batch_mean_stderr(values, batches=20):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError(f"At least 2 samples are needed for a standard error, got {values.size}")
    means = np.array([chunk.mean() for chunk in np.array_split(values, min(batches, values.size))])
    return float(values.mean()), float(means.std(ddof=1)/np.sqrt(len(means)))


FitResult = namedtuple('FitResult', ['slope', 'intercept', 'r_squared'])


def linear_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if len(x) < 2 or np.ptp(x) == 0:
        raise NumericalError(f"Degenerate regression with {len(x)} usable points")
    if np.ptp(y) == 0:
        return FitResult(0., float(y[0]), 1.)
    result = stats.linregress(x, y)
    return FitResult(float(result.slope), float(result.intercept), float(result.rvalue**2))


def phi1(x):
    """φ₁(x) = (1 − e^{−x})/x elementwise, with φ₁(0) = 1"""
    x = np.asarray(x, dtype=float)
    _small = np.abs(x) < 1e-8
    _safe = np.where(_small, 1., x)
    return np.where(_small, 1. - x/2, -np.expm1(-_safe)/_safe)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


if __name__ == '__main__':
    pass
