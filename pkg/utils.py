#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: utils.py
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np


LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class FlowCITError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigurationError(FlowCITError, ValueError):
    """Invalid configuration (layer arity, split counts, unknown model...)."""


class ArgumentError(FlowCITError, ValueError):
    """Invalid call arguments (empty batch, too few rows, steps < 1...)."""


class DimensionError(FlowCITError, ValueError):
    """Shape mismatch between matrices or between a matrix and a network."""


class DataError(FlowCITError, ValueError):
    """Unusable data: empty, non-finite, non-numeric or misaligned."""


class NumericError(FlowCITError, ArithmeticError):
    """Numerical failure; `step` is the integration step where it happened."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class DegenerateError(NumericError):
    """Arc-cosine kernel evaluated on two zero vectors with zero bandwidth."""


def with_context(err: FlowCITError, prefix: str) -> FlowCITError:
    """
    Return a copy of `err` (same class) whose message starts with `prefix`.

    Used to tag split / replication indices onto errors raised deep in the
    pipeline without losing the class the CLI maps to an exit code.
    """
    message = f"{prefix}: {err}"
    if isinstance(err, NumericError):
        return type(err)(message, step=err.step)
    return type(err)(message)


def as_matrix(
    values: Any,
    name: str = "matrix",
    error: type = DataError,
    allow_empty: bool = True,
) -> np.ndarray:
    """
    Coerce `values` to a 2-D float64 array and check every entry is finite.

    Parameters
    - values: array-like; 1-D input is read as a single column.
    - name: label used in error messages.
    - error: exception class raised on failure.
    - allow_empty: when False, zero rows is an error.

    Returns
    - np.ndarray of shape (rows, cols), dtype float64.
    """
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise error(f"{name}: not numeric ({exc})") from exc
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise error(f"{name}: expected a 2-D matrix, got {arr.ndim} dimensions")
    if not allow_empty and arr.shape[0] == 0:
        raise error(f"{name}: no rows")
    if arr.size and not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise error(
            f"{name}: non-finite value at row {bad[0]}, column {bad[1]}"
        )
    return arr


@dataclass
class DataTriplet:
    """
    An n-row dataset of (X, Y, Z) observation matrices.

    `truth` optionally carries generating parameters (e.g. the B matrices of
    a simulation model) so oracle runs can rebuild the exact transport.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    truth: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.x = as_matrix(self.x, "X")
        self.y = as_matrix(self.y, "Y")
        self.z = as_matrix(self.z, "Z")
        rows = {self.x.shape[0], self.y.shape[0], self.z.shape[0]}
        if len(rows) != 1:
            raise DataError(
                "X, Y and Z must have the same number of rows, got "
                f"{self.x.shape[0]}, {self.y.shape[0]} and {self.z.shape[0]}"
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dims(self) -> tuple:
        return (self.x.shape[1], self.y.shape[1], self.z.shape[1])

    def subset(self, idx: Sequence[int]) -> "DataTriplet":
        idx = np.asarray(idx, dtype=np.int64)
        return DataTriplet(self.x[idx], self.y[idx], self.z[idx], self.truth)


def derive_seed(master: int, *keys: int) -> int:
    """
    Derive a child seed from a master seed and integer keys.

    The derived value depends only on (master, keys), never on execution
    order, so parallel and serial runs draw identical streams.
    """
    seq = np.random.SeedSequence([int(master) % 2**63, *[int(k) for k in keys]])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def derive_rng(master: int, *keys: int) -> np.random.Generator:
    """Generator seeded by `derive_seed(master, *keys)`."""
    return np.random.default_rng(derive_seed(master, *keys))


def run_tasks(
    func: Callable[[Any], Any], items: Iterable[Any], workers: int = 1
) -> List[Any]:
    """
    Map `func` over `items`, preserving order.

    With workers > 1 tasks go to a process pool; `func` must be a
    module-level callable. Results land in input order so aggregation does
    not depend on scheduling.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def configure_logging(level: str = "INFO") -> None:
    """
    Install one stream handler on the root logger.

    Parameters
    - level: logging level name (DEBUG, INFO, WARNING, ERROR).
    """
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        raise ConfigurationError(f"unknown log level {level!r}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT, force=True)
