#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: oracle.py
"""
Ground-truth references for validation.

Closed-form Gaussian transport
- For side = m + eps with eps ~ N(0, 1) independent of the condition and m
  the conditional mean, the rectified-flow velocity is
      v(t, x, m) = m + (2t - 1)(x - t m) / ((1 - t)^2 + t^2)
  and the reverse map (t = 1 -> t = 0) is x - m. See docs/gaussian_oracle.md.

Brute-force statistics
- Literal nested-loop evaluation of S1 + S2 - 2 S3 for distance covariance
  and for the arc-cosine (improved projection) covariance. O(n^3) pure
  Python; references for the vectorized versions in depmeasure.py.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

import math
import statistics
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from depmeasure import SIGMA2_FLOOR
from utils import ArgumentError, as_matrix


def gaussian_velocity(t, x, z):
    """Closed-form velocity at time t for side = z + N(0, 1); broadcasts."""
    t = np.asarray(t, dtype=np.float64)
    return z + (2.0 * t - 1.0) * (x - t * z) / ((1.0 - t) ** 2 + t**2)


def gaussian_transport(x, z):
    """Closed-form latent of x given conditional mean z."""
    return np.subtract(x, z)


@dataclass
class GaussianOracleField:
    """
    Exact velocity field for side = Z @ coef + eps, eps ~ N(0, I).

    Coordinates of the side variable are independent given Z, so each one
    follows `gaussian_velocity` with its own conditional mean.
    """

    coef: np.ndarray

    def __post_init__(self) -> None:
        self.coef = np.atleast_2d(np.asarray(self.coef, dtype=np.float64))

    def __call__(self, t, x, z):
        return gaussian_velocity(t, x, np.asarray(z, dtype=np.float64) @ self.coef)

    def transport(self, x, z):
        return gaussian_transport(x, np.asarray(z, dtype=np.float64) @ self.coef)


def _rows(M) -> List[List[float]]:
    return as_matrix(M, "matrix").tolist()


def _check_rows(U, V):
    u, v = _rows(U), _rows(V)
    if len(u) != len(v):
        raise ArgumentError(f"row counts differ: {len(u)} vs {len(v)}")
    if len(u) < 2:
        raise ArgumentError("need at least 2 rows")
    return u, v


def _literal_v_statistic(a: List[List[float]], b: List[List[float]]) -> float:
    n = len(a)
    s1 = 0.0
    for k in range(n):
        for l in range(n):
            s1 += a[k][l] * b[k][l]
    s1 /= n * n

    sum_a = 0.0
    for k in range(n):
        for l in range(n):
            sum_a += a[k][l]
    sum_b = 0.0
    for k in range(n):
        for l in range(n):
            sum_b += b[k][l]
    s2 = (sum_a / (n * n)) * (sum_b / (n * n))

    s3 = 0.0
    for k in range(n):
        for l in range(n):
            for m in range(n):
                s3 += a[k][l] * b[k][m]
    s3 /= n**3
    return s1 + s2 - 2.0 * s3


def _kernel_matrix(rows: List[List[float]], kernel: Callable) -> List[List[float]]:
    return [[kernel(r, s) for s in rows] for r in rows]


def brute_dcov2(U, V) -> float:
    """S1 + S2 - 2 S3 with Euclidean distances, by literal loops."""
    u, v = _check_rows(U, V)
    return _literal_v_statistic(_kernel_matrix(u, math.dist), _kernel_matrix(v, math.dist))


def _literal_arccos(sigma2: float):
    def kernel(r, s):
        num = sigma2 + sum(a * b for a, b in zip(r, s))
        den = math.sqrt((sigma2 + sum(a * a for a in r)) * (sigma2 + sum(b * b for b in s)))
        return math.acos(min(1.0, max(-1.0, num / den)))

    return kernel


def _literal_sigma2(rows: List[List[float]]) -> float:
    return max(statistics.median(sum(a * a for a in r) for r in rows), SIGMA2_FLOOR)


def brute_ipcov2(U, V) -> float:
    """S1 + S2 - 2 S3 with the arc-cosine kernel and per-variable median bandwidth."""
    u, v = _check_rows(U, V)
    a = _kernel_matrix(u, _literal_arccos(_literal_sigma2(u)))
    b = _kernel_matrix(v, _literal_arccos(_literal_sigma2(v)))
    return _literal_v_statistic(a, b)
