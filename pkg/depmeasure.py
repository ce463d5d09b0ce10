#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: depmeasure.py
"""
Sample dependence measures: distance correlation and improved projection
correlation (arc-cosine kernel).

Both are V-statistics S1 + S2 - 2 S3 over a pairwise kernel matrix. Here they
are computed in the equivalent double-centered form (1/n^2) sum A_ij B_ij;
oracle.py evaluates S1, S2 and S3 literally for cross-checks.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from utils import ArgumentError, DegenerateError, DimensionError, as_matrix

SIGMA2_FLOOR = 1e-8


class MeasureKind(str, Enum):
    DISTANCE_CORRELATION = "dc"
    IMPROVED_PROJECTION_CORRELATION = "ipc"

    @classmethod
    def parse(cls, value) -> "MeasureKind":
        if isinstance(value, cls):
            return value
        aliases = {
            "dc": cls.DISTANCE_CORRELATION,
            "dcor": cls.DISTANCE_CORRELATION,
            "distance-correlation": cls.DISTANCE_CORRELATION,
            "ipc": cls.IMPROVED_PROJECTION_CORRELATION,
            "improved-projection-correlation": cls.IMPROVED_PROJECTION_CORRELATION,
        }
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ArgumentError(
                f"unknown measure {value!r}; expected one of {sorted(aliases)}"
            ) from None


@dataclass
class CenteredDistances:
    """Doubly centered n x n kernel matrix: rows and columns sum to zero."""

    A: np.ndarray
    n: int


def pairwise_dist(M) -> np.ndarray:
    """Euclidean distance matrix between the rows of M."""
    M = as_matrix(M, "M", error=ArgumentError, allow_empty=False)
    return cdist(M, M)


def double_center(D) -> CenteredDistances:
    """A_ij = D_ij - rowmean_i - colmean_j + grandmean."""
    D = as_matrix(D, "D", error=ArgumentError)
    A = D - D.mean(axis=1, keepdims=True) - D.mean(axis=0, keepdims=True) + D.mean()
    return CenteredDistances(A=A, n=D.shape[0])


def _check_pair(U, V):
    U = as_matrix(U, "U", error=ArgumentError)
    V = as_matrix(V, "V", error=ArgumentError)
    if U.shape[0] != V.shape[0]:
        raise DimensionError(f"U has {U.shape[0]} rows, V has {V.shape[0]}")
    if U.shape[0] < 2:
        raise ArgumentError(f"need at least 2 rows, got {U.shape[0]}")
    return U, V


def centered_cov2(A: np.ndarray, B: np.ndarray) -> float:
    """(1/n^2) sum A_ij B_ij for doubly centered A, B."""
    return float(np.mean(A * B))


def correlation_ratio(cross: float, uu: float, vv: float) -> float:
    """cross / sqrt(uu * vv), or 0 when either sample is constant."""
    if uu <= 0.0 or vv <= 0.0:
        return 0.0
    return float(cross / np.sqrt(uu * vv))


def dcov2(U, V) -> float:
    """Squared sample distance covariance (V-statistic)."""
    U, V = _check_pair(U, V)
    return centered_cov2(double_center(pairwise_dist(U)).A, double_center(pairwise_dist(V)).A)


def dcorr2(U, V) -> float:
    """Squared sample distance correlation; 0 if U or V is constant."""
    U, V = _check_pair(U, V)
    A = double_center(pairwise_dist(U)).A
    B = double_center(pairwise_dist(V)).A
    return correlation_ratio(centered_cov2(A, B), centered_cov2(A, A), centered_cov2(B, B))


def arccos_kernel(u, w, sigma2: float) -> float:
    """
    arccos((s + u.w) / sqrt((s + u.u)(s + w.w))) with s = sigma2.

    The argument is clamped to [-1, 1] so u == w gives exactly 0.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if u.shape != w.shape:
        raise DimensionError(f"vector lengths differ: {u.size} vs {w.size}")
    if sigma2 < 0:
        raise ArgumentError(f"sigma2 must be >= 0, got {sigma2}")
    den = np.sqrt((sigma2 + u @ u) * (sigma2 + w @ w))
    if den == 0.0:
        raise DegenerateError("arc-cosine kernel undefined for zero vectors with sigma2 = 0")
    return float(np.arccos(np.clip((sigma2 + u @ w) / den, -1.0, 1.0)))


def median_sigma2(M: np.ndarray) -> float:
    """Bandwidth: median of the squared row norms, floored."""
    return max(float(np.median(np.sum(M * M, axis=1))), SIGMA2_FLOOR)


def arccos_gram(M, sigma2: float) -> np.ndarray:
    """Arc-cosine kernel between all pairs of rows of M."""
    M = as_matrix(M, "M", error=ArgumentError)
    norms = np.sum(M * M, axis=1)
    # inner products by polarization so identical rows give an exact 1
    inner = 0.5 * (norms[:, None] + norms[None, :] - cdist(M, M, "sqeuclidean"))
    den = np.sqrt(np.outer(sigma2 + norms, sigma2 + norms))
    if np.any(den == 0.0):
        raise DegenerateError("arc-cosine kernel undefined for zero vectors with sigma2 = 0")
    return np.arccos(np.clip((sigma2 + inner) / den, -1.0, 1.0))


def _ipc_centered(M: np.ndarray) -> np.ndarray:
    return double_center(arccos_gram(M, median_sigma2(M))).A


def ipcov2(U, V) -> float:
    """Squared improved projection covariance (arc-cosine V-statistic)."""
    U, V = _check_pair(U, V)
    return centered_cov2(_ipc_centered(U), _ipc_centered(V))


def ipcorr2(U, V) -> float:
    """Squared improved projection correlation; 0 if U or V is constant."""
    U, V = _check_pair(U, V)
    A, B = _ipc_centered(U), _ipc_centered(V)
    return correlation_ratio(centered_cov2(A, B), centered_cov2(A, A), centered_cov2(B, B))


def centered_kernel(M, kind: MeasureKind) -> np.ndarray:
    """Doubly centered kernel matrix of M for the chosen measure."""
    kind = MeasureKind.parse(kind)
    M = as_matrix(M, "M", error=ArgumentError)
    if kind is MeasureKind.DISTANCE_CORRELATION:
        return double_center(pairwise_dist(M)).A
    return _ipc_centered(M)


def measure(U, V, kind: MeasureKind) -> float:
    """Dispatch to dcorr2 or ipcorr2."""
    kind = MeasureKind.parse(kind)
    if kind is MeasureKind.DISTANCE_CORRELATION:
        return dcorr2(U, V)
    return ipcorr2(U, V)
