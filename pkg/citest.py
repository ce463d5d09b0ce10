#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: citest.py
"""
FlowCIT pipeline: split, learn both transports on the training fold, map
the test fold to latents, run a permutation independence test on the
latents, and combine split-wise p-values with the Cauchy combination.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import cauchy

from depmeasure import MeasureKind, centered_cov2, centered_kernel, correlation_ratio
from flow import FlowConfig, TransportOutput, fit_velocity, transport_dataset
from oracle import GaussianOracleField
from utils import (
    ArgumentError,
    ConfigurationError,
    DataTriplet,
    DimensionError,
    FlowCITError,
    as_matrix,
    derive_rng,
    derive_seed,
    run_tasks,
    with_context,
)


logger = logging.getLogger(__name__)

P_CLAMP = 1e-10


class Direction(str, Enum):
    """DC1 tests eta against (xi, Z); DC2 tests xi against (eta, Z)."""

    DC1 = "dc1"
    DC2 = "dc2"

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "")
        for member in cls:
            if member.value == key:
                return member
        raise ArgumentError(f"unknown direction {value!r}; expected dc1 or dc2")


@dataclass
class SplitPlan:
    """m disjoint test folds of size n2; each split trains on the complement."""

    n: int
    n2: int
    m: int
    test_folds: List[np.ndarray]

    def train_indices(self, k: int) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n), self.test_folds[k])


@dataclass(frozen=True)
class TestConfig:
    """Full configuration of one FlowCIT run."""

    __test__ = False

    B: int = 100
    n2: Optional[int] = None
    m: int = 1
    measure: MeasureKind = MeasureKind.DISTANCE_CORRELATION
    direction: Direction = Direction.DC1
    flow: FlowConfig = field(default_factory=FlowConfig)
    seed: int = 0
    workers: int = 1
    oracle: bool = False

    def validate(self) -> "TestConfig":
        if self.B < 1:
            raise ConfigurationError(f"B must be >= 1, got {self.B}")
        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")
        if self.n2 is not None and self.n2 < 2:
            raise ConfigurationError(f"n2 must be >= 2, got {self.n2}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        self.flow.validate()
        return replace(
            self,
            measure=MeasureKind.parse(self.measure),
            direction=Direction.parse(self.direction),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Flat echo: test fields plus the flow fields (the flow seed is derived)."""
        out = {k: v for k, v in asdict(self).items() if k != "flow"}
        out["measure"] = MeasureKind.parse(self.measure).value
        out["direction"] = Direction.parse(self.direction).value
        out.update({k: v for k, v in asdict(self.flow).items() if k != "seed"})
        return out


@dataclass
class TestReport:
    """Per-split statistics and p-values, the combined p-value, and the config echo."""

    __test__ = False

    statistics: List[float]
    pvalues: List[float]
    combined_pvalue: float
    config: Dict[str, Any]
    seed: int
    n: int
    n2: int
    m: int
    test_folds: List[List[int]] = field(default_factory=list)

    def reject(self, alpha: float) -> bool:
        return self.combined_pvalue <= alpha

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def default_n2(n: int) -> int:
    """floor(4 sqrt(n)) clamped to [2, n - 2]."""
    if n < 4:
        raise ArgumentError(f"need n >= 4 to split, got {n}")
    return min(max(math.isqrt(16 * n), 2), n - 2)


def make_splits(n: int, n2: int, m: int, seed: int) -> SplitPlan:
    """Draw m disjoint random test folds of exactly n2 indices."""
    if n2 < 2:
        raise ConfigurationError(f"n2 must be >= 2, got {n2}")
    if n2 >= n:
        raise ConfigurationError(f"n2={n2} leaves no training rows for n={n}")
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    if m > n // n2:
        raise ConfigurationError(
            f"m={m} splits requested but only floor(n/n2) = {n // n2} disjoint folds "
            f"of size {n2} fit in n={n}"
        )
    perm = np.random.default_rng(seed).permutation(n)
    folds = [np.sort(perm[k * n2 : (k + 1) * n2]) for k in range(m)]
    return SplitPlan(n=n, n2=n2, m=m, test_folds=folds)


def pair_uv(t: TransportOutput, z_fold, direction: Direction) -> Tuple[np.ndarray, np.ndarray]:
    """DC1: (eta, [xi | Z]); DC2: (xi, [eta | Z])."""
    z_fold = as_matrix(z_fold, "Z fold", error=DimensionError)
    rows = {t.xi_hat.shape[0], t.eta_hat.shape[0], z_fold.shape[0]}
    if len(rows) != 1:
        raise DimensionError(
            f"row counts differ: xi {t.xi_hat.shape[0]}, eta {t.eta_hat.shape[0]}, "
            f"Z {z_fold.shape[0]}"
        )
    if Direction.parse(direction) is Direction.DC1:
        return t.eta_hat, np.hstack([t.xi_hat, z_fold])
    return t.xi_hat, np.hstack([t.eta_hat, z_fold])


def _count_exceedances(task) -> int:
    # one block of permutation replicates; replicate b always uses stream (seed, b)
    a, b, uu, vv, stat, seed, reps = task
    n = a.shape[0]
    exceed = 0
    for rep in reps:
        perm = derive_rng(seed, int(rep)).permutation(n)
        if correlation_ratio(centered_cov2(a, b[np.ix_(perm, perm)]), uu, vv) >= stat:
            exceed += 1
    return exceed


def permutation_pvalue(
    U, V, B: int, kind: MeasureKind, seed: int, workers: int = 1
) -> Tuple[float, float]:
    """
    Observed statistic and permutation p-value (1/B) sum 1(T_b >= T).

    Rows of V are permuted; the permuted statistic reuses the centered
    kernel matrix of V with rows and columns reordered. With workers > 1 the
    B replicates are split into contiguous blocks on a process pool; the
    p-value is the same for any worker count.
    """
    if B < 1:
        raise ArgumentError(f"B must be >= 1, got {B}")
    U = as_matrix(U, "U", error=ArgumentError)
    V = as_matrix(V, "V", error=ArgumentError)
    if U.shape[0] != V.shape[0]:
        raise DimensionError(f"U has {U.shape[0]} rows, V has {V.shape[0]}")
    if U.shape[0] < 2:
        raise ArgumentError(f"need at least 2 rows, got {U.shape[0]}")

    a = centered_kernel(U, kind)
    b = centered_kernel(V, kind)
    uu, vv = centered_cov2(a, a), centered_cov2(b, b)
    if uu <= 0.0 or vv <= 0.0:
        logger.warning("constant sample in the independence test; statistic is 0, p = 1")
        return 0.0, 1.0

    stat = correlation_ratio(centered_cov2(a, b), uu, vv)
    blocks = np.array_split(np.arange(B), max(1, min(workers, B)))
    tasks = [(a, b, uu, vv, stat, seed, block) for block in blocks]
    exceed = sum(run_tasks(_count_exceedances, tasks, workers))
    return stat, exceed / B


def cauchy_combine(ps: Sequence[float]) -> float:
    """Cauchy combination of p-values from disjoint folds."""
    arr = np.asarray(list(ps), dtype=np.float64)
    if arr.size == 0:
        raise ArgumentError("cannot combine an empty list of p-values")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ArgumentError(f"p-values must lie in [0, 1], got {arr.tolist()}")
    arr = np.clip(arr, P_CLAMP, 1.0 - P_CLAMP)
    stat = np.mean(np.tan((0.5 - arr) * np.pi))
    return float(cauchy.sf(stat))


def _fields_for_split(train: DataTriplet, cfg: TestConfig, k: int):
    if cfg.oracle:
        if "B1" not in train.truth or "B2" not in train.truth:
            raise ConfigurationError(
                "oracle mode needs data generated with known B1/B2 (convergence model)"
            )
        return GaussianOracleField(train.truth["B1"]), GaussianOracleField(train.truth["B2"])
    flow_x = replace(cfg.flow, seed=derive_seed(cfg.seed, 2, k, 0))
    flow_y = replace(cfg.flow, seed=derive_seed(cfg.seed, 2, k, 1))
    return fit_velocity(train.x, train.z, flow_x), fit_velocity(train.y, train.z, flow_y)


def _run_split(task) -> Tuple[float, float]:
    data, cfg, plan, k, perm_workers = task
    try:
        test = data.subset(plan.test_folds[k])
        train = data.subset(plan.train_indices(k))
        field_x, field_y = _fields_for_split(train, cfg, k)
        latents = transport_dataset(field_x, field_y, test, cfg.flow.ode_steps)
        U, V = pair_uv(latents, test.z, cfg.direction)
        stat, p = permutation_pvalue(
            U, V, cfg.B, cfg.measure, derive_seed(cfg.seed, 1, k), workers=perm_workers
        )
    except FlowCITError as err:
        raise with_context(err, f"split {k}") from err
    logger.info("split %d: T=%.6f p=%.3f", k, stat, p)
    return stat, p


def flowcit(data: DataTriplet, cfg: TestConfig) -> TestReport:
    """
    Test X independent of Y given Z.

    Parameters
    - data: the (X, Y, Z) sample.
    - cfg: TestConfig; n2 defaults to floor(4 sqrt(n)).

    Returns
    - TestReport with per-split (T, p), the Cauchy-combined p-value and the
      configuration echo.
    """
    cfg = cfg.validate()
    if data.n < 4:
        raise ArgumentError(f"need at least 4 rows, got {data.n}")
    n2 = cfg.n2 if cfg.n2 is not None else default_n2(data.n)
    plan = make_splits(data.n, n2, cfg.m, derive_seed(cfg.seed, 0))
    logger.info(
        "n=%d dims=%s: %d disjoint test fold(s) of %d, training on %d rows each",
        data.n, data.dims, plan.m, plan.n2, data.n - plan.n2,
    )

    # workers go to the splits, or to the permutations of a single split
    perm_workers = cfg.workers if plan.m == 1 else 1
    tasks = [(data, cfg, plan, k, perm_workers) for k in range(plan.m)]
    results = run_tasks(_run_split, tasks, cfg.workers)
    stats = [float(s) for s, _ in results]
    pvalues = [float(p) for _, p in results]
    combined = cauchy_combine(pvalues)
    logger.info("combined p-value %.4f over %d split(s)", combined, plan.m)
    return TestReport(
        statistics=stats,
        pvalues=pvalues,
        combined_pvalue=combined,
        config=cfg.to_dict(),
        seed=cfg.seed,
        n=data.n,
        n2=plan.n2,
        m=plan.m,
        test_folds=[fold.tolist() for fold in plan.test_folds],
    )
