#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: simlab.py
"""
Simulation lab: data generators for the benchmark models and a replication
engine producing type-I error / power tables and QQ data.

Model defaults (dims, n, hidden width, number of splits, psi grid) live in
simulation_models.yml next to this file.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

import logging
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml
from scipy.stats import kstest

from citest import TestConfig, flowcit
from flow import FlowConfig
from utils import (
    ArgumentError,
    ConfigurationError,
    DataTriplet,
    FlowCITError,
    derive_seed,
    run_tasks,
    with_context,
)


logger = logging.getLogger(__name__)

MODELS_PATH = Path(__file__).resolve().parent / "simulation_models.yml"


@lru_cache(maxsize=None)
def load_model_table(path: str = str(MODELS_PATH)) -> Dict[str, Dict[str, Any]]:
    """Read the simulation model table (model name -> defaults)."""
    try:
        with open(path, "r") as f:
            table = yaml.safe_load(f)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"model table not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"YAML syntax error in {path}: {exc}") from exc
    if not isinstance(table, dict) or not table:
        raise ConfigurationError(f"no models found in {path}")
    return table


def model_defaults(model: str) -> Dict[str, Any]:
    table = load_model_table()
    if model not in table:
        raise ConfigurationError(f"unknown model {model!r}; expected one of {sorted(table)}")
    return table[model]


@dataclass(frozen=True)
class SimSpec:
    """One simulation cell: model, setting, psi, dims, n, replications, seed."""

    model: str
    setting: Optional[int] = None
    psi: float = 0.0
    dims: Optional[Tuple[int, int, int]] = None
    n: Optional[int] = None
    reps: int = 200
    seed: int = 0

    def resolved(self) -> "SimSpec":
        """Fill dims / n from the model table and check the cell is valid."""
        defaults = model_defaults(self.model)
        dims = tuple(int(d) for d in (defaults["dims"] if self.dims is None else self.dims))
        if len(dims) != 3 or min(dims) < 1:
            raise ConfigurationError(f"dims must be three counts >= 1, got {dims}")
        if self.model != "convergence" and dims != tuple(defaults["dims"]):
            raise ConfigurationError(
                f"model {self.model} has fixed dims {tuple(defaults['dims'])}, got {dims}"
            )
        setting = self.setting
        if defaults["settings"]:
            setting = 1 if setting is None else int(setting)
            _check_setting(setting)
        else:
            setting = None
        if self.psi < 0:
            raise ConfigurationError(f"psi must be >= 0, got {self.psi}")
        if self.reps < 1:
            raise ConfigurationError(f"reps must be >= 1, got {self.reps}")
        n = int(defaults["n"] if self.n is None else self.n)
        if n < 4:
            raise ConfigurationError(f"n must be >= 4, got {n}")
        return replace(self, dims=dims, setting=setting, n=n)


@dataclass
class ExperimentResult:
    """Replicated p-values and the empirical rejection rate at alpha."""

    pvalues: List[float]
    seeds: List[int]
    alpha: float
    rejection_rate: float
    spec: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        """One row per replication plus a summary row."""
        rows = pd.DataFrame(
            {
                "replication": [str(i) for i in range(len(self.pvalues))],
                "seed": self.seeds,
                "p_value": self.pvalues,
                "reject": [int(p <= self.alpha) for p in self.pvalues],
            }
        )
        summary = pd.DataFrame(
            [{"replication": "summary", "seed": None, "p_value": None, "reject": self.rejection_rate}]
        )
        return pd.concat([rows, summary], ignore_index=True)


def _check_setting(setting: int) -> None:
    if setting not in (1, 2, 3, 4):
        raise ConfigurationError(f"setting must be 1..4, got {setting}")


def _sparse_normal(rng, shape, rows: int, cols: int) -> np.ndarray:
    # Normal(0, 1) in the leading rows x cols block, zero elsewhere
    out = np.zeros(shape)
    out[:rows, :cols] = rng.standard_normal((min(rows, shape[0]), min(cols, shape[1])))
    return out


def gen_convergence(dims: Sequence[int], n: int, seed: int) -> DataTriplet:
    """X = Z B1 + e_x, Y = Z B2 + e_y with fresh Gaussian B1, B2; H0 holds."""
    d_x, d_y, d_z = (int(d) for d in dims)
    rng = np.random.default_rng(seed)
    b1 = rng.standard_normal((d_z, d_x))
    b2 = rng.standard_normal((d_z, d_y))
    eps_x = rng.standard_normal((n, d_x))
    eps_y = rng.standard_normal((n, d_y))
    z = rng.standard_normal((n, d_z))
    return DataTriplet(z @ b1 + eps_x, z @ b2 + eps_y, z, truth={"B1": b1, "B2": b2})


def gen_univariate(setting: int, psi: float, n: int, seed: int) -> DataTriplet:
    """Univariate X, Y and two-dimensional Z; t3 errors for X in settings 3-4."""
    _check_setting(setting)
    rng = np.random.default_rng(seed)
    d_x, d_y, d_z = 1, 1, 2
    b1 = rng.standard_normal((d_z, d_x))
    b2 = rng.standard_normal((d_z, d_y))
    b3 = rng.standard_normal((d_x, d_y))
    z = rng.standard_normal((n, d_z))
    eps_y = rng.standard_normal((n, d_y))
    if setting in (1, 2):
        eps_x = rng.standard_normal((n, d_x))
    else:
        eps_x = rng.standard_t(3, size=(n, d_x))

    x = (np.cos(z @ b1) if setting == 4 else z @ b1) + eps_x
    if setting == 2:
        y = z @ b2 + np.exp(psi * x @ b3) + eps_y
    else:
        y = z @ b2 + psi * x @ b3 + eps_y
    return DataTriplet(x, y, z, truth={"B1": b1, "B2": b2, "B3": b3})


def gen_lowlow(setting: int, psi: float, n: int, seed: int) -> DataTriplet:
    """Three-dimensional X, Y, Z with linear, sine, square or absolute-value links."""
    _check_setting(setting)
    rng = np.random.default_rng(seed)
    d = 3
    b1, b2, b3 = (rng.standard_normal((d, d)) for _ in range(3))
    z = rng.standard_normal((n, d))
    eps_x = rng.standard_normal((n, d))
    eps_y = rng.standard_normal((n, d))

    x = ((z @ b1) ** 2 if setting == 3 else z @ b1) + eps_x
    base = np.sin(z @ b2) if setting == 2 else z @ b2
    link = np.abs(psi * x @ b3) if setting == 4 else psi * x @ b3
    return DataTriplet(x, base + link + eps_y, z, truth={"B1": b1, "B2": b2, "B3": b3})


def gen_lowhigh(setting: int, psi: float, n: int, seed: int) -> DataTriplet:
    """Five-dimensional X, Y with 50-dimensional Z and sparse or dense coefficients."""
    _check_setting(setting)
    rng = np.random.default_rng(seed)
    d_x, d_y, d_z = 5, 5, 50
    if setting == 1:
        b1 = _sparse_normal(rng, (d_z, d_x), 3, d_x)
        b2 = _sparse_normal(rng, (d_z, d_y), 3, d_y)
        b3 = rng.standard_normal((d_x, d_y))
    elif setting == 2:
        b1 = _sparse_normal(rng, (d_z, d_x), 3, 1)
        b2 = _sparse_normal(rng, (d_z, d_y), 3, 1)
        b3 = _sparse_normal(rng, (d_x, d_y), 3, 1)
    elif setting == 3:
        b1 = _sparse_normal(rng, (d_z, d_x), 2, d_x)
        b2 = _sparse_normal(rng, (d_z, d_y), 2, d_y)
        b3 = rng.standard_normal((d_x, d_y))
    else:
        b1 = rng.standard_normal((d_z, d_x))
        b2 = rng.standard_normal((d_z, d_y))
        b3 = rng.standard_normal((d_x, d_y))
    z = rng.standard_normal((n, d_z))
    eps_x = rng.standard_normal((n, d_x))
    eps_y = rng.standard_normal((n, d_y))

    x = (np.sin(z @ b1) if setting == 4 else z @ b1) + eps_x
    if setting == 2:
        y = (z @ b2) ** 2 + 4.0 * psi * x @ b3
    elif setting == 4:
        y = z @ b2 + np.abs(5.0 * psi * x @ b3)
    else:
        y = z @ b2 + psi * x @ b3
    return DataTriplet(x, y + eps_y, z, truth={"B1": b1, "B2": b2, "B3": b3})


def gen_highhigh(setting: int, psi: float, n: int, seed: int) -> DataTriplet:
    """50-dimensional X, Y, Z with row-sparse, block-sparse or Bernoulli-masked coefficients."""
    _check_setting(setting)
    rng = np.random.default_rng(seed)
    d = 50
    if setting in (1, 2):
        rows = 2 if setting == 1 else 1
        b1 = _sparse_normal(rng, (d, d), rows, d)
        b2 = _sparse_normal(rng, (d, d), rows, d)
        b3 = rng.standard_normal((d, d))
    elif setting == 3:
        b1, b2, b3 = (_sparse_normal(rng, (d, d), 3, 3) for _ in range(3))
    else:
        b1, b2, b3 = (
            rng.standard_normal((d, d)) * (rng.uniform(size=(d, d)) < 0.1) for _ in range(3)
        )
    z = rng.standard_normal((n, d))
    eps_x = rng.standard_normal((n, d))
    eps_y = rng.standard_normal((n, d))

    x = (np.cos(z @ b1) if setting == 4 else z @ b1) + eps_x
    if setting == 3:
        y = z @ b2 + np.abs(psi * x @ b3)
    elif setting == 4:
        y = np.sin(z @ b2) + psi * x @ b3
    else:
        y = z @ b2 + psi * x @ b3
    return DataTriplet(x, y + eps_y, z, truth={"B1": b1, "B2": b2, "B3": b3})


GENERATORS = {
    "univariate": gen_univariate,
    "low-low": gen_lowlow,
    "low-high": gen_lowhigh,
    "high-high": gen_highhigh,
}


def generate(spec: SimSpec, seed: int) -> DataTriplet:
    """Draw one dataset for a (resolved) simulation cell."""
    spec = spec.resolved()
    if spec.model == "convergence":
        return gen_convergence(spec.dims, spec.n, seed)
    return GENERATORS[spec.model](spec.setting, spec.psi, spec.n, seed)


def default_test_config(model: str, **overrides) -> TestConfig:
    """TestConfig with the model's hidden width and split count; overrides win."""
    defaults = model_defaults(model)
    flow_overrides = {k: overrides.pop(k) for k in list(overrides) if k in FlowConfig.__dataclass_fields__}
    flow = FlowConfig(**{"hidden_width": int(defaults["hidden_width"]), **flow_overrides})
    return TestConfig(**{"m": int(defaults["m"]), "flow": flow, **overrides})


def _run_replication(task) -> float:
    spec, cfg, rep, rep_seed = task
    try:
        data = generate(spec, derive_seed(rep_seed, 0))
        report = flowcit(data, replace(cfg, seed=derive_seed(rep_seed, 1), workers=1))
    except FlowCITError as err:
        raise with_context(err, f"replication {rep}") from err
    logger.info("replication %d/%d: p=%.4f", rep + 1, spec.reps, report.combined_pvalue)
    return report.combined_pvalue


def run_experiment(spec: SimSpec, cfg: TestConfig, alpha: float = 0.05) -> ExperimentResult:
    """
    Replicate a simulation cell: fresh data and a FlowCIT run per replication.

    Replication seeds derive from spec.seed; replications run on cfg.workers
    processes and the result does not depend on that number.
    """
    spec = spec.resolved()
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    cfg = cfg.validate()
    seeds = [derive_seed(spec.seed, rep) for rep in range(spec.reps)]
    tasks = [(spec, cfg, rep, seed) for rep, seed in enumerate(seeds)]
    pvalues = [float(p) for p in run_tasks(_run_replication, tasks, cfg.workers)]
    rate = float(np.mean([p <= alpha for p in pvalues]))
    logger.info(
        "%s setting=%s psi=%g n=%d: rejection rate %.3f over %d replications",
        spec.model, spec.setting, spec.psi, spec.n, rate, spec.reps,
    )
    echo = asdict(spec)
    echo["dims"] = list(spec.dims)
    return ExperimentResult(pvalues=pvalues, seeds=seeds, alpha=alpha, rejection_rate=rate, spec=echo)


def run_power_curve(
    spec: SimSpec, psis: Optional[Sequence[float]], cfg: TestConfig, alpha: float = 0.05
) -> pd.DataFrame:
    """Rejection rate for each psi (default grid from the model table)."""
    if psis is None:
        psis = model_defaults(spec.model)["psi_grid"]
    cfg = cfg.validate()
    rows = []
    for psi in psis:
        result = run_experiment(replace(spec, psi=float(psi)), cfg, alpha)
        rows.append(
            {
                "model": spec.model,
                "setting": result.spec["setting"],
                "psi": float(psi),
                "reps": len(result.pvalues),
                "measure": cfg.measure.value,
                "direction": cfg.direction.value,
                "rejection_rate": result.rejection_rate,
            }
        )
    return pd.DataFrame(rows)


def qq_data(ps: Sequence[float]) -> List[Tuple[float, float]]:
    """Sorted p-values paired with uniform quantiles (i - 0.5) / N."""
    arr = np.sort(np.asarray(list(ps), dtype=np.float64))
    if arr.size == 0:
        raise ArgumentError("qq_data needs at least one p-value")
    theory = (np.arange(1, arr.size + 1) - 0.5) / arr.size
    return list(zip(theory.tolist(), arr.tolist()))


def ks_statistic(ps: Sequence[float]) -> float:
    """Kolmogorov-Smirnov distance between the p-values and Uniform(0, 1)."""
    arr = np.asarray(list(ps), dtype=np.float64)
    if arr.size == 0:
        raise ArgumentError("ks_statistic needs at least one p-value")
    return float(kstest(arr, "uniform").statistic)
