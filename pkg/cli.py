#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: cli.py
"""
Command-line interface.

Subcommands
- test: run FlowCIT on user CSVs (X, Y, Z) and write a JSON report plus a
  Markdown companion.
- simulate: replicate one simulation cell and write per-replication p-values.
- qq: uniform QQ pairs and the KS statistic for a p-value file or a cell.
- power: rejection rate over a psi grid.

Exit codes: 0 success, 2 configuration/argument error, 3 data error,
4 numeric failure. See docs/report_schema.md.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

import argparse
import datetime
import json
import logging
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from citest import TestConfig, flowcit
from flow import FlowConfig
from report_utils import decision_text, render_markdown_report
from simlab import (
    SimSpec,
    default_test_config,
    ks_statistic,
    qq_data,
    run_experiment,
    run_power_curve,
)
from utils import (
    ConfigurationError,
    DataError,
    DataTriplet,
    DimensionError,
    FlowCITError,
    NumericError,
    configure_logging,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

SUBCOMMANDS = ("test", "simulate", "qq", "power")


@dataclass
class RunConfig:
    """
    Every setting a subcommand can take. Flags override a config file,
    which overrides these defaults.

    `hidden_width` and `m` left as None resolve to 32 and 1 for `test`, and
    to the model table's values for the simulation subcommands.
    """

    subcommand: str = "test"
    x: Optional[str] = None
    y: Optional[str] = None
    z: Optional[str] = None
    header: bool = False
    pvalues: Optional[str] = None
    B: int = 100
    n2: Optional[int] = None
    m: Optional[int] = None
    measure: str = "dc"
    direction: str = "dc1"
    ode_steps: int = 100
    hidden_width: Optional[int] = None
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-3
    min_steps: int = 4000
    final_lr_fraction: float = 0.1
    resample_noise_each_epoch: bool = True
    seed: int = 0
    alpha: float = 0.05
    output: Optional[str] = None
    workers: int = 1
    oracle: bool = False
    model: Optional[str] = None
    setting: Optional[int] = None
    psi: float = 0.0
    psis: Optional[List[float]] = None
    dims: Optional[List[int]] = None
    n: Optional[int] = None
    reps: int = 200
    log_level: str = "INFO"

    @classmethod
    def from_sources(cls, file_values: Dict[str, Any], flag_values: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**{**file_values, **flag_values})
        if cfg.subcommand not in SUBCOMMANDS:
            raise ConfigurationError(f"unknown subcommand {cfg.subcommand!r}")
        if not 0.0 < cfg.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {cfg.alpha}")
        return cfg

    def flow_fields(self) -> Dict[str, Any]:
        return {
            "ode_steps": self.ode_steps,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "min_steps": self.min_steps,
            "final_lr_fraction": self.final_lr_fraction,
            "resample_noise_each_epoch": self.resample_noise_each_epoch,
        }

    def test_config(self) -> TestConfig:
        """TestConfig for user data (`test`)."""
        return TestConfig(
            B=self.B,
            n2=self.n2,
            m=1 if self.m is None else self.m,
            measure=self.measure,
            direction=self.direction,
            flow=FlowConfig(
                hidden_width=32 if self.hidden_width is None else self.hidden_width,
                **self.flow_fields(),
            ),
            seed=self.seed,
            workers=self.workers,
            oracle=self.oracle,
        ).validate()

    def sim_test_config(self) -> TestConfig:
        """TestConfig for simulation cells: model defaults unless set here."""
        self._require_model()
        overrides = {
            "B": self.B,
            "n2": self.n2,
            "measure": self.measure,
            "direction": self.direction,
            "workers": self.workers,
            "oracle": self.oracle,
            **self.flow_fields(),
        }
        if self.m is not None:
            overrides["m"] = self.m
        if self.hidden_width is not None:
            overrides["hidden_width"] = self.hidden_width
        return default_test_config(self.model, **overrides).validate()

    def sim_spec(self) -> SimSpec:
        self._require_model()
        return SimSpec(
            model=self.model,
            setting=self.setting,
            psi=float(self.psi),
            dims=tuple(self.dims) if self.dims else None,
            n=self.n,
            reps=self.reps,
            seed=self.seed,
        ).resolved()

    def _require_model(self) -> None:
        if not self.model:
            raise ConfigurationError(f"{self.subcommand} needs --model")


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a flat `key: value` YAML file.

    A JSON test report is also accepted; its `config` section is used so a
    report can be replayed.
    """
    try:
        with open(path, "r") as f:
            if path.lower().endswith(".json"):
                values = json.load(f)
            else:
                values = yaml.safe_load(f)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"JSON syntax error in {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"YAML syntax error in {path}: {exc}") from exc
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ConfigurationError(f"{path}: expected a mapping of key: value pairs")
    if isinstance(values.get("config"), dict):
        values = values["config"]
    return dict(values)


def _read_numeric_csv(path: str, header: bool) -> np.ndarray:
    try:
        df = pd.read_csv(path, header=0 if header else None, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: file is empty") from exc
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: malformed CSV ({exc})") from exc
    if df.empty:
        raise DataError(f"{path}: file has no data rows")
    values = df.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = np.argwhere(values.isna().to_numpy())
    if bad.size:
        i, j = bad[0]
        # 1-based file row, counting the header line when present
        row = int(i) + 1 + (1 if header else 0)
        raise DataError(
            f"{path}: non-numeric cell {df.iat[i, j]!r} at row {row}, column {int(j) + 1}"
        )
    return values.to_numpy(dtype=np.float64)


def load_csv_triplet(path_x: str, path_y: str, path_z: str, header_flag: bool = False) -> DataTriplet:
    """
    Load X, Y and Z from three comma-separated files.

    Rows are samples and columns coordinates; a single header row is skipped
    when `header_flag` is set.
    """
    mats = {path: _read_numeric_csv(path, header_flag) for path in (path_x, path_y, path_z)}
    counts = [mats[p].shape[0] for p in (path_x, path_y, path_z)]
    if len(set(counts)) != 1:
        detail = ", ".join(f"{p} has {c}" for p, c in zip((path_x, path_y, path_z), counts))
        raise DataError(f"row counts differ: {detail}")
    return DataTriplet(mats[path_x], mats[path_y], mats[path_z])


def load_pvalues(path: str) -> List[float]:
    """
    p-values from a CSV: the `p_value` column when a header names it,
    otherwise the first numeric column. Blank cells (summary rows) are skipped.
    """
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: file is empty") from exc
    first = pd.to_numeric(raw.iloc[0], errors="coerce")
    if first.isna().any():
        raw = raw.iloc[1:].set_axis(list(raw.iloc[0]), axis=1)
    numeric = raw.apply(lambda col: pd.to_numeric(col, errors="coerce"))
    if "p_value" in numeric.columns:
        column = numeric["p_value"]
    else:
        usable = [c for c in numeric.columns if numeric[c].notna().any()]
        if not usable:
            raise DataError(f"{path}: no numeric column")
        column = numeric[usable[0]]
    ps = column.dropna().tolist()
    if not ps:
        raise DataError(f"{path}: no p-values")
    if any(p < 0.0 or p > 1.0 for p in ps):
        raise DataError(f"{path}: p-values must lie in [0, 1]")
    return [float(p) for p in ps]


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %s", path)


def cmd_test(cfg: RunConfig) -> int:
    """Run FlowCIT on CSV input and write the JSON and Markdown reports."""
    if not (cfg.x and cfg.y and cfg.z):
        raise ConfigurationError("test needs --x, --y and --z input files")
    data = load_csv_triplet(cfg.x, cfg.y, cfg.z, cfg.header)
    test_cfg = cfg.test_config()

    started = time.perf_counter()
    report = flowcit(data, test_cfg)
    elapsed = time.perf_counter() - started

    payload = report.to_dict()
    payload["config"].update(
        {"x": cfg.x, "y": cfg.y, "z": cfg.z, "header": cfg.header, "alpha": cfg.alpha}
    )
    payload.update(
        {
            "generated": datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "inputs": [cfg.x, cfg.y, cfg.z],
            "alpha": cfg.alpha,
            "decision": decision_text(report.combined_pvalue, cfg.alpha),
            "wall_clock_seconds": elapsed,
        }
    )

    out = Path(cfg.output or "flowcit_report.json")
    _write_text(out, json.dumps(payload, indent=2))
    _write_text(out.with_suffix(".md"), render_markdown_report(payload))
    print(f"p_c = {report.combined_pvalue:.6g} ({payload['decision']} at alpha = {cfg.alpha})")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    """Replicate one simulation cell; CSV of p-values plus a summary row."""
    spec = cfg.sim_spec()
    result = run_experiment(spec, cfg.sim_test_config(), cfg.alpha)
    out = Path(cfg.output or "flowcit_simulation.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    result.to_frame().to_csv(out, index=False)
    logger.info("wrote %s", out)
    print(f"rejection rate {result.rejection_rate:.4f} at alpha = {cfg.alpha} over {spec.reps} replications")
    return EXIT_OK


def cmd_qq(cfg: RunConfig) -> int:
    """QQ pairs against Uniform(0, 1) and the KS statistic."""
    if cfg.pvalues:
        ps = load_pvalues(cfg.pvalues)
    else:
        ps = run_experiment(cfg.sim_spec(), cfg.sim_test_config(), cfg.alpha).pvalues
    pairs = qq_data(ps)
    out = Path(cfg.output or "flowcit_qq.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(pairs, columns=["theoretical", "empirical"]).to_csv(out, index=False)
    logger.info("wrote %s", out)
    print(f"KS statistic {ks_statistic(ps):.4f} over {len(ps)} p-values")
    return EXIT_OK


def cmd_power(cfg: RunConfig) -> int:
    """Rejection rate at each psi of the grid."""
    table = run_power_curve(cfg.sim_spec(), cfg.psis, cfg.sim_test_config(), cfg.alpha)
    out = Path(cfg.output or "flowcit_power.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    logger.info("wrote %s", out)
    print(table[["psi", "rejection_rate", "reps"]].to_string(index=False))
    return EXIT_OK


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "qq": cmd_qq, "power": cmd_power}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="YAML key: value file or a JSON test report")
    common.add_argument("--B", type=int, help="permutations per split (default 100)")
    common.add_argument("--n2", type=int, help="test fold size (default floor(4 sqrt(n)))")
    common.add_argument("--m", type=int, help="number of disjoint splits")
    common.add_argument("--measure", help="dc or ipc")
    common.add_argument("--direction", help="dc1 or dc2")
    common.add_argument("--ode-steps", dest="ode_steps", type=int)
    common.add_argument("--hidden-width", dest="hidden_width", type=int)
    common.add_argument("--epochs", type=int)
    common.add_argument("--batch-size", dest="batch_size", type=int)
    common.add_argument("--learning-rate", dest="learning_rate", type=float)
    common.add_argument("--min-steps", dest="min_steps", type=int, help="minimum optimizer updates per flow (default 4000)")
    common.add_argument("--final-lr-fraction", dest="final_lr_fraction", type=float)
    common.add_argument(
        "--fixed-noise",
        dest="resample_noise_each_epoch",
        action="store_false",
        help="draw the flow-matching noise once instead of every epoch",
    )
    common.add_argument("--seed", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--output", help="output file")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--oracle", action="store_true", help="closed-form transports (convergence model)")
    common.add_argument("--log-level", dest="log_level")
    return common


def _simulation_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="convergence, univariate, low-low, low-high or high-high")
    parser.add_argument("--setting", type=int)
    parser.add_argument("--psi", type=float)
    parser.add_argument("--dims", type=int, nargs=3, metavar=("DX", "DY", "DZ"))
    parser.add_argument("--n", type=int)
    parser.add_argument("--reps", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="flowcit", description="Flow-based conditional independence testing")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_test = sub.add_parser("test", parents=[common], argument_default=argparse.SUPPRESS, help="test user CSV data")
    p_test.add_argument("--x", help="CSV of X rows")
    p_test.add_argument("--y", help="CSV of Y rows")
    p_test.add_argument("--z", help="CSV of Z rows")
    p_test.add_argument("--header", action="store_true", help="skip one header row in each file")

    p_sim = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS, help="replicate a simulation cell")
    _simulation_options(p_sim)

    p_qq = sub.add_parser("qq", parents=[common], argument_default=argparse.SUPPRESS, help="QQ data and KS statistic")
    p_qq.add_argument("--pvalues", help="CSV of p-values")
    _simulation_options(p_qq)

    p_power = sub.add_parser("power", parents=[common], argument_default=argparse.SUPPRESS, help="rejection rate over psi")
    _simulation_options(p_power)
    p_power.add_argument("--psis", type=float, nargs="+", help="psi grid (default: model table)")
    return parser


def resolve_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse flags and merge them over the config file and the defaults."""
    flags = vars(build_parser().parse_args(argv))
    config_path = flags.pop("config", None)
    file_values = load_config_file(config_path) if config_path else {}
    file_values.pop("subcommand", None)
    return RunConfig.from_sources(file_values, flags)


def exit_code(err: FlowCITError) -> int:
    """Map an error to the documented exit code."""
    if isinstance(err, NumericError):
        return EXIT_NUMERIC
    if isinstance(err, (DataError, DimensionError)):
        return EXIT_DATA
    return EXIT_CONFIG


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        configure_logging("INFO")
        cfg = resolve_config(argv)
        configure_logging(cfg.log_level)
        return COMMANDS[cfg.subcommand](cfg)
    except FlowCITError as err:
        logger.error("%s", err)
        logger.debug("traceback", exc_info=err)
        print(f"error: {err}", file=sys.stderr)
        return exit_code(err)


if __name__ == "__main__":
    sys.exit(main())
