#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: report_utils.py
"""
Formatting helpers for test reports and the Jinja2 Markdown renderer.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from jinja2 import Environment, FileSystemLoader, TemplateError


logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent / "templates"
REPORT_TEMPLATE = "FlowCIT_Report.j2"
INPUT_ROLES = ("X", "Y", "Z")


def describe_inputs(paths: Optional[Sequence[Any]]) -> str:
    """
    Label the X, Y, Z input files by basename, e.g. "X = `x.csv`; Y = `y.csv`".
    Missing paths are skipped; 'none' if no path is given.
    """
    parts = [
        f"{role} = `{Path(str(path)).name}`"
        for role, path in zip(INPUT_ROLES, paths or [])
        if path
    ]
    return "; ".join(parts) if parts else "none"


def config_line(key: str, value: Any) -> str:
    """One Markdown bullet of the config echo; lists comma-joined, None as 'default'."""
    if value is None:
        shown = "default"
    elif isinstance(value, (list, tuple)):
        shown = ", ".join(str(v) for v in value)
    else:
        shown = str(value)
    return f"- `{key}`: {shown}"


def fmt_pvalue(p: Optional[float]) -> str:
    """p-values as fixed 4 decimals, tiny ones in scientific notation."""
    if p is None:
        return "n/a"
    if p != 0.0 and p < 1e-4:
        return f"{p:.2e}"
    return f"{p:.4f}"


def decision_text(combined_pvalue: float, alpha: float) -> str:
    return "reject" if combined_pvalue <= alpha else "fail to reject"


def _fallback_report(payload: Dict[str, Any]) -> str:
    lines = ["# FlowCIT Report", ""]
    lines.append(f"- Combined p-value: {fmt_pvalue(payload.get('combined_pvalue'))}")
    lines.append(f"- Decision at alpha = {payload.get('alpha')}: {payload.get('decision')}")
    return "\n".join(lines) + "\n"


def render_markdown_report(
    payload: Dict[str, Any], templates_dir: Path = TEMPLATES_DIR
) -> str:
    """
    Render the Markdown companion of a JSON test report.

    Falls back to a minimal document if the template cannot be loaded or
    rendered.
    """
    splits = [
        {"index": k, "statistic": t, "pvalue": fmt_pvalue(p)}
        for k, (t, p) in enumerate(zip(payload.get("statistics", []), payload.get("pvalues", [])))
    ]
    config = payload.get("config", {})
    context = {
        "generated_timestamp": payload.get("generated", ""),
        "inputs": describe_inputs(payload.get("inputs")),
        "n": payload.get("n"),
        "n2": payload.get("n2"),
        "m": payload.get("m"),
        "seed": payload.get("seed"),
        "alpha": payload.get("alpha"),
        "combined_pvalue": fmt_pvalue(payload.get("combined_pvalue")),
        "decision": payload.get("decision", ""),
        "wall_clock_seconds": payload.get("wall_clock_seconds"),
        "splits": splits,
        "config_lines": [config_line(k, v) for k, v in sorted(config.items())],
    }
    try:
        env = Environment(loader=FileSystemLoader(str(templates_dir)))
        tmpl = env.get_template(REPORT_TEMPLATE)
        return tmpl.render(**context)
    except (TemplateError, OSError) as exc:
        logger.warning("report template unavailable (%s); writing minimal report", exc)
        return _fallback_report(payload)
