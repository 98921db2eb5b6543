"""Serialization of a fit, its CH sweep and its membership dynamics.

The machine-readable form is a JSON tree with the top-level keys listed in
``REPORT_KEYS``; the text form renders the same tree as tables. Numbers are
rounded to 6 significant digits, and NaN (an unoccupied cluster) becomes
``null``. Cluster labels are 0-based.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .diagnostics import TransitionMatrix, membership_shares, transition_matrix
from .errors import ReportWriteError
from .estimator import FitResult
from .panel import CentroidSequence, LongitudinalPanel
from .selection import CHReport

REPORT_KEYS = (
    "config",
    "fit",
    "centroids_model",
    "centroids_empirical",
    "coefficients",
    "ch_table",
    "transitions",
    "shares",
)
FORMATS = ("tree", "text")


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.6g}")


def _nums(a):
    return [_nums(v) for v in a] if np.ndim(a) else _num(a)


def _centroid_table(cents: CentroidSequence, panel: LongitudinalPanel) -> dict:
    times = panel.time_labels[: cents.n_times]
    return {
        var: {str(t): _nums(cents.data[k, :, j]) for k, t in enumerate(times)}
        for j, var in enumerate(panel.var_names)
    }


def _ch_table(ch: CHReport | None):
    if ch is None or not ch.candidates:
        return {"omitted": True, "reason": "no cluster-count sweep was run"}
    rows = []
    for c in ch.candidates:
        rows.append({
            "G": c.n_clusters,
            "CH": None if c.ch_value is None else _num(c.ch_value),
            "objective": None if c.objective is None else _num(c.objective),
            "trace_W": None if c.trace_w is None else _num(c.trace_w),
            "trace_B": None if c.trace_b is None else _num(c.trace_b),
            "summary": c.summary(),
        })
    return {"candidates": rows, "selected_g": ch.selected_g}


def build_report(result: FitResult, panel: LongitudinalPanel, ch: CHReport | None = None,
                 transitions: TransitionMatrix | None = None, shares=None) -> dict:
    """Assemble the report tree; diagnostics are computed when not supplied."""
    part = result.partition
    if transitions is None:
        transitions = transition_matrix(part)
    if shares is None:
        shares = membership_shares(part)
    coeffs = result.coefficients
    n, J, T = panel.shape
    return {
        "config": {
            **result.config.as_dict(),
            "n_units": n,
            "n_vars": J,
            "n_times": T,
            "var_names": list(panel.var_names),
            "time_labels": [str(t) for t in panel.time_labels],
        },
        "fit": {
            "objective": _num(result.objective),
            "iterations": result.iterations,
            "converged": result.converged,
            "restart_index": result.restart_index,
            "init_strategy": result.init_strategy.value,
            "n_reseeds": result.n_reseeds,
            "static_slices": [str(panel.time_labels[t]) for t in result.static_slices],
            "memberships": {
                str(t): {u: int(part.labels[k, i]) for i, u in enumerate(panel.unit_ids)}
                for k, t in enumerate(panel.time_labels)
            },
        },
        "centroids_model": _centroid_table(result.model_centroids, panel),
        "centroids_empirical": _centroid_table(result.empirical_centroids, panel),
        "coefficients": {
            "intercept": _nums(coeffs.intercept),
            "lag_matrices": {f"A{p + 1}": _nums(a) for p, a in enumerate(coeffs.lag_matrices)},
        },
        "ch_table": _ch_table(ch),
        "transitions": {
            "probs": _nums(transitions.probs),
            "counts": transitions.counts.astype(int).tolist(),
            "n_transitions": transitions.n_transitions,
            "n_pairs": transitions.n_pairs,
            "empty_rows": [bool(b) for b in transitions.empty_rows],
        },
        "shares": _nums(shares),
    }


def _fmt(v) -> str:
    return "NA" if v is None else f"{v:.6g}"


def render_text(tree: dict) -> str:
    lines = []
    cfg = tree["config"]
    lines.append("CAR(K,P) clustering report")
    lines.append("")
    lines.append("[config]")
    for k, v in cfg.items():
        lines.append(f"  {k}: {v}")

    fit = tree["fit"]
    lines.append("")
    lines.append("[fit]")
    for k in ("objective", "iterations", "converged", "restart_index", "init_strategy", "n_reseeds"):
        lines.append(f"  {k}: {fit[k]}")
    lines.append(f"  static_slices: {', '.join(fit['static_slices']) or 'none'}")

    times = cfg["time_labels"]
    lines.append("")
    lines.append("[memberships]")
    units = list(next(iter(fit["memberships"].values())))
    width = max(len(u) for u in units)
    lines.append("  " + "unit".ljust(width) + " " + " ".join(t.rjust(5) for t in times))
    for u in units:
        labs = " ".join(str(fit["memberships"][t][u]).rjust(5) for t in times)
        lines.append("  " + u.ljust(width) + " " + labs)

    for key, title in (("centroids_model", "model centroids"), ("centroids_empirical", "empirical centroids")):
        lines.append("")
        lines.append(f"[{title}]")
        for var, table in tree[key].items():
            lines.append(f"  {var}")
            for t, row in table.items():
                lines.append(f"    {t:>8} " + " ".join(_fmt(v).rjust(12) for v in row))

    co = tree["coefficients"]
    lines.append("")
    lines.append("[coefficients]")
    lines.append("  c: " + " ".join(_fmt(v) for v in co["intercept"]))
    for name, mat in co["lag_matrices"].items():
        lines.append(f"  {name}:")
        for row in mat:
            lines.append("    " + " ".join(_fmt(v).rjust(12) for v in row))

    lines.append("")
    lines.append("[CH table]")
    ch = tree["ch_table"]
    if ch.get("omitted"):
        lines.append(f"  (omitted: {ch['reason']})")
    else:
        lines.append(f"  {'G':>3} {'CH':>12} {'objective':>12} {'trace(W)':>12} {'trace(B)':>12}")
        for row in ch["candidates"]:
            mark = " *" if row["G"] == ch["selected_g"] else ""
            if row["CH"] is None:
                lines.append(f"  {row['G']:>3} failed: {row['summary'].get('error')}")
                continue
            lines.append(
                f"  {row['G']:>3} {_fmt(row['CH']):>12} {_fmt(row['objective']):>12} "
                f"{_fmt(row['trace_W']):>12} {_fmt(row['trace_B']):>12}{mark}"
            )
        lines.append(f"  selected G: {ch['selected_g']}")

    tr = tree["transitions"]
    lines.append("")
    lines.append("[transitions] (rows: time t-1, columns: time t)")
    for g, row in enumerate(tr["probs"]):
        flag = "  (never occupied)" if tr["empty_rows"][g] else ""
        lines.append(f"  {g:>3} " + " ".join(_fmt(v).rjust(9) for v in row) + flag)
    lines.append(f"  switches: {tr['n_transitions']} of {tr['n_pairs']} unit-time pairs")

    lines.append("")
    lines.append("[shares]")
    for g, s in enumerate(tree["shares"]):
        lines.append(f"  {g:>3} {_fmt(s)}")
    return "\n".join(lines) + "\n"


def dumps_tree(tree: dict) -> str:
    return json.dumps(tree, indent=2) + "\n"


def write_report(result: FitResult, path, *, panel: LongitudinalPanel, ch: CHReport | None = None,
                 transitions: TransitionMatrix | None = None, shares=None, format: str = "tree") -> None:
    if format not in FORMATS:
        raise ValueError(f"unknown report format {format!r}; expected one of {FORMATS}")
    tree = build_report(result, panel, ch=ch, transitions=transitions, shares=shares)
    text = dumps_tree(tree) if format == "tree" else render_text(tree)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportWriteError(f"cannot write report to {path}: {exc.strerror or exc}") from exc


def read_report(path) -> dict:
    """Parse a machine-readable report written by ``write_report``."""
    return json.loads(Path(path).read_text(encoding="utf-8"))
