"""Deterministic result persistence: CSV, canonical JSON, markdown, figures.

Everything written here is byte-reproducible for a fixed configuration:
floats are serialized with 17 significant digits, JSON keys are sorted, and
nothing time- or host-dependent enters the files.  Figures are rendered with
the Agg backend next to the delimited outputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from pathlib import Path

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .initial_data import GridFunction

TOOL_VERSION = "0.1.0"


# ----------------------------------------------------------------------
# Canonical JSON
# ----------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _canon(obj) -> str:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _canon(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        inner = ",".join(f'"{k}":{_canon(v)}' for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot canonicalize {type(obj)!r}")


def canonical_json(obj) -> str:
    """Sorted-key JSON with floats at 17 significant digits."""
    return _canon(obj)


def config_hash(config: dict) -> str:
    """Deterministic digest of a fully-resolved configuration."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def write_json(path, obj):
    Path(path).write_text(canonical_json(obj) + "\n")


# ----------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------

def write_snapshot_csv(path, g: GridFunction):
    """Snapshot as 'x,u' rows with full round-trip precision.

    Round-off undershoots are clamped to zero here (in reporting only; the
    in-memory state is never modified).
    """
    lines = ["x,u"]
    x = g.x
    vals = np.maximum(g.values, 0.0)
    for i in range(g.n):
        lines.append(f"{x[i]:.17g},{vals[i]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_series_csv(path, ts, values, value_name: str = "norm"):
    """Decay series as 't,<name>' rows."""
    lines = [f"t,{value_name}"]
    for t, v in zip(ts, values):
        lines.append(f"{t:.17g},{v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# Manifest
# ----------------------------------------------------------------------

@dataclasses.dataclass
class RunManifest:
    config_hash: str
    command: str
    inputs: dict
    outputs: list
    verdicts: list
    tool_version: str = TOOL_VERSION
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def write(self, path):
        write_json(path, dataclasses.asdict(self))


# ----------------------------------------------------------------------
# Markdown
# ----------------------------------------------------------------------

def markdown_table(headers, rows) -> str:
    def cell(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)
    out = ["| " + " | ".join(headers) + " |",
           "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        out.append("| " + " | ".join(cell(v) for v in row) + " |")
    return "\n".join(out) + "\n"


def checks_markdown(checks) -> str:
    rows = [(c.name, "-" if math.isnan(c.lhs_max_ratio) else c.lhs_max_ratio,
             c.tol, c.verdict, c.note) for c in checks]
    return markdown_table(["estimate", "max ratio", "tol", "verdict", "note"], rows)


# ----------------------------------------------------------------------
# Figures (rendered to files alongside the CSV output)
# ----------------------------------------------------------------------

def save_snapshot_figure(path, snapshots, labels=None, oracle=None,
                         title: str = "solution snapshots"):
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    for i, g in enumerate(snapshots):
        lab = labels[i] if labels else f"t = {g.time:g}"
        ax.plot(g.x, g.values, lw=1.4, label=lab)
    if oracle is not None:
        xo, uo, lab = oracle
        ax.plot(xo, uo, "k--", lw=1.0, label=lab)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_decay_figure(path, ts, norms, fit=None, bound=None,
                      title: str = "norm decay", xlabel: str = "t",
                      ylabel: str = "norm"):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(ts, norms, "o-", ms=3, lw=1.0, label="measured")
    if fit is not None:
        ax.loglog(ts, fit.constant * np.asarray(ts) ** fit.exponent, "--",
                  label=f"fit slope {fit.exponent:.3f}")
    if bound is not None:
        ax.loglog(ts, bound, ":", label="bound")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_sweep_figure(path, eps_list, ratios, title: str = "ratio vs eps"):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogx(eps_list, ratios, "o-")
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("eps")
    ax.set_ylabel("measured / bound")
    ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_convergence_figure(path, hs, dists, title: str = "self-convergence"):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(hs, dists, "o-", label="measured")
    ax.set_xlabel("h")
    ax.set_ylabel("sup distance")
    ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


# ----------------------------------------------------------------------
# Report emission
# ----------------------------------------------------------------------

def emit_report(report, format: str, path):
    """Write a dataclass report as canonical JSON, a markdown table, or a plot."""
    path = Path(path)
    if format == "json":
        write_json(path, report)
        return path
    if format == "md":
        d = dataclasses.asdict(report) if dataclasses.is_dataclass(report) else dict(report)
        rows = []
        for k, v in sorted(d.items()):
            if isinstance(v, (list, dict)):
                v = canonical_json(v)
                if len(v) > 120:
                    v = v[:117] + "..."
            rows.append((k, v))
        path.write_text(markdown_table(["field", "value"], rows))
        return path
    if format == "plot":
        d = dataclasses.asdict(report) if dataclasses.is_dataclass(report) else dict(report)
        if "eps_list" in d and "rows" in d:
            ratios = [r.get(d.get("kind", "pcond_linf")) for r in d["rows"]]
            save_sweep_figure(path, d["eps_list"], ratios)
        elif "h_list" in d:
            hs = d["h_list"][:-1]
            consec = [d["pairwise"][(d["h_list"][i], d["h_list"][i + 1])]
                      for i in range(len(hs))]
            save_convergence_figure(path, hs, consec)
        else:
            raise ValueError("no plot emitter for this report type")
        return path
    raise ValueError(f"unknown report format {format!r}")
