"""Rendering of the CLI's delimited outputs to figure files.

Each renderer reads only the documented CSV schema for its kind and
performs no computation beyond axis transforms, so a figure is always a
faithful view of the file next to it.  SVG output is deterministic
(fixed hash salt, no embedded date).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("line", "heatmap", "trend", "contrast", "waveform")

plt.rcParams["svg.hashsalt"] = "srpulse"


class SchemaError(ValueError):
    """A CSV is missing a column the figure kind requires."""


def read_columns(path) -> dict:
    """CSV as a mapping of column name to array, order preserved.

    Numeric columns become float arrays; anything that fails to parse
    (e.g. a channel-name column) is kept as a string array so renderers
    can skip or group on it.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{path}: empty file")
        rows = [row for row in reader if row]
    columns = {}
    for i, name in enumerate(header):
        try:
            cells = [r[i] for r in rows]
        except IndexError as exc:
            raise SchemaError(f"{path}: short row in column {name!r}") from exc
        try:
            columns[name] = np.array([float(c) for c in cells])
        except ValueError:
            columns[name] = np.array(cells, dtype=str)
    return columns


def _need(columns, name, path):
    if name not in columns:
        raise SchemaError(f"{path}: missing column {name!r}")
    column = columns[name]
    if not np.issubdtype(column.dtype, np.floating):
        raise SchemaError(f"{path}: bad value in column {name!r}")
    return column


def _numeric(columns) -> list:
    return [c for c in columns if np.issubdtype(columns[c].dtype, np.floating)]


def _mean_metrics(columns) -> list:
    return [c for c in _numeric(columns) if c.startswith("mean_")]


def _save(fig, output, dpi=150):
    output = Path(output)
    kwargs = {"dpi": dpi}
    if output.suffix == ".svg":
        kwargs["metadata"] = {"Date": None}
    fig.savefig(output, **kwargs)
    plt.close(fig)
    return output


def render_line(inputs, output, labels=None, title=""):
    """Overlaid 1D sweep profiles; infidelity axes go logarithmic."""
    fig, ax = plt.subplots(figsize=(6, 4))
    log_ok = True
    metric = None
    for i, path in enumerate(inputs):
        columns = read_columns(path)
        names = _numeric(columns)
        if not names:
            raise SchemaError(f"{path}: no numeric columns")
        x = columns[names[0]]
        metrics = _mean_metrics(columns)
        if not metrics:
            raise SchemaError(f"{path}: missing column 'mean_*'")
        metric = metrics[0]
        y = columns[metric]
        err = columns.get("std_" + metric[5:])
        label = labels[i] if labels and i < len(labels) else Path(path).stem
        if err is not None:
            ax.errorbar(x, y, yerr=err, label=label, capsize=2)
        else:
            ax.plot(x, y, label=label)
        log_ok = log_ok and bool(np.all(y > 0))
        ax.set_xlabel(names[0])
    if log_ok and metric and "infidelity" in metric:
        ax.set_yscale("log")
    ax.set_ylabel(metric[5:] if metric else "")
    ax.set_title(title)
    if len(inputs) > 1 or labels:
        ax.legend()
    fig.tight_layout()
    return _save(fig, output)


def render_heatmap(inputs, output, labels=None, title=""):
    """2D sweep map with a colorbar; grid recovered from the row order."""
    (path,) = inputs
    columns = read_columns(path)
    names = _numeric(columns)
    if len(names) < 3:
        raise SchemaError(f"{path}: missing column 'mean_*'")
    metrics = _mean_metrics(columns)
    if not metrics:
        raise SchemaError(f"{path}: missing column 'mean_*'")
    xs, ys, values = columns[names[0]], columns[names[1]], columns[metrics[0]]
    nx = np.unique(xs).size
    ny = xs.size // nx
    if nx * ny != xs.size:
        raise SchemaError(f"{path}: rows do not form a full grid")
    grid = values.reshape(ny, nx)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    norm = None
    if np.all(values > 0) and values.max() / values.min() > 100:
        norm = matplotlib.colors.LogNorm(values.min(), values.max())
    image = ax.imshow(
        grid,
        origin="lower",
        aspect="auto",
        extent=(xs.min(), xs.max(), ys.min(), ys.max()),
        norm=norm,
    )
    fig.colorbar(image, ax=ax, label=metrics[0][5:])
    ax.set_xlabel(names[0])
    ax.set_ylabel(names[1])
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, output)


def render_trend(inputs, output, labels=None, title=""):
    """Effective area vs time-noise RMS with repeat error bars."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, path in enumerate(inputs):
        columns = read_columns(path)
        rms = _need(columns, "rms", path)
        mean = _need(columns, "mean_area", path)
        std = _need(columns, "std_area", path)
        label = labels[i] if labels and i < len(labels) else Path(path).stem
        ax.errorbar(rms, mean, yerr=std, marker="o", capsize=3, label=label)
    ax.set_xlabel("time-noise RMS")
    ax.set_ylabel("effective area")
    ax.set_title(title)
    if len(inputs) > 1 or labels:
        ax.legend()
    fig.tight_layout()
    return _save(fig, output)


def render_contrast(inputs, output, labels=None, title=""):
    """Fringe contrast vs channel width, one curve per file."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, path in enumerate(inputs):
        columns = read_columns(path)
        w = _need(columns, "width", path)
        c = _need(columns, "contrast", path)
        label = labels[i] if labels and i < len(labels) else Path(path).stem
        ax.plot(w, c, marker="o", label=label)
    ax.set_xlabel("channel width")
    ax.set_ylabel("contrast")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(title)
    if len(inputs) > 1 or labels:
        ax.legend()
    fig.tight_layout()
    return _save(fig, output)


def render_waveform(inputs, output, labels=None, title=""):
    """Amplitude and phase traces of a serialized pulse file."""
    from .pulses import load_waveform

    fig, (ax_a, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(6, 4.5))
    for i, path in enumerate(inputs):
        wave = load_waveform(path)
        edges = np.arange(wave.n_segments + 1) * wave.segment_duration * 1e3
        label = labels[i] if labels and i < len(labels) else Path(path).stem
        ax_a.stairs(wave.amplitude, edges, label=label)
        ax_p.stairs(wave.phase, edges, label=label)
    ax_a.set_ylabel("amplitude fraction")
    ax_p.set_ylabel("phase (rad)")
    ax_p.set_xlabel("time (ms)")
    ax_a.set_title(title)
    if len(inputs) > 1 or labels:
        ax_a.legend()
    fig.tight_layout()
    return _save(fig, output)


_RENDERERS = {
    "line": render_line,
    "heatmap": render_heatmap,
    "trend": render_trend,
    "contrast": render_contrast,
    "waveform": render_waveform,
}


def render(kind, inputs, output, labels=None, title="") -> Path:
    """Render one figure kind from CSV (or pulse-file) inputs."""
    if kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind {kind!r}")
    if not inputs:
        raise ValueError("no input files")
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    return _RENDERERS[kind](list(inputs), output, labels=labels, title=title)
