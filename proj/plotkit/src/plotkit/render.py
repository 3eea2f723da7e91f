# Copyright 2026 The qpinn-lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Figure builders for the six figure kinds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from plotkit.tables import SchemaError, curves, read_table  # noqa: E402

KINDS = ("training-curves", "epoch-ratio", "mse-ratio", "success", "landscape", "probe")

STYLE = {
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "plotkit",
}

# Label for the dashed line on ratio plots.
UNITY_LABEL = "equal performance"


@dataclass
class FigureRequest:
    kind: str
    inputs: list[Path]
    output: Path
    labels: list[str] = field(default_factory=list)
    log_x: bool = False
    log_y: bool = True
    color_by_final_mse: bool = False
    title: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)
        if not self.inputs:
            raise ValueError("at least one input file is required")
        if self.kind in ("success", "landscape", "probe") and len(self.inputs) != 1:
            raise ValueError(f"{self.kind} takes exactly one input file")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError("give one label per input file")
        for p in self.inputs:
            if not p.is_file():
                raise FileNotFoundError(p)

    def label(self, k: int, default: str) -> str:
        return self.labels[k] if self.labels else default


def _unity_line(ax) -> None:
    ax.axhline(1.0, color="black", linestyle="--", linewidth=1.0, label=UNITY_LABEL)


def _default_label(path: Path) -> str:
    # The ratios tool always writes epoch_ratio.csv / mse_ratio.csv, so the
    # directory is the informative part of those names.
    if path.stem in ("epoch_ratio", "mse_ratio") and path.parent.name:
        return path.parent.name
    return path.stem


def _final_mse(path: Path) -> float | None:
    # The ratios tool writes ratios.json beside epoch_ratio.csv / mse_ratio.csv.
    side = path.with_name("ratios.json")
    if not side.is_file():
        return None
    limit = json.loads(side.read_text()).get("accuracy_limit")
    return float(limit) if limit is not None else None


def _line_colors(req: FigureRequest) -> list:
    n = len(req.inputs)
    if not req.color_by_final_mse:
        return [f"C{k % 10}" for k in range(n)]
    finals = [_final_mse(p) for p in req.inputs]
    if any(f is None or not f > 0 for f in finals):
        raise SchemaError("color-by-final-MSE needs a ratios.json with accuracy_limit beside every input")
    logs = np.log10(np.array(finals, dtype=float))
    lo, hi = logs.min(), logs.max()
    scale = (logs - lo) / (hi - lo) if hi > lo else np.zeros_like(logs)
    cmap = matplotlib.colormaps["viridis"]
    return [cmap(s) for s in scale]


def _training_curves(fig: Figure, req: FigureRequest) -> None:
    series = []
    for k, p in enumerate(req.inputs):
        found = curves(p)
        for name, (e, m) in found.items():
            label = req.label(k, name) if len(found) == 1 else name
            series.append((label, e, m))
    if len(series) >= 2:
        top, main = fig.subplots(2, 1, sharex=True, gridspec_kw={"height_ratios": [1, 3]})
        (la, ea, ma), (lb, eb, mb) = series[0], series[1]
        common, ia, ib = np.intersect1d(ea, eb, return_indices=True)
        top.plot(common, ma[ia] / mb[ib], color="C0")
        _unity_line(top)
        top.set_ylabel("MSE ratio")
        top.set_title(f"{la} / {lb}", fontsize="small")
        if req.log_y:
            top.set_yscale("log")
    else:
        main = fig.subplots()
    for label, e, m in series:
        main.plot(e, m, label=label)
    main.set_xlabel("epoch")
    main.set_ylabel("MSE")
    if req.log_y:
        main.set_yscale("log")
    if req.log_x:
        main.set_xscale("log")
    main.legend()


def _epoch_ratio(fig: Figure, req: FigureRequest) -> None:
    ax = fig.subplots()
    colors = _line_colors(req)
    thresholds = []
    for k, p in enumerate(req.inputs):
        t = read_table(p, "epoch_ratio")
        thresholds.extend(t.column("threshold"))
        # not_reached entries are NaN and break the line into segments.
        ax.plot(t.column("threshold"), t.column("epoch_ratio"), marker=".",
                color=colors[k], label=req.label(k, _default_label(p)))
    _unity_line(ax)
    ax.set_xscale("log")
    if thresholds:
        ax.invert_xaxis()
    else:
        ax.set_xlim(1.0, 1e-4)
    ax.set_xlabel("MSE threshold")
    ax.set_ylabel("epoch ratio (qPINN / cPINN)")
    ax.legend()


def _mse_ratio(fig: Figure, req: FigureRequest) -> None:
    ax = fig.subplots()
    colors = _line_colors(req)
    for k, p in enumerate(req.inputs):
        t = read_table(p, "mse_ratio")
        ax.plot(t.column("epoch"), t.column("mse_ratio"), color=colors[k],
                label=req.label(k, _default_label(p)))
    _unity_line(ax)
    if req.log_y:
        ax.set_yscale("log")
    if req.log_x:
        ax.set_xscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE ratio (qPINN / cPINN)")
    ax.legend()


def _success(fig: Figure, req: FigureRequest) -> None:
    t = read_table(req.inputs[0], "success")
    groups = sorted({(str(r["family"]), int(r["points"])) for r in t.rows})
    kinds = sorted({str(r["kind"]) for r in t.rows})
    ax = fig.subplots()
    x = np.arange(len(groups))
    width = 0.8 / max(len(kinds), 1)
    for k, kind in enumerate(kinds):
        ratio = {(str(r["family"]), int(r["points"])): r["ratio"] for r in t.rows if r["kind"] == kind}
        ax.bar(x + (k - (len(kinds) - 1) / 2) * width, [ratio.get(g, np.nan) for g in groups],
               width, label=kind)
    ax.set_xticks(x, [f"{f}\n{n} pts" for f, n in groups])
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("success ratio")
    if t.rows:
        ax.set_title(f"final MSE below {t.rows[0]['threshold']:g}")
    ax.legend()


def _grid(t, a: str, b: str, values: str):
    xs, ys = np.unique(t.column(a)), np.unique(t.column(b))
    z = np.full((len(ys), len(xs)), np.nan)
    ix = np.searchsorted(xs, t.column(a))
    iy = np.searchsorted(ys, t.column(b))
    z[iy, ix] = t.column(values)
    return xs, ys, z


def _landscape(fig: Figure, req: FigureRequest) -> None:
    t = read_table(req.inputs[0], "landscape")
    a, b = t.columns[0], t.columns[1]
    xs, ys, z = _grid(t, a, b, "mse")
    ax = fig.subplots()
    data = np.log10(z) if req.log_y else z
    mesh = ax.pcolormesh(xs, ys, data, shading="nearest", cmap="viridis")
    ax.grid(False)
    fig.colorbar(mesh, ax=ax, label="log10 MSE" if req.log_y else "MSE")
    ax.plot(xs[len(xs) // 2], ys[len(ys) // 2], marker="x", color="white")
    ax.set_xlabel(a)
    ax.set_ylabel(b)


def _probe(fig: Figure, req: FigureRequest) -> None:
    t = read_table(req.inputs[0], "probe")
    axes = fig.subplots(2, 3, sharex=True, sharey=True)
    for row, prefix, name in ((0, "i", "encoder output"), (1, "o", "circuit ⟨Z⟩")):
        for q in range(3):
            col = f"{prefix}_{q}"
            xs, ys, z = _grid(t, "t", "x", col)
            ax = axes[row, q]
            mesh = ax.pcolormesh(xs, ys, z, shading="nearest", cmap="RdBu_r")
            fig.colorbar(mesh, ax=ax)
            ax.set_title(f"{name} {q}")
            ax.grid(False)
            if row == 1:
                ax.set_xlabel("t")
            if q == 0:
                ax.set_ylabel("x")


_BUILDERS = {
    "training-curves": _training_curves,
    "epoch-ratio": _epoch_ratio,
    "mse-ratio": _mse_ratio,
    "success": _success,
    "landscape": _landscape,
    "probe": _probe,
}


def build_figure(req: FigureRequest) -> Figure:
    """Builds the figure without writing it. The caller closes it."""
    with plt.rc_context(STYLE):
        size = (10, 5.5) if req.kind == "probe" else (6.4, 4.8)
        fig = plt.figure(figsize=size, layout="constrained")
        try:
            _BUILDERS[req.kind](fig, req)
            if req.title:
                fig.suptitle(req.title)
        except Exception:
            plt.close(fig)
            raise
    return fig


def render(req: FigureRequest) -> Path:
    """Writes the figure to req.output (PNG or SVG, from the suffix)."""
    suffix = req.output.suffix.lower()
    if suffix not in (".png", ".svg"):
        raise ValueError(f"output must be .png or .svg, got {req.output}")
    fig = build_figure(req)
    try:
        # Drop timestamps and version strings so identical inputs give
        # byte-identical files.
        metadata = {"Software": None} if suffix == ".png" else {"Date": None, "Creator": None}
        req.output.parent.mkdir(parents=True, exist_ok=True)
        with plt.rc_context(STYLE):
            fig.savefig(req.output, metadata=metadata)
    finally:
        plt.close(fig)
    return req.output
