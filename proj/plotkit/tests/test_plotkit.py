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

import hashlib
import math
import os
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from plotkit import KINDS, FigureRequest, SchemaError, build_figure, read_table, render
from plotkit.cli import main
from plotkit.render import UNITY_LABEL
from plotkit.tables import curves

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

INPUTS = {
    "training-curves": ["qpinn_metrics.csv", "cpinn_metrics.csv"],
    "epoch-ratio": ["epoch_ratio.csv"],
    "mse-ratio": ["mse_ratio.csv"],
    "success": ["success.csv"],
    "landscape": ["landscape.csv"],
    "probe": ["probe.csv"],
}


def request(kind, names, out, **kw):
    return FigureRequest(kind=kind, inputs=[FIXTURES / n for n in names], output=out, **kw)


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def unity_lines(ax):
    return [l for l in ax.get_lines() if l.get_label() == UNITY_LABEL]


def test_every_kind_has_a_fixture():
    assert set(INPUTS) == set(KINDS)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("suffix", [".png", ".svg"])
def test_renders_every_kind_deterministically(kind, suffix, tmp_path):
    a = render(request(kind, INPUTS[kind], tmp_path / f"a{suffix}"))
    b = render(request(kind, INPUTS[kind], tmp_path / f"b{suffix}"))
    assert a.stat().st_size > 0
    assert digest(a) == digest(b)


@pytest.mark.parametrize("kind", KINDS)
def test_inputs_are_not_modified(kind, tmp_path):
    before = {n: digest(FIXTURES / n) for n in INPUTS[kind]}
    render(request(kind, INPUTS[kind], tmp_path / "f.png"))
    assert {n: digest(FIXTURES / n) for n in INPUTS[kind]} == before


def test_not_reached_entries_are_gaps_not_zeros(tmp_path):
    fig = build_figure(request("epoch-ratio", ["epoch_ratio_gaps.csv"], tmp_path / "f.png"))
    ax = fig.axes[0]
    data = [l for l in ax.get_lines() if l.get_label() != UNITY_LABEL]
    assert len(data) == 1
    y = np.asarray(data[0].get_ydata(), dtype=float)
    np.testing.assert_array_equal(np.isnan(y), [False, False, True, True, False, False, True])
    assert not np.any(y[~np.isnan(y)] == 0.0)
    # Matplotlib splits a line at NaN, so the plotted path has two pieces.
    path = data[0].get_path()
    codes = [c for _, c in path.iter_segments(simplify=False)]
    assert codes.count(path.MOVETO) == 2


@pytest.mark.parametrize("kind,names", [
    ("epoch-ratio", ["epoch_ratio.csv"]),
    ("mse-ratio", ["mse_ratio.csv"]),
    ("training-curves", ["qpinn_metrics.csv", "cpinn_metrics.csv"]),
])
def test_ratio_plots_have_dashed_unity_line(kind, names, tmp_path):
    fig = build_figure(request(kind, names, tmp_path / "f.png"))
    ax = fig.axes[0]
    (line,) = unity_lines(ax)
    assert line.get_linestyle() == "--"
    assert set(line.get_ydata()) == {1.0}


def test_empty_ratio_table_gives_axes_and_unity_line_only(tmp_path):
    fig = build_figure(request("epoch-ratio", ["epoch_ratio_empty.csv"], tmp_path / "f.png"))
    ax = fig.axes[0]
    assert len(ax.get_lines()) == 2
    assert len(unity_lines(ax)) == 1
    data = [l for l in ax.get_lines() if l.get_label() != UNITY_LABEL][0]
    assert len(data.get_xdata()) == 0
    render(request("epoch-ratio", ["epoch_ratio_empty.csv"], tmp_path / "f.png"))


def test_two_curves_carry_config_labels_and_log_axes(tmp_path):
    fig = build_figure(request("training-curves", INPUTS["training-curves"], tmp_path / "f.png",
                               labels=["qPINN", "cPINN"]))
    top, main = fig.axes
    labels = [t.get_text() for t in main.get_legend().get_texts()]
    assert labels == ["qPINN", "cPINN"]
    assert main.get_yscale() == "log"
    assert top.get_yscale() == "log"
    assert len(main.get_lines()) == 2


def test_metrics_log_keeps_only_evaluated_epochs():
    ((e, m),) = curves(FIXTURES / "qpinn_metrics.csv").values()
    table = read_table(FIXTURES / "qpinn_metrics.csv", "metrics")
    assert len(e) < len(table)
    assert not np.any(np.isnan(m))
    assert e[0] == 0 and e[-1] == table.column("epoch")[-1]


def test_median_curves_give_one_line_per_cell(tmp_path):
    cells = {r["cell_id"] for r in read_table(FIXTURES / "median_curves.csv", "median_curves").rows}
    fig = build_figure(request("training-curves", ["median_curves.csv"], tmp_path / "f.png"))
    main = fig.axes[-1]
    assert len([l for l in main.get_lines() if l.get_label() != UNITY_LABEL]) == len(cells)


def test_color_by_final_mse_reads_ratios_json(tmp_path):
    for name, limit in (("a", 1e-4), ("b", 1e-2)):
        d = tmp_path / name
        d.mkdir()
        shutil.copy(FIXTURES / "epoch_ratio.csv", d)
        (d / "ratios.json").write_text(f'{{"accuracy_limit": {limit}}}')
    req = FigureRequest(kind="epoch-ratio", inputs=[tmp_path / "a/epoch_ratio.csv", tmp_path / "b/epoch_ratio.csv"],
                        output=tmp_path / "f.png", color_by_final_mse=True)
    lines = [l for l in build_figure(req).axes[0].get_lines() if l.get_label() != UNITY_LABEL]
    assert lines[0].get_color() != lines[1].get_color()
    lone = tmp_path / "lone"
    lone.mkdir()
    shutil.copy(FIXTURES / "epoch_ratio_gaps.csv", lone)
    no_json = FigureRequest(kind="epoch-ratio", inputs=[lone / "epoch_ratio_gaps.csv"],
                            output=tmp_path / "g.png", color_by_final_mse=True)
    with pytest.raises(SchemaError):
        build_figure(no_json)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("schema,text,column", [
    ("epoch_ratio", "threshold,q_epoch,c_epoch,epoch_ratio,extra\n", "extra"),
    ("epoch_ratio", "threshold,q_epoch,epoch_ratio\n", "c_epoch"),
    ("success", "family,points,kind,wins,total,ratio,threshold\n", "wins"),
    ("probe", "t,x,i_0,i_1,i_2,o_0,o_1,o_3\n", "o_3"),
    ("landscape", "theta_0,phi,mse\n", "phi"),
    ("mse_ratio", "epoch,mse_q,mse_c,mse_ratio\n0,1,2,zero\n", "mse_ratio"),
])
def test_schema_errors_name_the_column(schema, text, column, tmp_path):
    with pytest.raises(SchemaError, match=f"'{column}'"):
        read_table(write(tmp_path, "bad.csv", text), schema)


def test_training_curve_input_with_unknown_column_is_rejected(tmp_path):
    p = write(tmp_path, "bad.csv", "epoch,L_pde,bogus\n")
    with pytest.raises(SchemaError, match="'bogus'"):
        render(FigureRequest(kind="training-curves", inputs=[p], output=tmp_path / "f.png"))


def test_ragged_rows_are_rejected(tmp_path):
    p = write(tmp_path, "bad.csv", "epoch,mse_q,mse_c,mse_ratio\n0,1,2\n")
    with pytest.raises(SchemaError, match=":2:"):
        read_table(p, "mse_ratio")


def test_request_validation(tmp_path):
    with pytest.raises(ValueError):
        request("histogram", ["success.csv"], tmp_path / "f.png")
    with pytest.raises(ValueError):
        request("success", ["success.csv", "success.csv"], tmp_path / "f.png")
    with pytest.raises(ValueError):
        request("mse-ratio", ["mse_ratio.csv"], tmp_path / "f.png", labels=["a", "b"])
    with pytest.raises(FileNotFoundError):
        FigureRequest(kind="success", inputs=[tmp_path / "missing.csv"], output=tmp_path / "f.png")
    with pytest.raises(ValueError):
        render(request("success", ["success.csv"], tmp_path / "f.jpg"))


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "s.png"
    assert main(["success", str(FIXTURES / "success.csv"), "-o", str(out)]) == 0
    assert out.is_file()
    bad = write(tmp_path, "bad.csv", "family,points,kind,successes,total,ratio,oops\n")
    assert main(["success", str(bad), "-o", str(tmp_path / "b.png")]) == 2
    assert "'oops'" in capsys.readouterr().err


@pytest.mark.skipif("QPINN_CLI" not in os.environ, reason="QPINN_CLI not set")
def test_fresh_cli_outputs_render(tmp_path):
    """Outputs written by the current qpinn build parse and render."""
    cli = os.environ["QPINN_CLI"]
    cfg = write(tmp_path, "q.json", """{
      "problem": {"L": 0.1, "N": 1, "family": "xsin"},
      "model": {"kind": "qpinn", "params": 60, "depth_c": 0},
      "training": {"epochs": 40, "points": 16, "eval_every": 10},
      "reference": {"nx": 65, "dt": 1e-3}}""")
    ccfg = write(tmp_path, "c.json", cfg.read_text().replace(
        '"kind": "qpinn", "params": 60, "depth_c": 0', '"kind": "cpinn", "params": 60, "depth": 1'))

    def run(*args):
        subprocess.run([cli, *map(str, args)], check=True, capture_output=True)

    run("train", "--config", cfg, "--out", tmp_path / "q", "--quiet")
    run("train", "--config", ccfg, "--out", tmp_path / "c", "--quiet")
    run("ratios", "--q", tmp_path / "q.csv", "--c", tmp_path / "c.csv", "--out", tmp_path / "r")
    run("landscape", "--checkpoint", tmp_path / "q.ckpt.json", "--config", cfg, "-i", "0", "-j", "1",
        "--resolution", "5", "--out", tmp_path / "l.csv")
    run("probe", "--checkpoint", tmp_path / "q.ckpt.json", "--side", "5", "--out", tmp_path / "p.csv")
    cases = [
        ("training-curves", ["q.csv", "c.csv"]),
        ("epoch-ratio", ["r/epoch_ratio.csv"]),
        ("mse-ratio", ["r/mse_ratio.csv"]),
        ("landscape", ["l.csv"]),
        ("probe", ["p.csv"]),
    ]
    for kind, names in cases:
        render(FigureRequest(kind=kind, inputs=[tmp_path / n for n in names],
                             output=tmp_path / f"{kind}.png", color_by_final_mse=kind.endswith("ratio")))
    assert math.isfinite(read_table(tmp_path / "l.csv", "landscape").column("mse").sum())
