#!/usr/bin/env python3
"""Tests for the figure component.

Covers the contract: specs validate their inputs, tables are checked
against their documented schemas, overlays come from stored fit results
and are never re-fitted, rendering emits raster and vector files without
touching any input, empty inputs fail loudly, and the command line
offers one subcommand per figure id.
"""

import argparse
import json
import os
import re

import numpy as np
import pytest

from figscripts import figures
from figscripts.__main__ import build_parser, main

import matplotlib.pyplot as plt

FIXTURES = {
    "fig1a": "fig1_dir",
    "fig6": "fig6_dir",
    "fig7a": "fig7a_dir",
    "fig9": "fig9_dir",
}

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


# ---------------------------------------------------------- rendering


@pytest.mark.parametrize("figure_id", sorted(figures.BUILDERS))
def test_render_emits_raster_and_vector(figure_id, request, tmp_path):
    input_dir = request.getfixturevalue(FIXTURES[figure_id])
    spec = figures.BUILDERS[figure_id](input_dir)
    written = figures.render(spec, str(tmp_path))
    assert [os.path.basename(p) for p in written] == [
        f"{figure_id}.png", f"{figure_id}.svg"]
    for path in written:
        assert os.path.getsize(path) > 1024
    with open(written[0], "rb") as fh:
        assert fh.read(8) == PNG_MAGIC
    with open(written[1], "rb") as fh:
        assert b"<svg" in fh.read(2048)


def test_render_respects_format_selection(fig9_dir, tmp_path):
    spec = figures.spec_fig9(fig9_dir)
    written = figures.render(spec, str(tmp_path), formats=("png",))
    assert [os.path.basename(p) for p in written] == ["fig9.png"]
    assert not (tmp_path / "fig9.svg").exists()


def test_render_leaves_inputs_untouched(fig1_dir, tmp_path):
    spec = figures.spec_fig1a(fig1_dir)
    before = {path: figures._sha256(path) for path in spec.inputs}
    figures.render(spec, str(tmp_path))
    assert {path: figures._sha256(path) for path in spec.inputs} == before


def test_render_rejects_input_mutation(tmp_path, monkeypatch):
    csv_path = tmp_path / "profile.csv"
    csv_path.write_text("t,x,density\n1.0,0.0,0.5\n1.0,0.5,0.5\n")

    def vandal(spec, ax):
        with open(spec.inputs[0], "a") as fh:
            fh.write("2.0,0.0,0.1\n")
        ax.plot([0.0, 1.0], [0.0, 1.0], label="vandal")

    monkeypatch.setitem(figures.DRAWERS, "fig9", vandal)
    spec = figures.FigureSpec(figure_id="fig9", inputs=(str(csv_path),),
                              x_scale="linear", y_scale="linear")
    with pytest.raises(figures.ReadOnlyViolation):
        figures.render(spec, str(tmp_path / "out"))


def test_empty_input_is_an_error_not_an_empty_plot(tmp_path):
    csv_path = tmp_path / "survival.csv"
    csv_path.write_text("threshold,probability\n")
    spec = figures.FigureSpec(figure_id="fig1a", inputs=(str(csv_path),))
    out = tmp_path / "out"
    with pytest.raises(figures.EmptyInputError):
        figures.render(spec, str(out))
    assert not out.exists()


# --------------------------------------------------- spec verification


def test_missing_input_fails_at_spec_construction(tmp_path):
    with pytest.raises(figures.FigureError, match="not found"):
        figures.FigureSpec(figure_id="fig9",
                           inputs=(str(tmp_path / "nope.csv"),))


def test_axis_scales_are_validated(tmp_path):
    csv_path = tmp_path / "profile.csv"
    csv_path.write_text("t,x,density\n1.0,0.0,1.0\n")
    with pytest.raises(figures.FigureError, match="axis scale"):
        figures.FigureSpec(figure_id="fig9", inputs=(str(csv_path),),
                           x_scale="sqrt")


def test_unknown_figure_id_is_rejected(tmp_path):
    csv_path = tmp_path / "profile.csv"
    csv_path.write_text("t,x,density\n1.0,0.0,1.0\n")
    with pytest.raises(figures.FigureError, match="figure id"):
        figures.FigureSpec(figure_id="fig99", inputs=(str(csv_path),))


def test_schema_mismatch_reports_column_diff(tmp_path):
    csv_path = tmp_path / "survival.csv"
    csv_path.write_text("threshold,prob\n1.0,0.5\n")
    with pytest.raises(figures.SchemaError) as err:
        figures._read_table(str(csv_path), figures.SURVIVAL_COLUMNS)
    message = str(err.value)
    assert "missing columns ['probability']" in message
    assert "unexpected columns ['prob']" in message


def test_non_numeric_cell_is_a_schema_error(tmp_path):
    csv_path = tmp_path / "msd.csv"
    csv_path.write_text("time,msd\n1.0,fast\n")
    with pytest.raises(figures.SchemaError, match="non-numeric"):
        figures._read_table(str(csv_path), figures.MSD_COLUMNS)


# ------------------------------------------------------------ overlays


def test_overlays_come_from_stored_fits(fig6_dir):
    spec = figures.spec_fig6(fig6_dir)
    with open(os.path.join(fig6_dir, "fit_loglog", "fit_loglog.json")) as fh:
        loglog = json.load(fh)
    with open(os.path.join(fig6_dir, "fit_semilog", "fit_semilog.json")) as fh:
        semilog = json.load(fh)
    power, tail = spec.overlays
    assert power.space == "loglog"
    assert power.slope == loglog["slope"]
    assert power.intercept == loglog["intercept"]
    assert power.window == tuple(loglog["window"])
    assert tail.space == "semilog"
    assert tail.slope == semilog["slope"]
    assert tail.intercept == semilog["intercept"]
    assert tail.window == tuple(semilog["window"])


def test_overlay_rejects_wrong_operation(fig6_dir):
    path = os.path.join(fig6_dir, "fit_loglog", "fit_loglog.json")
    with pytest.raises(figures.SchemaError, match="operation"):
        figures.overlay_from_fit(path, "fit-semilog")


def test_overlay_rejects_missing_keys(tmp_path):
    path = tmp_path / "fit.json"
    path.write_text(json.dumps({"operation": "fit-loglog",
                                "intercept": 0.0, "window": [1.0, 10.0]}))
    with pytest.raises(figures.SchemaError, match="slope"):
        figures.overlay_from_fit(str(path), "fit-loglog")


def test_overlay_curves_evaluate_the_fit():
    power = figures.SlopeOverlay(slope=-0.5, intercept=1.0,
                                 window=(1.0, 100.0), space="loglog",
                                 label="slope -0.5")
    x, y = power.curve(n=3)
    assert np.allclose(x, [1.0, 10.0, 100.0])
    assert np.allclose(y, [10.0, 10.0 ** 0.5, 1.0])
    tail = figures.SlopeOverlay(slope=-0.1, intercept=0.0,
                                window=(0.0, 10.0), space="semilog",
                                label="rate 0.23")
    x, y = tail.curve(n=3)
    assert np.allclose(x, [0.0, 5.0, 10.0])
    assert np.allclose(y, [1.0, 10.0 ** -0.5, 0.1])


# ------------------------------------------------------- profile checks


def test_fig9_profile_integrates_to_one(fig9_dir):
    spec = figures.spec_fig9(fig9_dir)
    table = figures._read_table(spec.inputs[0], figures.PROFILE_COLUMNS)
    times = np.unique(table["t"])
    assert times.size >= 2
    for t in times:
        sel = table["t"] == t
        integral = np.trapezoid(table["density"][sel], table["x"][sel])
        assert abs(integral - 1.0) <= 1e-3, f"t={t}: integral {integral}"


def test_fig9_draws_fronts_at_plus_minus_t(fig9_dir):
    spec = figures.spec_fig9(fig9_dir)
    fig, ax = plt.subplots()
    try:
        figures.draw(spec, ax)
        verticals = set()
        for line in ax.lines:
            x = np.asarray(line.get_xdata(), dtype=float)
            if x.size == 2 and x[0] == x[1]:
                verticals.add(float(x[0]))
        table = figures._read_table(spec.inputs[0], figures.PROFILE_COLUMNS)
        for t in np.unique(table["t"]):
            assert float(t) in verticals
            assert float(-t) in verticals
    finally:
        plt.close(fig)


# -------------------------------------------------------- command line


def test_cli_offers_one_subcommand_per_figure():
    parser = build_parser()
    sub = next(a for a in parser._actions
               if isinstance(a, argparse._SubParsersAction))
    assert sorted(sub.choices) == sorted(figures.BUILDERS)


def test_cli_renders_one_figure(fig9_dir, tmp_path, capsys):
    out = tmp_path / "figures"
    assert main(["fig9", "--input", fig9_dir, "--out", str(out)]) == 0
    assert (out / "fig9.png").is_file()
    assert (out / "fig9.svg").is_file()
    listed = capsys.readouterr().out.splitlines()
    assert str(out / "fig9.png") in listed
    assert str(out / "fig9.svg") in listed


def test_cli_reports_missing_layout(tmp_path, capsys):
    code = main(["fig9", "--input", str(tmp_path),
                 "--out", str(tmp_path / "out")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "not found" in err


def test_cli_format_flag(fig9_dir, tmp_path):
    out = tmp_path / "only_png"
    assert main(["fig9", "--input", fig9_dir, "--out", str(out),
                 "--formats", "png"]) == 0
    assert (out / "fig9.png").is_file()
    assert not (out / "fig9.svg").exists()


# --------------------------------------------------------- independence


def test_component_never_imports_the_simulation_package():
    pkg_dir = os.path.dirname(figures.__file__)
    pattern = re.compile(r"^\s*(import|from)\s+runtumble", re.M)
    for name in sorted(os.listdir(pkg_dir)):
        if not name.endswith(".py"):
            continue
        with open(os.path.join(pkg_dir, name)) as fh:
            assert not pattern.search(fh.read()), name
