import csv
from pathlib import Path

import matplotlib.pyplot as plt
import pytest

from safepred_plots import cli
from safepred_plots.render import (
    ColumnError,
    EmptyInputError,
    PlotJob,
    read_rows,
    render,
)

DATA = Path(__file__).parent / "data"

GOLDEN_RELIABILITY = DATA / "reliability_monolithic_specific_k5_cal.csv"
GOLDEN_CALIBRATION = DATA / "calibration_monolithic.csv"
GOLDEN_METRICS = DATA / "metrics.csv"


def count_rows(path):
    with open(path, newline="") as fh:
        return len(list(csv.DictReader(fh)))


def predictors_in(path):
    with open(path, newline="") as fh:
        return {r["predictor"] for r in csv.DictReader(fh)}


class TestReliability:
    def test_golden_renders_with_bar_per_bin(self, tmp_path):
        out = tmp_path / "reliability.png"
        fig = render(PlotJob("reliability", GOLDEN_RELIABILITY, out, title="calibrated"))
        try:
            bins = count_rows(GOLDEN_RELIABILITY)
            assert out.exists() and out.stat().st_size > 0
            bars = [p for p in fig.axes[0].patches if p.get_height() is not None]
            assert len(bars) == bins
        finally:
            plt.close(fig)


class TestEceMce:
    def test_golden_renders_four_lines_per_predictor(self, tmp_path):
        out = tmp_path / "ece_mce.png"
        fig = render(PlotJob("ece_mce", GOLDEN_CALIBRATION, out))
        try:
            assert out.exists() and out.stat().st_size > 0
            n_predictors = len(predictors_in(GOLDEN_CALIBRATION))
            lines = fig.axes[0].get_lines()
            assert len(lines) == 4 * n_predictors
        finally:
            plt.close(fig)


class TestHorizonSweep:
    def test_golden_renders_line_per_predictor(self, tmp_path):
        out = tmp_path / "sweep.png"
        fig = render(PlotJob("horizon_sweep", GOLDEN_METRICS, out, title="F1 by horizon"))
        try:
            assert out.exists() and out.stat().st_size > 0
            lines = fig.axes[0].get_lines()
            assert len(lines) == len(predictors_in(GOLDEN_METRICS))
        finally:
            plt.close(fig)


class TestErrors:
    def test_empty_body_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("bin,conf,acc,count,c\n")
        with pytest.raises(EmptyInputError):
            render(PlotJob("reliability", path, tmp_path / "x.png"))

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("bin,conf,count\n0,0.5,10\n")
        with pytest.raises(ColumnError, match="acc"):
            render(PlotJob("reliability", path, tmp_path / "x.png"))

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError):
            render(PlotJob("pie", GOLDEN_METRICS, tmp_path / "x.png"))

    def test_input_not_mutated(self, tmp_path):
        before = GOLDEN_METRICS.read_bytes()
        out = tmp_path / "sweep.png"
        fig = render(PlotJob("horizon_sweep", GOLDEN_METRICS, out))
        plt.close(fig)
        assert GOLDEN_METRICS.read_bytes() == before


class TestGeometryDeterminism:
    def test_same_csv_same_axis_ranges(self, tmp_path):
        a = render(PlotJob("horizon_sweep", GOLDEN_METRICS, tmp_path / "a.png"))
        b = render(PlotJob("horizon_sweep", GOLDEN_METRICS, tmp_path / "b.png"))
        try:
            assert a.axes[0].get_xlim() == b.axes[0].get_xlim()
            assert a.axes[0].get_ylim() == b.axes[0].get_ylim()
            assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
        finally:
            plt.close(a)
            plt.close(b)


class TestCli:
    def test_cli_renders_all_kinds(self, tmp_path):
        jobs = [
            ("reliability", GOLDEN_RELIABILITY),
            ("ece_mce", GOLDEN_CALIBRATION),
            ("horizon_sweep", GOLDEN_METRICS),
        ]
        for kind, src in jobs:
            out = tmp_path / f"{kind}.png"
            assert cli.main([kind, str(src), str(out), "--title", kind]) == 0
            assert out.exists() and out.stat().st_size > 0

    def test_cli_missing_file(self, tmp_path):
        assert cli.main(["reliability", str(tmp_path / "nope.csv"), str(tmp_path / "x.png")]) == 3

    def test_cli_bad_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        assert cli.main(["ece_mce", str(path), str(tmp_path / "x.png")]) == 4
