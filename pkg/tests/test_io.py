"""Tests for config handling, signal/CSV files, and SVG rendering."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from flowbridge.config import apply_overrides, dump_config, load_config
from flowbridge.exceptions import ConfigError, CsvFormatError, ValidationError
from flowbridge.signalio import format_value, load_signals, read_csv, save_signals, write_csv
from flowbridge.svgplot import SvgFigure


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = {"task": {"family": "two_moons"}, "seed": 3}
        p = tmp_path / "cfg.json"
        dump_config(cfg, p)
        assert load_config(p) == cfg

    def test_rejects_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_rejects_non_object(self, tmp_path):
        p = tmp_path / "list.json"
        p.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json")

    def test_overrides_parse_json_values(self):
        cfg = {"train": {"lr": 1e-4}}
        out = apply_overrides(cfg, ["train.lr=0.001", "train.iterations=500", "task.family=two_moons"])
        assert out["train"]["lr"] == 0.001
        assert out["train"]["iterations"] == 500
        assert out["task"]["family"] == "two_moons"
        # original untouched
        assert cfg["train"]["lr"] == 1e-4

    def test_override_booleans_and_null(self):
        out = apply_overrides({}, ["a.flag=true", "a.other=null"])
        assert out["a"]["flag"] is True
        assert out["a"]["other"] is None

    def test_override_requires_equals(self):
        with pytest.raises(ConfigError):
            apply_overrides({}, ["broken"])

    def test_override_through_scalar_rejected(self):
        with pytest.raises(ConfigError):
            apply_overrides({"a": 3}, ["a.b=1"])


class TestSignalFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 64)).astype(np.float32)
        p = tmp_path / "sig.fbs"
        save_signals(p, x, fs=8000.0)
        y, fs = load_signals(p)
        assert np.array_equal(x, y)
        assert fs == 8000.0

    def test_sidecar_contents(self, tmp_path):
        p = tmp_path / "sig.fbs"
        save_signals(p, np.zeros((2, 8), dtype=np.float32), fs=4000.0)
        meta = json.loads((tmp_path / "sig.fbs.json").read_text())
        assert meta["shape"] == [2, 8]
        assert meta["dtype"] == "float32"

    def test_size_mismatch_detected(self, tmp_path):
        p = tmp_path / "sig.fbs"
        save_signals(p, np.zeros((2, 8), dtype=np.float32))
        p.write_bytes(p.read_bytes()[:-4])
        with pytest.raises(ValidationError):
            load_signals(p)

    def test_missing_sidecar(self, tmp_path):
        p = tmp_path / "naked.fbs"
        p.write_bytes(b"\x00" * 16)
        with pytest.raises(ValidationError):
            load_signals(p)


class TestCsv:
    def test_floats_round_trip_exactly(self, tmp_path):
        p = tmp_path / "t.csv"
        vals = [np.float32(1) / np.float32(3), np.float64(np.pi), 0.1]
        write_csv(p, ["a", "b", "c"], [vals])
        header, rows = read_csv(p)
        assert header == ["a", "b", "c"]
        assert float(rows[0][0]) == float(vals[0])
        assert float(rows[0][1]) == vals[1]
        assert float(rows[0][2]) == 0.1

    def test_format_value(self):
        assert format_value(np.int64(4)) == "4"
        assert format_value("x") == "x"
        assert float(format_value(np.float32(0.1))) == float(np.float32(0.1))

    def test_ragged_write_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            write_csv(tmp_path / "r.csv", ["a", "b"], [[1]])

    def test_ragged_read_names_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n3\n")
        with pytest.raises(CsvFormatError) as exc:
            read_csv(p)
        assert exc.value.line == 3

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(CsvFormatError):
            read_csv(p)


class TestSvgFigure:
    def _figure(self):
        fig = SvgFigure(title="loss < curve", xlabel="iteration", ylabel="loss")
        xs = np.arange(10)
        fig.line(xs, np.exp(-xs / 3.0), label="a & b")
        fig.band(xs, np.exp(-xs / 3.0) - 0.05, np.exp(-xs / 3.0) + 0.05)
        fig.scatter(xs, np.exp(-xs / 2.0), label="points")
        return fig

    def test_renders_well_formed_xml(self):
        root = ET.fromstring(self._figure().render())
        assert root.tag.endswith("svg")

    def test_contains_expected_elements(self):
        svg = self._figure().render()
        assert "<polyline" in svg
        assert "<polygon" in svg
        assert "<circle" in svg
        assert "loss &lt; curve" in svg
        assert "a &amp; b" in svg

    def test_coordinates_stay_in_viewport(self):
        svg = self._figure().render()
        root = ET.fromstring(svg)
        ns = {"s": "http://www.w3.org/2000/svg"}
        for poly in root.findall(".//s:polyline", ns):
            coords = [float(v) for pair in poly.get("points").split() for v in pair.split(",")]
            assert all(-1 <= c <= 641 for c in coords[::2])
            assert all(-1 <= c <= 421 for c in coords[1::2])

    def test_deterministic_output(self):
        assert self._figure().render() == self._figure().render()

    def test_save(self, tmp_path):
        p = tmp_path / "fig.svg"
        self._figure().save(p)
        assert p.read_text().startswith("<svg")

    def test_empty_figure_rejected(self):
        with pytest.raises(ValidationError):
            SvgFigure().render()

    def test_non_finite_rejected(self):
        fig = SvgFigure()
        with pytest.raises(ValidationError):
            fig.line([0, 1], [0, np.nan])

    def test_constant_series_renders(self):
        fig = SvgFigure()
        fig.line([0, 1, 2], [1.0, 1.0, 1.0])
        ET.fromstring(fig.render())
