"""Deterministic vector-graphics output."""

import xml.etree.ElementTree as ET

import numpy as np

from gramspec._svg import write_overlay


def _curves():
    xs = np.linspace(0.0, 2.0, 40)
    return [
        {"xs": xs, "ys": np.exp(-xs), "label": "limit"},
        {"xs": np.array([0.0, 0.5, 1.0, 2.0]),
         "ys": np.array([0.0, 0.25, 0.5, 1.0]),
         "label": "empirical", "kind": "step"},
    ]


def test_overlay_is_valid_svg_with_polylines(tmp_path):
    path = tmp_path / "plot.svg"
    write_overlay(path, _curves(), title="densities", x_label="x",
                  y_label="F")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    body = path.read_text()
    assert body.count("<polyline") >= 2
    assert "densities" in body and "empirical" in body


def test_overlay_bytes_are_deterministic(tmp_path):
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    write_overlay(a, _curves(), title="t", x_label="x", y_label="y")
    write_overlay(b, _curves(), title="t", x_label="x", y_label="y")
    assert a.read_bytes() == b.read_bytes()
    assert b"<?xml" == a.read_bytes()[:5] or a.read_bytes().startswith(b"<svg")
