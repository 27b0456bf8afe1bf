import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from traceconvex import report
from traceconvex.errors import NotHermitian, NotPSD
from traceconvex.probe import ProbeConfig, scan_grid
from traceconvex.sampling import random_matrix


@pytest.fixture(scope="module")
def small_report():
    return scan_grid([0.5, 1.0], [0.5, -1.0], [1, 2], ProbeConfig(dim=2, trials=60, seed=3))


def test_csv_header_and_rows(small_report):
    lines = report.region_csv(small_report).splitlines()
    assert lines[0] == "p,q,s,dim,trials,convex_violations,concave_violations,empirical,theoretical,agrees"
    assert len(lines) == 1 + len(small_report)
    first = lines[1].split(",")
    assert first[:5] == ["0.5", "0.5", "1", "2", "60"]
    assert first[-1] in ("true", "false")


def test_fmt_round_trip():
    for x in (0.1, 1 / 3, -2.5e-17, 1e300):
        assert float(report.fmt(x)) == x


def test_json_round_trip(small_report):
    data = json.loads(report.region_json(small_report, {"seed": 3}))
    assert data["meta"] == {"seed": 3}
    assert len(data["entries"]) == len(small_report)
    for e, d in zip(small_report, data["entries"]):
        assert (d["p"], d["q"], d["s"]) == (e.p, e.q, e.s)
        assert d["empirical"] == str(e.empirical)
        for k, w in d["witnesses"].items():
            back = report.witness_from_dict(w)
            assert back.reverify() == pytest.approx(e.witnesses[k].margin, rel=1e-9)


def test_matrix_round_trip(rng):
    m = random_matrix("ginibre", 3, rng)
    assert np.array_equal(report.matrix_from_json(json.loads(json.dumps(report.matrix_to_json(m)))), m)


def test_load_state(rng):
    rho = random_matrix("density", 2, rng)
    assert np.allclose(report.load_state(report.matrix_to_json(rho)), rho)
    with pytest.raises(NotHermitian):
        report.load_state(report.matrix_to_json(np.array([[0.5, 1], [0, 0.5]])))
    with pytest.raises(NotPSD):
        report.load_state(report.matrix_to_json(np.diag([1.5, -0.5])))
    with pytest.raises(ValueError):
        report.load_state(report.matrix_to_json(np.eye(2)))


def test_svg_is_well_formed(small_report):
    svg = report.region_svg(small_report)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    rects = [el for el in root.iter() if el.tag.endswith("rect")]
    # two rects per node plus one legend swatch per label
    assert len(rects) == 2 * len(small_report) + 5
    assert "s = 1" in svg and "s = 2" in svg


def test_svg_marks_disagreement(small_report):
    e = small_report.entries[0]
    e.agrees = False
    try:
        assert "<path" in report.region_svg(small_report)
    finally:
        e.agrees = True
