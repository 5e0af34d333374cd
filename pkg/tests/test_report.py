import json
import math

import numpy as np
import pytest

from lscover.errors import ReportCorrupted
from lscover.report import CoverReport, checksum, dumps_report, load_report, save_report, to_plain


def sample_report():
    return CoverReport("torus_cover", 2.5, True, 0.01, {"renbyanything": 8.3, "missing": math.nan},
                       chosen_centers=np.array([[0.1, 0.2], [0.3, 0.4]]),
                       stats={"chosen": np.int64(2), "ok": np.bool_(True), "inf": math.inf},
                       params={"delta": 0.05, "seed": 1})


def test_round_trip(tmp_path):
    p = save_report(sample_report(), tmp_path / "r" / "report.json")
    d = load_report(p)
    assert d["density"] == 2.5 and d["valid"] is True
    assert d["chosen_centers"] == [[0.1, 0.2], [0.3, 0.4]]
    assert d["bounds"]["missing"] is None and d["stats"]["inf"] is None
    assert d["checksum"] == checksum(d)
    # stable bytes
    assert p.read_text() == dumps_report(sample_report())
    assert list(json.loads(p.read_text())) == sorted(json.loads(p.read_text()))


def test_corruption_is_detected(tmp_path):
    p = save_report(sample_report(), tmp_path / "report.json")
    d = json.loads(p.read_text())
    d["density"] = 2.4
    p.write_text(json.dumps(d, sort_keys=True, indent=2))
    with pytest.raises(ReportCorrupted, match="checksum"):
        load_report(p)
    p.write_text("{not json")
    with pytest.raises(ReportCorrupted):
        load_report(p)
    p.write_text("[1, 2]")
    with pytest.raises(ReportCorrupted):
        load_report(p)
    with pytest.raises(ReportCorrupted):
        load_report(tmp_path / "absent.json")


def test_schema_is_enforced(tmp_path):
    bad = CoverReport("sphere_cover", -1.0, True, None)
    with pytest.raises(ReportCorrupted, match="schema"):
        dumps_report(bad)
    rot = CoverReport("sphere_cover", 1.5, True, None, chosen_rotations=[[1, 0, 0, 0, 1, 0, 0, 0]])
    with pytest.raises(ReportCorrupted):
        dumps_report(rot)
    p = tmp_path / "r.json"
    d = json.loads(dumps_report(sample_report()))
    del d["valid"]
    d["checksum"] = checksum(d)
    p.write_text(json.dumps(d))
    with pytest.raises(ReportCorrupted, match="schema"):
        load_report(p)


def test_setcover_report():
    text = dumps_report({"greedy_size": 3, "tau": 3, "tau_star": 7 / 3, "max_deg": 3,
                         "ls_bound": 4.89, "holds": True})
    assert json.loads(text)["greedy_size"] == 3


def test_to_plain():
    assert to_plain({1: (np.float32(0.5), np.array([1, 2]))}) == {"1": [0.5, [1, 2]]}
    assert to_plain(-math.inf) is None
