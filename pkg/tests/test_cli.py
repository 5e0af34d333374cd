import json

import pytest

from lscover.cli import main
from lscover.config import load_config, parse_text
from lscover.errors import ConfigError


def test_fano_preset(tmp_path, capsys):
    assert main(["setcover", "--preset", "fano", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["greedy_size"] == 3 and rep["tau"] == 3
    assert rep["tau_star"] == pytest.approx(7 / 3)
    assert rep["holds"]
    assert "greedy_size=3" in capsys.readouterr().out


def test_repeat_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["cover-torus", "--preset", "disk-torus", "--out", str(a), "--threads", "1",
                 "--set", "points=true"]) == 0
    assert main(["cover-torus", "--preset", "disk-torus", "--out", str(b), "--threads", "4",
                 "--set", "points=true"]) == 0
    for name in ("report.json", "points.csv", "bounds.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert main(["verify", "--report", str(a / "report.json")]) == 0


def test_corrupt_report_exit_code(tmp_path):
    assert main(["setcover", "--preset", "fano", "--out", str(tmp_path)]) == 0
    p = tmp_path / "report.json"
    p.write_text(p.read_text().replace('"greedy_size": 3', '"greedy_size": 2'))
    assert main(["verify", "--report", str(p)]) == 4


def test_bounds_tables(tmp_path):
    assert main(["bounds", "--preset", "bw-table", "--out", str(tmp_path / "bw")]) == 0
    assert main(["bounds", "--set", "experiment=bound_table", "--out", str(tmp_path / "bt")]) == 0
    assert main(["bounds", "--set", "experiment=inequality_suite", "--set", "table=lnnesszam",
                 "--out", str(tmp_path / "ln")]) == 0
    text = (tmp_path / "ln" / "lnnesszam.csv").read_text().splitlines()
    assert text[0] == "n,first,middle,right,link1,link2,chain" and len(text) == 7


def test_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("# random set cover\nexperiment = setcover_bench\ninstance = random\n"
                        "elements = 15\nsets = 20\ndensity = 0.3\n")
    assert main(["setcover", "--config", str(cfg_path), "--seed", "2", "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["tau"] <= rep["greedy_size"] < rep["ls_bound"]
    cfg = load_config(cfg_path, {"seed": "9"})
    assert cfg.seed == 9 and cfg.get("elements") == 15


def test_configuration_errors(tmp_path):
    out = ["--out", str(tmp_path)]
    assert main(["cover-torus", "--preset", "disk-torus", "--set", "delta=-1"] + out) == 2
    assert main(["cover-torus", "--preset", "fano"] + out) == 2
    assert main(["cover-torus", "--preset", "nope"] + out) == 2
    assert main(["cover-torus", "--preset", "disk-torus", "--set", "colour=red"] + out) == 2
    assert main(["cover-torus", "--preset", "disk-torus", "--grid-step", "0.1"] + out) == 2
    assert main(["cover-torus", "--config", str(tmp_path / "missing.cfg")] + out) == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(ConfigError):
        parse_text("just words")


def test_infeasible_exit_code(tmp_path):
    # centres far coarser than delta leave net points uncovered
    assert main(["cover-torus", "--preset", "disk-torus", "--set", "stride=0.5", "--out", str(tmp_path)]) == 3
