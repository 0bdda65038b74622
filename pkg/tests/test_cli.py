import csv
import io
import json
import math
import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyplat import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_enumerate_csv(capsys):
    code, out, err = run(capsys, "enumerate", "--X", "1.5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["a", "b", "c", "d", "cosh_dist", "omega"]
    assert len(rows) == 21
    assert "N=20" in err


def test_enumerate_to_file(tmp_path, capsys):
    path = tmp_path / "orbit.csv"
    code, out, _ = run(capsys, "enumerate", "--group", "GammaN", "--N", "2", "--X", "10", "--out", str(path))
    assert code == 0 and out == ""
    assert len(path.read_text().splitlines()) == 27
    assert [p.name for p in tmp_path.iterdir()] == ["orbit.csv"]


def test_enumerate_threads_byte_identical(tmp_path, capsys):
    texts = []
    for t in (1, 4):
        path = tmp_path / f"t{t}.csv"
        assert run(capsys, "enumerate", "--X", "3000", "--z0", "0.2,1.3", "--threads", str(t),
                   "--out", str(path))[0] == 0
        texts.append(path.read_bytes())
    assert texts[0] == texts[1]


def test_invalid_point_exit_code(capsys):
    code, _, err = run(capsys, "enumerate", "--z0", "0,-1")
    assert code == cli.EXIT_CONFIG
    assert "invalid configuration" in err


def test_budget_exit_code_leaves_no_file(tmp_path, capsys):
    path = tmp_path / "big.csv"
    code, _, _ = run(capsys, "enumerate", "--X", "1e4", "--budget", "10", "--out", str(path))
    assert code == cli.EXIT_BUDGET
    assert list(tmp_path.iterdir()) == []


def test_existing_file_survives_failure(tmp_path, capsys):
    path = tmp_path / "keep.csv"
    path.write_text("old\n")
    code, _, _ = run(capsys, "enumerate", "--X", "1e4", "--budget", "10", "--out", str(path))
    assert code == cli.EXIT_BUDGET
    assert path.read_text() == "old\n"


def test_missing_config_is_io_error(tmp_path, capsys):
    code, _, _ = run(capsys, "enumerate", "--config", str(tmp_path / "nope.json"))
    assert code == cli.EXIT_IO


def test_unknown_config_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"thresholds": [10], "colour": "red"}))
    assert run(capsys, "equidist", "--config", str(cfg))[0] == cli.EXIT_CONFIG


def test_equidist_json(capsys):
    code, out, _ = run(capsys, "equidist", "--X", "100,1000,10000,300")
    assert code == 0
    rep = json.loads(out)
    assert [r["X"] for r in rep["rows"]] == [100, 300, 1000, 10000]
    assert rep["fitted_exponent"] is not None and rep["fitted_exponent"] < 0
    assert rep["interval"] == {"start": 0, "length": 0.25}


def test_density_csv(capsys):
    code, out, _ = run(capsys, "density", "--z0", "0,2", "--samples", "4", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["omega"]) for r in rows] == [0.0, 0.25, 0.5, 0.75]
    assert float(rows[0]["rho"]) == pytest.approx(0.5)
    assert float(rows[2]["k"]) == pytest.approx(2.0)


def test_theorem_reports(capsys):
    code, out, _ = run(capsys, "theorem3", "--z0", "0,2", "--X", "2000", "--bins", "4")
    assert code == 0
    rep = json.loads(out)
    assert rep["N"] > 0 and len(rep["bins"]) == 4
    code, out, _ = run(capsys, "theorem2", "--group", "GammaN", "--N", "2", "--z0", "0,2", "--X", "2000",
                       "--bins", "6")
    assert code == 0
    assert "predicted_folded_rho" in json.loads(out)["bins"][0]


def test_expsum_and_gseries(capsys):
    code, out, _ = run(capsys, "expsum", "--X", "100,1000", "--n-max", "2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    zero = [r for r in rows if r["n"] == "0"]
    assert all(float(r["ratio"]) == 1.0 for r in zero)
    code, out, _ = run(capsys, "gseries", "--X", "1000", "--s", "1.5,2", "--n-max", "1", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4


def test_qdist_trivial_circle(capsys):
    code, out, _ = run(capsys, "qdist", "--radii", "3", "--n-angles", "4", "--format", "csv")
    assert code == 0
    for r in csv.DictReader(io.StringIO(out)):
        assert float(r["Q_exact"]) == pytest.approx(3.0, rel=1e-14)
        assert float(r["gap"]) == pytest.approx(0.0, abs=1e-9)


def test_qdist_radius_too_small(capsys):
    assert run(capsys, "qdist", "--z1", "0,50", "--radii", "1")[0] == cli.EXIT_CONFIG


def test_json_floats_round_trip():
    text = cli._json_text({"v": [0.1, 1 / 3, math.pi, float("inf")], "n": 3, "s": "x"})
    back = json.loads(text)
    assert back["v"][:3] == [0.1, 1 / 3, math.pi] and back["v"][3] is None


@given(st.lists(st.floats(1.0, 1e6), min_size=1, max_size=4), st.integers(2, 64),
       st.floats(0, 0.99), st.floats(0.01, 1.0), st.integers(0, 8))
def test_config_round_trip(thresholds, bins, start, length, threads):
    cfg = cli.ExperimentConfig.from_dict({
        "thresholds": thresholds, "bins": bins, "threads": threads,
        "interval": {"start": start, "length": length},
        "group": {"kind": "GammaN", "N": 3},
    })
    again = cli.ExperimentConfig.loads(cfg.dumps())
    assert again == cfg


@pytest.mark.parametrize("bad", [
    {"thresholds": [0.5]},
    {"bins": 0},
    {"threads": -1},
    {"s_values": [1.0]},
    {"group": {"kind": "GammaN", "N": 0}},
    {"points": {"z1": [0, 0]}},
    {"output": {"format": "xml"}},
    {"interval": {"start": 0, "length": 2}},
])
def test_config_rejects(bad):
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig.from_dict(bad)


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "hyplat", "enumerate", "--X", "1"], capture_output=True,
                         text=True, env={**os.environ})
    assert res.returncode == 0
    assert len(res.stdout.splitlines()) == 5
