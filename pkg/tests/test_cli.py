import json
import math

import numpy as np
import pytest

from persistwalk import cli, laws
from persistwalk.itn import ItnParams


def _run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.run([*argv, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def _csv_body(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    rows = [list(map(float, l.split(","))) for l in lines[1:]]
    return header, np.array(rows)


def test_header_lines(tmp_path):
    code, text = _run(tmp_path, "laws", "c0=1", "c1=2", "t=1")
    assert code == 0
    head = text.splitlines()[:4]
    assert head[0].startswith("# persistwalk ")
    assert head[1] == "# command: laws"
    assert json.loads(head[2][len("# config: ") :])["c1"] == 2.0
    assert head[3] == "# seed: 20260114"


def test_density_grid_sums_to_one(tmp_path):
    _, text = _run(tmp_path, "laws", "c0=1", "c1=2", "t=1", "n_x=201")
    header, rows = _csv_body(text)
    assert header == ["x", "density"] and rows.shape == (201, 2)
    trap = np.sum(0.5 * (rows[1:, 1] + rows[:-1, 1]) * np.diff(rows[:, 0]))
    assert trap + math.exp(-1) == pytest.approx(1.0, abs=1e-4)


def test_transform_and_parity_tables(tmp_path):
    _, text = _run(tmp_path, "laws", "query=transform", "c0=1", "c1=2", "t=0.7", "mu=[0, 0.5]")
    _, rows = _csv_body(text)
    assert rows[0, 3] == pytest.approx(1.0, abs=1e-14)
    _, text = _run(tmp_path, "laws", "query=parity", "c0=1", "c1=2", "t=[0, 1]")
    _, rows = _csv_body(text)
    assert rows[0, 1:3].tolist() == [1.0, 0.0]


def test_simulate_empty_and_reproducible(tmp_path):
    code, text = _run(tmp_path, "simulate", "model=itn", "c0=1", "c1=2", "t=1", "--paths", "0")
    assert code == 0 and text.splitlines()[-1] == "path,t,z,n"
    a = _run(tmp_path, "simulate", "model=walk", "alpha0=0.3", "beta0=0.4", "steps=[3, 9]", "--paths", "50", name="a")[1]
    b = _run(tmp_path, "simulate", "model=walk", "alpha0=0.3", "beta0=0.4", "steps=[3, 9]", "--paths", "50", name="b")[1]
    assert a == b


def test_simulate_itn_mean(tmp_path):
    _, text = _run(tmp_path, "simulate", "model=itn", "c0=1", "c1=2", "t=1.5", "--paths", "20000")
    _, rows = _csv_body(text)
    z = rows[:, 2]
    ref = laws.mean_z(ItnParams(1, 2), 1.5)
    assert abs(z.mean() - ref) < 4 * z.std(ddof=1) / math.sqrt(z.size)


def test_config_file_and_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"query": "parity", "c0": 1, "c1": 2, "seed": 5}))
    code, text = _run(tmp_path, "laws", "--config", str(cfg), "--seed", "9", "--format", "json")
    doc = json.loads(text)
    assert code == 0 and doc["meta"]["seed"] == 9 and doc["data"]["columns"][0] == "t"


def test_verify_exit_codes(tmp_path, capsys):
    code, text = _run(tmp_path, "verify", "regime=CLT", "dx=0.04", "t_grid=[1]", "--paths", "4000")
    assert code == 0 and json.loads(text)["data"]["passed"] is True
    code, _ = _run(tmp_path, "verify", "regime=CLT", "dx=0.04", "t_grid=[1]", "reference_variance_scale=2", "--paths", "4000")
    assert code == 1
    assert "ks_vs_normal" in capsys.readouterr().err


def test_verify_default_clt_passes(tmp_path):
    code, text = _run(tmp_path, "verify", "regime=CLT")
    assert code == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "regime=NOPE"],
        ["verify", "regime=ITN", "dx=0.9", "c0=2"],
        ["laws", "c0=1", "c1=2", "t=1", "unknown=1"],
        ["laws", "c0=-1", "c1=2", "t=1"],
        ["laws", "novalue"],
        ["telegraph", "courant=1.5"],
        ["simulate", "--paths", "-1", "model=itn", "c0=1", "c1=1", "t=1"],
    ],
)
def test_configuration_errors(tmp_path, argv):
    assert cli.run(argv + ["--out", str(tmp_path / "x")]) == 2


def test_malformed_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run(["laws", "--config", str(bad)]) == 2
    assert cli.run(["laws", "--config", str(tmp_path / "missing.json")]) == 2


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.run(["frobnicate"])
    assert exc.value.code == 2


def test_telegraph_tables(tmp_path):
    _, text = _run(tmp_path, "telegraph", "t=0", "--paths", "100")
    _, rows = _csv_body(text)
    assert np.array_equal(rows[:, 2], rows[:, 1]) and np.array_equal(rows[:, 5], rows[:, 1])
    _, text = _run(tmp_path, "telegraph", "--paths", "20000")
    _, rows = _csv_body(text)
    assert np.all(np.abs(rows[:, 2] - rows[:, 4]) <= 4 * rows[:, 3])
    assert np.all(np.abs(rows[:, 5] - rows[:, 4]) < 1e-3)
    _, text = _run(tmp_path, "telegraph", "mode=convergence")
    order = float([l for l in text.splitlines() if l.startswith("# observed order")][0].split(":")[1])
    assert abs(order - 2.0) < 0.2
