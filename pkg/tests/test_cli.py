import json
import os

import numpy as np
import pytest

from fiiss import __version__
from fiiss.cli import main


def _meta_line(path):
    with open(path) as fh:
        first = fh.readline()
    assert first.startswith("# ")
    return json.loads(first[2:])


def test_figure1_layout_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["figure1", "--seed", "42", "-o", str(a), "--steps", "200"]) == 0
    assert main(["figure1", "--seed", "42", "-o", str(b), "--steps", "200"]) == 0
    names = sorted(os.listdir(a))
    assert len(names) == 6 and names == sorted(os.listdir(b))
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
        meta = _meta_line(a / name)
        assert {"seed", "streams", "parameters", "version"} <= set(meta) and meta["version"] == __version__
        lines = (a / name).read_text().split("\n")
        assert lines[1] == "u,value" and len(lines) == 2 + 201 + 1
    betas = {_meta_line(a / n)["beta"] for n in names}
    assert betas == {0.5, -0.5, -1.5}


def test_figure1_seed_changes_output(tmp_path):
    main(["figure1", "--seed", "1", "-o", str(tmp_path / "a"), "--steps", "50"])
    main(["figure1", "--seed", "2", "-o", str(tmp_path / "b"), "--steps", "50"])
    f = "W_alpha0.75_beta0.5.csv"
    assert (tmp_path / "a" / f).read_bytes() != (tmp_path / "b" / f).read_bytes()


def test_simulate_path_and_marginal(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--alpha", "0.6", "--beta", "0.3", "-o", str(out), "--steps", "100"]) == 0
    rows = out.read_text().split("\n")
    assert rows[1] == "u,W,Y"
    data = np.array([[float(v) for v in r.split(",")] for r in rows[2:-1]])
    assert np.all(np.diff(data[:, 1]) >= 0) and np.all(np.diff(data[:, 2]) >= 0)
    js = tmp_path / "s.json"
    assert main(["simulate", "--alpha", "0.6", "--beta", "0.3", "--n", "50", "--format", "json", "-o", str(js)]) == 0
    payload = json.loads(js.read_text())
    assert len(payload["values"]) == 50 and payload["meta"]["seed"] is not None


def test_simulate_marginal_independent_of_streams(tmp_path):
    outs = []
    for k in (1, 2):
        p = tmp_path / f"m{k}.json"
        main(["simulate", "--alpha", "0.7", "--beta", "0", "--n", "25000", "--streams", str(k), "--format", "json",
              "-o", str(p)])
        outs.append(json.loads(p.read_text())["values"])
    assert outs[0] == outs[1]


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main(["nonsense"]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 2 and err["error"] == "usage"
    assert main(["simulate", "--alpha", "1.5", "--beta", "0"]) == 2
    assert main(["simulate", "--beta", "0"]) == 2
    assert main(["lil", "--alpha", "0.75", "--beta", "-0.9"]) == 2
    assert main(["simulate", "--alpha", "0.5", "--beta", "0", "--streams", "0"]) == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_resource_cap_exit_three(tmp_path, capsys):
    code = main(["simulate", "--alpha", "0.5", "--beta", "0", "--t-step", "1e-12", "-o", str(tmp_path / "x.csv")])
    assert code == 3
    assert json.loads(capsys.readouterr().err.strip())["error"] == "resource_cap"


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# diverge pilot\nalpha = 0.75\nbeta = -1.5\nn = 6\nsteps = 128,256,512\nformat = json\n")
    out = tmp_path / "d.json"
    assert main(["diverge", "--config", str(cfg), "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["meta"]["parameters"]["beta"] == -1.5 and rep["entries"][0]["name"] == "medians_increasing"
    assert main(["diverge", "--config", str(cfg), "--beta", "-0.5", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["meta"]["parameters"]["beta"] == -0.5 and rep["entries"][0]["name"] == "stabilizes"


def test_failed_check_exit_one_still_writes_report(tmp_path):
    out = tmp_path / "d.json"
    # a repeated ladder level cannot strictly increase
    code = main(["diverge", "--alpha", "0.75", "--beta", "-1.5", "--n", "3", "--steps", "128,128", "-o", str(out)])
    assert code == 1
    rep = json.loads(out.read_text())
    assert rep["passed"] is False and rep["entries"][0]["passed"] is False


def test_verify_parameters_suite(tmp_path):
    out = tmp_path / "v.json"
    code = main(["verify", "--alpha", "0.5", "--beta", "0", "--n", "20000", "-o", str(out)])
    rep = json.loads(out.read_text())
    names = [e["name"] for e in rep["entries"]]
    assert any(n.startswith("mittag_leffler_moment") for n in names)
    assert all(e["passed"] for e in rep["entries"] if e["name"].startswith("mittag_leffler_moment"))
    assert code == (0 if rep["passed"] else 1)
    assert rep["meta"]["version"] == __version__ and rep["meta"]["seed"] is not None


def test_report_csv_format(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["converge", "--n", "500", "--t-ladder", "10,100", "--format", "csv", "-o", str(out)]) in (0, 1)
    lines = out.read_text().split("\n")
    assert lines[0].startswith("# ") and lines[1] == "name,statistic,threshold,relation,passed"
    assert len(lines) == 2 + 2 + 1
