import csv
import io
import json

import pytest

from peflow.cli import main

TWO_BODY = {"rho0": {"kind": "atoms", "x": [0, 1], "m": [0.5, 0.5], "v": [1, -1]}, "T": 1}
THREE_BODY = {"rho0": {"kind": "atoms", "x": [0, 1, 3], "m": [0.25, 0.25, 0.5], "v": [1, -1, 0]}, "T": 1}
UNIFORM = {"rho0": {"kind": "uniform", "a": 0, "b": 1, "n": 32},
           "v0": {"breakpoints": [0, 1], "values": [0, -1]}, "T": 1}


@pytest.fixture
def cfg(tmp_path):
    def write(data, name="cfg.json"):
        p = tmp_path / name
        p.write_text(json.dumps(data))
        return str(p)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_two_body(cfg, tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "-c", cfg(TWO_BODY), "-o", str(tmp_path / "out"))
    assert code == 0
    assert "merges: 1" in out and "final energy" in out
    rows = (tmp_path / "out" / "events.csv").read_text().splitlines()
    assert len(rows) == 3 and float(rows[2].split(",")[0]) == pytest.approx(0.5, abs=1e-8)


def test_simulate_single_atom(cfg, tmp_path, capsys):
    one = {"rho0": {"kind": "atoms", "x": [0.5], "v": [1.0]}, "T": 1}
    code, out, _ = run(capsys, "simulate", "-c", cfg(one), "-o", str(tmp_path / "out"))
    assert code == 0 and "merges: 0" in out
    assert len((tmp_path / "out" / "events.csv").read_text().splitlines()) == 2


def test_invalid_config_exit_two(cfg, tmp_path, capsys):
    bad = {"rho0": {"kind": "atoms", "x": [0, 1], "m": [0.5, 0.6]}, "T": 1}
    code, _, err = run(capsys, "simulate", "-c", cfg(bad), "-o", str(tmp_path / "out"))
    assert code == 2 and "sum" in err


def test_missing_config_exit_two(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "-c", str(tmp_path / "nope.json"))
    assert code == 2


def test_outputs_byte_identical(cfg, tmp_path, capsys):
    c = cfg(UNIFORM)
    for d in ("a", "b"):
        assert run(capsys, "simulate", "-c", c, "-o", str(tmp_path / d))[0] == 0
    for f in ("trajectory.csv", "events.csv", "config.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_persisted_config_reproduces(cfg, tmp_path, capsys):
    run(capsys, "simulate", "-c", cfg(UNIFORM), "-o", str(tmp_path / "a"))
    run(capsys, "simulate", "-c", str(tmp_path / "a" / "config.json"), "-o", str(tmp_path / "b"))
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_verify_all_checks(cfg, capsys):
    code, out, _ = run(capsys, "verify", "-c", cfg(TWO_BODY), "--checks",
                       "energy,qspp,stability,oleinik,flow,weak")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and len(rep["checks"]) == 6


def test_verify_empty_checks(cfg, capsys):
    code, out, _ = run(capsys, "verify", "-c", cfg(TWO_BODY), "--checks", "")
    assert code == 0 and json.loads(out)["checks"] == []


def test_verify_unknown_check(cfg, capsys):
    assert run(capsys, "verify", "-c", cfg(TWO_BODY), "--checks", "bogus")[0] == 2


def test_verify_exported_files(cfg, tmp_path, capsys):
    c = cfg(THREE_BODY)
    run(capsys, "simulate", "-c", c, "-o", str(tmp_path / "out"))
    code, out, _ = run(capsys, "verify", "-c", c, "--trajectory", str(tmp_path / "out"),
                       "-o", str(tmp_path / "rep"))
    assert code == 0
    assert json.loads((tmp_path / "rep" / "report.json").read_text())["pass"]


def test_verify_tampered_csv_fails(cfg, tmp_path, capsys):
    c = cfg(THREE_BODY)
    run(capsys, "simulate", "-c", c, "-o", str(tmp_path / "out"))
    path = tmp_path / "out" / "trajectory.csv"
    lines = path.read_text().splitlines(keepends=True)
    rows = list(csv.DictReader(io.StringIO("".join(lines[1:]))))
    # speed the merged cluster away from its neighbour at one post-merge node
    for r in rows:
        if float(r["t"]) == 0.6 and r["members"] == "0;1":
            r["velocity"] = "-5"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    path.write_text(lines[0] + buf.getvalue())
    code, out, _ = run(capsys, "verify", "-c", c, "--trajectory", str(tmp_path / "out"),
                       "--checks", "qspp,oleinik")
    failed = {ch["name"] for ch in json.loads(out)["checks"] if not ch["pass"]}
    assert code == 1 and failed & {"qspp", "oleinik"}


def test_verify_refuses_mismatched_config(cfg, tmp_path, capsys):
    run(capsys, "simulate", "-c", cfg(TWO_BODY), "-o", str(tmp_path / "out"))
    code, _, err = run(capsys, "verify", "-c", cfg(UNIFORM, "other.json"), "--trajectory", str(tmp_path / "out"))
    assert code == 2 and "mismatched" in err


def test_converge_n(cfg, tmp_path, capsys):
    code, out, _ = run(capsys, "converge", "-c", cfg(UNIFORM), "--mode", "n", "--schedule", "4,8,16,32",
                       "-o", str(tmp_path / "conv"))
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and rep["reference_n"] == 256
    col = [row[50] for row in rep["w2"]]  # t = 0.5
    assert all(b <= a for a, b in zip(col, col[1:]))
    assert (tmp_path / "conv" / "converge_n.json").exists()


def test_converge_single_atom(cfg, capsys):
    one = {"rho0": {"kind": "atoms", "x": [0.5], "v": [1.0]}, "T": 1}
    code, out, _ = run(capsys, "converge", "-c", cfg(one), "--mode", "n", "--schedule", "2,4")
    rep = json.loads(out)
    assert code == 0 and all(d == 0.0 for row in rep["w2"] for d in row)


def test_converge_eps(cfg, capsys):
    sym = {"rho0": {"kind": "atoms", "x": [-1, 1], "v": [0, 0]}, "T": 3, "mode": "ep"}
    code, out, _ = run(capsys, "converge", "-c", cfg(sym), "--mode", "eps", "--schedule", "0,2,4,6,8,10")
    rep = json.loads(out)
    assert code == 0 and rep["final"][-1] <= rep["tol"]


def test_jobs_from_environment(cfg, capsys, monkeypatch):
    monkeypatch.setenv("PEFLOW_JOBS", "2")
    c = cfg(UNIFORM)
    code, out, _ = run(capsys, "converge", "-c", c, "--mode", "n", "--schedule", "4,8")
    monkeypatch.delenv("PEFLOW_JOBS")
    code1, out1, _ = run(capsys, "converge", "-c", c, "--mode", "n", "--schedule", "4,8")
    assert code == code1 == 0 and out == out1


def test_bad_jobs_environment(cfg, capsys, monkeypatch):
    monkeypatch.setenv("PEFLOW_JOBS", "many")
    assert run(capsys, "converge", "-c", cfg(UNIFORM), "--mode", "n")[0] == 2


def test_ep_subcommand(cfg, tmp_path, capsys):
    sym = {"rho0": {"kind": "atoms", "x": [-1, 1], "v": [0, 0]}, "T": 5}
    code, out, _ = run(capsys, "ep", "-c", cfg(sym), "-o", str(tmp_path / "ep"))
    assert code == 0 and "merges: 1" in out
    row = (tmp_path / "ep" / "events.csv").read_text().splitlines()[2]
    assert float(row.split(",")[0]) == 2.0


@pytest.mark.parametrize("name", ["two_body", "harmonic", "euler_poisson", "gaussian_smooth_abs", "quantize_uniform"])
def test_shipped_example_configs_verify(name, capsys):
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "examples_cfg" / f"{name}.json"
    code, out, _ = run(capsys, "verify", "-c", str(path))
    assert code == 0, out
