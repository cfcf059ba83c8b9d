import json

import pytest

from rigidity_lab import suites
from rigidity_lab.cli import main
from rigidity_lab.config import ConfigError, parse_config, parse_config_text
from rigidity_lab.heat import HeatSolverError
from rigidity_lab.suites import emit_report, run_suite, sweep_family

GREEN = "suite=green\nkind=sphere\nkappa=1\nn=2\nR=1\ngrid=1024\n"


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_valid_config():
    cfg = parse_config_text(GREEN)
    assert cfg.suite == "green" and cfg.geometry["kappa"] == 1.0 and cfg.geometry["grid"] == 1024


@pytest.mark.parametrize("text,match", [
    ("suite=green\nkappa=-1\n", "line 2: kappa must be > 0"),
    ("kind=sphere\n", "allowed suites: cheng-yau"),
    ("suite=green\nkappa=1\nfoo=3\n", "line 3: unknown key 'foo'"),
    ("suite=green\nn=2\nn=3\n", "line 3: duplicate key"),
    ("suite=green\ngrid=abc\n", "line 2: grid must be an integer"),
    ("suite=li-yau\nt_start=0\n", "t_start must be > 0"),
    ("suite=green\nformat=xml\n", "supported: json, csv"),
    ("suite=green\nkind=sphere\nkappa=1\nR=4\n", "line 4: R exceeds"),
    ("suite=green\nkind=cone\nalpha=2\n", "line 2: geometry rejected"),
    ("suite=sweep\nbase=green\nvalues=\n", "non-empty"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config_text(text)


def test_hash_ignores_output_location():
    a = parse_config_text(GREEN + "out=x\n")
    b = parse_config_text(GREEN + "format=csv\n")
    assert a.hash == b.hash
    assert parse_config_text(GREEN.replace("kappa=1", "kappa=0.5")).hash != a.hash


def test_every_invariant_has_one_verdict():
    rec = run_suite(parse_config_text(GREEN))
    names = [o.name for o in rec.outcomes]
    assert sorted(names) == sorted(suites.SUITE_TABLE["green"].invariants)
    assert rec.passed and rec.exit_code == 0
    assert rec.scalars["deficit_at_half"] == pytest.approx(0.0107306, abs=1e-7)


def test_list_suites(capsys):
    assert main(["list-suites"]) == 0
    out = capsys.readouterr().out
    for sid in ("cheng-yau", "li-yau", "harnack", "green", "b-function", "comparison-deficits", "sweep"):
        assert sid in out


def test_verify_json_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, GREEN)
    assert main(["verify", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["verify", cfg, "--out", str(tmp_path / "b")]) == 0
    a = sorted((tmp_path / "a").iterdir())
    b = sorted((tmp_path / "b").iterdir())
    assert [p.name for p in a] == [p.name for p in b] and len(a) == 2
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
    doc = json.loads(next(p for p in a if p.suffix == ".json").read_text())
    assert doc["config_hash"] == parse_config(cfg).hash
    assert doc["theorem"].startswith("Green's function comparison")
    assert "wall_clock" not in json.dumps(doc)


def test_verify_csv(tmp_path):
    cfg = write(tmp_path, GREEN)
    assert main(["verify", cfg, "--format", "csv", "--out", str(tmp_path)]) == 0
    report = [p for p in tmp_path.glob("green-*.csv") if "table" not in p.name][0]
    lines = report.read_text().splitlines()
    assert lines[0] == "section,name,field,value"
    assert any(line.startswith("outcome,green_lower_bound,verdict,pass") for line in lines)
    table = next(tmp_path.glob("green-*-green-table.csv")).read_text().splitlines()
    assert table[0] == "r,G,G_bar,deficit" and len(table) == 1025


def test_exit_codes(tmp_path, monkeypatch):
    assert main(["verify", write(tmp_path, "suite=green\nkappa=-1\n")]) == 2
    assert main(["verify", write(tmp_path, "suite=li-yau\nt_start=0\n")]) == 2
    assert main(["verify", write(tmp_path, GREEN), "--format", "xml"]) == 2
    assert main(["verify", str(tmp_path / "missing.cfg")]) == 2
    # a tolerance below the truncation error makes the Poisson equality case "fail"
    strict = "suite=cheng-yau\nkind=euclidean\nn=2\ntol_fd=1e-12\n"
    assert main(["verify", write(tmp_path, strict), "--out", str(tmp_path / "o")]) == 1

    def broken(*a, **k):
        raise HeatSolverError("forced")

    monkeypatch.setattr(suites.heat, "heat_solve_radial", broken)
    ly = "suite=li-yau\nboundary=whole-space\nt_start=0.25\nt_end=1\n"
    assert main(["verify", write(tmp_path, ly), "--out", str(tmp_path / "o")]) == 3


def test_sweep_cli(tmp_path, capsys):
    cfg = write(tmp_path, GREEN)
    out = tmp_path / "s"
    assert main(["sweep", cfg, "--param", "kappa", "--values", "0.01,0.1,1", "--format", "csv",
                 "--out", str(out)]) == 0
    csv_text = next(out.glob("*.csv")).read_text().splitlines()
    assert csv_text[0].startswith("kappa,") and len(csv_text) == 4
    dat = next(out.glob("*.dat")).read_text().splitlines()
    assert dat[0].startswith("# kappa") and len(dat) == 4 and len(dat[1].split()) == len(dat[0].split()) - 1
    assert main(["sweep", cfg, "--param", "kappa", "--values", ""]) == 2
    assert main(["sweep", cfg, "--param", "radius", "--values", "1"]) == 2


def test_sweep_family_trends():
    res = sweep_family(parse_config_text(GREEN), "kappa", [0.01, 0.05, 0.1, 0.5, 1.0])
    t = res.trends["mean_abs_deficit"]
    assert t["monotone"] == "nondecreasing"
    assert t["exponent"] == pytest.approx(1.0, abs=0.1)
    with pytest.raises(ConfigError):
        sweep_family(parse_config_text(GREEN), "kappa", [])


def test_sweep_config_file(tmp_path):
    text = "suite=sweep\nbase=comparison-deficits\nkind=sphere\nkappa=1\nn=3\nparam=kappa\nvalues=0.1,0.2,0.4\n"
    res = sweep_family(parse_config(write(tmp_path, text)))
    assert res.base.suite == "comparison-deficits" and len(res.records) == 3
    assert res.trends["laplacian_r2_mean"]["exponent"] == pytest.approx(1.0, abs=0.1)


def test_emit_rejects_unknown_format(tmp_path):
    rec = run_suite(parse_config_text("suite=b-function\nkind=sphere\nkappa=1\nn=3\n"))
    with pytest.raises(ValueError, match="supported: json, csv"):
        emit_report(rec, "xml", tmp_path)


def test_boundary_csv_data_relative_to_config(tmp_path):
    (tmp_path / "data.csv").write_text("k,a,b\n0,1.0,0.0\n1,0.3,0.0\n")
    cfg = write(tmp_path, "suite=cheng-yau\nkind=sphere\nkappa=1\ngrid=512\ndata=data.csv\n")
    rec = run_suite(parse_config(cfg))
    assert rec.passed and rec.scalars["quotient_sup"] < 1


@pytest.mark.parametrize("text", [
    "suite=cheng-yau\nn=3\n",
    "suite=b-function\nn=2\n",
    "suite=green\nR=2\ngrid=512\n",
])
def test_suite_preconditions_are_config_errors(tmp_path, text):
    assert main(["verify", write(tmp_path, text)]) == 2
