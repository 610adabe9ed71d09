import json
import math
import re

import pytest

from ftsynth import cli
from ftsynth.bench import phase_target
from ftsynth.canondb import build_canon_db, save_db
from ftsynth.gateset import evaluate, parse_seq
from ftsynth.unitary import distance, from_euler


@pytest.fixture(scope="module")
def db_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("db") / "q6.gfdb"
    save_db(build_canon_db(6), path)
    return str(path)


def summary_fields(out):
    line = [l for l in out.splitlines() if l.startswith("dist=")][-1]
    return dict(re.findall(r'(\w+)=("[^"]*"|\S+)', line))


def test_build_then_approx(tmp_path, capsys):
    path = str(tmp_path / "q2.gfdb")
    assert cli.main(["build-db", "--lprime", "2", "--out", path]) == 0
    assert "entries=64" in capsys.readouterr().out
    assert cli.main(["approx", "--db", path, "--lmax", "1", "--target", "R:d=2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# command=approx")
    assert "lprime=2" in out.splitlines()[0]
    f = summary_fields(out)
    assert f["seq"] == '"T"' and float(f["dist"]) == 0.0


def test_approx_output_reevaluates(db_file, capsys):
    spec = "euler:0.4,2.2,1.3"
    assert cli.main(["approx", "--db", db_file, "--lmax", "8", "--shards", "1", "--target", spec]) == 0
    f = summary_fields(capsys.readouterr().out)
    seq = parse_seq(f["seq"].strip('"'))
    assert len(seq) == int(f["length"]) <= 8
    assert abs(distance(from_euler(0.4, 2.2, 1.3), evaluate(seq)) - float(f["dist"])) <= 1e-14


def test_approx_shards_agree(db_file, capsys):
    args = ["approx", "--db", db_file, "--lmax", "9", "--target", "euler:1,2,3"]
    cli.main(args + ["--shards", "1"])
    a = summary_fields(capsys.readouterr().out)
    cli.main(args)
    b = summary_fields(capsys.readouterr().out)
    assert a["seq"] == b["seq"] and a["dist"] == b["dist"]


def test_verify_fixtures(capsys):
    assert cli.main(["verify-fixtures"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_bench_random_is_reproducible(db_file, tmp_path, capsys):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        args = ["bench-random", "--db", db_file, "--lmax", "8", "--n", "4", "--seed", "3", "--out", str(out), "--json"]
        assert cli.main(args) == 0
        outs.append(out.read_bytes())
        text = capsys.readouterr().out
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0] == "target,l,dist,t_count,seq"
    assert len(lines) == 1 + 4 * 9
    fit = json.loads(text.splitlines()[-1])
    assert fit["sample_count"] == 4 and fit["b"] < 0


def test_bench_phase(db_file, capsys):
    assert cli.main(["bench-phase", "--db", db_file, "--lmax", "4", "--d", "2", "7"]) == 0
    cap = capsys.readouterr()
    rows = cap.out.splitlines()[2:]
    assert rows[0].startswith("R:d=2,0,")
    assert rows[1] == "R:d=2,1,0,1,T"
    assert "R:d=7 lmax=4 dist=8.677" in cap.err


@pytest.mark.parametrize(
    "spec, expected",
    [
        ("R:d=3", phase_target(d=3)),
        ("R:phi=0.5", phase_target(phi=0.5)),
        ("euler:0.1,0.2,0.3", from_euler(0.1, 0.2, 0.3)),
        ("mat:0,0,1,0,1,0,0,0", evaluate((2,))),
    ],
)
def test_parse_target_examples(spec, expected):
    assert distance(cli.parse_target(spec), expected) == 0.0


@pytest.mark.parametrize(
    "spec, field",
    [
        ("R:d=x", "d"),
        ("R:d=0", "d"),
        ("R:phi=nan", "phi"),
        ("euler:1,2", "euler"),
        ("euler:1,b,3", "beta"),
        ("mat:1,0,0,0,0,0,2,0", "mat"),
        ("mat:1,0,0,0,0,0,1", "mat"),
        ("U:1", "unrecognised"),
    ],
)
def test_parse_target_errors(spec, field):
    with pytest.raises(cli.TargetParseError, match=field):
        cli.parse_target(spec)


def test_parse_target_mat_tolerance():
    c = math.cos(0.3)
    s = math.sin(0.3)
    assert cli.parse_target(f"mat:{c:.12f},0,{s:.12f},0,{-s:.12f},0,{c:.12f},0")


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["approx", "--lmax", "3"])
    assert info.value.code == 2
    assert cli.main(["approx", "--lprime", "0", "--lmax", "3", "--target", "R:d=3"]) == 2
    assert cli.main(["approx", "--lprime", "2", "--lmax", "1", "--target", "mat:1,0,0,0,0,0,2,0"]) == 3
    bad = tmp_path / "bad.gfdb"
    save_db(build_canon_db(2), bad)
    bad.write_bytes(bad.read_bytes()[:-9])
    assert cli.main(["approx", "--db", str(bad), "--lmax", "1", "--target", "R:d=2"]) == 3
    assert "checksum" in capsys.readouterr().err
    assert cli.main(["build-db", "--lprime", "8", "--max-entries", "100", "--out", str(tmp_path / "x")]) == 4


def test_header_reports_effective_config(db_file, capsys):
    cli.main(["approx", "--db", db_file, "--lmax", "2", "--shards", "1", "--target", "R:d=4"])
    header = capsys.readouterr().out.splitlines()[0]
    assert header == f"# command=approx db={db_file} lmax=2 lprime=6 target=R:d=4 seed=0 n_targets=50 out=None shards=1"
