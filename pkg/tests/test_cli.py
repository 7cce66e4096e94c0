import json

import pytest

from twistq import cli
from twistq.coeffring import ULaurent


def run(argv, capsys):
    rc = cli.main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_cartan_json_schema(capsys):
    rc, out, _ = run(["cartan", "--type", "A2~2", "--rank", "2", "--json"],
                     capsys)
    assert rc == 0
    obj = json.loads(out)
    assert obj["cbar"] == [[2, -2], [-1, 2]]
    assert obj["lambda"] == [[2, 2], [2, 4]]
    assert obj["delta"] == 2


def test_msum_flagship_bytes(capsys):
    argv = ["msum", "--type", "A2~2", "--rank", "2",
            "--lambda", "0,0", "--n", "1,1:2", "--k", "1"]
    rc, out, _ = run(argv, capsys)
    assert rc == 0
    assert out.strip() == '{"var":"u","terms":[[-8,"1"]]}'
    # determinism: identical bytes on a second run
    rc2, out2, _ = run(argv, capsys)
    assert out2 == out


def test_msum_json_roundtrip(capsys):
    rc, out, _ = run(["msum", "--type", "D4~3", "--rank", "2",
                      "--lambda", "1,0", "--n", "1,1:1;2,1:1", "--k", "2",
                      "--restricted"], capsys)
    assert rc == 0
    val = ULaurent.from_json(json.loads(out))
    assert val.to_json() == json.loads(out)


def test_nspec_usage_error(capsys):
    rc, _, err = run(["msum", "--type", "A2~2", "--rank", "2",
                      "--lambda", "0,0", "--n", "1,oops", "--k", "1"], capsys)
    assert rc == 2
    assert "position" in err and "^" in err


def test_nspec_error_position_annotation(capsys):
    rc, _, err = run(["msum", "--type", "A2~2", "--rank", "2",
                      "--lambda", "0,0", "--n", "1,1:1;bad", "--k", "1"],
                     capsys)
    assert rc == 2
    assert "position 6" in err


def test_bad_type_is_usage_error(capsys):
    rc, _, err = run(["cartan", "--type", "Z9~9", "--rank", "2"], capsys)
    assert rc == 2


def test_bad_lambda_is_usage_error(capsys):
    rc, _, err = run(["msum", "--type", "A2~2", "--rank", "2",
                      "--lambda", "0,0,0", "--n", "", "--k", "1"], capsys)
    assert rc == 2


def test_missing_subcommand_exits_2(capsys):
    assert cli.main([]) == 2
    capsys.readouterr()


def test_thm13_report(capsys):
    rc, out, _ = run(["thm13", "--type", "A2~2", "--rank", "2",
                      "--lambda", "0,0", "--node", "1", "--mlevel", "1",
                      "--json"], capsys)
    assert rc == 0
    obj = json.loads(out)
    assert obj["identity"] is True
    assert obj["doubled"] == {"var": "u", "terms": [[-8, "1"]]}


def test_qsolve_uses_cache_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("TWISTQ_CACHE", str(tmp_path))
    rc, out, _ = run(["qsolve", "--type", "A2~2", "--rank", "2",
                      "--nmin", "0", "--nmax", "3", "--json"], capsys)
    assert rc == 0
    assert any(tmp_path.rglob("Q_*.json"))
    lines = [json.loads(l) for l in out.splitlines()]
    assert {(d["a"], d["n"]) for d in lines} == {
        (a, n) for a in (1, 2) for n in range(0, 4)
    }


def test_verify_fermionic_small(capsys):
    rc, out, _ = run(["verify", "fermionic", "--type", "D2~2", "--rank", "2",
                      "--lmax", "1", "--nmax", "1", "--kmax", "2"], capsys)
    assert rc == 0
    assert "PASS" in out


def test_verify_qsystem_small(capsys):
    rc, out, _ = run(["verify", "qsystem", "--type", "A2~2", "--rank", "2",
                      "--nmin", "-1", "--nmax", "3"], capsys)
    assert rc == 0
    assert "PASS" in out


def test_verify_bridge_report_json(capsys):
    rc, out, _ = run(["verify", "bridge", "--type", "A2~2", "--rank", "2",
                      "--lmax", "0", "--nmax", "1", "--report", "json"],
                     capsys)
    assert rc == 0
    results = json.loads(out)
    assert results and all(case["pass"] for case in results)
