import json
import subprocess
import sys

import pytest

from ffalign.cli import main

ODD_GF27 = '{"p":3,"n":3,"matrix":[[3,1,1],[1,3,1],[1,12,3]]}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_field_report(capsys):
    code, out, _ = run(capsys, "field", "3", "3", "22", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["modulus"] == "s^3+2s+1"
    assert d["element"]["matrix"] == [[0, 1, 2], [2, 0, 1], [2, 1, 1]]
    assert d["element"]["subfield_degree"] == 3


def test_field_text_and_identity(capsys):
    code, out, _ = run(capsys, "field", "3", "3", "1")
    assert code == 0
    assert "1 0 0\n  0 1 0\n  0 0 1" in out
    assert "minimal poly s+2" in out  # s - 1 over F_3


def test_field_not_prime(capsys):
    code, out, err = run(capsys, "field", "4", "2")
    assert code == 2 and not out and "NotPrime" in err


def test_bad_usage_exits_2(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "xch", "classify")[0] == 2
    assert run(capsys, "xch", "classify", "--json", "{not json")[0] == 2
    assert run(capsys, "ic3", "classify", "--json", '{"p":3,"n":3,"matrix":[[1,1]]}')[0] == 2
    assert run(capsys, "xch", "classify", "--json", '{"p":3,"n":3,"matrix":[[1,99],[1,1]]}')[0] == 2


def test_xch_all_zero(capsys):
    code, out, _ = run(capsys, "xch", "classify", "--json", '{"p":3,"n":3,"matrix":[[0,0],[0,0]]}')
    assert code == 0
    d = json.loads(out)
    assert d["C"] == 0 and d["case"] == 3


def test_xch_construct_verify_simulate(capsys, tmp_path):
    path = tmp_path / "s.json"
    code, _, _ = run(capsys, "xch", "construct", "--json", '{"p":3,"n":3,"matrix":[[1,1],[5,1]]}', "--out", str(path))
    assert code == 0
    scheme = json.loads(path.read_text())
    assert scheme["sum_rate"] == "4/3" and scheme["channel"]["matrix"] == [[1, 1], [5, 1]]
    code, out, _ = run(capsys, "xch", "verify", "--in", str(path))
    assert code == 0 and json.loads(out)["pass"] is True
    code, out, _ = run(capsys, "xch", "simulate", "--in", str(path), "--messages", "random:42")
    assert code == 0 and json.loads(out)["match"] is True


def test_simulate_message_file(capsys, tmp_path):
    msgs = tmp_path / "m.json"
    msgs.write_text(json.dumps({"11": [[1], [2]], "12": [[0], [1]], "21": [[2], [2]], "22": [[1], [0]]}))
    code, out, _ = run(
        capsys, "xch", "simulate", "--json", '{"p":3,"n":3,"matrix":[[1,1],[5,1]]}', "--messages", str(msgs)
    )
    d = json.loads(out)
    assert code == 0 and d["match"] and d["messages"]["21"]["decoded"] == [[2], [2]]


def test_verify_fails_on_tampered_scheme(capsys, tmp_path):
    path = tmp_path / "s.json"
    run(capsys, "xch", "construct", "--json", '{"p":3,"n":3,"matrix":[[1,1],[5,1]]}', "--out", str(path))
    d = json.loads(path.read_text())
    d["precoders"]["22"] = [[2]]
    path.write_text(json.dumps(d))
    code, out, _ = run(capsys, "xch", "verify", "--in", str(path))
    assert code == 1 and json.loads(out)["pass"] is False


def test_infeasible_and_conditions_exit_codes(capsys):
    code, _, err = run(capsys, "xch", "construct", "--scheme", "aligned", "--json", '{"p":3,"n":3,"matrix":[[1,1],[2,1]]}')
    assert code == 3 and "Infeasible" in err
    code, _, err = run(capsys, "ic3", "construct", "--scheme", "eigen", "--json", ODD_GF27)
    assert code == 4 and "ConditionsNotMet" in err


def test_ic3_odd_powers_example(capsys, tmp_path):
    path = tmp_path / "i.json"
    assert run(capsys, "ic3", "construct", "--json", ODD_GF27, "--out", str(path))[0] == 0
    d = json.loads(path.read_text())
    assert d["mode"] == "odd_powers" and d["sum_rate"] == "4/3"
    code, out, _ = run(capsys, "ic3", "simulate", "--in", str(path), "--messages", "random:1")
    assert code == 0 and json.loads(out)["match"]


def test_ic3_csv_output(capsys):
    code, out, _ = run(capsys, "ic3", "classify", "--json", ODD_GF27, "--format", "csv")
    assert code == 0 and out.startswith("key,value\n") and "class,OddPowersCase" in out


def test_census_x_check(capsys):
    code, out, _ = run(capsys, "census", "x", "--p", "2", "--n", "2", "--exhaustive", "--check")
    d = json.loads(out)
    assert code == 0 and d["pass"] and d["classes"]["degenerate"]["fraction"] == "1/3"


def test_census_too_large(capsys):
    code, _, err = run(capsys, "census", "x", "--p", "3", "--n", "20", "--exhaustive")
    assert code == 5 and "TooLargeForExhaustive" in err


def test_census_target_mismatch(capsys):
    assert run(capsys, "census", "x", "--p", "3", "--n", "2", "--target", "ic_full")[0] == 2


def test_census_files_are_byte_identical(capsys, tmp_path):
    for tag in ("a", "b"):
        argv = ["census", "ic3", "--p", "5", "--n", "3", "--sample", "2000", "--seed", "7", "--out", str(tmp_path / tag)]
        assert run(capsys, *argv)[0] == 0
    for ext in ("json", "csv"):
        assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "ffalign", "field", "2", "2", "--format", "json"], capture_output=True, text=True
    )
    assert out.returncode == 0 and json.loads(out.stdout)["modulus"] == "s^2+s+1"
