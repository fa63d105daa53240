import json

import numpy as np
import pytest

from btquant import cli, quantize, suites, symbols
from btquant.symbols import Symbol


def read(path):
    return json.loads(path.read_text())


def test_parse_int_list():
    assert cli.parse_int_list("2..5") == [2, 3, 4, 5]
    assert cli.parse_int_list("2,3, 7") == [2, 3, 7]
    with pytest.raises(ValueError):
        cli.parse_int_list(",")


def test_run_writes_report_with_schema(tmp_path):
    out = tmp_path / "r.json"
    code = cli.main(["run", "--suite", "oph", "--d", "2", "--m", "0..2", "--out", str(out)])
    assert code == 0
    report = read(out)
    assert report["schema"] == cli.SCHEMA_VERSION
    assert report["suite"] == "oph"
    assert report["anchor"] == suites.SUITES["oph"].anchor
    assert report["config"]["m"] == [0, 1, 2]
    assert report["summary"] == {"cases": 3, "pass": 3, "non-exact-pass": 0, "fail": 0}
    assert all(c["status"] == "pass" and c["anchor"] for c in report["cases"])


def test_reports_are_deterministic_apart_from_header(tmp_path):
    reports = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        cli.main(["run", "--suite", "berezin-lieb", "--d", "2", "--m", "1", "--samples", "5000", "--out", str(out)])
        r = read(out)
        r.pop("header")
        reports.append(r)
    assert reports[0] == reports[1]


def test_config_file_and_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"suite": "interpolating", "d": [2], "m": [1], "n": [0, 1]}))
    out = tmp_path / "r.json"
    assert cli.main(["run", "--config", str(cfg), "--m", "2", "--out", str(out)]) == 0
    assert read(out)["summary"]["cases"] == 2


def test_usage_errors_exit_two(tmp_path, capsys):
    assert cli.main(["run", "--suite", "nope"]) == 2
    assert cli.main(["run"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"suite": "oph",\n "d": [2,]}')
    assert cli.main(["run", "--config", str(bad)]) == 2
    assert f"{bad}:2:" in capsys.readouterr().err
    cfg = tmp_path / "unknown.json"
    cfg.write_text(json.dumps({"suite": "oph", "bogus": 1}))
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert cli.main(["quantize", str(tmp_path / "missing.json"), "--m", "1"]) == 2


def test_failing_check_exits_one(monkeypatch, tmp_path):
    def broken(t):
        return [suites._record({"d": 2}, {"always_false": False}, True)]

    monkeypatch.setitem(suites.SUITES, "oph", suites.Suite("oph", "test", {"d": [2], "m": [0]},
                                                           suites._oph_tasks, broken))
    assert cli.main(["run", "--suite", "oph", "--out", str(tmp_path / "r.json")]) == 1


def test_quantize_of_one_is_identity(tmp_path):
    sym = tmp_path / "one.json"
    sym.write_text(json.dumps(symbols.symbol_to_json(Symbol.constant(3, 1))))
    out = tmp_path / "op.json"
    assert cli.main(["quantize", str(sym), "--m", "2", "--out", str(out)]) == 0
    assert quantize.matrix_from_json(read(out)) == quantize.OperatorMatrix.identity(3, 2)


def test_husimi_of_quantize_is_berezin(tmp_path):
    f = symbols.random_symbol(2, 2, np.random.default_rng(0))
    sym, op, hus = tmp_path / "f.json", tmp_path / "op.json", tmp_path / "hus.json"
    sym.write_text(json.dumps(symbols.symbol_to_json(f)))
    assert cli.main(["quantize", str(sym), "--m", "3", "--out", str(op)]) == 0
    assert cli.main(["husimi", str(op), "--out", str(hus)]) == 0
    assert symbols.symbol_from_json(read(hus)) == quantize.ber_m(f, 3)


def test_spectrum_of_coordinate_square(tmp_path):
    T = quantize.op_m(symbols.coordinate_symbol(2, 0, 0), 1)
    op = tmp_path / "op.json"
    op.write_text(json.dumps(quantize.matrix_to_json(T)))
    out = tmp_path / "s.json"
    assert cli.main(["spectrum", str(op), "--out", str(out)]) == 0
    s = read(out)
    assert s["kind"] == "eigenvalues"
    assert s["values"] == pytest.approx([2 / 3, 1 / 3])
    assert s["trace"]["re"] == "1/1"


def test_upsilon_command(tmp_path):
    out = tmp_path / "u.json"
    assert cli.main(["upsilon", "--d", "2", "--m", "1", "--n", "1", "--K", "1000", "--out", str(out)]) == 0
    u = read(out)
    assert u["lo"] == u["hi"] == "1/2"
    assert u["width"] == 0.0
