import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from cartan_toeplitz import cli
from cartan_toeplitz.errors import GramNotPD, MultiplicityViolation
from cartan_toeplitz.verify import Check

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "report.schema.json").read_text())


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv, "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, SCHEMA)
    return code, report, out


def test_decompose_n2(tmp_path):
    code, rep, out = run(tmp_path, "decompose", "--n", "2", "--dmax", "2")
    assert code == 0 and rep["verdict"] == "pass"
    comps = {tuple(c["mu"]): c["dim"] for d in rep["degrees"] for c in d["components"]}
    assert comps == {(0, 0): 1, (1, 0): 4, (2, 0): 9, (1, 1): 1}
    assert all(d["cauchy_sum"] == d["dim"] for d in rep["degrees"])
    assert len(json.loads((out / "components.json").read_text())["components"]) == 4


def test_decompose_n1(tmp_path):
    code, rep, _ = run(tmp_path, "decompose", "--n", "1", "--dmax", "5")
    assert code == 0
    assert [len(d["components"]) for d in rep["degrees"]] == [1] * 6
    assert all(c["dim"] == 1 for d in rep["degrees"] for c in d["components"])


@pytest.mark.parametrize("argv", [
    ["decompose", "--n", "2", "--lambda", "3"],
    ["decompose", "--n", "4"],
    ["decompose", "--dmax", "6"],
    ["toeplitz", "--symbol", "s1", "--mu", "1,0", "--samples", "999"],
    ["toeplitz", "--symbol", "s1"],
    ["toeplitz", "--symbol", "s1", "--mu", "1,2"],
    ["toeplitz", "--symbol", "s1", "--mu", "3,0", "--dmax", "2"],
    ["verify"],
])
def test_config_errors(tmp_path, argv, capsys):
    code, rep, _ = run(tmp_path, *argv)
    assert code == 3
    assert rep["verdict"] == "error" and rep["error"]["exit_code"] == 3
    if "--lambda" in argv:
        assert "2n-1" in rep["error"]["message"]
        assert "2n-1" in capsys.readouterr().err


def test_symbol_check_groups(tmp_path):
    code, rep, _ = run(tmp_path, "symbol-check", "--symbol", "G[1,2]", "--group", "unl")
    assert code == 0 and rep["kind"] == "LeftInvariant"
    code, rep, _ = run(tmp_path, "symbol-check", "--symbol", "G[1,2]", "--group", "UnR")
    assert code == 1 and rep["checks"][0]["max_rel_deviation"] > 0.1
    code, rep, _ = run(tmp_path, "symbol-check", "--symbol", "G[1,2]")
    assert code == 0 and len(rep["checks"]) == 3


def test_symbol_check_parse_error(tmp_path):
    code, rep, _ = run(tmp_path, "symbol-check", "--symbol", "s1*(")
    assert code == 4
    assert rep["error"]["type"] == "SymbolSyntaxError" and rep["error"]["position"] == 4
    code, rep, _ = run(tmp_path, "symbol-check", "--symbol", "s3")
    assert code == 4


def test_toeplitz_constant(tmp_path):
    code, rep, out = run(tmp_path, "toeplitz", "--symbol", "1", "--mu", "1,0", "--samples", "20000")
    assert code == 0
    M = np.array(rep["block"]["re"]) + 1j * np.array(rep["block"]["im"])
    np.testing.assert_allclose(M, np.eye(4), atol=1e-10)
    assert (out / "block.csv").read_text().startswith("row,col,re,im,stderr\n")


@pytest.mark.parametrize("k", [0, 2])
def test_toeplitz_disk(tmp_path, k):
    code, rep, _ = run(tmp_path, "toeplitz", "--n", "1", "--symbol", "s1^2", "--mu", str(k), "--lambda", "3")
    assert code == 0
    est, se = rep["block"]["re"][0][0], rep["block"]["stderr"][0][0]
    assert abs(est - (k + 1) / (k + 3)) <= 4 * se


def test_toeplitz_scalar_trace(tmp_path):
    code, rep, _ = run(tmp_path, "toeplitz", "--symbol", "tr(G)", "--mu", "2,0", "--lambda", "5")
    assert code == 0
    assert rep["metrics"]["scalar_defect"]["value"] <= 5e-2
    assert rep["compression_only"] is False


def test_toeplitz_divisor_error(tmp_path):
    code, rep, _ = run(tmp_path, "toeplitz", "--symbol", "1/(s1 - 0.5) >= 0.25", "--mu", "1,0",
                       "--samples", "5000")
    assert code == 3 and rep["error"]["type"] == "DivisorBelowBound"


def test_gram_not_pd_exit(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise GramNotPD("Gram matrix not positive definite", -1.0, 1.0)

    monkeypatch.setattr(cli.bg, "toeplitz_block", boom)
    code, rep, _ = run(tmp_path, "toeplitz", "--symbol", "s1", "--mu", "1,0", "--samples", "5000")
    assert code == 2
    assert "samples" in rep["error"]["hint"]


def test_multiplicity_violation_exit(tmp_path, monkeypatch):
    def boom(n, d):
        raise MultiplicityViolation("two highest weight vectors of one weight")

    monkeypatch.setattr(cli, "cached_decomposition", boom)
    code, rep, _ = run(tmp_path, "decompose", "--n", "2", "--dmax", "1")
    assert code == 2 and rep["error"]["type"] == "MultiplicityViolation"


@pytest.mark.parametrize("verdicts, code", [
    (["pass", "pass"], 0),
    (["pass", "fail"], 1),
    (["pass", "inconclusive"], 5),
    (["inconclusive", "fail"], 1),
])
def test_verify_exit_codes(tmp_path, monkeypatch, verdicts, code):
    checks = [Check("disk-oracle", 3, "m", 0.1, v, stderr_bound=0.1, n=1) for v in verdicts]
    monkeypatch.setattr(cli, "run_suite", lambda name, params: (checks, {name: 0.0}))
    got, rep, _ = run(tmp_path, "verify", "--suite", "disk-oracle")
    assert got == code
    assert rep["summary"][verdicts[-1]] >= 1


def test_verify_real_suite(tmp_path):
    code, rep, out = run(tmp_path, "verify", "--suite", "disk-oracle", "--n", "1", "--lambda", "3",
                         "--samples", "200000")
    assert code == 0 and len(rep["checks"]) == 6
    assert all(c["criterion"] == 3 for c in rep["checks"])
    meta = json.loads((out / "metadata.json").read_text())
    assert "disk-oracle" in meta["suite_seconds"] and "started" in meta


def test_reruns_are_byte_identical(tmp_path):
    argv = ["toeplitz", "--symbol", "G[1,2]", "--mu", "1,0", "--samples", "30000", "--seed", "7"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([*argv, "--out", str(a)]) == 0
    assert cli.main([*argv, "--shards", "3", "--out", str(b)]) == 0
    ra, rb = (json.loads((d / "report.json").read_text()) for d in (a, b))
    ra["config"].pop("shards"), rb["config"].pop("shards")
    assert ra == rb
    c = tmp_path / "c"
    cli.main([*argv, "--out", str(c)])
    assert (a / "report.json").read_bytes() == (c / "report.json").read_bytes()
    assert (a / "block.csv").read_bytes() == (c / "block.csv").read_bytes()


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# toeplitz run\nn = 1\nlambda = 3\nsamples=20000\nsymbol = s1^2\nmu = 1\nseed = 4\n")
    code, rep, _ = run(tmp_path, "toeplitz", "--config", str(conf))
    assert code == 0 and rep["config"]["n"] == 1 and rep["config"]["seed"] == 4
    code, rep, _ = run(tmp_path, "toeplitz", "--config", str(conf), "--seed", "5", "--mu", "2")
    assert rep["config"]["seed"] == 5 and rep["component"]["mu"] == [2]


@pytest.mark.parametrize("text", ["n 2\n", "colour = red\n", "n = two\n"])
def test_bad_config_file(tmp_path, text):
    conf = tmp_path / "bad.conf"
    conf.write_text(text)
    assert cli.main(["decompose", "--config", str(conf)]) == 3


def test_stdout_when_no_out_dir(capsys):
    assert cli.main(["decompose", "--n", "1", "--dmax", "1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    jsonschema.validate(rep, SCHEMA)
    assert rep["command"] == "decompose"
