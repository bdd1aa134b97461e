import csv
import io
import json

import pytest

from extfock import cli


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_json(capsys):
    code, out, _ = run(capsys, "classify", "--model", "nelson-massless")
    assert code == 0
    assert json.loads(out)["verdict"] == "EssentiallySelfAdjoint"


def test_table_csv(capsys):
    code, out, _ = run(capsys, "table")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 5
    dip = next(r for r in rows if r["model"] == "Dipole")
    assert (dip["beta_V"], dip["m_V"]) == ("0", "0")


def test_table_single_group_json(capsys):
    code, out, _ = run(capsys, "table", "--presets", "p-dependent", "--format", "json")
    assert code == 0 and list(json.loads(out)) == ["p-dependent"]


def test_output_is_byte_identical(capsys):
    outs = [run(capsys, "pullback", "--model", "frohlich")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["residual_zero"] is True


def test_region_csv(capsys):
    code, out, _ = run(capsys, "region", "--d", "3:3", "--resolution", "1", "--m-range=-2:0",
                       "--beta-range=-2:-2")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert [r[-1] for r in rows[1:]] == ["EssentiallySelfAdjoint", "NotCovered", "NotCovered"]


def test_output_file_and_env_override(capsys, tmp_path, monkeypatch):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "classify", "--model", "dipole", "-o", str(target))
    assert code == 0 and out == "" and json.loads(target.read_text())["verdict"] == "NotCovered"
    env = tmp_path / "env.json"
    monkeypatch.setenv(cli.REPORT_ENV, str(env))
    run(capsys, "classify", "--model", "frohlich", "-o", str(target))
    assert json.loads(env.read_text())["verdict"] == "EssentiallySelfAdjoint"
    assert json.loads(target.read_text())["verdict"] == "NotCovered"


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["classify"], ["classify", "--model", "no-such-model"],
    ["region", "--d", "3"], ["classify", "--model", "dipole", "--format", "csv"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("extfock: error:")


def test_domain_error_exit_2(capsys):
    code, _, err = run(capsys, "glimm", "--model", "nelson-massless")
    assert code == 2 and "theta" in err


def test_ibc_and_glimm(capsys):
    code, out, _ = run(capsys, "ibc", "--model", "nelson-ibc")
    assert code == 0 and json.loads(out)["T_scalar"] == "0+0j"
    code, out, _ = run(capsys, "glimm", "--model", "nelson-ibc")
    d = json.loads(out)
    assert code == 0 and d["inverse_identity"] and d["Lambda_class"] == "BothDivergent"


def test_oracle_overlap_passes(capsys):
    code, out, _ = run(capsys, "oracle", "overlap", "--nmax", "10", "--pairs", "3")
    d = json.loads(out)
    assert code == 0 and d["pass"] and d["check"] == "overlap"


@pytest.mark.parametrize("check", ["commutator", "ibc", "glimm"])
def test_oracle_checks_pass(capsys, check):
    code, out, _ = run(capsys, "oracle", check, "--backend", "python", "--nmax", "4")
    d = json.loads(out)
    assert code == 0 and d["pass"] and d["backend"] == "python"


def test_oracle_failure_exit_1(capsys, tmp_path):
    cfg = tmp_path / "strict.toml"
    cfg.write_text('[model]\nname = "strict"\nd = 1\ntheta = "0"\nomega = "pow(1)"\n'
                   'v = "0.2*pow(-1/2)"\n[oracle]\ntol_pullback = 1e-30\n')
    code, out, _ = run(capsys, "oracle", "pullback", "--model", str(cfg), "--nmax", "3")
    assert code == 1 and json.loads(out)["pass"] is False
