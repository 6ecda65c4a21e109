import json

import pytest

from pir_squeeze.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


@pytest.mark.parametrize("argv, rate", [
    (["run", "--m", "2", "--n", "5", "--t", "2", "--k", "3", "--seed", "1"], {"num": 10, "den": 17}),
    (["run", "--variant", "grs", "--m", "2", "--n", "5", "--t", "2", "--k", "2"], {"num": 20, "den": 31}),
    (["run", "--variant", "cyclic", "--m", "2", "--n", "5", "--k", "3"], {"num": 3, "den": 5}),
    (["run", "--variant", "multifile", "--m", "3", "--n", "5", "--k", "2", "--p", "2"], {"num": 40, "den": 51}),
])
def test_run_examples(capsys, argv, rate):
    code, out = run_cli(capsys, *argv)
    obj = json.loads(out)
    assert code == 0 and obj["success"] and obj["achieved_rate"] == rate == obj["closed_form_rate"]


def test_run_general_t_defaults_to_200_trials(capsys):
    code, out = run_cli(capsys, "run", "--variant", "generalT", "--n", "6", "--t", "3", "--k", "3")
    obj = json.loads(out)
    assert code == 0 and obj["epsilon_trials"]["runs"] == 200
    assert obj["params"]["q"] >= 2**16 and obj["achieved_rate"] == {"num": 4, "den": 7}


def test_run_is_byte_deterministic(capsys, tmp_path):
    argv = ["run", "--n", "5", "--k", "3", "--seed", "4"]
    _, a = run_cli(capsys, *argv)
    _, b = run_cli(capsys, *argv)
    assert a == b
    path = tmp_path / "t.json"
    assert main(argv + ["--output", str(path)]) == 0
    assert path.read_text() == a


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("PIR_SQUEEZE_SEED", "17")
    _, out = run_cli(capsys, "run", "--n", "4", "--k", "2")
    assert json.loads(out)["params"]["seed"] == 17
    _, out = run_cli(capsys, "run", "--n", "4", "--k", "2", "--seed", "3")
    assert json.loads(out)["params"]["seed"] == 3


def test_table_format(capsys):
    code, out = run_cli(capsys, "run", "--n", "4", "--k", "2", "--q", "3", "--format", "table")
    assert code == 0 and "rate 3/5  closed form 3/5" in out


def test_audit_exhaustive_pass(capsys):
    code, out = run_cli(capsys, "audit", "--n", "4", "--k", "2", "--budget", "2000")
    obj = json.loads(out)
    assert code == 0 and obj["verdict"]
    assert obj["span"]["mode"] == "exhaustive" and obj["span"]["trials"] == 1296


def test_audit_general_t(capsys):
    code, out = run_cli(capsys, "audit", "--variant", "generalT", "--n", "6", "--t", "3", "--k", "3")
    obj = json.loads(out)
    assert code == 0 and obj["privacy"]["subsets_checked"] == 20


def test_audit_inject_fault(capsys):
    code, out = run_cli(capsys, "audit", "--n", "4", "--k", "2", "--budget", "2000", "--inject-fault")
    obj = json.loads(out)
    assert code == 1 and not obj["verdict"]
    assert obj["fault"]["label"].startswith("U~") and obj["fault"]["server"] == 1
    assert obj["span"]["witness"] is not None or not obj["redundancy"]["verdict"]


def test_rates_default_table(capsys):
    code, out = run_cli(capsys, "rates")
    rows = {(r["m"], r["n"], r["t"], r["k"]): r["rates"] for r in json.loads(out)}
    assert code == 0
    assert rows[(2, 4, 2, 2)]["fghk"] == "4/7" and rows[(2, 4, 2, 2)]["generic"] == "3/5"
    assert rows[(2, 5, 2, 2)]["fghk"] == "5/8" and rows[(2, 5, 2, 2)]["grs"] == "20/31"
    assert rows[(2, 6, 3, 3)]["fghk"] == "6/11" and rows[(2, 6, 3, 3)]["general_t"] == "4/7"


def test_rates_sweep(capsys):
    code, out = run_cli(capsys, "rates", "--n", "4", "--n-max", "6", "--format", "table")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 2 + 3 + 4
    assert lines[0].startswith("(2,4,2,1)")
    _, out = run_cli(capsys, "rates", "--m", "3", "--n", "5", "--k", "2", "--p", "2")
    assert json.loads(out)[0]["rates"]["multifile_grs"] == "40/51"


@pytest.mark.parametrize("argv, err", [
    (["run", "--n", "3", "--k", "2"], "invalid_params"),
    (["run", "--n", "5"], "invalid_params"),
    (["run", "--n", "5", "--k", "2", "--variant", "grs", "--q", "3"], "field_too_small"),
])
def test_errors_are_machine_readable(capsys, argv, err):
    code, out = run_cli(capsys, *argv)
    assert code == 2 and json.loads(out)["error"] == err


@pytest.mark.parametrize("argv", [
    ["run", "--n", "5", "--k", "3", "--bogus"],
    ["run", "--va", "cyclic", "--n", "5", "--k", "3"],
    ["run", "--variant", "nope"],
    [],
])
def test_bad_flags_exit(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
