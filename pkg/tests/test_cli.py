import json
import subprocess
import sys

import pytest

from schrokernel.cli import load_config, main, selftest_checks

CASE1 = "[potential]\nkind = power_decay\nalpha = 1\nK = 1\ndim = 2\n"


def strip_stamp(text):
    return "\n".join(line for line in text.splitlines() if '"timestamp"' not in line)


@pytest.fixture
def case1(tmp_path):
    p = tmp_path / "case1.ini"
    p.write_text(CASE1 + "[mc]\nn_paths = 2000\nn_steps = 16\nseed = 3\n")
    return p


def test_selftest_exit_zero(capsys):
    assert main(["selftest"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pass"] and all(c["pass"] for c in out["checks"])


def test_selftest_checks_cover_oracles():
    names = " ".join(c["name"] for c in selftest_checks())
    for key in ("zero potential", "exp(-ct)", "p_3", "t0", "Green"):
        assert key in names


def test_kernel_record(case1, capsys):
    assert main(["--config", str(case1), "kernel", "--t", "5", "--x", "0,0", "--y", "1,0"]) == 0
    rec = json.loads(capsys.readouterr().out)["record"]
    assert set(rec) >= {"t", "x", "y", "value", "stderr", "n_paths", "n_steps", "method", "seed"}
    assert rec["seed"] == 3 and rec["x"] == [0.0, 0.0] and rec["value"] > 0


def test_seed_flag_overrides_config(case1, capsys):
    main(["--config", str(case1), "--seed", "9", "kernel", "--t", "1", "--x", "0,0", "--y", "1,0"])
    assert json.loads(capsys.readouterr().out)["record"]["seed"] == 9


def test_kernel_pde_method(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[potential]\nalpha = 1\nK = 1\ndim = 1\n[pde]\nn_space = 800\nn_time = 400\n")
    assert main(["--config", str(cfg), "kernel", "--method", "pde", "--t", "1", "--x", "0", "--y", "0.5"]) == 0
    assert json.loads(capsys.readouterr().out)["record"]["method"] == "pde"


def test_unknown_key_lists_valid_keys(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text(CASE1 + "colour = red\n")
    assert main(["--config", str(p), "selftest"]) == 1
    err = capsys.readouterr().err
    assert "colour" in err and "alpha" in err and "K2" in err


def test_missing_potential_is_usage_error(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[mc]\nn_paths = 10\n")
    assert main(["--config", str(p), "selftest"]) == 1
    assert "potential" in capsys.readouterr().err


def test_bad_arguments_are_usage_errors(capsys):
    assert main(["nosuchcommand"]) == 1
    assert main(["kernel", "--t", "-1", "--x", "0,0", "--y", "0,0"]) == 1
    assert main(["kernel", "--t", "1", "--x", "0", "--y", "0,0"]) == 1


def test_out_dir_and_summary(case1, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--config", str(case1), "--out", str(out), "survival", "--t", "2", "--x", "1,0"]) == 0
    line = capsys.readouterr().out.strip()
    assert "\n" not in line and str(out) in line
    assert json.loads((out / "survival.json").read_text())["command"] == "survival"


def test_verify_exit_two_on_failure(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[potential]\nalpha = 1\nK = 1\nsign = -1\ndim = 2\n"
                   "[mc]\nn_paths = 2000\nn_steps = 16\n[verify]\nband_ceiling = 1.0\n")
    assert main(["--config", str(cfg), "--format", "csv", "verify", "--suite", "thm1.2"]) == 2
    assert capsys.readouterr().out.startswith("t,x_norm,y_norm,dist,estimate")


def test_duhamel_subcommand(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[potential]\nalpha = 3\nK = 0.05\nsign = -1\ndim = 3\n[grid]\nt_max = 1\nn_time = 10\n")
    assert main(["--config", str(cfg), "duhamel"]) == 0
    d = json.loads(capsys.readouterr().out)["duhamel"]
    assert not d["diverged"] and d["observed_ratio"] < 1


def test_dirichlet_subcommand(capsys):
    assert main(["--seed", "1", "dirichlet", "--t", "0.5", "--x", "0.1", "--y", "-0.2"]) == 0
    rec = json.loads(capsys.readouterr().out)["record"]
    assert abs(rec["value"] - rec["exact"]) <= 3 * rec["stderr"]


@pytest.mark.parametrize("threads", ["2", "8"])
def test_json_identical_across_workers(tmp_path, threads):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[potential]\nalpha = 1\nK = 1\nsign = -1\ndim = 2\n[mc]\nn_paths = 20000\nn_steps = 16\nseed = 5\n")
    runs = []
    for th in ("1", threads):
        out = tmp_path / f"o{th}"
        r = subprocess.run([sys.executable, "-m", "schrokernel", "--config", str(cfg), "--threads", th,
                            "--out", str(out), "verify", "--suite", "thm1.2"], capture_output=True, text=True)
        assert r.returncode in (0, 2), r.stderr
        runs.append(strip_stamp((out / "verify.json").read_text()))
    assert runs[0] == runs[1]


def test_env_threads_fallback(case1, monkeypatch, capsys):
    monkeypatch.setenv("SCHRO_THREADS", "4")
    assert main(["--config", str(case1), "kernel", "--t", "1", "--x", "0,0", "--y", "1,0"]) == 0
    a = capsys.readouterr().out
    monkeypatch.setenv("SCHRO_THREADS", "x")
    assert main(["--config", str(case1), "kernel", "--t", "1", "--x", "0,0", "--y", "1,0"]) == 1


def test_load_config_types(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(CASE1 + "[mc]\nantithetic = yes\n[grid]\ntimes = 1, 2, 4\n")
    conf = load_config(p)
    assert conf["mc"]["antithetic"] is True and conf["grid"]["times"] == (1.0, 2.0, 4.0)
    assert conf["potential"]["dim"] == 2
