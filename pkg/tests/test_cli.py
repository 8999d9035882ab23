import json

import pytest

from orderest.cli import main


def test_psi_command_agreement(capsys):
    rc = main(
        "psi --model indep_gamma --a1 1 --a2 1 --loss squared_error "
        "--target smaller --lambda 1 --t 2".split()
    )
    assert rc == 0
    out = capsys.readouterr().out
    row = out.strip().splitlines()[-1].split()
    assert float(row[2]) == pytest.approx(1.0, abs=1e-9)
    assert float(row[3]) == pytest.approx(1.0, abs=1e-5)
    assert float(row[4]) < 1e-5


def test_psi_command_near_zero_correlation(capsys):
    rc = main(
        "psi --model bvn --s1 1 --s2 1 --rho 1e-9 --loss squared_error "
        "--target smaller --lambda 0 --t 5".split()
    )
    assert rc == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split()
    assert float(row[2]) == pytest.approx(-2.5, abs=1e-6)
    assert float(row[3]) == pytest.approx(-2.5, abs=1e-5)


def test_psi_missing_model_is_usage_error(capsys):
    rc = main("psi --target smaller --lambda 1 --t 2".split())
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_exits_two():
    with pytest.raises(SystemExit) as err:
        main(["psi", "--frobnicate"])
    assert err.value.code == 2


def test_bounds_command(capsys):
    rc = main(
        "bounds --model indep_gamma --a1 2 --a2 3 --target smaller --t 5".split()
    )
    assert rc == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split()
    assert float(row[1]) == pytest.approx(1.0 / 6.0, abs=1e-9)
    assert float(row[2]) == pytest.approx(1.0, abs=1e-9)
    assert row[3] == "closed_form"


def test_improve_command_clip_inactive(capsys):
    rc = main(
        "improve --model indep_gamma --a1 1 --a2 1 --key smaller:bsee --x1 3 --x2 9".split()
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "base estimate    : 1.5" in out
    assert "improved estimate: 1.5" in out


def test_improve_command_clip_active(capsys):
    rc = main(
        "improve --model bvn --s1 1 --s2 1 --rho 0 --key smaller:blee --x1 2 --x2 1".split()
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "base estimate    : 2" in out
    assert "improved estimate: 1.5" in out


def test_improve_scale_domain_error(capsys):
    rc = main(
        "improve --model indep_gamma --a1 1 --a2 1 --key smaller:bsee --x1 0 --x2 1".split()
    )
    assert rc == 1
    assert "positive" in capsys.readouterr().err


def test_improve_nonexistent_estimator(capsys):
    rc = main("improve --model dep_exp_gamma --key larger:blee --x1 1 --x2 2".split())
    assert rc == 1
    assert "diverges" in capsys.readouterr().err


def test_simulate_writes_deterministic_csv(tmp_path, capsys):
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    for out in (out1, out2):
        rc = main(
            f"simulate --preset fig1a --n 400 --seed 42 --out-dir {out} --format both".split()
        )
        assert rc == 0
    assert (out1 / "fig1a.csv").read_bytes() == (out2 / "fig1a.csv").read_bytes()
    assert (out1 / "fig1a.svg").exists()
    header = (out1 / "fig1a.csv").read_text().splitlines()[0]
    assert header == "model,target,loss,estimator,lambda,risk,stderr,n,seed"


def test_simulate_unknown_preset(capsys):
    rc = main("simulate --preset fig9z".split())
    assert rc == 2


def test_analyze_bundled(capsys):
    rc = main(["analyze"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "9.617" in out and "9.488" in out
    assert "improved smaller mean: 9.66" in out
    assert "improved larger mean : 9.66" in out


def test_analyze_custom_data(tmp_path, capsys):
    path = tmp_path / "pairs.csv"
    path.write_text("a,1.0,2.0\nb,3.0,5.0\nc,2.0,4.0\n")
    rc = main(["analyze", "--data", str(path)])
    assert rc == 0
    assert "rows                 : 3" in capsys.readouterr().out


def test_config_file_supplies_flags(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "model": "indep_gamma", "a1": 1.0, "a2": 1.0,
        "loss": "squared_error", "target": "smaller",
        "lam": [1.0], "t": [2.0],
    }))
    rc = main(["psi", "--config", str(config)])
    assert rc == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split()
    assert float(row[3]) == pytest.approx(1.0, abs=1e-5)


def test_config_flag_override(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "model": "indep_gamma", "a1": 1.0, "a2": 1.0,
        "loss": "squared_error", "target": "smaller",
        "lam": [1.0], "t": [2.0],
    }))
    rc = main(["psi", "--config", str(config), "--t", "4.0"])
    assert rc == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split()
    assert float(row[1]) == 4.0
    assert float(row[3]) == pytest.approx(5.0 / 3.0, abs=1e-5)


def test_config_unknown_key(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"frobnicate": 1}))
    rc = main(["analyze", "--config", str(config)])
    assert rc == 2
    assert "unknown config keys" in capsys.readouterr().err
