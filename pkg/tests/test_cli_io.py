import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastreact import cli
from fastreact.config import (DEFAULT_SEED, apply_overrides, load_spec, read_config, seed_of, spec_from_dict)
from fastreact.core import p1_problem
from fastreact.errors import ConfigurationError, NumericalFailure
from fastreact.io import prepare_output, read_trajectory, write_trajectory
from fastreact.simulator import run

P1_TOML = """\
[domain]
extents = [[-1.0, 1.0]]

[support]
kind = "intervals"
intervals = [[-1.0, -0.3], [0.3, 1.0]]

[initial.u0]
expr = "cos(pi*x/0.6)"
region = "complement"

[initial.v0]
expr = "1"

[params]
k = 1e3
m3 = 2
m4 = 1
T = 0.02

[grid]
points = [101]
"""


@pytest.fixture
def p1_toml(tmp_path):
    path = tmp_path / "p1.toml"
    path.write_text(P1_TOML, encoding="utf-8")
    return path


def _edit(tmp_path, old, new):
    path = tmp_path / "edited.toml"
    path.write_text(P1_TOML.replace(old, new), encoding="utf-8")
    return path


# config

def test_load_spec_matches_builder(p1_toml):
    spec = load_spec(p1_toml)
    ref = p1_problem(k=1e3, T=0.02, points=101)
    assert spec.to_dict() == ref.to_dict()
    assert seed_of(spec) == DEFAULT_SEED


def test_to_dict_round_trip():
    spec = p1_problem(k=3e4, m3=1, m4=3, T=0.05, points=201, seed=7)
    again = spec_from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again.to_dict() == spec.to_dict()
    assert seed_of(again) == 7


def test_overrides(p1_toml):
    spec = load_spec(p1_toml, ["params.k=1e4", "grid.points=[51]", "initial.u0.expr=0.5*cos(pi*x/0.6)"])
    assert spec.k == 1e4 and spec.grid.shape == (51,)
    assert spec.initial.u0.text == "0.5*cos(pi*x/0.6)"


@pytest.mark.parametrize("bad", ["params.k", "k=1", "params.k.x=1"])
def test_malformed_overrides(p1_toml, bad):
    with pytest.raises(ConfigurationError):
        load_spec(p1_toml, [bad])


@pytest.mark.parametrize("old,new", [
    ("m4 = 1\n", "m4 = 1\nspeed = 2\n"),
    ("[grid]", "[extras]\nz = 1\n\n[grid]"),
    ('region = "complement"', 'region = "complement"\ncolor = "red"'),
    ("T = 0.02\n", ""),
    ("[grid]\npoints = [101]\n", ""),
])
def test_config_rejects_unknown_and_missing(tmp_path, old, new):
    with pytest.raises(ConfigurationError):
        load_spec(_edit(tmp_path, old, new))


def test_config_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigurationError):
        read_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[params\nk = 1", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        read_config(bad)


@settings(max_examples=60, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_override_round_trips(x):
    data = apply_overrides({"params": {"k": 1.0}}, [f"params.k={x!r}"])
    assert data["params"]["k"] == x


# io

@pytest.fixture(scope="module")
def small_traj():
    spec = p1_problem(k=1e3, T=0.01, points=51)
    return run(spec, np.linspace(0.0, spec.T, 3))


def test_trajectory_round_trip_is_exact(tmp_path, small_traj):
    write_trajectory(small_traj, tmp_path)
    back = read_trajectory(tmp_path)
    np.testing.assert_array_equal(back.u, small_traj.u)
    np.testing.assert_array_equal(back.v, small_traj.v)
    np.testing.assert_array_equal(back.times, small_traj.times)
    meta = json.loads((tmp_path / "meta.json").read_text(encoding="utf-8"))
    assert spec_from_dict(meta["spec"]).to_dict() == small_traj.meta["spec"]
    assert {"python", "numpy", "scipy"} <= set(meta["versions"])


def test_csv_uses_17_significant_digits(tmp_path, small_traj):
    write_trajectory(small_traj, tmp_path)
    lines = (tmp_path / "trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,x,u,v"
    assert len(lines) == 1 + 3 * 51
    row = lines[1 + 51 + 25].split(",")
    assert row[2] == "%.17g" % small_traj.u[1].ravel()[25]


def test_outputs_are_not_overwritten(tmp_path, small_traj):
    write_trajectory(small_traj, tmp_path)
    with pytest.raises(ConfigurationError):
        write_trajectory(small_traj, tmp_path)
    write_trajectory(small_traj, tmp_path, force=True)
    assert prepare_output(tmp_path / "fresh", names=("trajectory.csv",)).is_dir()


def test_read_trajectory_needs_both_files(tmp_path):
    with pytest.raises(ConfigurationError):
        read_trajectory(tmp_path)


# cli exit codes

def test_simulate_exit_codes(tmp_path, p1_toml, capsys):
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(p1_toml), "--k", "1e4", "-o", str(out)]) == 0
    assert (out / "trajectory.csv").is_file() and (out / "meta.json").is_file()
    meta = json.loads((out / "meta.json").read_text(encoding="utf-8"))
    assert spec_from_dict(meta["spec"]).k == 1e4
    assert cli.main(["simulate", "--config", str(p1_toml), "-o", str(out)]) == 2
    assert cli.main(["simulate", "--config", str(p1_toml), "-o", str(out), "--force"]) == 0
    assert "already exist" in capsys.readouterr().err


def test_configuration_errors_exit_2(tmp_path, p1_toml):
    out = str(tmp_path / "o")
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.toml"), "-o", out]) == 2
    assert cli.main(["simulate", "--config", str(_edit(tmp_path, "T = 0.02", "T = 0.02\nfoo = 1")), "-o", out]) == 2
    assert cli.main(["simulate", "--config", str(p1_toml), "-o", out, "--set", "params.k=-1"]) == 2
    assert cli.main(["simulate", "--config", str(p1_toml)]) == 2
    assert cli.main(["bogus"]) == 2
    assert cli.main(["verify-barriers", "--barrier", "cosh", "--k-min", "1e6", "--k-max", "1e3"]) == 2


def test_numerical_failure_exits_1_with_report(tmp_path, p1_toml, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise NumericalFailure("injected")

    monkeypatch.setattr(cli, "run", boom)
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(p1_toml), "-o", str(out)]) == 1
    report = json.loads((out / "failure.json").read_text(encoding="utf-8"))
    assert report["error"] == "NumericalFailure" and report["message"] == "injected"
    assert str(out / "failure.json") in capsys.readouterr().err


def test_assemble_below_threshold_exits_1(tmp_path, p1_toml):
    out = tmp_path / "a"
    code = cli.main(["assemble", "--config", str(p1_toml), "-o", str(out), "--d", "0.1", "--eps", "0.2",
                     "--k", "1e10"])
    assert code == 1
    assert json.loads((out / "failure.json").read_text(encoding="utf-8"))["error"] == "ConstructionFailure"


def test_assemble_passes_at_large_k(tmp_path, p1_toml):
    out = tmp_path / "a"
    code = cli.main(["assemble", "--config", str(p1_toml), "-o", str(out), "--d", "0.1", "--eps", "0.2",
                     "--k", "1e25", "--snapshots", "3", "--set", "params.T=0.1", "--set", "grid.points=[201]"])
    assert code == 0
    data = json.loads((out / "assembly.json").read_text(encoding="utf-8"))
    assert data["dominance"]["passed"]
    header = (out / "barrier.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "t,x,U,V,index"


def test_verify_barriers_reports_threshold(tmp_path, capsys):
    out = tmp_path / "v"
    code = cli.main(["verify-barriers", "--barrier", "cosh", "--a1", "1", "--m", "4", "--k-min", "1e6",
                     "--k-max", "1e12", "-o", str(out)])
    assert code == 0
    assert "threshold: k = 1e+10" in capsys.readouterr().out
    data = json.loads((out / "thresholds.json").read_text(encoding="utf-8"))
    assert data["threshold"] == 1e10
    assert (out / "profile_k1e+10.csv").is_file()


def test_verify_barriers_without_threshold_exits_1():
    assert cli.main(["verify-barriers", "--barrier", "cosh", "--m", "4", "--k-min", "1e6", "--k-max", "1e8"]) == 1


def test_sweep_exit_code_follows_checks(tmp_path, p1_toml):
    out = tmp_path / "s"
    code = cli.main(["sweep", "--config", str(p1_toml), "--ks", "1e2,1e3", "-o", str(out)])
    data = json.loads((out / "convergence.json").read_text(encoding="utf-8"))
    assert (out / "convergence.csv").is_file()
    assert code == (0 if all(data["checks"].values()) else 1)


def test_compare_exit_codes(tmp_path, p1_toml):
    hi, lo = tmp_path / "hi", tmp_path / "lo"
    assert cli.main(["simulate", "--config", str(p1_toml), "-o", str(hi)]) == 0
    assert cli.main(["simulate", "--config", str(p1_toml), "-o", str(lo),
                     "--set", 'initial.u0.expr="0.5*cos(pi*x/0.6)"']) == 0
    assert cli.main(["compare", str(hi), str(lo)]) == 0
    assert cli.main(["compare", str(lo), str(hi)]) == 1
    assert cli.main(["compare", str(hi), str(tmp_path / "missing")]) == 2
