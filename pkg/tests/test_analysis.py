import json

import numpy as np
import pytest

from fastreact.analysis import (ConvergenceReport, SpaceTimeBarrier, comparison_check, dominance_check,
                                interface_displacement, interface_position, k_sweep, ordered_pair_study,
                                random_ordered_pairs)
from fastreact.core import Field, Trajectory, build_grid, disk_problem, eval_initial_data, p1_problem
from fastreact.errors import ConfigurationError, DomainError
from fastreact.simulator import run


def _pair(small_shift=0.1):
    g = build_grid((0.0, 1.0), 11)
    u = np.linspace(0, 1, 11)[None, :] * np.ones((3, 1))
    v = np.ones((3, 11))
    a = Trajectory(g, [0.0, 0.5, 1.0], u + small_shift, v - small_shift)
    b = Trajectory(g, [0.0, 0.5, 1.0], u, v)
    return a, b


def test_comparison_identical_and_swapped():
    a, b = _pair()
    same = comparison_check(b, b)
    assert same.passed and same.worst_margin == 0.0
    assert comparison_check(a, b).passed
    bad = comparison_check(b, a)
    assert not bad.passed and bad.worst_margin == pytest.approx(-0.1)
    assert "t" in bad.location


def test_comparison_mismatch_is_config_error():
    a, _ = _pair()
    g = build_grid((0.0, 1.0), 12)
    other = Trajectory(g, [0.0, 0.5, 1.0], np.zeros((3, 12)))
    with pytest.raises(ConfigurationError):
        comparison_check(a, other)


def test_random_pairs_are_ordered_and_seeded():
    g = build_grid((0.0, 1.0), 31)
    pairs = random_ordered_pairs(g, 5, seed=7)
    again = random_ordered_pairs(g, 5, seed=7)
    for ((uh, vl), (ul, vh)), ((uh2, _), _) in zip(pairs, again):
        assert np.all(uh >= ul) and np.all(vl <= vh) and min(ul.min(), vl.min()) >= 0
        np.testing.assert_array_equal(uh, uh2)


def test_ordered_pair_study_small():
    reports = ordered_pair_study(build_grid((0.0, 1.0), 41), 1e3, 2, 1, 0.01, n=4, seed=1)
    assert all(r.passed for r in reports)


def test_interface_position_p1():
    spec = p1_problem(points=801)
    _, v0 = eval_initial_data(spec)
    pos = interface_position(v0, 0.5, spec.geometry)
    assert set(pos) == {-0.3, 0.3}
    for p, xc in pos.items():
        assert abs(xc - p) <= spec.grid.hmin


def test_interface_absorbed_and_dimension():
    spec = p1_problem(points=101)
    flat = Field(spec.grid, np.ones(101))
    assert all(x is None for x in interface_position(flat, 0.5, spec.geometry).values())
    d2 = disk_problem(points=21)
    _, v2 = eval_initial_data(d2)
    with pytest.raises(DomainError):
        interface_position(v2, 0.5, d2.geometry)


def test_interface_displacement_small_for_fast_reaction():
    spec = p1_problem(k=1e4, points=201, T=0.02)
    tr = run(spec, np.linspace(0, 0.02, 5))
    disp = interface_displacement(tr, 0.5, spec.geometry)
    assert max(disp.values()) <= 2 * spec.grid.hmin


def test_dominance_trivial_and_fault_injection():
    spec = p1_problem(k=1e3, points=101, T=0.01)
    tr = run(spec, [0.0, 0.01])
    top = SpaceTimeBarrier(tr.times, 1.0 + 1.0, 0.0)
    assert dominance_check(tr, top).passed
    scaled = SpaceTimeBarrier(tr.times, 2.0 * 1e-3, 0.0)
    rep = dominance_check(tr, scaled)
    assert not rep.passed and rep.location["component"] == "u"
    assert rep.worst_margin == pytest.approx(2e-3 - tr.u.max())
    with pytest.raises(ConfigurationError):
        dominance_check(tr, SpaceTimeBarrier([0.0], 1.0, 0.0))


def test_k_sweep_small_grid(tmp_path):
    spec = p1_problem(points=101, T=0.02)
    rep = k_sweep(spec, [1e2, 1e3], [(-0.9, -0.5), (0.5, 0.9)], output_times=np.linspace(0, 0.02, 5))
    assert [r["k"] for r in rep.rows] == [1e2, 1e3]
    assert rep.checks["sup_error_strictly_decreasing"] and rep.checks["u_k>=u_inf-1e-8"]
    assert rep.checks["sup_error>=u_k_on_support"]
    for row in rep.rows:
        assert all(np.isfinite(v) and v >= 0 for v in row.values())
    rep.to_csv(tmp_path / "c.csv")
    rep.to_json(tmp_path / "c.json")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "k,sup_u_err,v_deficit,interface_disp,dt,h"
    assert float(lines[1].split(",")[1]) == rep.rows[0]["sup_u_err"]
    assert json.loads((tmp_path / "c.json").read_text())["rows"][0]["k"] == 100.0
    again = k_sweep(spec, [1e2, 1e3], [(-0.9, -0.5), (0.5, 0.9)], output_times=np.linspace(0, 0.02, 5))
    assert again.rows == rep.rows


def test_k_sweep_validates_inputs():
    spec = p1_problem(points=101, T=0.01)
    with pytest.raises(ConfigurationError):
        k_sweep(spec, [1e3, 1e2], [(0.5, 0.9)])
    with pytest.raises(ConfigurationError):
        k_sweep(spec, [1e2], [(0.29, 0.9)])


def test_report_ratios():
    rep = ConvergenceReport(rows=[{"k": 1, "v_deficit": 1.0}, {"k": 2, "v_deficit": 0.1},
                                  {"k": 3, "v_deficit": 0.0}])
    r = rep.ratios()
    assert r[0] == pytest.approx(10.0) and np.isinf(r[1])
