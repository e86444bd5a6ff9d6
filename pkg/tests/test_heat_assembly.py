import numpy as np
import pytest

from fastreact.analysis import dominance_check
from fastreact.barriers import (ConstructionFailure, assemble_global_supersolution, assembly_parameters,
                                enlarged_heat_barrier, offsets_for, search_d)
from fastreact.barriers.assembly import traveling_speed, v_floor
from fastreact.barriers.heat import extended_trace, reflect_across_interface
from fastreact.core import eval_initial_data, p1_problem
from fastreact.diffusion import heat_reference_solve, monotone_dt
from fastreact.errors import ConfigurationError
from fastreact.simulator import run


@pytest.fixture(scope="module")
def p1_401():
    return p1_problem(points=401)


def test_reflection_across_interval_interface(p1_401):
    x = np.array([-0.35, -0.32, 0.31, 0.4])
    (xr,) = reflect_across_interface(p1_401.geometry, (x,))
    np.testing.assert_allclose(xr, [-0.25, -0.28, 0.29, 0.2], atol=1e-8)


def test_extensions(p1_401):
    x = p1_401.grid.coords()[0]
    even = extended_trace(p1_401, 0.1, "even")
    zero = extended_trace(p1_401, 0.1, "zero")
    inside = np.abs(x) < 0.3
    np.testing.assert_array_equal(even[inside], zero[inside])
    band = (np.abs(x) > 0.3) & (np.abs(x) < 0.4)
    # the mirror of cos(pi x/0.6) across x=0.3 is -cos(pi x/0.6) there, which clamps to ~0 near the interface
    np.testing.assert_allclose(even[band], np.maximum(-np.cos(np.pi * x[band] / 0.6), 0.0), atol=1e-6)
    assert np.all(zero[~inside] == 0.0)
    with pytest.raises(ConfigurationError):
        extended_trace(p1_401, 0.1, "odd")


def test_zero_initial_u_gives_constant_barrier(p1_401):
    bar = enlarged_heat_barrier(0.05, 0.1, p1_401, u0=lambda x: 0.0 * x)
    assert bar.offset == 0.0
    assert np.all(bar.values[:, bar.region] == bar.offset)
    assert bar.passed


def test_lower_sandwich_against_reference_and_exact_mode(p1_401):
    spec = p1_401
    times = np.linspace(0.0, spec.T, 5)
    dt = monotone_dt(spec.grid)
    bar = enlarged_heat_barrier(0.05, 0.1, spec, dt=dt, output_times=times)
    u0, _ = eval_initial_data(spec)
    ref = heat_reference_solve(u0, spec.geometry, spec.T, dt, times)
    comp = ~spec.geometry.in_support(spec.grid)
    np.testing.assert_allclose(bar.diagnostics["u_inf"][:, comp], ref.u[:, comp], rtol=0, atol=1e-13)
    assert np.all(bar.values[:, comp] >= ref.u[:, comp] - 1e-12)
    x = spec.grid.coords()[0]
    exact = np.exp(-(np.pi / 0.6) ** 2 * times)[:, None] * np.cos(np.pi * x / 0.6)[None, :]
    assert np.all(bar.values[:, comp] >= exact[:, comp] - 1e-3)


@pytest.mark.xfail(strict=True, reason="measured excess over u_inf is 0.35 for the even extension at d=0.05 "
                                       "(0.16 with the zero extension); the 0.1 bound is not met")
def test_p1_example_d005_sandwich():
    bar = enlarged_heat_barrier(0.05, 0.1, p1_problem(points=801))
    assert bar.report.checks["lower_sandwich"]
    assert bar.report.checks["upper_sandwich"]


def test_zero_extension_meets_sandwich_for_small_d():
    bar = enlarged_heat_barrier(0.0125, 0.1, p1_problem(points=801), extension="zero")
    assert bar.passed
    assert bar.diagnostics["excess"] <= 0.1


def test_search_d_reports_failure_and_success(p1_401):
    d, last = search_d([0.1, 0.05], 0.1, p1_401)
    assert d is None and not last.report.checks["upper_sandwich"]
    d, bar = search_d([0.1, 0.05, 0.0125], 0.1, p1_problem(points=801), extension="zero")
    assert d == 0.0125 and bar.passed


def test_offsets_nonincreasing_and_excess_shrinks(p1_401):
    ds = [0.1, 0.05, 0.025]
    offs = offsets_for(ds, 0.1, p1_401)
    assert [offs[d] for d in ds] == sorted((offs[d] for d in ds), reverse=True)
    excess = [enlarged_heat_barrier(d, 0.1, p1_401).diagnostics["excess"] for d in ds]
    assert excess == sorted(excess, reverse=True)


def test_heat_barrier_preconditions(p1_401):
    with pytest.raises(ConfigurationError):
        enlarged_heat_barrier(0.0, 0.1, p1_401)
    with pytest.raises(ConfigurationError):
        enlarged_heat_barrier(0.05, -1.0, p1_401)
    with pytest.raises(ConfigurationError):
        enlarged_heat_barrier(0.5, 0.1, p1_401)  # beyond the reach 0.3


def test_speed_and_v_floor():
    assert traveling_speed(0.1, 1.0) == 0.0125
    assert traveling_speed(1.0, 0.1) == 0.25
    assert v_floor(p1_problem(points=201), 0.1) == 1.0


def test_assembly_parameters_p1():
    s, a3, b3, c3, vd = assembly_parameters(p1_problem(points=201), 0.1)
    assert (s, a3, b3, c3, vd) == (0.125, 1.0, 0.5, 2.0, 1.0)
    assert assembly_parameters(p1_problem(points=201), 0.1, "literal")[2] == 2.0
    with pytest.raises(ConfigurationError):
        assembly_parameters(p1_problem(points=201), 0.1, "other")


@pytest.fixture(scope="module")
def assembled():
    spec = p1_problem(points=201)
    times = np.linspace(0.0, spec.T, 5)
    dt = monotone_dt(spec.grid)
    return spec, times, dt, assemble_global_supersolution(spec, 0.1, 0.2, k=1e25, dt=dt, output_times=times)


def test_assembly_passes_and_dominates(assembled):
    spec, times, dt, barrier = assembled
    assert barrier.passed, barrier.report.lines()
    assert set(np.unique(barrier.index)) <= {1, 2, 3}
    fresh = run(spec.with_(k=barrier.k, solver={"dt": dt}), times)
    assert dominance_check(fresh, barrier, tol=1e-8).passed


def test_assembly_initial_ordering(assembled):
    spec, _, _, barrier = assembled
    u0, v0 = eval_initial_data(spec)
    assert np.all(barrier.U[0] >= u0.values)
    assert np.all(barrier.V[0] <= v0.values)


def test_literal_b3_rule_breaks_v_ordering():
    spec = p1_problem(points=201)
    barrier = assemble_global_supersolution(spec, 0.1, 0.2, k=1e25, output_times=[0.0, spec.T], b3_rule="literal")
    assert not barrier.report.checks["V3>=V2(1/k)>=0"]


def test_assembly_below_threshold_raises():
    with pytest.raises(ConstructionFailure):
        assemble_global_supersolution(p1_problem(points=201), 0.1, 0.2, k=1e10)


def test_assembly_rejects_inadmissible_exponents():
    with pytest.raises(ConfigurationError):
        assemble_global_supersolution(p1_problem(points=201, m3=1, m4=1), 0.1, 0.2, k=1e25)
