from __future__ import annotations

import csv
import json
import warnings

import numpy as np
import pytest

from rnads.background import BackgroundParams
from rnads.errors import DomainError, FlowError, MeanCurvatureCollapse, StiffnessError
from rnads.flow import (
    EstimateWarning,
    FlowOptions,
    FlowState,
    TRAJECTORY_COLUMNS,
    choose_dt,
    fit_rate,
    monitor_estimates,
    run,
    slice_ode_run,
    step,
)
from rnads.hypersurface import RadialProfile, perturbed_profile
from rnads.spaceform import build_mesh


@pytest.fixture(scope="module")
def p3():
    return BackgroundParams(3, 1, 1.0, 1.0, 0.0)


@pytest.fixture(scope="module")
def short_perturbed_run(p3):
    mesh = build_mesh("sphere_axisym", 32)
    prof = perturbed_profile(mesh, p3, 1.5, [(1, 0.04), (2, 0.06), (3, -0.03)])
    return run(prof, 1.0, FlowOptions(samples=10))


def test_options_validation():
    with pytest.raises(ValueError):
        FlowOptions(safety=0.0)
    with pytest.raises(ValueError):
        FlowOptions(samples=0)


def test_choose_dt_scales_with_h_squared(p3):
    opts = FlowOptions(dt_max=1e3)
    dts = {}
    for N in (16, 32):
        mesh = build_mesh("sphere_axisym", N)
        dts[N] = choose_dt(FlowState.initial(RadialProfile.slice(mesh, p3, 1.5)), opts)
    assert dts[16] / dts[32] == pytest.approx(4.0, rel=1e-12)


def test_choose_dt_capped(p3):
    mesh = build_mesh("sphere_axisym", 8)
    state = FlowState.initial(RadialProfile.slice(mesh, p3, 5.0))
    assert choose_dt(state, FlowOptions(dt_max=1e-3)) == 1e-3


def test_choose_dt_without_spacing(p3):
    mesh = build_mesh("analytic_slice", eps=1)
    state = FlowState.initial(RadialProfile.slice(mesh, p3, 1.5))
    assert choose_dt(state, FlowOptions(dt_max=0.05)) == 0.05


def test_single_step_local_error_order(p3):
    # RK4 local error is O(dt^5) on the slice ODE lambda' = lambda / (n-1)
    mesh = build_mesh("analytic_slice", eps=1)
    state = FlowState.initial(RadialProfile.slice(mesh, p3, 1.5))
    errs = []
    for dt in (0.4, 0.2, 0.1):
        lam = step(state, dt).profile.lam[0]
        errs.append(abs(lam / (1.5 * np.exp(dt / 2)) - 1))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(20 < r < 45 for r in ratios), ratios


def test_slice_stays_a_slice(p3):
    mesh = build_mesh("sphere_axisym", 24)
    traj = run(RadialProfile.slice(mesh, p3, 1.5), 1.0, FlowOptions(samples=5))
    exact = slice_ode_run(p3, 1.5, 1.0, samples=5)
    for st, lam in zip(traj.states, exact.lam):
        assert np.ptp(st.profile.lam) <= 1e-12 * lam
        assert np.max(np.abs(st.profile.lam / lam - 1)) <= 1e-10


def test_slice_flow_torus():
    p = BackgroundParams(3, 0, 1.0, 1.0, 0.0)
    mesh = build_mesh("torus", 8, eps=0)
    traj = run(RadialProfile.slice(mesh, p, 1.5 * p.s0), 0.5, FlowOptions(samples=4))
    lam_exact = 1.5 * p.s0 * np.exp(traj.times / 2)
    lam = np.array([s.profile.lam.mean() for s in traj.states])
    assert np.max(np.abs(lam / lam_exact - 1)) <= 1e-10


def test_sample_times_are_exact(short_perturbed_run):
    t = short_perturbed_run.times
    assert np.allclose(t, np.linspace(0, 1, 11), rtol=0, atol=1e-15)
    assert t[-1] == 1.0
    assert short_perturbed_run.completed
    assert short_perturbed_run.states[-1].step_count > 10


def test_area_law(short_perturbed_run):
    t = short_perturbed_run.times
    log_area = np.log(short_perturbed_run.series("area"))
    assert np.max(np.abs(log_area - log_area[0] - t)) <= 1e-6


def test_sandwich_holds_along_run(short_perturbed_run):
    assert all(e.sandwich_ok for e in short_perturbed_run.estimates)
    assert all(e.c0_lower >= 1 - 1e-6 and e.c0_upper <= 1 + 1e-6
               for e in short_perturbed_run.estimates)


def test_monitor_warns_on_violated_sandwich(p3):
    mesh = build_mesh("sphere_axisym", 16)
    state = FlowState.initial(RadialProfile.slice(mesh, p3, 1.5))
    bigger = RadialProfile.slice(mesh, p3, 2.0)
    with pytest.warns(EstimateWarning):
        rep = monitor_estimates(state, bigger)
    assert not rep.sandwich_ok


def test_gradient_decays(short_perturbed_run):
    g = short_perturbed_run.series("grad_phi_norm")
    assert g[-1] < g[0]


def test_mean_curvature_collapse_on_start(p3):
    mesh = build_mesh("sphere_axisym", 64)
    u = np.cos(mesh.nodes["theta"])
    base = RadialProfile.slice(mesh, p3, 3.0).r
    prof = RadialProfile.from_r(mesh, p3, base - 0.8 * np.exp(-(u / 0.25) ** 2))
    with pytest.raises(MeanCurvatureCollapse):
        run(prof, 1.0)


def test_stiffness_error_carries_partial_trajectory(p3):
    mesh = build_mesh("sphere_axisym", 16)
    prof = perturbed_profile(mesh, p3, 1.5, [(2, 0.05)])
    opts = FlowOptions(dt_min=1.0, samples=4)
    with pytest.raises(StiffnessError) as info:
        run(prof, 1.0, opts)
    traj = info.value.trajectory
    assert len(traj.states) == 1
    assert isinstance(info.value, FlowError)

    traj = run(prof, 1.0, opts, raise_on_error=False)
    assert not traj.completed
    assert isinstance(traj.error, StiffnessError)
    assert "StiffnessError" in traj.summary()["error"]


def test_run_rejects_nonpositive_time(p3):
    mesh = build_mesh("sphere_axisym", 16)
    with pytest.raises(ValueError):
        run(RadialProfile.slice(mesh, p3, 1.5), 0.0)


def test_slice_ode_run(p3):
    tr = slice_ode_run(p3, 1.5, 2.0, samples=4)
    assert tr.lam[-1] == pytest.approx(1.5 * np.e)
    with pytest.raises(DomainError):
        slice_ode_run(p3, 1.0, 2.0)


def test_fit_rate_recovers_exponent():
    t = np.linspace(0, 4, 41)
    fit = fit_rate(t, 3.0 * np.exp(-0.7 * t))
    assert fit.rate == pytest.approx(-0.7, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert fit.residual < 1e-12
    assert fit.points == 21


def test_fit_rate_window_and_degenerate_input():
    t = np.linspace(0, 4, 41)
    v = np.where(t < 2, np.exp(-t), np.exp(-2 - 3 * (t - 2)))
    assert fit_rate(t, v, window=(0, 1.9)).rate == pytest.approx(-1, abs=1e-12)
    assert fit_rate(t, v).rate == pytest.approx(-3, abs=1e-12)
    assert np.isnan(fit_rate(t, np.zeros_like(t)).rate)


def test_outputs(tmp_path, short_perturbed_run):
    traj = short_perturbed_run
    traj.write_csv(tmp_path / "traj.csv")
    with open(tmp_path / "traj.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert len(rows) == len(traj.states) + 1
    assert float(rows[-1][0]) == 1.0

    traj.write_json(tmp_path / "summary.json")
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["completed"] is True
    assert set(data["monotonicity"]) == {"Q_nonincreasing", "L_bounded", "JK_nondecreasing",
                                         "Q_final_nonnegative"}
    assert all(data["monotonicity"].values())
    assert data["rates"]["grad_phi_norm"]["points"] > 0


def test_slice_run_emits_no_warnings(p3):
    mesh = build_mesh("sphere_axisym", 16)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run(RadialProfile.slice(mesh, p3, 1.5), 0.2, FlowOptions(samples=2))
