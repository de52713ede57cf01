"""Inverse mean curvature flow of star-shaped graphs.

In graph form the flow reads ``d phi / dt = upsilon / (lambda H)``.  The
right-hand side is a quasilinear parabolic operator in ``phi`` whose
diffusivity is ``(lambda H)^-2``; explicit RK4 with a step bound
``dt ~ h^2 (lambda H)^2`` is therefore enough, and the bound relaxes as the
surface expands.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .background import _check_outside
from .errors import FlowError, GeometryError, MeanCurvatureCollapse, StarShapeLoss, StiffnessError
from .functionals import FunctionalReport, evaluate, monotonicity_report
from .hypersurface import RadialProfile, geometry_from_profile

__all__ = [
    "FlowOptions",
    "FlowState",
    "EstimateReport",
    "EstimateWarning",
    "RateFit",
    "SliceTrajectory",
    "Trajectory",
    "choose_dt",
    "step",
    "slice_ode_run",
    "run",
    "monitor_estimates",
    "fit_rate",
    "TRAJECTORY_COLUMNS",
]

log = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("t", "area", "minH", "maxH", "grad_phi_norm", "Q", "J", "K", "L",
                      "hk_residual", "minkowski_deficit", "af_deficit")


class EstimateWarning(UserWarning):
    """A monitored a priori bound is violated beyond its tolerance."""


@dataclass(frozen=True)
class FlowOptions:
    """Integrator settings.

    ``samples`` is the number of reporting intervals on [0, T]; reports are
    emitted at ``T * k / samples`` and the step is clipped to hit them.
    """

    safety: float = 0.25
    dt_max: float = 0.01
    dt_min: float = 1e-9
    samples: int = 40

    def __post_init__(self):
        if not (self.safety > 0 and self.dt_max > 0 and self.dt_min > 0):
            raise ValueError("safety, dt_max and dt_min must be positive")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    profile: RadialProfile
    geom: object
    step_count: int = 0
    dt_last: float = 0.0

    @classmethod
    def initial(cls, profile, t=0.0):
        geom = _checked_geometry(profile, None)
        return cls(float(t), profile, geom)


def _checked_geometry(profile, last_state):
    try:
        geom = geometry_from_profile(profile)
    except GeometryError as exc:
        raise FlowError(f"geometry evaluation failed: {exc}", last_state) from exc
    if not geom.H.min() > 0:
        raise MeanCurvatureCollapse(f"min H = {geom.H.min():.6g} <= 0", last_state)
    if not (np.all(np.isfinite(geom.support)) and geom.support.min() > 0):
        raise StarShapeLoss("support function is not positive", last_state)
    return geom


def _speed(geom):
    return geom.upsilon / (geom.lam * geom.H)


def choose_dt(state, options=None):
    """dt = min(dt_max, safety * h^2 * min(lambda H)^2)."""
    options = options or FlowOptions()
    geom = state.geom
    if not geom.H.min() > 0:
        raise MeanCurvatureCollapse("min H <= 0", state)
    h = state.profile.mesh.spacing
    if h == 0:
        return options.dt_max
    bound = options.safety * h * h * float(np.min(geom.lam * geom.H)) ** 2
    return min(options.dt_max, bound)


def step(state, dt):
    """One classical RK4 step of d phi/dt = upsilon/(lambda H)."""
    prof = state.profile

    def stage(phi):
        sub = prof.with_phi(phi)
        return _speed(_checked_geometry(sub, state))

    k1 = _speed(state.geom)
    k2 = stage(prof.phi + 0.5 * dt * k1)
    k3 = stage(prof.phi + 0.5 * dt * k2)
    k4 = stage(prof.phi + dt * k3)
    phi = prof.phi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    try:
        new = prof.with_phi(phi)
    except GeometryError as exc:
        raise FlowError(f"profile update failed: {exc}", state) from exc
    geom = _checked_geometry(new, state)
    return FlowState(state.t + dt, new, geom, state.step_count + 1, dt)


@dataclass(frozen=True)
class SliceTrajectory:
    t: np.ndarray
    lam: np.ndarray


def slice_ode_run(p, lambda0, T, samples=100):
    """Exact round-slice solution lambda(t) = lambda0 * exp(t / (n-1))."""
    _check_outside(np.asarray(float(lambda0)), p, strict=True)
    t = np.linspace(0.0, float(T), int(samples) + 1)
    return SliceTrajectory(t, float(lambda0) * np.exp(t / (p.n - 1)))


@dataclass(frozen=True)
class EstimateReport:
    """Monitored a priori quantities at one time.

    ``c0_lower`` and ``c0_upper`` are min lambda / (lambda_min(0) e^{t/(n-1)})
    and max lambda / (lambda_max(0) e^{t/(n-1)}); the bound holds when
    ``c0_lower >= 1`` and ``c0_upper <= 1`` up to the relative tolerance.
    """

    t: float
    c0_lower: float
    c0_upper: float
    h_upper_gap: float
    grad_phi_norm: float
    shape_gap: float
    u_monitor: float
    chi_monitor: float
    sandwich_ok: bool
    fitted_rates: dict = field(default_factory=dict)

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def monitor_estimates(state, initial_data, tol=1e-6):
    """Evaluate the monitors; a violated C0 sandwich emits :class:`EstimateWarning`."""
    p = state.profile.background
    n = p.n
    geom = state.geom
    init_lam = initial_data.lam if isinstance(initial_data, RadialProfile) else initial_data.profile.lam
    grow = np.exp(state.t / (n - 1))
    lower = float(geom.lam.min() / (init_lam.min() * grow))
    upper = float(geom.lam.max() / (init_lam.max() * grow))
    ok = lower * (1 + tol) >= 1.0 and upper <= 1.0 + tol
    if not ok:
        warnings.warn(f"C0 sandwich violated at t={state.t:.4g}: ratios {lower:.10g}, {upper:.10g}",
                      EstimateWarning, stacklevel=2)
    kappa = p.kappa
    shape_gap = float(max(np.max(np.abs(geom.shape_max - kappa)),
                          np.max(np.abs(geom.shape_min - kappa))))
    return EstimateReport(
        t=state.t, c0_lower=lower, c0_upper=upper,
        h_upper_gap=float(np.max(geom.H) - (n - 1) * kappa),
        grad_phi_norm=float(np.max(geom.grad_norm)), shape_gap=shape_gap,
        u_monitor=float(np.max(_speed(geom))), chi_monitor=float(np.max(geom.upsilon / geom.H)),
        sandwich_ok=ok,
    )


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    residual: float
    points: int


def fit_rate(t, values, window=None):
    """Least-squares slope of log|values| against t over ``window`` (default: trailing half)."""
    t = np.asarray(t, float)
    v = np.abs(np.asarray(values, float))
    if window is None:
        window = (0.5 * t[-1], t[-1])
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12) & (v > 1e-300) & np.isfinite(v)
    if sel.sum() < 2:
        return RateFit(float("nan"), float("nan"), float("nan"), int(sel.sum()))
    A = np.vstack([t[sel], np.ones(sel.sum())]).T
    coef, *_ = np.linalg.lstsq(A, np.log(v[sel]), rcond=None)
    resid = np.log(v[sel]) - A @ coef
    return RateFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2))), int(sel.sum()))


RATE_KEYS = ("grad_phi_norm", "shape_gap", "h_upper_gap", "u_monitor")


@dataclass(eq=False)
class Trajectory:
    """Sampled states with their functional and estimate reports."""

    states: list
    functionals: list
    estimates: list
    T: float
    steps: int = 0
    error: Exception | None = None
    rates: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def completed(self):
        return self.error is None

    def series(self, name):
        if name in FunctionalReport.__dataclass_fields__:
            return np.array([getattr(r, name) for r in self.functionals])
        if name in ("minH", "maxH"):
            fn = np.min if name == "minH" else np.max
            return np.array([fn(s.geom.H) for s in self.states])
        return np.array([getattr(e, name) for e in self.estimates])

    def compute_rates(self):
        t = self.times
        self.rates = {k: fit_rate(t, self.series(k)) for k in RATE_KEYS}
        return self.rates

    def monotonicity(self):
        return monotonicity_report(self.functionals, self.states[0].profile.background.n)

    def rows(self):
        for st, fr, est in zip(self.states, self.functionals, self.estimates):
            yield {
                "t": st.t, "area": fr.area, "minH": float(st.geom.H.min()),
                "maxH": float(st.geom.H.max()), "grad_phi_norm": est.grad_phi_norm,
                "Q": fr.Q, "J": fr.J, "K": fr.K, "L": fr.L, "hk_residual": fr.hk_residual,
                "minkowski_deficit": fr.minkowski_deficit, "af_deficit": fr.af_deficit,
            }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_COLUMNS)
            for row in self.rows():
                writer.writerow([repr(float(row[c])) for c in TRAJECTORY_COLUMNS])

    def summary(self):
        if not self.rates:
            self.compute_rates()
        last = self.states[-1]
        out = {
            "T": self.T,
            "t_final": last.t,
            "steps": self.steps,
            "completed": self.completed,
            "error": None if self.error is None else f"{type(self.error).__name__}: {self.error}",
            "background": last.profile.background.as_dict(),
            "mesh": {"kind": last.profile.mesh.kind, "resolution": last.profile.mesh.resolution},
            "final": self.functionals[-1].as_dict(),
            "final_estimates": self.estimates[-1].as_dict(),
            "rates": {k: {"rate": r.rate, "residual": r.residual, "points": r.points}
                      for k, r in self.rates.items()},
        }
        if len(self.functionals) >= 3:
            out["monotonicity"] = self.monotonicity().verdicts()
        return out

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(_rounded(self.summary()), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not np.isfinite(x) else float(f"{x:.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _record(traj, state, initial):
    traj.states.append(state)
    traj.functionals.append(evaluate(state.geom, state.profile, state.t))
    traj.estimates.append(monitor_estimates(state, initial))


def run(initial, T, options=None, raise_on_error=True):
    """Integrate the flow from ``initial`` (a RadialProfile) up to time T.

    Reports are taken at ``options.samples + 1`` equally spaced times.  On a
    flow error the partial trajectory is attached to the exception as
    ``exc.trajectory``; with ``raise_on_error=False`` it is returned with
    ``trajectory.error`` set instead.
    """
    options = options or FlowOptions()
    T = float(T)
    if not T > 0:
        raise ValueError("T must be positive")
    state = FlowState.initial(initial)
    traj = Trajectory([], [], [], T)
    _record(traj, state, initial)
    targets = T * np.arange(1, options.samples + 1) / options.samples
    try:
        for target in targets:
            while state.t < target - 1e-13 * max(1.0, target):
                dt = choose_dt(state, options)
                remaining = target - state.t
                if dt >= remaining or remaining - dt < 1e-3 * dt:
                    dt = remaining
                if dt < options.dt_min:
                    raise StiffnessError(f"dt = {dt:.3g} below dt_min at t = {state.t:.6g}", state)
                state = step(state, dt)
            # remove accumulated round-off in t at sample points
            state = FlowState(float(target), state.profile, state.geom, state.step_count, state.dt_last)
            _record(traj, state, initial)
            log.debug("t=%.4f steps=%d minH=%.6f", state.t, state.step_count, state.geom.H.min())
    except FlowError as exc:
        traj.steps = state.step_count
        traj.error = exc
        traj.compute_rates()
        if raise_on_error:
            exc.trajectory = traj
            raise
        return traj
    traj.steps = state.step_count
    traj.compute_rates()
    return traj
