"""ALH mass of rotationally symmetric graphs over an RN-AdS background.

A graph ``M = {(x, u(x))}`` in the warped product ``-f^2 dt^2 + g_bar`` carries
the metric ``g = f^2 du (x) du + g_bar``.  For ``u = u(s)`` only the radial
coefficient changes:

    g = ds^2 / F_graph + s^2 g_eps,    1/F_graph = 1/f^2 + f^2 u'^2.

Two independent routes to the mass are implemented: the surface-integral
limit at infinity of the deviation ``e = (1/F_graph - 1/f^2) ds^2`` and the
bulk formula integrating ``R_g - R_bar`` over ``M`` plus a horizon term.
Both tails are extrapolated with the same Richardson scheme.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from .background import metric_potential, sphere_volume
from .errors import ExtrapolationError, ProfileError

__all__ = [
    "GraphProfile",
    "Extrapolation",
    "MassReport",
    "HypothesisWarning",
    "graph_radial_metric",
    "graph_scalar_curvature",
    "embed_rnads_as_graph",
    "alh_mass_limit",
    "mass_via_bulk_formula",
    "penrose_rhs",
    "horizon_mass_identity",
    "mass_report",
    "richardson_limit",
]


_GL_X, _GL_W = roots_legendre(8)


class HypothesisWarning(UserWarning):
    """An assumption of the bulk mass formula is not met by the profile."""


class RateWarning(UserWarning):
    """The fitted extrapolation power differs from the declared decay by more than 2x."""


@dataclass(frozen=True, eq=False)
class GraphProfile:
    """Sampled radial derivative u'(s) of a rotationally symmetric graph.

    ``u_prime[0]`` may be ``inf`` when ``inner_boundary`` is set, marking a
    horizon-type boundary where |grad u| blows up.  ``evaluator``, when given,
    returns u' exactly at arbitrary radii; otherwise a cubic spline in log s
    of the samples is used.
    """

    s: np.ndarray
    u_prime: np.ndarray
    tau: float
    inner_boundary: float | None = None
    evaluator: object = field(default=None, repr=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        up = np.asarray(self.u_prime, dtype=float)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "u_prime", up)
        if s.ndim != 1 or s.shape != up.shape or s.size < 8:
            raise ProfileError("need at least 8 matching (s, u_prime) samples")
        if np.any(np.diff(s) <= 0) or s[0] <= 0:
            raise ProfileError("radii must be positive and strictly increasing")
        finite = np.isfinite(up)
        if not np.all(finite[1:]) or (not finite[0] and self.inner_boundary is None):
            raise ProfileError("u' must be finite except at a declared inner boundary")
        if self.inner_boundary is not None and not np.isclose(self.inner_boundary, s[0], rtol=1e-12):
            raise ProfileError("inner_boundary must coincide with the first sample radius")
        if not self.tau > 0:
            raise ProfileError("decay order tau must be positive")

    @property
    def s_max(self):
        return float(self.s[-1])

    @property
    def s_inner(self):
        return float(self.s[0])

    @property
    def horizon_type(self):
        return self.inner_boundary is not None and not np.isfinite(self.u_prime[0])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.evaluator is not None:
            return self.evaluator(s)
        spline = self.__dict__.get("_spline")
        if spline is None:
            start = 0 if np.isfinite(self.u_prime[0]) else 1
            spline = CubicSpline(np.log(self.s[start:]), self.u_prime[start:])
            self.__dict__["_spline"] = spline
        out = spline(np.log(s))
        if not np.isfinite(self.u_prime[0]):
            out = np.where(s <= self.s[0], np.inf, out)
        return out

    def decay_slope(self, p, decades=1.0):
        """Log-log slope of |f grad u| = f^2 |u'| over the last ``decades`` of samples."""
        sel = (self.s >= self.s_max / 10**decades) & np.isfinite(self.u_prime)
        v = metric_potential(self.s[sel], p) * np.abs(self.u_prime[sel])
        if sel.sum() < 3 or np.any(v <= 0):
            return float("nan")
        return float(np.polyfit(np.log(self.s[sel]), np.log(v), 1)[0])

    @classmethod
    def from_csv(cls, path, tau, inner_boundary=None):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"s", "u_prime"} <= set(rows[0]):
            raise ProfileError(f"{path}: expected columns s, u_prime")
        s = np.array([float(r["s"]) for r in rows])
        up = np.array([float(r["u_prime"]) for r in rows])
        if inner_boundary is None and not np.isfinite(up[0]):
            inner_boundary = float(s[0])
        return cls(s, up, float(tau), inner_boundary)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "u_prime"])
            for a, b in zip(self.s, self.u_prime):
                writer.writerow([repr(float(a)), repr(float(b))])


def _F(s, up, p):
    psi = metric_potential(s, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / psi + psi * up**2
        F = np.where(np.isinf(up), 0.0, 1.0 / inv)
    return F


def graph_radial_metric(gp, p, s=None):
    """F_graph = (1/f^2 + f^2 u'^2)^-1 at the sample radii (or at ``s``)."""
    s = gp.s if s is None else np.asarray(s, dtype=float)
    up = gp.u_prime if s is gp.s else gp(s)
    F = _F(s, up, p)
    interior = s > (gp.inner_boundary if gp.inner_boundary is not None else -np.inf)
    if np.any(~np.isfinite(F)) or np.any(F[interior] <= 0):
        raise ProfileError("radial metric coefficient is not positive")
    return F


def graph_scalar_curvature(F, s, p, dF=None):
    """R = (n-1) [(n-2)(eps - F)/s^2 - F'/s] for the metric ds^2/F + s^2 g_eps.

    ``dF`` is F'(s); when omitted it is taken from a cubic spline of the samples.
    """
    s = np.asarray(s, dtype=float)
    F = np.asarray(F, dtype=float)
    n = p.n
    if dF is None:
        dF = CubicSpline(s, F)(s, 1)
    return (n - 1) * ((n - 2) * (p.eps - F) / s**2 - np.asarray(dF) / s)


def embed_rnads_as_graph(p_upper, p_lower, s_max=None, points=400):
    """Represent the RN-AdS manifold of mass m as a graph over the one with mass m' < m.

    u' = sqrt(1/f_m^2 - 1/f_m'^2) / f_m' makes 1/F_graph = 1/f_m^2 exactly.
    The grid is geometric from the upper horizon s0(m) to ``s_max``
    (default 100 s0(m)); u'(s0(m)) = inf.
    """
    same = (p_upper.n, p_upper.eps, p_upper.kappa, p_upper.q) == (p_lower.n, p_lower.eps,
                                                                    p_lower.kappa, p_lower.q)
    if not same:
        raise ProfileError("embedding needs identical n, eps, kappa, q")
    if not p_lower.m < p_upper.m:
        raise ProfileError(f"need m' < m for a real profile, got m' = {p_lower.m}, m = {p_upper.m}")
    s0 = p_upper.s0
    s_max = 100.0 * s0 if s_max is None else float(s_max)
    s = s0 * np.geomspace(1.0, s_max / s0, points)
    s[0] = s0

    def evaluator(x):
        x = np.asarray(x, dtype=float)
        lower = metric_potential(x, p_lower)
        # 1/psi_m - 1/psi_m' = 2 (m - m') x^(2-n) / (psi_m psi_m')
        upper = lower - 2 * (p_upper.m - p_lower.m) * x ** (2 - p_upper.n)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.sqrt(2 * (p_upper.m - p_lower.m) * x ** (2 - p_upper.n) / (upper * lower)) / np.sqrt(lower)
        return np.where(upper > 0, val, np.inf)

    up = evaluator(s)
    up[0] = np.inf
    return GraphProfile(s, up, p_upper.n / 2.0, float(s0), evaluator)


@dataclass(frozen=True)
class Extrapolation:
    """Richardson extrapolation of v(s) as s -> infinity from s_k = s_base 2^k."""

    radii: tuple
    values: tuple
    limit: float
    power: float
    expected_power: float | None

    def as_dict(self):
        return {"radii": list(self.radii), "values": list(self.values), "limit": self.limit,
                "power": self.power, "expected_power": self.expected_power}


def richardson_limit(func, s_base, levels=5, expected_power=None, noise_floor=1e-8):
    """Extrapolate lim v(s) from v(s_base 2^k), k = 0..levels-1.

    The power p in v(s) = v_inf + C s^-p is fitted from the last three
    values.  Raises :class:`ExtrapolationError` when the successive
    differences do not shrink.  If every difference is below
    ``noise_floor`` times the value scale the tail has converged to round-off
    and quadrature noise, and the last value is returned as is.
    """
    radii = s_base * 2.0 ** np.arange(levels)
    vals = np.array([float(func(r)) for r in radii])
    d = np.diff(vals)
    scale = max(1.0, float(np.max(np.abs(vals))))
    # differences below the noise floor mean the tail has already converged
    if np.max(np.abs(d)) <= noise_floor * scale:
        return Extrapolation(tuple(radii), tuple(vals), float(vals[-1]), float("inf"), expected_power)
    if np.any(np.abs(d[1:]) >= np.abs(d[:-1])):
        raise ExtrapolationError(f"tail differences do not decrease: {d}")
    rho = d[-1] / d[-2]
    if not 0 < rho < 1:
        raise ExtrapolationError(f"tail differences change sign (ratio {rho:.3g})")
    power = -np.log2(rho)
    limit = vals[-1] + d[-1] * rho / (1 - rho)
    if expected_power is not None and not (expected_power / 2 <= power <= 2 * expected_power):
        warnings.warn(f"fitted tail power {power:.3g} differs from the expected {expected_power:.3g}",
                      RateWarning, stacklevel=2)
    return Extrapolation(tuple(radii), tuple(vals), float(limit), float(power), expected_power)


def _expected_power(gp, p):
    # integrand deficit decays like s^(n - 2 tau); at the borderline tau = n/2 no prediction
    excess = 2 * gp.tau - p.n
    return excess if excess > 1e-12 else None


def _check_tau(gp, p):
    if gp.tau < p.n / 2 - 1e-12:
        raise ProfileError(f"decay order tau = {gp.tau} is below n/2 = {p.n / 2}")


def _default_base(gp):
    return gp.s_max / 16.0


def _pre_limit_mass(gp, p_lower, s):
    """m' + f^2 (f^4 u'^2) s^(n-2) / 2: the surface integrand on the sphere of radius s."""
    psi = metric_potential(s, p_lower)
    up = gp(s)
    return p_lower.m + 0.5 * psi * psi**2 * up**2 * s ** (p_lower.n - 2)


def alh_mass_limit(gp, p_lower, s_base=None, details=False):
    """ALH mass of the graph, measured against the background ``p_lower``."""
    _check_tau(gp, p_lower)
    s_base = _default_base(gp) if s_base is None else float(s_base)
    ext = richardson_limit(lambda s: _pre_limit_mass(gp, p_lower, s), s_base,
                           expected_power=_expected_power(gp, p_lower))
    return ext if details else ext.limit


def c_n(n, theta):
    return 1.0 / (2 * (n - 1) * theta)


def _theta(p, theta):
    if theta is not None:
        return float(theta)
    if p.eps == 1:
        return sphere_volume(p.n - 1)
    raise ValueError("cross-section volume must be given when eps != 1")


def mass_via_bulk_formula(gp, p_lower, s_base=None, theta=None, details=False, grid=1200):
    """m' + c_n [int_M (R_g - R_bar) <dt, xi> dmu_M + int_Sigma f H dmu] on the graph.

    For a radial graph <dt, xi> dmu_M = s^(n-1) ds dmu_eps, so the bulk term
    is vartheta * int (R_g - R_bar) s^(n-1) ds with R_g from a spline of
    F_graph.  Sigma is the inner level set s = s_inner, where f H integrates
    to (n-1) vartheta s^(n-2) f^2.  The upper limit is extrapolated to infinity.
    """
    _check_tau(gp, p_lower)
    n = p_lower.n
    th = _theta(p_lower, theta)
    if not gp.horizon_type:
        warnings.warn("inner boundary is not horizon-type; the formula is an inequality at best",
                      HypothesisWarning, stacklevel=2)
    si = gp.s_inner
    s = si * np.geomspace(1.0, gp.s_max / si, grid)
    s[-1] = gp.s_max
    F = graph_radial_metric(gp, p_lower, s)
    dF = F - metric_potential(s, p_lower)
    # R is affine in F, so R_g - R_bar only involves the difference dF
    spline = CubicSpline(np.log(s), dF)

    def gap(x):
        x = np.asarray(x, dtype=float)
        d = spline(np.log(x))
        d1 = spline(np.log(x), 1) / x
        return (n - 1) * (-(n - 2) * d / x**2 - d1 / x)

    boundary = (n - 1) * th * si ** (n - 2) * metric_potential(si, p_lower)
    # the spline is piecewise cubic in log s: integrate each knot interval with
    # fixed Gauss-Legendre nodes in log s (ds = s dlog s)
    logk = np.log(s)

    def integral(lo, hi):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        x = np.exp(mid[:, None] + half[:, None] * _GL_X)
        return np.sum(half * ((gap(x) * x**n) @ _GL_W))

    def partial(S):
        j = int(np.searchsorted(logk, np.log(S)))
        lo = np.append(logk[: j - 1], logk[j - 1])
        hi = np.append(logk[1:j], np.log(S))
        return p_lower.m + c_n(n, th) * (th * integral(lo, hi) + boundary)

    s_base = _default_base(gp) if s_base is None else float(s_base)
    ext = richardson_limit(partial, s_base, expected_power=_expected_power(gp, p_lower))
    if details:
        samples = gap(s[1:])
        return ext, float(np.min(samples))
    return ext.limit


def penrose_rhs(area, p, theta=None):
    """(kappa^2 sigma^(n/(n-1)) + eps sigma^((n-2)/(n-1)) + q^2 sigma^(-(n-2)/(n-1))) / 2."""
    if not area > 0:
        raise ValueError("area must be positive")
    n = p.n
    sigma = area / _theta(p, theta)
    a = (n - 2) / (n - 1)
    return 0.5 * (p.kappa**2 * sigma ** (n / (n - 1)) + p.eps * sigma**a + p.q**2 * sigma ** (-a))


def horizon_mass_identity(p):
    """2m - eps s0^(n-2) - kappa^2 s0^n - q^2 s0^(2-n); zero up to root tolerance."""
    s0, n = p.s0, p.n
    return 2 * p.m - p.eps * s0 ** (n - 2) - p.kappa**2 * s0**n - p.q**2 * s0 ** (2 - n)


@dataclass(frozen=True)
class MassReport:
    mass_limit: float
    mass_bulk: float
    penrose_rhs: float
    penrose_margin: float
    penrose_pass: bool
    horizon_area: float
    horizon_identity_residual: float
    c_n: float
    min_scalar_gap: float
    limit_extrapolation: dict
    bulk_extrapolation: dict
    background: dict

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def write_json(self, path):
        from .flow import _rounded

        with open(path, "w") as fh:
            json.dump(_rounded(self.as_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")


PENROSE_TOL = 1e-5


def mass_report(gp, p_lower, theta=None, s_base=None):
    """Both mass routes plus the Penrose comparison against the inner boundary area."""
    n = p_lower.n
    th = _theta(p_lower, theta)
    lim = alh_mass_limit(gp, p_lower, s_base=s_base, details=True)
    bulk, min_gap = mass_via_bulk_formula(gp, p_lower, s_base=s_base, theta=th, details=True)
    area = th * gp.s_inner ** (n - 1)
    rhs = penrose_rhs(area, p_lower, th)
    margin = lim.limit - rhs
    return MassReport(
        mass_limit=lim.limit, mass_bulk=bulk.limit, penrose_rhs=rhs, penrose_margin=margin,
        penrose_pass=bool(margin >= -PENROSE_TOL), horizon_area=area,
        horizon_identity_residual=horizon_mass_identity(p_lower), c_n=c_n(n, th), min_scalar_gap=min_gap,
        limit_extrapolation=lim.as_dict(), bulk_extrapolation=bulk.as_dict(),
        background=p_lower.as_dict(),
    )
