"""Reissner-Nordstrom-AdS background: potential, horizon, warp factor, curvature.

The ambient manifold is ``P = (s0, inf) x N_eps`` with metric

    g = ds^2 / psi(s) + s^2 g_eps,
    psi(s) = eps + kappa^2 s^2 - 2 m s^(2-n) + q^2 s^(4-2n),

or, in geodesic distance ``r`` from a reference slice, ``dr^2 + lambda(r)^2 g_eps``
with ``lambda' = f(lambda) = sqrt(psi(lambda))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NoHorizon

__all__ = [
    "BackgroundParams",
    "CurvatureSample",
    "ExistenceReport",
    "DegenerateHorizonWarning",
    "metric_potential",
    "potential_derivative",
    "horizon_radius",
    "existence_check",
    "critical_value",
    "warp_speed",
    "warp_accel",
    "r_of_lambda",
    "lambda_of_r",
    "curvature_sample",
    "scalar_curvature_closed_form",
    "substatic_residual",
    "asymptotic_residuals",
    "sphere_volume",
]


class DegenerateHorizonWarning(UserWarning):
    """psi touches zero without changing sign (double root at the horizon)."""


def sphere_volume(k):
    """Volume of the unit round sphere S^k."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


@dataclass(frozen=True)
class BackgroundParams:
    """Parameters ``(n, eps, kappa, m, q)`` of an RN-AdS manifold.

    The horizon radius ``s0`` is derived on first access and cached.
    ``m = 0`` is accepted so that horizonless parameter sets can be
    represented; they raise :class:`NoHorizon` when ``s0`` is requested.
    """

    n: int
    eps: int
    kappa: float
    m: float
    q: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"dimension n must be an integer >= 3, got {self.n!r}")
        if self.eps not in (-1, 0, 1):
            raise ValueError(f"eps must be -1, 0 or 1, got {self.eps!r}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        if not self.m >= 0:
            raise ValueError(f"mass parameter must be nonnegative, got {self.m!r}")
        if not self.q >= 0:
            raise ValueError(f"charge must be nonnegative, got {self.q!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "eps", int(self.eps))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "q", float(self.q))

    @property
    def mass_param(self):
        return self.m

    @property
    def charge(self):
        return self.q

    @cached_property
    def s0(self):
        return horizon_radius(self)

    def replace(self, **changes):
        fields = dict(n=self.n, eps=self.eps, kappa=self.kappa, m=self.m, q=self.q)
        fields.update(changes)
        return BackgroundParams(**fields)

    def as_dict(self):
        return dict(n=self.n, eps=self.eps, kappa=self.kappa, m=self.m, q=self.q)


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _positive(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("radius must be positive")
    return s


def metric_potential(s, p):
    """psi(s) = eps + kappa^2 s^2 - 2 m s^(2-n) + q^2 s^(4-2n)."""
    s = _positive(s)
    n = p.n
    return _out(p.eps + p.kappa**2 * s**2 - 2.0 * p.m * s ** (2 - n) + p.q**2 * s ** (4 - 2 * n))


def potential_derivative(s, p, order=1):
    """Analytic derivative d^k psi / ds^k for k = 1, 2, 3."""
    s = _positive(s)
    n, k2, m, q2 = p.n, p.kappa**2, p.m, p.q**2
    if order == 1:
        val = 2 * k2 * s - 2 * m * (2 - n) * s ** (1 - n) + q2 * (4 - 2 * n) * s ** (3 - 2 * n)
    elif order == 2:
        val = (2 * k2 - 2 * m * (2 - n) * (1 - n) * s ** (-n)
               + q2 * (4 - 2 * n) * (3 - 2 * n) * s ** (2 - 2 * n))
    elif order == 3:
        val = (-2 * m * (2 - n) * (1 - n) * (-n) * s ** (-n - 1)
               + q2 * (4 - 2 * n) * (3 - 2 * n) * (2 - 2 * n) * s ** (1 - 2 * n))
    else:
        raise ValueError("order must be 1, 2 or 3")
    return _out(val)


def _scan_limit(p):
    smax = 10.0 * max(1.0, (2.0 * p.m / p.kappa**2) ** (1.0 / p.n))
    # eps = -1 with small m puts the root near 1/kappa, which can exceed the bound above.
    smax = max(smax, 10.0 / p.kappa)
    while metric_potential(smax, p) <= 0 or potential_derivative(smax, p) <= 0:
        smax *= 2.0
    return smax


def horizon_radius(p, scan_points=4000):
    """Largest positive root s0 of psi.

    Sign changes are located on a geometric grid, the outermost bracket is
    bisected to 1e-12 and polished by one Newton step.  A double root (psi
    touching zero from above) is returned with a
    :class:`DegenerateHorizonWarning`.
    """
    smax = _scan_limit(p)
    grid = np.geomspace(1e-6, smax, scan_points)
    with np.errstate(over="ignore"):
        vals = metric_potential(grid, p)
    crossings = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if crossings.size:
        i = crossings[-1]
        a, b = grid[i], grid[i + 1]
        if metric_potential(b, p) == 0.0:
            return float(b)
        root = optimize.bisect(lambda s: metric_potential(s, p), a, b,
                               xtol=1e-12 * b, rtol=4 * np.finfo(float).eps, maxiter=500)
        d = potential_derivative(root, p)
        if d > 0:
            root -= metric_potential(root, p) / d
        return float(root)

    # no sign change: look for a tangential zero at the single critical point
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda s: metric_potential(s, p), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-14 * hi})
    scale = max(1.0, abs(p.eps), p.kappa**2 * res.x**2)
    if abs(res.fun) <= 1e-10 * scale:
        warnings.warn(f"psi has a (near) double root at s={res.x:.12g}; treating it as the horizon",
                      DegenerateHorizonWarning, stacklevel=2)
        return float(res.x)
    raise NoHorizon(f"psi has no positive root for {p}")


@dataclass(frozen=True)
class ExistenceReport:
    ok: bool
    detail: str
    c_eps: float | None = None
    discriminant: float | None = None

    def __bool__(self):
        return self.ok


def critical_value(n, eps, m, q):
    """c_eps(n, m, q): threshold on -kappa^2 for existence of a horizon when q > 0."""
    n = int(n)
    D = n**2 * m**2 - 4 * eps * (n - 1) * q**2
    if D < 0:
        return None, D
    rD = math.sqrt(D)
    e = 2.0 / (n - 2)
    if eps == 0:
        if m == 0:
            return 0.0, D
        log_mag = (math.log((n - 1) ** 2 - 1) - 2 * math.log(n - 1) + e * math.log(n / (n - 1))
                   + n / (n - 2) * 2 * (math.log(m) - math.log(q)) - e * math.log(m))
    else:
        # |n m - sqrt(D)| written without cancellation; it tends to 0 with q
        gap = 4 * (n - 1) * q**2 / (n * m + rD)
        if gap == 0.0:
            return -math.inf, D
        log_mag = (e * math.log(2) + math.log((n - 2) / (n - 1)) + math.log(rD - (n - 2) * m)
                   - n / (n - 2) * math.log(gap))
    c = -math.exp(log_mag) if log_mag < 709.0 else -math.inf
    return c, D


def existence_check(p):
    """Predicate for the presence of a positive root of psi.

    For ``q > 0`` the root exists iff ``-kappa^2 >= c_eps`` (and ``q < m`` when
    ``eps = 1``).  For ``q = 0`` the root exists whenever ``m > 0`` since
    ``psi(0+) = -inf``.
    """
    n, eps, m, q = p.n, p.eps, p.m, p.q
    if q == 0:
        if m > 0:
            return ExistenceReport(True, "q = 0 and m > 0: psi(0+) = -inf forces a sign change")
        if eps == -1:
            return ExistenceReport(True, "m = q = 0, eps = -1: root at s = 1/kappa")
        return ExistenceReport(False, f"m = q = 0 with eps = {eps}: psi = eps + kappa^2 s^2 > 0")
    if eps == 1 and q >= m:
        return ExistenceReport(False, f"eps = 1 requires q^2 < m^2 (got q = {q}, m = {m})")
    c, D = critical_value(n, eps, m, q)
    if c is None:
        return ExistenceReport(False, f"discriminant n^2 m^2 - 4 eps (n-1) q^2 = {D:.6g} < 0",
                               None, D)
    ok = -p.kappa**2 >= c
    rel = "holds" if ok else "violated"
    return ExistenceReport(ok, f"-kappa^2 = {-p.kappa**2:.12g} >= c_{eps} = {c:.12g} {rel}", c, D)


def _check_outside(lam, p, strict=False):
    lam = np.asarray(lam, dtype=float)
    s0 = p.s0
    tol = 1e-12 * s0
    bad = lam <= s0 + tol if strict else lam < s0 - tol
    if np.any(bad):
        raise DomainError(f"radius {lam[bad].min() if lam.ndim else float(lam):.15g} "
                          f"is not outside the horizon s0 = {s0:.15g}")
    return lam


def warp_speed(lam, p):
    """f(lambda) = sqrt(psi(lambda)), defined for lambda >= s0."""
    lam = _check_outside(lam, p)
    return _out(np.sqrt(np.maximum(metric_potential(lam, p), 0.0)))


def warp_accel(lam, p):
    """lambda'' = kappa^2 lam + m (n-2) lam^(1-n) - (n-2) q^2 lam^(3-2n)."""
    lam = _check_outside(lam, p)
    n = p.n
    return _out(p.kappa**2 * lam + p.m * (n - 2) * lam ** (1 - n)
                - (n - 2) * p.q**2 * lam ** (3 - 2 * n))


# --- radial coordinate ---------------------------------------------------------
# Near the horizon f ~ sqrt(psi'(s0) (s - s0)); with s = s0 + w^2 both dr/dw and
# dw/dr are regular, so quadrature and ODE integration run in w.

def _w_speed(w, p):
    """f(s0 + w^2) / w, continuous at w = 0."""
    w = np.asarray(w, dtype=float)
    s0 = p.s0
    d = w * w
    small = d < 1e-5 * s0
    out = np.empty_like(d)
    if np.any(small):
        ds = d[small]
        series = (potential_derivative(s0, p)
                  + potential_derivative(s0, p, 2) * ds / 2
                  + potential_derivative(s0, p, 3) * ds**2 / 6)
        out[small] = np.sqrt(np.maximum(series, 0.0))
    if np.any(~small):
        wl = w[~small]
        out[~small] = np.sqrt(np.maximum(metric_potential(s0 + wl * wl, p), 0.0)) / np.abs(wl)
    return out


def _w_of(lam, p):
    lam = _check_outside(lam, p)
    return np.sqrt(np.maximum(lam - p.s0, 0.0))


def r_of_lambda(lam, p, lambda0=None):
    """Geodesic distance r(lambda) = int_{lambda0}^{lambda} ds / f(s).

    ``lambda0`` defaults to the horizon, so that r(s0) = 0.
    """
    lam = np.asarray(lam, dtype=float)
    w = np.atleast_1d(_w_of(lam, p))
    w0 = 0.0 if lambda0 is None else float(_w_of(lambda0, p))

    def integrand(x):
        return 2.0 / _w_speed(np.array([x]), p)[0]

    out = np.empty_like(w)
    for k, wk in enumerate(w):
        if wk == w0:
            out[k] = 0.0
            continue
        out[k], _ = integrate.quad(integrand, w0, wk, epsabs=0.0, epsrel=1e-13, limit=200)
    return _out(out.reshape(lam.shape))


def lambda_of_r(r_values, lambda0, p):
    """lambda(r) solving d lambda/dr = f(lambda) with lambda(0) = lambda0."""
    r = np.asarray(r_values, dtype=float)
    flat = np.atleast_1d(r).ravel()
    w0 = float(_w_of(lambda0, p))
    out = np.full(flat.shape, float(lambda0))

    def rhs(_, y):
        return 0.5 * _w_speed(y, p)

    def horizon(_, y):
        return y[0]

    horizon.terminal = True

    for sign in (1.0, -1.0):
        mask = sign * flat > 0
        if not np.any(mask):
            continue
        targets = np.unique(flat[mask])
        t_end = targets[-1] if sign > 0 else targets[0]
        if sign < 0 and w0 == 0.0:
            raise DomainError("cannot integrate below the horizon")
        sol = integrate.solve_ivp(rhs, (0.0, t_end), [w0], method="DOP853",
                                  t_eval=targets if sign > 0 else targets[::-1],
                                  events=horizon if sign < 0 else None,
                                  rtol=1e-13, atol=1e-14)
        if sol.status == 1:
            raise DomainError(f"r = {t_end:.6g} lies below the horizon "
                              f"(reached at r = {sol.t_events[0][0]:.6g})")
        if not sol.success:
            raise DomainError(f"integration of lambda(r) failed: {sol.message}")
        vals = dict(zip(sol.t, sol.y[0]))
        out[mask] = [p.s0 + vals[t] ** 2 for t in flat[mask]]
    return _out(out.reshape(r.shape))


# --- curvature -------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureSample:
    """Curvature of ``ds^2/psi + s^2 g_eps`` at one radius.

    ``ricci_tangential`` is the coefficient c in ``lambda^-2 Ric(d_i, d_j) = c g_ij``;
    ``substatic_residual_tensor`` holds the (radial, tangential) eigenvalues of
    LHS - RHS of the sub-static identity in an orthonormal frame.
    """

    s: float
    scalar: float
    ricci_radial: float
    ricci_tangential: float
    sectional_radial: float
    sectional_tangential: float
    substatic_residual_tensor: tuple


def _curvature_terms(s, psi, dpsi, p):
    # warped product dr^2 + lambda^2 g_eps with lambda'' = psi'/2, lambda'^2 = psi
    n = p.n
    sec_rad = -dpsi / (2 * s)
    sec_tan = (p.eps - psi) / s**2
    ric_rad = (n - 1) * sec_rad
    ric_tan = sec_rad + (n - 2) * sec_tan
    return ric_rad, ric_tan, sec_rad, sec_tan


def curvature_sample(s, p):
    s = float(s)
    if not s > p.s0:
        raise DomainError(f"curvature requested at s = {s} <= s0 = {p.s0}")
    psi = metric_potential(s, p)
    dpsi = potential_derivative(s, p)
    ric_rad, ric_tan, sec_rad, sec_tan = _curvature_terms(s, psi, dpsi, p)
    return CurvatureSample(
        s=s,
        scalar=ric_rad + (p.n - 1) * ric_tan,
        ricci_radial=ric_rad,
        ricci_tangential=ric_tan,
        sectional_radial=sec_rad,
        sectional_tangential=sec_tan,
        substatic_residual_tensor=substatic_residual(s, p),
    )


def scalar_curvature_closed_form(s, p):
    """R = -n(n-1) kappa^2 + (n-1)(n-2) q^2 s^(2-2n)."""
    s = _positive(s)
    n = p.n
    return _out(-n * (n - 1) * p.kappa**2 + (n - 1) * (n - 2) * p.q**2 * s ** (2 - 2 * n))


def substatic_residual(s, p, method="analytic", h=None):
    """Eigenvalues (radial, tangential) of

        (Lap f) g - Hess f + f Ric - (n-1)(n-2) q^2 lambda^(4-2n) f g_eps

    for the potential f = sqrt(psi).  ``method="fd"`` replaces the analytic
    psi', psi'' by centered differences with step ``h`` (default 1e-4 s).
    """
    s = float(s)
    if not s > p.s0:
        raise DomainError(f"sub-static residual requested at s = {s} <= s0 = {p.s0}")
    n = p.n
    psi = metric_potential(s, p)
    if method == "analytic":
        d1 = potential_derivative(s, p)
        d2 = potential_derivative(s, p, 2)
    elif method == "fd":
        h = 1e-4 * s if h is None else float(h)
        pp, pm = metric_potential(s + h, p), metric_potential(s - h, p)
        d1 = (pp - pm) / (2 * h)
        d2 = (pp - 2 * psi + pm) / h**2
    else:
        raise ValueError(f"unknown method {method!r}")
    f = math.sqrt(psi)
    # d/dr = f d/ds, so f_r = psi'/2 and f_rr = f psi''/2
    hess_rad = f * d2 / 2
    hess_tan = f * (d1 / 2) / s
    lap = hess_rad + (n - 1) * hess_tan
    ric_rad, ric_tan, _, _ = _curvature_terms(s, psi, d1, p)
    rhs_tan = (n - 1) * (n - 2) * p.q**2 * s ** (2 - 2 * n) * f
    radial = lap - hess_rad + f * ric_rad
    tangential = lap - hess_tan + f * ric_tan - rhs_tan
    return (radial, tangential)


def asymptotic_residuals(s, p):
    """Deviation of curvature components from their hyperbolic limits.

    Returns ``(ricci_radial + (n-1)k^2, ricci_tangential + (n-1)k^2,
    sectional_radial + k^2, sectional_tangential + k^2)``.
    """
    c = curvature_sample(s, p)
    k2 = p.kappa**2
    n = p.n
    return (c.ricci_radial + (n - 1) * k2, c.ricci_tangential + (n - 1) * k2,
            c.sectional_radial + k2, c.sectional_tangential + k2)
