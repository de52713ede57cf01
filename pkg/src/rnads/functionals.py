"""Monotone quantities and inequality deficits of star-shaped hypersurfaces.

Throughout, ``a = (n-2)/(n-1)``, ``vartheta`` is the volume of the
cross-section and ``sigma = |Sigma| / vartheta``.  The horizon area is always
``vartheta * s0^(n-1)``, taken from the background.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .hypersurface import enclosed_f_volume

__all__ = [
    "FunctionalReport",
    "MonotonicityReport",
    "evaluate",
    "minkowski_deficit",
    "af_deficit",
    "quantity_Q",
    "quantity_Q_recomposed",
    "quantities_JKL",
    "hk_residual",
    "monotonicity_report",
]


@dataclass(frozen=True)
class FunctionalReport:
    t: float
    area: float
    fH_integral: float
    f_volume: float
    f_over_H_integral: float
    Q: float
    J: float
    K: float
    L: float
    hk_residual: float
    minkowski_deficit: float
    af_deficit: float

    def as_dict(self):
        return asdict(self)


def _pieces(geom, profile):
    p = profile.background
    n = p.n
    theta = profile.mesh.total_volume
    area = geom.area
    return dict(
        n=n, p=p, theta=theta, area=area, a=(n - 2) / (n - 1), sigma=area / theta,
        fH=float(np.sum(geom.f * geom.H * geom.area_element)),
        V=enclosed_f_volume(profile),
    )


def _minkowski_from(n, p, theta, area, fH, V):
    a, sigma, s0 = (n - 2) / (n - 1), area / theta, p.s0
    bracket = (p.eps * (sigma**a - s0 ** (n - 2))
               + p.q**2 * (sigma ** (-a) - s0 ** (2 - n)))
    return fH - n * (n - 1) * p.kappa**2 * V - (n - 1) * theta * bracket


def minkowski_deficit(geom, profile):
    """int fH - n(n-1) kappa^2 int_Omega f minus the eps- and q-terms of the area bound."""
    d = _pieces(geom, profile)
    return _minkowski_from(d["n"], d["p"], d["theta"], d["area"], d["fH"], d["V"])


def _K(n, p, theta, area):
    return p.kappa**2 * theta * ((area / theta) ** (n / (n - 1)) - p.s0**n)


def af_deficit(geom, profile):
    """int fH - (n-1) K - (n-1) vartheta [eps (sigma^a - s0^(n-2)) + q^2 (sigma^-a - s0^(2-n))]."""
    d = _pieces(geom, profile)
    n, p, theta, a, sigma = d["n"], d["p"], d["theta"], d["a"], d["sigma"]
    s0 = p.s0
    return (d["fH"] - (n - 1) * _K(n, p, theta, d["area"])
            - (n - 1) * p.eps * theta * (sigma**a - s0 ** (n - 2))
            - (n - 1) * p.q**2 * theta * (sigma ** (-a) - s0 ** (2 - n)))


def quantity_Q(geom, profile):
    """Q evaluated term by term, with the s0 terms written as (s0^k - sigma^k)."""
    d = _pieces(geom, profile)
    n, p, theta, a, sigma, area = d["n"], d["p"], d["theta"], d["a"], d["sigma"], d["area"]
    s0 = p.s0
    inner = (d["fH"] - n * (n - 1) * p.kappa**2 * d["V"]
             + (n - 1) * theta * p.eps * (s0 ** (n - 2) - sigma**a)
             + (n - 1) * p.q**2 * theta * (s0 ** (2 - n) - sigma ** (-a)))
    return area ** (-a) * inner


def quantity_Q_recomposed(report, profile):
    """Q rebuilt from the stored area, fH integral and f-volume of a report."""
    p = profile.background
    n, theta = p.n, profile.mesh.total_volume
    dm = _minkowski_from(n, p, theta, report.area, report.fH_integral, report.f_volume)
    return report.area ** (-(n - 2) / (n - 1)) * dm


def quantities_JKL(geom, profile):
    d = _pieces(geom, profile)
    n, p, theta, a, sigma, area = d["n"], d["p"], d["theta"], d["a"], d["sigma"], d["area"]
    s0 = p.s0
    J = n * p.kappa**2 * d["V"]
    K = _K(n, p, theta, area)
    L = area ** (-a) * (d["fH"] - (n - 1) * K + (n - 1) * p.eps * theta * s0 ** (n - 2)
                        + (n - 1) * p.q**2 * theta * (s0 ** (2 - n) - sigma ** (-a)))
    return J, K, L


def _f_over_H(geom):
    return float(np.sum(geom.f / geom.H * geom.area_element))


def hk_residual(geom, profile):
    """int f/H - n/(n-1) int_Omega f - s0^n vartheta / (n-1); nonnegative for H > 0."""
    p = profile.background
    n = p.n
    return (_f_over_H(geom) - n / (n - 1) * enclosed_f_volume(profile)
            - p.s0**n * profile.mesh.total_volume / (n - 1))


def evaluate(geom, profile, t=0.0):
    """All functionals of one hypersurface as a :class:`FunctionalReport`."""
    d = _pieces(geom, profile)
    J, K, L = quantities_JKL(geom, profile)
    return FunctionalReport(
        t=float(t), area=d["area"], fH_integral=d["fH"], f_volume=d["V"],
        f_over_H_integral=_f_over_H(geom), Q=quantity_Q(geom, profile), J=J, K=K, L=L,
        hk_residual=hk_residual(geom, profile),
        minkowski_deficit=minkowski_deficit(geom, profile),
        af_deficit=af_deficit(geom, profile),
    )


@dataclass(frozen=True)
class MonotonicityReport:
    """Centered-difference derivatives at interior samples and the three verdicts.

    ``dL_bound`` holds the stencil average of 2 (J - K) / |Sigma|^a, so that
    ``dL <= dL_bound`` compares two second-order accurate quantities.
    """

    t: np.ndarray
    dQ: np.ndarray
    dL: np.ndarray
    dL_bound: np.ndarray
    dJK: np.ndarray
    slack_Q: np.ndarray
    slack_L: np.ndarray
    slack_JK: np.ndarray
    Q_final: float
    Q_nonincreasing: bool
    L_bounded: bool
    JK_nondecreasing: bool
    Q_final_nonnegative: bool

    @property
    def passed(self):
        return (self.Q_nonincreasing and self.L_bounded and self.JK_nondecreasing
                and self.Q_final_nonnegative)

    def verdicts(self):
        return {
            "Q_nonincreasing": self.Q_nonincreasing,
            "L_bounded": self.L_bounded,
            "JK_nondecreasing": self.JK_nondecreasing,
            "Q_final_nonnegative": self.Q_final_nonnegative,
        }


def _slack(values):
    return 1e-4 * np.abs(values) + 1e-6


def _secant(v, t):
    return (v[2:] - v[:-2]) / (t[2:] - t[:-2])


def _stencil_mean(v, t):
    """Mean of the quadratic interpolant of v over [t_{i-1}, t_{i+1}] (Simpson)."""
    h0, h1 = t[1:-1] - t[:-2], t[2:] - t[1:-1]
    integral = (h0 + h1) / 6 * ((2 - h1 / h0) * v[:-2] + (h0 + h1) ** 2 / (h0 * h1) * v[1:-1]
                                + (2 - h0 / h1) * v[2:])
    return integral / (h0 + h1)


def monotonicity_report(reports, n):
    """Discrete monotonicity checks along a sampled trajectory of FunctionalReports."""
    if len(reports) < 3:
        raise ValueError(f"monotonicity needs at least 3 samples, got {len(reports)}")
    t = np.array([r.t for r in reports])
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    a = (n - 2) / (n - 1)
    Q = np.array([r.Q for r in reports])
    L = np.array([r.L for r in reports])
    area = np.array([r.area for r in reports])
    jk = (np.array([r.J for r in reports]) - np.array([r.K for r in reports])) / area**a
    inner = slice(1, -1)
    dQ, dL, dJK = _secant(Q, t), _secant(L, t), _secant(jk, t)
    # the bound is averaged over the same stencil as the secant; comparing with its
    # midpoint value would leave an O(dt^2) bias on exponentially growing quantities
    bound = 2 * _stencil_mean(jk, t)
    sQ, sL, sJK = _slack(Q[inner]), _slack(L[inner]), _slack(jk[inner])
    return MonotonicityReport(
        t=t[inner], dQ=dQ, dL=dL, dL_bound=bound, dJK=dJK, slack_Q=sQ, slack_L=sL,
        slack_JK=sJK, Q_final=float(Q[-1]),
        Q_nonincreasing=bool(np.all(dQ <= sQ)),
        L_bounded=bool(np.all(dL <= bound + sL)),
        JK_nondecreasing=bool(np.all(dJK >= -sJK)),
        Q_final_nonnegative=bool(Q[-1] >= -float(_slack(Q[-1]))),
    )
