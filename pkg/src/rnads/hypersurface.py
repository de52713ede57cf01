"""Extrinsic geometry of star-shaped graphs over N_eps.

A star-shaped hypersurface is the graph ``{(r(theta), theta)}``.  The
evolved variable is ``phi = Phi(r)`` with ``Phi'(r) = 1/lambda(r)``; in terms
of the area radius ``lambda`` this reads ``d phi / d lambda = 1/(lambda f)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .background import _w_speed, lambda_of_r, r_of_lambda, warp_speed
from .errors import GeometryError, MeshError
from .spaceform import SpaceFormMesh, covariant_hessian, integrate

__all__ = [
    "PhiMap",
    "RadialProfile",
    "HypersurfaceGeometry",
    "geometry_from_profile",
    "area",
    "mean_convexity_margin",
    "enclosed_f_volume",
    "perturbed_profile",
    "write_geometry_csv",
]

_GL_X, _GL_W = roots_legendre(48)


class PhiMap:
    """Change of variable between lambda and phi = int_{lambda_ref}^{lambda} ds/(s f(s)).

    Integration runs in ``w = sqrt(s - s0)`` where the integrand
    ``2 / ((s0 + w^2) * f/w)`` is smooth up to the horizon.
    """

    def __init__(self, background, lambda_ref):
        self.background = background
        self.lambda_ref = float(lambda_ref)
        if not self.lambda_ref > background.s0:
            raise GeometryError("reference radius must lie outside the horizon")
        self._s0 = background.s0
        self._w_ref = np.sqrt(self.lambda_ref - self._s0)

    def _dphi_dw(self, w):
        return 2.0 / ((self._s0 + w * w) * _w_speed(w, self.background))

    def _phi_of_w(self, w):
        w = np.asarray(w, dtype=float)
        a = self._w_ref
        # two panels of 48-point Gauss-Legendre between w_ref and w
        total = np.zeros(w.shape)
        for lo, hi in (((a + (w - a) * 0.0), a + (w - a) * 0.5), (a + (w - a) * 0.5, w)):
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            pts = mid[..., None] + half[..., None] * _GL_X
            vals = self._dphi_dw(pts.ravel()).reshape(pts.shape)
            total += half * (vals @ _GL_W)
        return total

    def phi_of_lambda(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < self._s0):
            raise GeometryError("lambda below the horizon")
        return self._phi_of_w(np.sqrt(lam - self._s0))

    def lambda_of_phi(self, phi, guess=None, tol=1e-15, maxiter=40):
        """Invert phi -> lambda by Newton iteration in w (bisection fallback)."""
        phi = np.asarray(phi, dtype=float)
        if guess is None:
            w = self._bisect(phi)
        else:
            w = np.sqrt(np.maximum(np.asarray(guess, float) - self._s0, 0.0))
        for _ in range(maxiter):
            F = self._phi_of_w(w) - phi
            step = F / self._dphi_dw(w)
            w_new = w - step
            w_new = np.where(w_new < 0, 0.5 * w, w_new)
            done = np.abs(w_new - w) <= tol * (1.0 + w)
            w = w_new
            if np.all(done):
                break
        else:
            w = self._bisect(phi)
        return self._s0 + w * w

    def _bisect(self, phi, iters=200):
        lo = np.zeros(phi.shape)
        hi = np.full(phi.shape, max(2.0 * self._w_ref, 1.0))
        for _ in range(200):
            short = self._phi_of_w(hi) < phi
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)
        else:
            raise GeometryError("phi exceeds the range of the change of variable")
        if np.any(self._phi_of_w(lo) > phi):
            raise GeometryError("phi corresponds to a radius inside the horizon")
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            below = self._phi_of_w(mid) < phi
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-15 * (1.0 + hi)):
                break
        return 0.5 * (lo + hi)


def _check_compatible(mesh, p):
    if mesh.dim != p.n - 1:
        raise MeshError(f"mesh dimension {mesh.dim} does not match n - 1 = {p.n - 1}")
    if mesh.eps is not None and mesh.eps != p.eps:
        raise MeshError(f"{mesh.kind} mesh needs eps = {mesh.eps}, background has eps = {p.eps}")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Graph radius of a star-shaped hypersurface, stored as (phi, lambda) per node."""

    mesh: SpaceFormMesh
    background: object
    phi_map: PhiMap
    phi: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        _check_compatible(self.mesh, self.background)
        if self.lam.shape != self.mesh.shape or self.phi.shape != self.mesh.shape:
            raise MeshError("profile arrays do not match the mesh")
        if not (np.all(np.isfinite(self.lam)) and np.all(np.isfinite(self.phi))):
            raise GeometryError("profile contains non-finite values")
        s0 = self.background.s0
        if np.any(self.lam <= s0):
            raise GeometryError(f"profile touches the horizon: min lambda = {self.lam.min():.15g}"
                                f" <= s0 = {s0:.15g}")

    @classmethod
    def from_lambda(cls, mesh, p, lam, phi_map=None):
        lam = np.broadcast_to(np.asarray(lam, dtype=float), mesh.shape).copy()
        if np.any(lam <= p.s0):
            raise GeometryError("profile touches the horizon")
        if phi_map is None:
            phi_map = PhiMap(p, float(np.mean(lam)))
        return cls(mesh, p, phi_map, phi_map.phi_of_lambda(lam), lam)

    @classmethod
    def from_phi(cls, mesh, p, phi, phi_map, guess=None):
        phi = np.asarray(phi, dtype=float)
        return cls(mesh, p, phi_map, phi, phi_map.lambda_of_phi(phi, guess))

    @classmethod
    def from_r(cls, mesh, p, r, phi_map=None):
        """Profile from geodesic distance to the horizon, r(s0) = 0."""
        r = np.broadcast_to(np.asarray(r, dtype=float), mesh.shape)
        r_ref = float(np.mean(r))
        lam_ref = float(lambda_of_r(r_ref, p.s0, p))
        lam = lambda_of_r(r - r_ref, lam_ref, p)
        return cls.from_lambda(mesh, p, lam, phi_map)

    @classmethod
    def slice(cls, mesh, p, lam0):
        return cls.from_lambda(mesh, p, np.full(mesh.shape, float(lam0)), PhiMap(p, lam0))

    @property
    def r(self):
        """Geodesic distance from the horizon at each node."""
        return r_of_lambda(self.lam, self.background)

    def with_phi(self, phi):
        return RadialProfile.from_phi(self.mesh, self.background, phi, self.phi_map, guess=self.lam)


def perturbed_profile(mesh, p, lambda0, modes):
    """Slice at lambda0 with the geodesic radius perturbed by a sum of modes.

    On the sphere each mode is ``(degree, amplitude)`` and contributes
    ``amplitude * P_degree(cos theta)``; on the torus a mode
    ``(kx, ky, amplitude)`` contributes ``amplitude * cos(2 pi (kx x + ky y) / L)``.
    Amplitudes are in units of geodesic distance.
    """
    delta = np.zeros(mesh.shape)
    if mesh.kind == "sphere_axisym":
        u = np.cos(mesh.nodes["theta"])
        for degree, amp in modes:
            c = np.zeros(int(degree) + 1)
            c[-1] = 1.0
            delta += amp * np.polynomial.legendre.legval(u, c)
    elif mesh.kind == "torus":
        x, y, L = mesh.nodes["x"], mesh.nodes["y"], mesh.side
        for kx, ky, amp in modes:
            delta += amp * np.cos(2 * np.pi * (kx * x + ky * y) / L)
    elif modes:
        raise MeshError("analytic_slice meshes only represent round slices")
    lam = lambda_of_r(delta, lambda0, p)
    return RadialProfile.from_lambda(mesh, p, lam, PhiMap(p, lambda0))


@dataclass(frozen=True, eq=False)
class HypersurfaceGeometry:
    """Pointwise extrinsic geometry of a graph.

    ``shape_operator[j, i]`` is the mixed tensor h_i^j in a g_eps-orthonormal
    frame; ``area_element`` already includes the quadrature weights.
    """

    n: int
    lam: np.ndarray
    f: np.ndarray
    upsilon: np.ndarray
    grad_norm: np.ndarray
    support: np.ndarray
    H: np.ndarray
    shape_operator: np.ndarray
    shape_min: np.ndarray
    shape_max: np.ndarray
    sigma_contraction: np.ndarray
    area_element: np.ndarray
    area: float
    hessian: object

    def induced_metric(self):
        """g_ij = lambda^2 (delta_ij + phi_i phi_j) in the same frame."""
        g = self.hessian.grad
        k = g.shape[0]
        eye = np.eye(k).reshape((k, k) + (1,) * (g.ndim - 1))
        return self.lam**2 * (eye + g[:, None] * g[None, :])

    def second_fundamental_form(self):
        """h_il = g_lj h_i^j; symmetric for a consistent discretisation."""
        return np.einsum("lj...,ji...->li...", self.induced_metric(), self.shape_operator)


def _eig_range(A):
    k = A.shape[0]
    if k == 1:
        return A[0, 0], A[0, 0]
    if k == 2:
        tr = A[0, 0] + A[1, 1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        disc = np.sqrt(np.maximum(0.25 * tr * tr - det, 0.0))
        return 0.5 * tr - disc, 0.5 * tr + disc
    ev = np.linalg.eigvals(np.moveaxis(A, (0, 1), (-2, -1))).real
    return ev.min(axis=-1), ev.max(axis=-1)


def geometry_from_profile(profile):
    """Evaluate upsilon, support, H, shape operator and area element.

    h_i^j = (lambda' delta_i^j - sigma^jk phi_ki) / (upsilon lambda),
    H = ((n-1) lambda' - sigma^ij phi_ij) / (lambda upsilon),
    with lambda' = f(lambda).
    """
    mesh, p = profile.mesh, profile.background
    n = p.n
    lam = profile.lam
    if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(profile.phi)):
        raise GeometryError("non-finite profile values")
    if np.any(lam <= p.s0):
        raise GeometryError("hypersurface crosses the horizon")
    hd = covariant_hessian(mesh.field(profile.phi))
    ups = hd.upsilon
    f = warp_speed(lam, p)
    A = hd.sigma_hessian()
    k = A.shape[0]
    contraction = np.einsum("ii...->...", A)
    H = ((n - 1) * f - contraction) / (lam * ups)
    eye = np.eye(k).reshape((k, k) + (1,) * (A.ndim - 2))
    shape_op = (f * eye - A) / (ups * lam)
    a_min, a_max = _eig_range(A)
    # the analytic slice has one logical direction per cross-section dimension
    if mesh.kind == "analytic_slice":
        a_min = a_max = np.zeros(mesh.shape)
    elem = lam ** (n - 1) * ups * mesh.weights
    geom = HypersurfaceGeometry(
        n=n, lam=lam, f=f, upsilon=ups, grad_norm=np.sqrt(hd.grad_sq), support=lam / ups, H=H,
        shape_operator=shape_op, shape_min=(f - a_max) / (ups * lam),
        shape_max=(f - a_min) / (ups * lam), sigma_contraction=contraction,
        area_element=elem, area=float(np.sum(elem)), hessian=hd,
    )
    if not np.all(np.isfinite(H)):
        raise GeometryError("mean curvature is not finite")
    return geom


def area(geom):
    return geom.area


def mean_convexity_margin(geom):
    return float(np.min(geom.H))


def enclosed_f_volume(profile):
    """int_Omega f dv = (int_N lambda^n dmu - s0^n vartheta) / n."""
    p = profile.background
    mesh = profile.mesh
    return (integrate(profile.lam**p.n, mesh) - p.s0**p.n * mesh.total_volume) / p.n


def write_geometry_csv(path, profile, geom):
    mesh = profile.mesh
    cols = {k: np.asarray(c).ravel() for k, c in mesh.nodes.items()}
    cols.update(r=np.ravel(profile.r), H=geom.H.ravel(), upsilon=geom.upsilon.ravel(),
                shape_min=geom.shape_min.ravel(), shape_max=geom.shape_max.ravel())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(cols))
        for row in zip(*cols.values()):
            writer.writerow([repr(float(x)) for x in row])
