"""Discretisations of the cross-section N_eps.

Three kinds are supported:

``sphere_axisym``
    Axisymmetric functions on the unit S^2, sampled at Gauss-Legendre
    nodes in u = cos(theta).  Derivatives come from the polynomial
    collocation matrix on the same nodes, so quadrature and differentiation
    share one polynomial space and the poles need no special treatment.
``torus``
    Flat square torus of side L on a uniform periodic grid, trapezoidal
    weights and 4th-order centered differences.
``analytic_slice``
    Zero-dimensional stand-in for any closed space form: one logical node
    carrying the total volume.  Only round slices are representable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .background import sphere_volume
from .errors import MeshError, PoleRegularityError

__all__ = [
    "SpaceFormMesh",
    "CrossSectionField",
    "HessianData",
    "build_mesh",
    "covariant_hessian",
    "integrate",
    "write_field_csv",
    "read_field_csv",
]

KINDS = ("sphere_axisym", "torus", "analytic_slice")


def _collocation_matrix(x):
    """First-derivative matrix of the polynomial interpolant through nodes x."""
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    # barycentric weights in log form to avoid under/overflow for large N
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sgn = np.prod(np.sign(diff), axis=1)
    ratio = np.exp(logw[None, :] - logw[:, None]) * (sgn[None, :] * sgn[:, None])
    D = ratio / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True, eq=False)
class SpaceFormMesh:
    """Nodes, quadrature weights and derivative operators on N_eps.

    ``nodes`` maps coordinate names to arrays of shape ``shape``;
    ``weights`` has the same shape.  ``spacing`` is the length scale h used
    by the parabolic time-step bound (dt ~ h^2).
    """

    kind: str
    dim: int
    resolution: int
    nodes: dict
    weights: np.ndarray
    total_volume: float
    spacing: float
    side: float | None = None
    _ops: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self):
        return self.weights.shape

    @property
    def size(self):
        return self.weights.size

    @property
    def eps(self):
        return {"sphere_axisym": 1, "torus": 0}.get(self.kind)

    def coordinate_names(self):
        return tuple(self.nodes)

    def field(self, values):
        return CrossSectionField(self, np.broadcast_to(np.asarray(values, float), self.shape).copy())

    def zeros(self):
        return np.zeros(self.shape)


def build_mesh(kind, resolution=None, *, eps=None, side=None, volume=None, dim=2):
    """Construct a :class:`SpaceFormMesh`.

    Parameters
    ----------
    kind : {"sphere_axisym", "torus", "analytic_slice"}
    resolution : int
        Nodes per dimension (>= 8); ignored for ``analytic_slice``.
    eps : int, optional
        Curvature sign of the intended background, checked against ``kind``.
    side : float
        Torus side length L (default 2 pi).
    volume : float
        Total volume for ``analytic_slice``.  Defaults to |S^dim| when
        ``eps == 1``; required otherwise.
    dim : int
        Dimension of the cross-section; only ``analytic_slice`` accepts
        values other than 2.
    """
    if kind not in KINDS:
        raise MeshError(f"unsupported mesh kind {kind!r}; expected one of {KINDS}")
    if kind == "analytic_slice":
        if volume is None:
            if eps != 1:
                raise MeshError("analytic_slice with eps != 1 needs a declared volume")
            volume = sphere_volume(dim)
        if not volume > 0:
            raise MeshError("cross-section volume must be positive")
        return SpaceFormMesh(kind, int(dim), 1, {}, np.array([float(volume)]), float(volume), 0.0)

    if dim != 2:
        raise MeshError(f"{kind} meshes are two-dimensional (n = 3); got dim = {dim}")
    if resolution is None or resolution < 8:
        raise MeshError(f"resolution must be >= 8, got {resolution!r}")
    resolution = int(resolution)

    if kind == "sphere_axisym":
        if eps not in (None, 1):
            raise MeshError(f"sphere_axisym requires eps = 1, got {eps}")
        u, w = roots_legendre(resolution)
        D = _collocation_matrix(u)
        ops = {"D": D, "D2": D @ D, "u": u}
        return SpaceFormMesh(kind, 2, resolution, {"theta": np.arccos(u)}, 2 * np.pi * w,
                             4 * np.pi, 2.0 / resolution, None, ops)

    if eps not in (None, 0):
        raise MeshError(f"torus requires eps = 0, got {eps}")
    L = 2 * np.pi if side is None else float(side)
    if not L > 0:
        raise MeshError("torus side must be positive")
    h = L / resolution
    x1 = np.arange(resolution) * h
    x, y = np.meshgrid(x1, x1, indexing="ij")
    return SpaceFormMesh(kind, 2, resolution, {"x": x, "y": y}, np.full(x.shape, h * h),
                         L * L, h, L, {"h": h})


@dataclass(frozen=True, eq=False)
class CrossSectionField:
    mesh: SpaceFormMesh
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.mesh.shape:
            raise MeshError(f"field shape {self.values.shape} does not match mesh {self.mesh.shape}")
        if not np.all(np.isfinite(self.values)):
            raise MeshError("field has non-finite values")


def integrate(field_or_values, mesh=None):
    """Quadrature of a field over N_eps."""
    if isinstance(field_or_values, CrossSectionField):
        if mesh is not None and mesh is not field_or_values.mesh:
            raise MeshError("field belongs to a different mesh")
        mesh, values = field_or_values.mesh, field_or_values.values
    else:
        values = np.asarray(field_or_values, dtype=float)
        if mesh is None:
            raise MeshError("integrate needs a mesh for raw arrays")
    values = np.broadcast_to(values, mesh.shape)
    return float(np.sum(mesh.weights * values))


@dataclass(frozen=True)
class HessianData:
    """Gradient and covariant Hessian in a g_eps-orthonormal frame at every node.

    ``grad`` has shape ``(dim, *mesh.shape)`` and ``hess`` ``(dim, dim, *mesh.shape)``.
    """

    grad: np.ndarray
    hess: np.ndarray

    @property
    def grad_sq(self):
        return np.sum(self.grad**2, axis=0)

    @property
    def upsilon(self):
        return np.sqrt(1.0 + self.grad_sq)

    def sigma(self):
        """sigma^ij = g^ij - phi^i phi^j / upsilon^2."""
        k = self.grad.shape[0]
        eye = np.eye(k).reshape((k, k) + (1,) * (self.grad.ndim - 1))
        return eye - self.grad[:, None] * self.grad[None, :] / (1.0 + self.grad_sq)

    def sigma_hessian(self):
        """The mixed tensor A^j_i = sigma^jk phi_ki."""
        return np.einsum("jk...,ki...->ji...", self.sigma(), self.hess)

    def sigma_contraction(self):
        """sigma^ij phi_ij."""
        return np.einsum("ij...,ij...->...", self.sigma(), self.hess)


def _pole_slope(theta, phi_theta):
    # phi_theta of a regular field is odd in theta about the pole; fitting
    # c0 + c1 t + c3 t^3 + c5 t^5 through the four nearest nodes leaves c0 ~ t^7
    t, v = theta[:4], phi_theta[:4]
    A = np.vstack([np.ones(4), t, t**3, t**5]).T
    return float(np.linalg.solve(A, v)[0])


def covariant_hessian(field, check_poles=True, pole_tol=1e-2):
    """Gradient and Hessian of a cross-section field.

    On the axisymmetric sphere the orthonormal frame is (e_theta, e_phi);
    the Hessian is diag(phi_theta_theta, cot(theta) phi_theta), written in
    u = cos(theta) as ``(1-u^2) phi_uu - u phi_u`` and ``-u phi_u``.

    Raises :class:`PoleRegularityError` when the extrapolated slope at a
    pole exceeds ``pole_tol`` relative to the largest slope.
    """
    mesh = field.mesh
    v = field.values
    if mesh.kind == "analytic_slice":
        k = mesh.dim
        return HessianData(np.zeros((k, 1)), np.zeros((k, k, 1)))

    # derivatives are shift invariant; subtracting one node value keeps constants exact
    v = v - v.flat[0]
    if mesh.kind == "sphere_axisym":
        ops = mesh._ops
        u = ops["u"]
        du = ops["D"] @ v
        duu = ops["D2"] @ v
        sin = np.sqrt(1.0 - u * u)
        phi_t = -sin * du
        h_tt = (1.0 - u * u) * duu - u * du
        h_pp = -u * du
        if check_poles:
            theta = mesh.nodes["theta"]
            scale = max(float(np.max(np.abs(phi_t))), 1.0)
            # nodes are ordered by increasing u, i.e. decreasing theta
            north = _pole_slope(theta[::-1], phi_t[::-1])
            south = _pole_slope(np.pi - theta, -phi_t)
            if max(abs(north), abs(south)) > pole_tol * scale:
                raise PoleRegularityError(
                    f"axisymmetric field has slope {north:.3g} / {south:.3g} at the poles")
        zero = np.zeros_like(v)
        grad = np.stack([phi_t, zero])
        hess = np.stack([np.stack([h_tt, zero]), np.stack([zero, h_pp])])
        return HessianData(grad, hess)

    h = mesh._ops["h"]

    def d1(a, ax):
        return (np.roll(a, 2, ax) - 8 * np.roll(a, 1, ax) + 8 * np.roll(a, -1, ax)
                - np.roll(a, -2, ax)) / (12 * h)

    def d2(a, ax):
        return (-np.roll(a, 2, ax) + 16 * np.roll(a, 1, ax) - 30 * a + 16 * np.roll(a, -1, ax)
                - np.roll(a, -2, ax)) / (12 * h * h)

    vx, vy = d1(v, 0), d1(v, 1)
    vxy = d1(vx, 1)
    grad = np.stack([vx, vy])
    hess = np.stack([np.stack([d2(v, 0), vxy]), np.stack([vxy, d2(v, 1)])])
    return HessianData(grad, hess)


def write_field_csv(path, field, name="value", extra=None):
    """Write one row per node: coordinates, then ``name``, then any extra columns."""
    mesh = field.mesh
    cols = {k: np.asarray(c).ravel() for k, c in mesh.nodes.items()}
    cols[name] = field.values.ravel()
    for k, vals in (extra or {}).items():
        cols[k] = np.broadcast_to(np.asarray(vals, float), mesh.shape).ravel()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(cols))
        for row in zip(*cols.values()):
            writer.writerow([repr(float(x)) for x in row])


def read_field_csv(path, mesh, name="value", atol=1e-9):
    """Read a field written by :func:`write_field_csv`, checking node coordinates."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != mesh.size:
        raise MeshError(f"{path}: {len(rows)} rows for a mesh with {mesh.size} nodes")
    if not rows or name not in rows[0]:
        raise MeshError(f"{path}: missing column {name!r}")
    for coord, ref in mesh.nodes.items():
        got = np.array([float(r[coord]) for r in rows])
        if not np.allclose(got, np.asarray(ref).ravel(), atol=atol, rtol=0):
            raise MeshError(f"{path}: column {coord!r} does not match the mesh nodes")
    values = np.array([float(r[name]) for r in rows]).reshape(mesh.shape)
    return CrossSectionField(mesh, values)
