from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rnads.errors import MeshError, PoleRegularityError
from rnads.spaceform import (
    CrossSectionField,
    build_mesh,
    covariant_hessian,
    integrate,
    read_field_csv,
    write_field_csv,
)


def test_sphere_weights_and_moments():
    mesh = build_mesh("sphere_axisym", 64)
    assert mesh.weights.sum() == pytest.approx(4 * math.pi, abs=1e-12)
    u = np.cos(mesh.nodes["theta"])
    assert integrate(np.ones(mesh.shape), mesh) == pytest.approx(4 * math.pi, abs=1e-12)
    assert abs(integrate(u, mesh)) < 1e-13
    assert integrate(u**2, mesh) == pytest.approx(4 * math.pi / 3, abs=1e-12)


@given(st.integers(8, 40), st.data())
def test_sphere_quadrature_polynomial_exactness(N, data):
    mesh = build_mesh("sphere_axisym", N)
    u = np.cos(mesh.nodes["theta"])
    k = data.draw(st.integers(0, 2 * N - 1))
    exact = 0.0 if k % 2 else 4 * math.pi / (k + 1)
    assert integrate(u**k, mesh) == pytest.approx(exact, abs=1e-12 * 4 * math.pi)


def test_torus_volume_and_weights():
    mesh = build_mesh("torus", 32, side=2 * math.pi)
    assert mesh.total_volume == pytest.approx(4 * math.pi**2)
    assert mesh.weights.sum() == pytest.approx(4 * math.pi**2, rel=1e-12)
    x = mesh.nodes["x"]
    # the periodic trapezoid rule integrates trigonometric polynomials exactly
    assert integrate(np.cos(3 * x) ** 2, mesh) == pytest.approx(2 * math.pi**2, rel=1e-12)


def test_analytic_slice_mesh():
    mesh = build_mesh("analytic_slice", eps=-1, volume=4 * math.pi * 2, dim=2)
    assert mesh.size == 1 and mesh.total_volume == pytest.approx(8 * math.pi)
    assert build_mesh("analytic_slice", eps=1, dim=3).total_volume == pytest.approx(2 * math.pi**2)
    with pytest.raises(MeshError):
        build_mesh("analytic_slice", eps=-1, dim=2)


def test_mesh_errors():
    with pytest.raises(MeshError):
        build_mesh("cube", 16)
    with pytest.raises(MeshError):
        build_mesh("sphere_axisym", 4)
    with pytest.raises(MeshError):
        build_mesh("sphere_axisym", 16, eps=0)
    with pytest.raises(MeshError):
        build_mesh("torus", 16, eps=1)
    with pytest.raises(MeshError):
        build_mesh("torus", 16, dim=3)


def test_field_validation():
    mesh = build_mesh("sphere_axisym", 16)
    with pytest.raises(MeshError):
        CrossSectionField(mesh, np.zeros(15))
    with pytest.raises(MeshError):
        mesh.field(np.full(16, np.nan))


def test_constant_field_has_zero_hessian():
    for mesh in (build_mesh("sphere_axisym", 32), build_mesh("torus", 16)):
        hd = covariant_hessian(mesh.field(np.full(mesh.shape, 3.7)))
        assert np.all(hd.grad == 0) and np.all(hd.hess == 0)


def test_sphere_cos_theta_contraction():
    mesh = build_mesh("sphere_axisym", 48)
    theta = mesh.nodes["theta"]
    c = 0.3
    hd = covariant_hessian(mesh.field(c * np.cos(theta)))
    # phi = c cos theta: phi' = -c sin, phi'' = -c cos, ups^2 = 1 + c^2 sin^2
    phi1, phi2 = -c * np.sin(theta), -c * np.cos(theta)
    ups2 = 1 + phi1**2
    expected = phi2 / ups2 + np.cos(theta) / np.sin(theta) * phi1
    assert np.allclose(hd.sigma_contraction(), expected, atol=1e-11)
    assert np.allclose(hd.upsilon**2, ups2, atol=1e-12)
    eq = np.argmin(np.abs(theta - math.pi / 2))
    assert hd.sigma_contraction()[eq] == pytest.approx(expected[eq], abs=1e-11)


def test_sphere_hessian_of_smooth_field():
    mesh = build_mesh("sphere_axisym", 40)
    theta = mesh.nodes["theta"]
    u = np.cos(theta)
    hd = covariant_hessian(mesh.field(np.exp(0.5 * u)))
    du = 0.5 * np.exp(0.5 * u)
    duu = 0.25 * np.exp(0.5 * u)
    assert np.allclose(hd.grad[0], -np.sin(theta) * du, atol=1e-12)
    assert np.allclose(hd.hess[0, 0], (1 - u**2) * duu - u * du, atol=1e-11)
    assert np.allclose(hd.hess[1, 1], -u * du, atol=1e-11)


def test_pole_regularity_violation():
    mesh = build_mesh("sphere_axisym", 32)
    with pytest.raises(PoleRegularityError):
        covariant_hessian(mesh.field(mesh.nodes["theta"]))


def test_torus_sine_second_derivative_fourth_order():
    errors = []
    for N in (16, 32):
        mesh = build_mesh("torus", N, side=2 * math.pi)
        x = mesh.nodes["x"]
        hd = covariant_hessian(mesh.field(np.sin(x)))
        errors.append(np.max(np.abs(hd.hess[0, 0] + np.sin(x))))
        assert np.max(np.abs(hd.hess[1, 1])) < 1e-13
    assert errors[1] < 1e-4
    assert errors[0] / errors[1] == pytest.approx(16, rel=0.1)


def test_torus_mixed_derivative():
    mesh = build_mesh("torus", 48, side=3.0)
    x, y = mesh.nodes["x"], mesh.nodes["y"]
    k = 2 * math.pi / 3.0
    hd = covariant_hessian(mesh.field(np.sin(k * x) * np.cos(k * y)))
    assert np.allclose(hd.hess[0, 1], -k * k * np.cos(k * x) * np.sin(k * y), atol=2e-4)
    assert np.allclose(hd.hess[0, 1], hd.hess[1, 0])


def test_sphere_refinement_convergence():
    # a smooth non-polynomial field: collocation error decays faster than any power
    errs = []
    for N in (8, 12, 16):
        mesh = build_mesh("sphere_axisym", N)
        u = np.cos(mesh.nodes["theta"])
        hd = covariant_hessian(mesh.field(np.cos(2 * u)), check_poles=False)
        exact = (1 - u**2) * (-4 * np.cos(2 * u)) - u * (-2 * np.sin(2 * u))
        errs.append(np.max(np.abs(hd.hess[0, 0] - exact)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-7


def test_field_csv_round_trip(tmp_path):
    mesh = build_mesh("torus", 8)
    vals = np.sin(mesh.nodes["x"]) + mesh.nodes["y"]
    path = tmp_path / "field.csv"
    write_field_csv(path, mesh.field(vals), name="phi", extra={"aux": 1.0})
    back = read_field_csv(path, mesh, name="phi")
    assert np.array_equal(back.values, vals)
    with pytest.raises(MeshError):
        read_field_csv(path, build_mesh("torus", 9), name="phi")
    with pytest.raises(MeshError):
        read_field_csv(path, mesh, name="missing")
