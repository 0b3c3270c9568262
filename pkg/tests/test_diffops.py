import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jdcurl import diffops
from jdcurl.errors import DimMismatch
from jdcurl.grid import CutoffRotation, GridSpec, synthesize_deformation, zero_boundary

from conftest import random_displacement


def direct_det(J):
    """det(I + J) node by node with numpy's LU determinant."""
    d = J.shape[0]
    M = np.moveaxis(J, (0, 1), (-2, -1)) + np.eye(d)
    return np.linalg.det(M)


def test_partial_exact_on_quadratics():
    spec = GridSpec.cube(33)
    X, Y = spec.coords()
    assert not diffops.partial(np.full(spec.shape, 2.5), 0, spec).any()
    np.testing.assert_allclose(diffops.partial(X, 0, spec), 1.0, rtol=0, atol=1e-13)
    np.testing.assert_allclose(diffops.partial(X**2, 0, spec), 2 * X, rtol=0, atol=1e-12)
    np.testing.assert_allclose(diffops.partial(X * Y, 1, spec), X, rtol=0, atol=1e-12)


@given(st.integers(4, 12), st.integers(0, 1), st.integers(0, 2**31 - 1))
def test_partial_adjoint_is_transpose(n, axis, seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec((n, n + 1))
    s, y = rng.normal(size=(2,) + spec.shape)
    lhs = np.sum(diffops.partial(s, axis, spec) * y)
    rhs = np.sum(s * diffops.partial_adjoint(y, axis, spec))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_jacobian_trace_is_divergence(rng):
    spec = GridSpec.cube(9, 3)
    u = random_displacement(spec, rng)
    J = diffops.jacobian(u, spec)
    assert np.array_equal(J[0, 0] + J[1, 1] + J[2, 2], diffops.divergence(u, spec))


def _shear_bump_error(n):
    spec = GridSpec.cube(n)
    X, Y = spec.coords()
    # u1 = a * y * q(r): interior bump, analytic d/dy
    a, R = 0.3, 0.25
    r2 = ((X - 0.5) ** 2 + (Y - 0.5) ** 2) / R**2
    q = np.where(r2 < 1, (1 - r2) ** 3, 0.0)
    dq_dy = np.where(r2 < 1, -6 * (1 - r2) ** 2 * (Y - 0.5) / R**2, 0.0)
    u = spec.zeros()
    u[0] = a * Y * q
    J = diffops.jacobian(u, spec)
    return np.abs(J[0, 1] - a * (q + Y * dq_dy)).max()


def test_jacobian_of_shear_bump_second_order():
    # the cutoff is only C2, so the asymptotic ratio 4 shows up on fine grids
    e1, e2 = _shear_bump_error(161), _shear_bump_error(321)
    assert e1 < 5e-3
    assert e1 / e2 > 3.5


def test_curl_grad_and_div_curl(rng):
    for spec in (GridSpec.cube(12), GridSpec.cube(9, 3)):
        s = rng.normal(size=spec.shape)
        cg = diffops.curl(diffops.gradient(s, spec), spec)
        inner = (slice(None),) * (cg.ndim - spec.dim) + spec.interior()
        assert np.abs(cg[inner]).max() < 1e-12 * np.abs(s).max() * 12**2
    spec = GridSpec.cube(9, 3)
    u = rng.normal(size=spec.vector_shape())
    dc = diffops.divergence(diffops.curl(u, spec), spec)[spec.interior()]
    assert np.abs(dc).max() < 1e-10


def test_rotation_curl_sign():
    # counter-clockwise rotation has positive curl u2x - u1y
    spec = GridSpec.cube(33)
    u = synthesize_deformation(spec, [CutoffRotation((0.5, 0.5), 0.3, 0.2)])
    c = diffops.curl(u, spec)
    assert c[16, 16] > 0
    # at the centre each central difference sees the cutoff at distance h
    h = spec.spacing[0]
    assert c[16, 16] == pytest.approx(2 * np.sin(0.2) * (1 - (h / 0.3) ** 2) ** 3, rel=1e-12)


def test_tail_structure(rng):
    spec = GridSpec.cube(9, 3)
    assert not diffops.tail(spec.zeros(), spec).any()
    u = spec.zeros()
    u[0] = zero_boundary(rng.normal(size=spec.shape), spec)
    assert not diffops.tail(u, spec).any()
    with pytest.raises(DimMismatch):
        diffops.tail(GridSpec.cube(6).zeros(), GridSpec.cube(6))


def test_tail_against_direct_determinant(rng):
    spec = GridSpec.cube(9, 3)
    u = random_displacement(spec, rng, 0.1)
    J = diffops.jacobian(u, spec)
    expect = direct_det(J) - 1 - diffops.divergence(u, spec) - diffops.det_grad_u(u, spec)
    np.testing.assert_allclose(diffops.tail(u, spec), expect, rtol=0, atol=1e-12)


def test_det_grad_u_constant_jacobian():
    spec = GridSpec.cube(9)
    X, Y = spec.coords()
    a, b, c, d = 0.3, -0.2, 0.7, 0.1
    u = np.stack([a * X + b * Y, c * X + d * Y])
    np.testing.assert_allclose(diffops.det_grad_u(u, spec), a * d - b * c, atol=1e-14)


@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]))
def test_det_expansion_identity(seed, dim):
    rng = np.random.default_rng(seed)
    spec = GridSpec.cube(7 if dim == 3 else 11, dim)
    u = random_displacement(spec, rng, 0.2)
    J = diffops.jacobian(u, spec)
    ref = direct_det(J)
    got = diffops.det_grad_phi(u, spec)
    assert np.all(np.abs(got - ref) <= 1e-12 * np.maximum(1.0, np.abs(ref)))


def test_rotation_nearly_volume_preserving():
    spec = GridSpec.cube(65)
    for angle in (0.05, 0.1):
        u = synthesize_deformation(spec, [CutoffRotation((0.5, 0.5), 0.3, angle)])
        dev = np.abs(diffops.det_grad_phi(u, spec) - 1).max()
        assert dev < 5 * angle**2
