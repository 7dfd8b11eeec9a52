from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjader.basis import build_basis, evaluate_modes, gauss_rule
from hjader.flux import (
    PENALTY_C,
    FaceEval,
    barycenter_derivatives,
    entropy_params_1d,
    face_contributions,
    face_eval,
    face_operators,
    face_terms,
    roe_speed_1d,
    roe_speed_2d,
    volume_integral,
)
from hjader.hamiltonian import HamiltonianModel, catalog
from hjader.mesh import pad

BURGERS = catalog("burgers-1d").model
BURGERS2 = catalog("burgers-2d").model
ORDERS = [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]
FACES = [(dim, k, d) for dim, k in ORDERS for d in range(dim)]


def linear(a):
    return HamiltonianModel("linear", H=lambda p, q, x, y: a * p, H1=lambda p, q, x, y: a + 0.0 * p)


def test_roe_speed_examples():
    assert roe_speed_1d(0.0, 1.0, BURGERS) == pytest.approx(1.5)
    assert roe_speed_1d(0.7, 0.7, BURGERS) == pytest.approx(1.7)
    pL = 0.3
    assert abs(roe_speed_1d(pL, pL + 1e-15, BURGERS) - (pL + 1.0)) < 1e-9
    assert roe_speed_2d(0, 0.0, 1.0, 0.0, BURGERS2) == pytest.approx(1.5)
    assert roe_speed_2d(1, 0.2, 0.2, 0.3, BURGERS2) == pytest.approx(1.5)


def test_entropy_examples():
    half = HamiltonianModel("p^2/2", H=lambda p, q, x, y: 0.5 * p * p, H1=lambda p, q, x, y: p)
    # shifted Burgers (p+1)^2/2 with a transonic rarefaction
    delta, S = entropy_params_1d(-2.0, 0.0, BURGERS)
    assert roe_speed_1d(-2.0, 0.0, BURGERS) == pytest.approx(0.0)
    assert delta == pytest.approx(1.0) and S == pytest.approx(1.0)
    fe = face_eval(BURGERS, 0, np.array(-2.0), np.array(0.0))
    assert fe.lambda3 == pytest.approx(1.0)
    d, S = entropy_params_1d(0.4, 0.4, half)
    assert d == 0.0 and S == pytest.approx(0.4)
    for pl, pr in [(-3.0, 2.0), (1.0, -1.0), (0.0, 5.0)]:
        fe = face_eval(linear(-0.7), 0, np.array(pl), np.array(pr))
        assert fe.Htilde == pytest.approx(-0.7) and fe.delta == 0.0 and fe.lambda3 == pytest.approx(0.0)


@settings(max_examples=200, deadline=None)
@given(
    name=st.sampled_from(["burgers-1d", "noncvx-cos-1d", "riemann-noncvx-1d", "burgers-2d", "riemann-sin-2d"]),
    pL=st.floats(-3, 3),
    pR=st.floats(-3, 3),
    t=st.floats(-2, 2),
    direction=st.sampled_from([0, 1]),
)
def test_lambda_identities(name, pL, pR, t, direction):
    m = catalog(name).model
    d = direction if m.dim == 2 else 0
    fe = face_eval(m, d, np.array(pL), np.array(pR), t if m.dim == 2 else 0.0)
    assert fe.lambda1 <= 0.0 <= fe.lambda2
    assert fe.lambda1 + fe.lambda2 == fe.Htilde
    assert fe.lambda3 >= 0.0
    assert fe.S >= abs(fe.Htilde)
    assert fe.lambda1 * fe.lambda2 == 0.0


@settings(max_examples=50, deadline=None)
@given(pL=st.floats(-3, 3), pR=st.floats(-3, 3), t=st.floats(-3, 3))
def test_roe_2d_without_q_matches_1d(pL, pR, t):
    m2 = HamiltonianModel("(p+1)^2/2", H=lambda p, q, x, y: 0.5 * (p + 1) ** 2, H1=lambda p, q, x, y: p + 1, dim=2)
    assert roe_speed_2d(0, pL, pR, t, m2) == pytest.approx(roe_speed_1d(pL, pR, BURGERS), rel=1e-14, abs=1e-14)


def test_barycenter_derivative_examples():
    ops = face_operators(2, 2, 0)
    q = np.zeros(10)
    q[1] = 1.0
    dx = 0.2
    uL, uR, vL, vR = barycenter_derivatives(q, q, ops, dx, 0.3)
    assert uL == pytest.approx(1 / dx) and uR == pytest.approx(1 / dx)
    c = np.zeros(10)
    c[0] = 3.0
    assert barycenter_derivatives(c, c, ops, dx, 0.3) == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("dim,k,direction", FACES)
def test_barycenter_derivatives_pointwise(dim, k, direction):
    ops = face_operators(dim, k, direction)
    spec = build_basis(dim, k)
    rng = np.random.default_rng(0)
    qL, qR = rng.normal(size=(2, 5, spec.L))
    hn, ht = 0.3, 0.7
    got = barycenter_derivatives(qL, qR, ops, hn, ht)
    for side, q, c in ((0, qL, 0.5), (1, qR, -0.5)):
        p = np.zeros((1, dim + 1))
        p[0, direction] = c
        p[0, dim] = 0.5
        np.testing.assert_allclose(got[side], (q @ evaluate_modes(spec, p, deriv=direction)[0]) / hn, atol=1e-14)
        if dim == 2:
            np.testing.assert_allclose(got[2 + side], (q @ evaluate_modes(spec, p, deriv=1 - direction)[0]) / ht, atol=1e-14)


def _face_quadrature(qL, qR, fe, spec, direction, C, dt, face_len):
    """Face x time Gauss quadrature of the jump and derivative-jump integrands."""
    n = spec.k + 4
    tp, tw = np.polynomial.legendre.leggauss(n)
    tp, tw = 0.5 * (tp + 1), 0.5 * tw
    if spec.dim == 1:
        sp, sw = np.zeros(1), np.ones(1)
    else:
        sp, sw = np.polynomial.legendre.leggauss(n)
        sp, sw = 0.5 * sp, 0.5 * sw
    S, T = np.meshgrid(sp, tp, indexing="ij")
    W = np.outer(sw, tw).ravel()

    def pts(c):
        cols = [None] * (spec.dim + 1)
        cols[direction] = np.full(S.size, c)
        if spec.dim == 2:
            cols[1 - direction] = S.ravel()
        cols[-1] = T.ravel()
        return np.stack(cols, axis=1)

    PL, PR = pts(0.5), pts(-0.5)
    jump = qR @ evaluate_modes(spec, PR).T - qL @ evaluate_modes(spec, PL).T
    djump = qR @ evaluate_modes(spec, PR, deriv=direction).T - qL @ evaluate_modes(spec, PL, deriv=direction).T
    testL = evaluate_modes(spec, PL)[:, : spec.Ls]
    testR = evaluate_modes(spec, PR)[:, : spec.Ls]
    s = dt * face_len
    FL = s * (fe.lambda1[:, None] * ((jump * W) @ testL) - C * fe.lambda3[:, None] * ((djump * W) @ testL))
    FR = s * (fe.lambda2[:, None] * ((jump * W) @ testR) - C * fe.lambda3[:, None] * ((djump * W) @ testR))
    return FL, FR


@pytest.mark.parametrize("dim,k,direction", FACES)
def test_face_contributions_match_quadrature(dim, k, direction):
    spec = build_basis(dim, k)
    ops = face_operators(dim, k, direction)
    rng = np.random.default_rng(7)
    qL, qR = rng.normal(size=(2, 6, spec.L))
    fe = FaceEval(rng.normal(size=6), np.zeros(6), rng.uniform(1, 2, 6))
    got = face_contributions(qL, qR, fe, ops, 0.25, 0.03, 0.4)
    want = _face_quadrature(qL, qR, fe, spec, direction, 0.25, 0.03, 0.4)
    np.testing.assert_allclose(got[0], want[0], atol=1e-13)
    np.testing.assert_allclose(got[1], want[1], atol=1e-13)


def test_single_mode_jump():
    ops = face_operators(2, 2, 0)
    qL, qR = np.zeros((1, 10)), np.zeros((1, 10))
    qR[0, 0] = 1.0
    fe = FaceEval(np.array([0.8]), np.array([0.0]), np.array([0.8]))
    dt, fl = 0.1, 0.5
    FL, FR = face_contributions(qL, qR, fe, ops, 0.25, dt, fl)
    assert FR[0, 0] == pytest.approx(0.8 * dt * fl)
    assert FL[0, 0] == 0.0


def _global_poly_cells(spec, f, centers, h, dt, axis=0):
    """Spacetime coefficients of ``f(x, y, t)`` on cells centered at ``centers`` along ``axis``."""
    rule = gauss_rule(spec.k + 2, spec.dim, with_time=True)
    A = evaluate_modes(spec, rule.points)
    out = []
    for c in centers:
        x = h * rule.points[:, 0] + (c if axis == 0 else 0.0)
        y = h * rule.points[:, 1] + (c if axis == 1 else 0.0) if spec.dim == 2 else 0.0
        out.append(np.linalg.lstsq(A, f(x, y, dt * rule.points[:, -1]), rcond=None)[0])
    return np.array(out)


@pytest.mark.parametrize("dim,k", ORDERS)
def test_no_jump_no_flux(dim, k):
    spec = build_basis(dim, k)
    h, dt = 0.2, 0.05
    f = lambda x, y, t: 0.3 + x - 0.5 * x * x * (k > 1) + t * (y if dim == 2 else 1.0)  # noqa: E731
    q = _global_poly_cells(spec, f, [-h / 2, h / 2], h, dt)
    ops = face_operators(dim, k, 0)
    fe = face_eval(BURGERS2 if dim == 2 else BURGERS, 0, *barycenter_derivatives(q[:1], q[1:], ops, h, h)[:2])
    FL, FR = face_contributions(q[:1], q[1:], fe, ops, 0.25, dt, h)
    np.testing.assert_allclose(FL, 0.0, atol=1e-15)
    np.testing.assert_allclose(FR, 0.0, atol=1e-15)


@pytest.mark.parametrize("dim,k,axis", FACES)
def test_face_terms_match_reference_path(dim, k, axis):
    spec = build_basis(dim, k)
    rng = np.random.default_rng(11)
    shape = (6,) if dim == 1 else (5, 4)
    q = 0.2 * rng.normal(size=shape + (spec.L,))
    hn, ht, dt, C = 0.2, 0.3, 0.01, 0.25
    model = catalog("noncvx-cos-1d" if dim == 1 else "noncvx-cos-2d").model
    ops = face_operators(dim, k, axis)
    qp = pad(q, axis, "periodic", k, dim)
    got = face_terms(qp, axis, ops, model, C, dt, hn, ht if dim == 2 else 1.0)

    Q = np.moveaxis(qp, axis, 0)
    qL, qR = Q[:-1], Q[1:]
    uL, uR, vL, vR = barycenter_derivatives(qL, qR, ops, hn, ht)
    fe = face_eval(model, axis, uL, uR, 0.5 * (vL + vR))
    FL, FR = face_contributions(qL, qR, fe, ops, C, dt, ht if dim == 2 else 1.0)
    want = np.moveaxis(FL[1:] + FR[:-1], 0, axis)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_face_terms_2d_reduce_to_1d(k):
    s1, s2 = build_basis(1, k), build_basis(2, k)
    rng = np.random.default_rng(4)
    q1 = 0.2 * rng.normal(size=(6, s1.L))
    embed = [s2.modes.index(((a[0], 0), p)) for a, p in s1.modes]
    Ny = 3
    q2 = np.zeros((6, Ny, s2.L))
    q2[..., embed] = q1[:, None, :]
    hn, ht, dt = 0.2, 0.3, 0.01
    f1 = face_terms(pad(q1, 0, "periodic", k, 1), 0, face_operators(1, k, 0), BURGERS, 0.25, dt, hn)
    f2 = face_terms(pad(q2, 0, "periodic", k, 2), 0, face_operators(2, k, 0), BURGERS2, 0.25, dt, hn, ht)
    for j in range(Ny):
        np.testing.assert_allclose(f2[:, j, embed[: s1.Ls]], ht * f1, rtol=1e-13, atol=1e-15)
        others = [i for i in range(s2.Ls) if i not in embed]
        np.testing.assert_allclose(f2[:, j, others], 0.0, atol=1e-15)


def _quadratured_face(qL, qR, spec, model, C, dt, h):
    """1D face term with the wave speeds evaluated pointwise in time."""
    tp, tw = np.polynomial.legendre.leggauss(spec.k + 4)
    tp, tw = 0.5 * (tp + 1), 0.5 * tw
    PL = np.stack([np.full_like(tp, 0.5), tp], axis=1)
    PR = np.stack([np.full_like(tp, -0.5), tp], axis=1)
    jump = evaluate_modes(spec, PR) @ qR - evaluate_modes(spec, PL) @ qL
    dL = evaluate_modes(spec, PL, deriv=0) @ qL
    dR = evaluate_modes(spec, PR, deriv=0) @ qR
    fe = face_eval(model, 0, dL / h, dR / h)
    gL = fe.lambda1 * jump - C * fe.lambda3 * (dR - dL)
    gR = fe.lambda2 * jump - C * fe.lambda3 * (dR - dL)
    testL = evaluate_modes(spec, PL)[:, : spec.Ls]
    testR = evaluate_modes(spec, PR)[:, : spec.Ls]
    return dt * (tw * gL) @ testL, dt * (tw * gR) @ testR


@pytest.mark.parametrize("k", [1, 2, 3])
def test_frozen_flux_order(k):
    spec = build_basis(1, k)
    model = catalog("noncvx-cos-1d").model
    f = lambda x, y, t: np.sin(2.0 * x + 0.3) + 0.4 * np.cos(x - 1.5 * t)  # noqa: E731
    ops = face_operators(1, k, 0)
    diffs = []
    for h in (0.2, 0.1, 0.05):
        dt = 0.5 * h
        q = _global_poly_cells(spec, f, [0.1 - h / 2, 0.1 + h / 2], h, dt)
        fe = face_eval(model, 0, *barycenter_derivatives(q[:1], q[1:], ops, h)[:2])
        FL, FR = face_contributions(q[:1], q[1:], fe, ops, 0.25, dt)
        QL, QR = _quadratured_face(q[0], q[1], spec, model, 0.25, dt, h)
        diffs.append(max(np.abs(FL[0] - QL).max(), np.abs(FR[0] - QR).max()))
    if k == 1:
        # the normal slope of a k=1 spacetime polynomial is constant on the face: frozen is exact
        assert max(diffs) < 1e-15
        return
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    assert np.all(orders >= k + 1), (diffs, orders)


@pytest.mark.parametrize("dim,k", ORDERS)
def test_volume_integral(dim, k):
    spec = build_basis(dim, k)
    dx, dy = 0.3, 0.2 if dim == 2 else 1.0
    e0 = np.zeros(spec.L)
    e0[0] = 1.0
    want0 = np.zeros(spec.Ls)
    want0[0] = dx * dy
    np.testing.assert_allclose(volume_integral(e0, dx, dy, dim=dim, k=k), want0, atol=1e-15)
    assert not np.any(volume_integral(np.zeros(spec.L), dx, dy, dim=dim, k=k))
    h = np.random.default_rng(1).normal(size=spec.L)
    rule = gauss_rule(k + 4, dim, with_time=True)
    theta = evaluate_modes(spec, rule.points)
    want = dx * dy * (theta[:, : spec.Ls].T @ (rule.weights * (theta @ h)))
    np.testing.assert_allclose(volume_integral(h, dx, dy, dim=dim, k=k), want, atol=1e-13)


def test_face_operator_cache_and_trace_factors():
    ops = face_operators(2, 3, 1)
    assert face_operators(2, 3, 1) is ops
    tf = ops.trace_factors
    # reconstruct the trace mass blocks from the factorization
    width = tf.P.shape[1] // 2
    for b in (0, 1):
        Pv = tf.P[:, b * width : b * width + tf.r].T
        for a in (0, 1):
            np.testing.assert_allclose(tf.Qv[a].T @ Pv, ops.T[a][b], atol=1e-14)


@pytest.mark.parametrize("axis", [0, 1])
def test_face_blocks_do_not_change_result(monkeypatch, axis):
    import hjader.flux as flux

    model = catalog("rotation-smooth-2d").model
    ops = face_operators(2, 2, axis)
    rng = np.random.default_rng(3)
    q = 0.1 * rng.standard_normal((9, 7, ops.spec.L))
    qp = pad(q, axis, "extrapolation", 2, 2)
    xf, yc = np.linspace(-1, 1, 10), np.linspace(-1, 1, 7)
    if axis == 0:
        x, y = xf[:, None], yc[None, :]
    else:
        x, y = np.linspace(-1, 1, 9)[:, None], np.linspace(-1, 1, 8)[None, :]
    ref = face_terms(qp, axis, ops, model, PENALTY_C, 0.01, 0.2, 0.3, x, y)
    monkeypatch.setattr(flux, "FACE_BLOCK", 1)
    out = face_terms(qp, axis, ops, model, PENALTY_C, 0.01, 0.2, 0.3, x, y)
    np.testing.assert_allclose(out, ref, rtol=0, atol=1e-15)
