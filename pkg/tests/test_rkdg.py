from __future__ import annotations

import numpy as np
import pytest
from numpy.polynomial import Legendre, Polynomial

from hjader.harness import error_norms, make_mesh, reference_oracle, run_case
from hjader.hamiltonian import HamiltonianModel, ProblemCase, catalog
from hjader.mesh import Mesh1D, Mesh2D, SolverConfig, StepError, project_initial
from hjader.rkdg import rkdg_residual, rkdg_step, run_rkdg, workspace
from hjader.solver1d import step

ORDERS = [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]


def monic_legendre(n: int) -> Polynomial:
    """Legendre polynomial on [-1/2, 1/2], scaled to leading coefficient one."""
    p = Legendre.basis(n, domain=[-0.5, 0.5]).convert(kind=Polynomial)
    return p / p.coef[-1]


def direct(spec, pts, deriv=None):
    out = np.ones((len(pts), spec.Ls))
    for j, mode in enumerate(spec.spatial_modes):
        for d, n in enumerate(mode):
            p = monic_legendre(n)
            out[:, j] *= (p.deriv() if deriv == d else p)(pts[:, d])
    return out


@pytest.mark.parametrize("dim,k", ORDERS)
def test_workspace_matches_direct_evaluation(dim, k):
    ws = workspace(dim, k)
    assert len(ws.weights) == (k + 1) ** dim
    np.testing.assert_allclose(ws.phi, direct(ws.spec, ws.points), rtol=0, atol=1e-15)
    for d in range(dim):
        np.testing.assert_allclose(ws.dphi[d], direct(ws.spec, ws.points, deriv=d), rtol=0, atol=1e-15)
    for d, e in enumerate(ws.edges):
        assert len(e.weights) == (1 if dim == 1 else k + 1)
        for side, c in enumerate((0.5, -0.5)):
            pts = np.zeros((len(e.weights), dim))
            pts[:, d] = c
            if dim == 2:
                pts[:, 1 - d] = e.tangential_points
            np.testing.assert_allclose(e.val[side], direct(ws.spec, pts), rtol=0, atol=1e-15)
            np.testing.assert_allclose(e.dn[side], direct(ws.spec, pts, deriv=d), rtol=0, atol=1e-15)
            if dim == 2:
                np.testing.assert_allclose(e.dt[side], direct(ws.spec, pts, deriv=1 - d), rtol=0, atol=1e-15)


def test_zero_hamiltonian_constant_field():
    zero = HamiltonianModel("zero", H=lambda p, q, x, y: 0.0 * p, H1=lambda p, q, x, y: 0.0 * p, H2=lambda p, q, x, y: 0.0 * q, dim=2)
    case = ProblemCase("c", zero, (0.0, 1.0, 0.0, 1.0), lambda x, y: 1.25 + 0.0 * x)
    for k in (1, 2, 3):
        f = project_initial(case, Mesh2D.square(case.bounds, 6), k)
        assert not np.any(rkdg_residual(f, zero, SolverConfig(k=k, cfl=0.1, t_final=1.0)))


@pytest.mark.parametrize("k", [2, 3])
def test_mean_residual_is_minus_average_of_h(k):
    # a global quadratic continues across faces without jumps, so only the volume term remains
    burgers = catalog("burgers-1d").model
    alpha, beta = 0.7, -0.4
    case = ProblemCase("quad", burgers, (-1.0, 1.0), lambda x: alpha * np.asarray(x) ** 2 + beta * np.asarray(x), boundary="extrapolation")
    mesh = Mesh1D(-1.0, 1.0, 10)
    f = project_initial(case, mesh, k)
    r = rkdg_residual(f, burgers, SolverConfig(k=k, cfl=0.1, t_final=1.0, boundary="extrapolation"))
    # H is quadratic in p and p is linear in x, so eight Gauss points are exact
    s, w = np.polynomial.legendre.leggauss(8)
    x = mesh.centers[:, None] + 0.5 * mesh.dx * s[None, :]
    want = -0.5 * burgers.H(2 * alpha * x + beta, 0.0, x, 0.0) @ w
    np.testing.assert_allclose(r[:, 0], want, rtol=0, atol=1e-13)


def test_mean_residual_converges_for_smooth_data():
    case = catalog("linear-sinx-1d")
    diffs = []
    for N in (20, 40):
        mesh = make_mesh(case, N)
        f = project_initial(case, mesh, 2)
        r = rkdg_residual(f, case.model, SolverConfig.for_case(case, 2))
        x, w = np.polynomial.legendre.leggauss(8)
        pts = mesh.centers[:, None] + 0.5 * mesh.dx * x[None, :]
        H = case.model.H(np.cos(pts), 0.0, pts, 0.0)
        diffs.append(np.abs(r[:, 0] + 0.5 * H @ w).max())
    assert np.log2(diffs[0] / diffs[1]) >= 2.7


@pytest.mark.parametrize("k", [1, 2, 3])
def test_constant_data_preserved(k):
    case = catalog("burgers-2d")
    c = ProblemCase("c", case.model, case.bounds, lambda x, y: -0.3 + 0.0 * x)
    f = project_initial(c, make_mesh(c, 8), k)
    g = rkdg_step(f, case.model, SolverConfig(k=k, cfl=0.1, t_final=1.0), 0.01)
    # only the mean moves, by -dt H(0, 0)
    np.testing.assert_allclose(g.coeffs[..., 1:], 0.0, rtol=0, atol=1e-14)
    np.testing.assert_allclose(g.means, -0.3 - 0.01 * case.model.H(0.0, 0.0, 0.0, 0.0), rtol=0, atol=1e-14)
    assert g.t == pytest.approx(0.01)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_one_step_agrees_with_ader_on_cell_means(k):
    # dt tied to dx: the schemes sample H differently in space, which shows in higher modes
    case = catalog("burgers-1d")
    diffs = []
    for N in (40, 80, 160):
        mesh = make_mesh(case, N)
        f = project_initial(case, mesh, k)
        cfg = SolverConfig.for_case(case, k)
        dt = 0.1 * mesh.dx
        diffs.append(np.abs(rkdg_step(f, case.model, cfg, dt).means - step(f, case.model, cfg, dt).means).max())
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    assert np.all(orders >= min(4, k + 2) - 0.3)


def test_sinx_order_k2():
    case = catalog("linear-sinx-1d")
    exact = reference_oracle(case, 1.0)
    errs = [error_norms(run_case(case, N, SolverConfig.for_case(case, 2), "rkdg").field, exact).l2 for N in (40, 80)]
    assert np.log2(errs[0] / errs[1]) == pytest.approx(3.0, abs=0.3)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_converges_to_ader(k):
    case = catalog("linear-sinx-1d")
    exact = reference_oracle(case, 1.0)
    cfg = SolverConfig.for_case(case, k)
    for N in (20, 40, 80):
        a = run_case(case, N, cfg, "ader").field
        r = run_case(case, N, cfg, "rkdg").field
        ea, er = error_norms(a, exact).l2, error_norms(r, exact).l2
        gap = error_norms(a, lambda x: _eval_at(r, x)).l2
        assert gap <= 10 * min(ea, er)


def _eval_at(fld, x):
    """Value of a 1D field at physical points ``x`` laid out cell by cell."""
    mesh = fld.mesh
    xi = (x - mesh.centers[:, None]) / mesh.dx
    return np.stack([fld.evaluate(xi[i])[i] for i in range(mesh.shape[0])])


def test_run_rejects_wrong_dim_and_reports_blow_up():
    with pytest.raises(ValueError):
        run_rkdg(catalog("burgers-2d"), Mesh1D(-1.0, 1.0, 8), SolverConfig(k=1, cfl=0.1, t_final=0.1))
    model = HamiltonianModel("log", H=lambda p, q, x, y: np.log(p + 1.0), H1=lambda p, q, x, y: 1.0 / (p + 1.0))
    case = ProblemCase("bad", model, (0.0, 1.0), lambda x: np.where(np.asarray(x) > 0.5, -3.0 * np.asarray(x), 0.0))
    f = project_initial(case, Mesh1D(0.0, 1.0, 8), 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        with pytest.raises(StepError) as err:
            rkdg_step(f, model, SolverConfig(k=1, cfl=0.1, t_final=1.0), 0.01)
    assert err.value.cell is not None
