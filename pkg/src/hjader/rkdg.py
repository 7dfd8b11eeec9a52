"""Runge-Kutta DG baseline with quadrature-based volume and face terms.

Uses the same Roe speed and entropy penalty as the ADER scheme, evaluated
pointwise at every face quadrature point instead of frozen per face.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from hjader.basis import BasisSpec, _gauss_1d, build_basis, evaluate_modes, gauss_rule, spatial_mass_diagonal
from hjader.flux import axis_slice, face_eval
from hjader.hamiltonian import HamiltonianModel, ProblemCase
from hjader.mesh import Mesh1D, Mesh2D, ModalField, SolverConfig, StepError, apply_limiter, pad, project_initial
from hjader.solver1d import RunResult, march

__all__ = ["RkdgWorkspace", "rkdg_residual", "rkdg_step", "run_rkdg", "workspace"]


def _spatial(spec: BasisSpec, pts, deriv=None):
    full = np.column_stack([pts, np.zeros(len(pts))])
    return np.ascontiguousarray(evaluate_modes(spec, full, deriv=deriv)[:, : spec.Ls])


@dataclass(frozen=True, eq=False)
class RkdgEdge:
    weights: np.ndarray
    tangential_points: np.ndarray
    # index 0: minus cell (face at +1/2), 1: plus cell (face at -1/2)
    val: tuple[np.ndarray, np.ndarray]
    dn: tuple[np.ndarray, np.ndarray]
    dt: tuple[np.ndarray, np.ndarray] | None


@dataclass(frozen=True, eq=False)
class RkdgWorkspace:
    """Basis values at the volume and edge quadrature points of one ``(dim, k)``."""

    spec: BasisSpec
    weights: np.ndarray
    points: np.ndarray
    phi: np.ndarray
    dphi: tuple[np.ndarray, ...]
    edges: tuple[RkdgEdge, ...]
    mass: np.ndarray


@lru_cache(maxsize=None)
def workspace(dim: int, k: int) -> RkdgWorkspace:
    spec = build_basis(dim, k)
    n = k + 1
    rule = gauss_rule(n, dim)
    phi = _spatial(spec, rule.points)
    dphi = tuple(_spatial(spec, rule.points, deriv=d) for d in range(dim))

    edges = []
    for d in range(dim):
        if dim == 1:
            sp, sw = np.zeros(1), np.ones(1)
        else:
            sp, sw = _gauss_1d(n, -0.5, 0.5)
        val, dn, dt = [], [], []
        for c in (0.5, -0.5):
            pts = np.zeros((len(sp), dim))
            pts[:, d] = c
            if dim == 2:
                pts[:, 1 - d] = sp
            val.append(_spatial(spec, pts))
            dn.append(_spatial(spec, pts, deriv=d))
            if dim == 2:
                dt.append(_spatial(spec, pts, deriv=1 - d))
        edges.append(RkdgEdge(sw, sp, tuple(val), tuple(dn), tuple(dt) if dim == 2 else None))
    return RkdgWorkspace(spec, rule.weights, rule.points, phi, dphi, tuple(edges), spatial_mass_diagonal(spec))


def _steps(mesh):
    return (mesh.dx,) if mesh.dim == 1 else (mesh.dx, mesh.dy)


def _volume(w, ws: RkdgWorkspace, model: HamiltonianModel, mesh):
    h = _steps(mesh)
    u = (w @ ws.dphi[0].T) / h[0]
    v = (w @ ws.dphi[1].T) / h[1] if mesh.dim == 2 else 0.0
    if model.space_dependent:
        if mesh.dim == 1:
            x = mesh.centers[:, None] + h[0] * ws.points[None, :, 0]
            y = 0.0
        else:
            x = mesh.xc[:, None, None] + h[0] * ws.points[None, None, :, 0]
            y = mesh.yc[None, :, None] + h[1] * ws.points[None, None, :, 1]
    else:
        x = y = 0.0
    H = model.H(u, v, x, y)
    return ((H * ws.weights) @ ws.phi) * mesh.cell_volume


def _edge(w, ws: RkdgWorkspace, model: HamiltonianModel, mesh, d: int, config: SolverConfig):
    e = ws.edges[d]
    wp = pad(w, d, config.boundary, config.k, mesh.dim)
    n = wp.shape[d]
    wL = axis_slice(wp, d, 0, n - 1)
    wR = axis_slice(wp, d, 1, n)
    h = _steps(mesh)
    hn = h[d]

    jump = wR @ e.val[1].T - wL @ e.val[0].T
    uL = (wL @ e.dn[0].T) / hn
    uR = (wR @ e.dn[1].T) / hn
    if mesh.dim == 1:
        tbar = 0.0
        face_len = 1.0
        x = mesh.faces[:, None] if model.space_dependent else 0.0
        y = 0.0
    else:
        ht = h[1 - d]
        tbar = 0.5 * ((wL @ e.dt[0].T) + (wR @ e.dt[1].T)) / ht
        face_len = ht
        if model.space_dependent:
            if d == 0:
                x = mesh.xf[:, None, None]
                y = mesh.yc[None, :, None] + ht * e.tangential_points[None, None, :]
            else:
                x = mesh.xc[:, None, None] + ht * e.tangential_points[None, None, :]
                y = mesh.yf[None, :, None]
        else:
            x = y = 0.0

    fe = face_eval(model, d, uL, uR, tbar, x, y)
    pen = config.C * fe.lambda3 * (uR - uL) * hn
    gL = (fe.lambda1 * jump - pen) * e.weights
    gR = (fe.lambda2 * jump - pen) * e.weights
    FL = (gL @ e.val[0]) * face_len
    FR = (gR @ e.val[1]) * face_len
    lo = axis_slice(FL, d, 1, n - 1)
    hi = axis_slice(FR, d, 0, n - 2)
    return lo + hi


def rkdg_residual(fld: ModalField, model: HamiltonianModel, config: SolverConfig) -> np.ndarray:
    """Time derivative of the modal coefficients."""
    mesh = fld.mesh
    ws = workspace(mesh.dim, fld.k)
    w = fld.coeffs
    r = _volume(w, ws, model, mesh)
    for d in range(mesh.dim):
        r = r + _edge(w, ws, model, mesh, d, config)
    return -r / (mesh.cell_volume * ws.mass)


def rkdg_step(fld: ModalField, model: HamiltonianModel, config: SolverConfig, dt: float) -> ModalField:
    """SSP-RK3 for ``k <= 2``; classical RK4 for ``k = 3``."""

    def L(w):
        return rkdg_residual(replace(fld, coeffs=w), model, config)

    def lim(w):
        if config.limiter:
            return apply_limiter(replace(fld, coeffs=w), config.boundary).coeffs
        return w

    w0 = fld.coeffs
    if fld.k <= 2:
        w1 = lim(w0 + dt * L(w0))
        w2 = lim(0.75 * w0 + 0.25 * (w1 + dt * L(w1)))
        w = lim(w0 / 3.0 + 2.0 / 3.0 * (w2 + dt * L(w2)))
    else:
        k1 = L(w0)
        k2 = L(lim(w0 + 0.5 * dt * k1))
        k3 = L(lim(w0 + 0.5 * dt * k2))
        k4 = L(lim(w0 + dt * k3))
        w = lim(w0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    if not np.all(np.isfinite(w)):
        bad = np.argwhere(~np.isfinite(w).all(axis=-1))[0]
        raise StepError("non-finite update", cell=tuple(int(c) for c in bad), t=fld.t + dt)
    return replace(fld, coeffs=w, t=fld.t + dt)


def run_rkdg(case: ProblemCase, mesh: Mesh1D | Mesh2D, config: SolverConfig, output_times=()) -> RunResult:
    if case.dim != mesh.dim:
        raise ValueError(f"{case.name} needs a {case.dim}D mesh")
    fld = project_initial(case, mesh, config.k)
    return march(fld, case.model, config, lambda f, dt: rkdg_step(f, case.model, config, dt), output_times)
