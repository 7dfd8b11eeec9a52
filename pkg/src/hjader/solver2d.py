"""ADER-DG update on a uniform rectangular 2D mesh.

Faces normal to ``x`` and to ``y`` are swept separately.  At each face the
tangential slope entering the Roe speed is the average of the two traces at
the face barycenter.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from hjader.basis import PredictorTables, spatial_mass_diagonal
from hjader.flux import face_operators, face_terms, volume_integral
from hjader.hamiltonian import HamiltonianModel, ProblemCase
from hjader.mesh import Mesh2D, ModalField, SolverConfig, StepError, apply_limiter, pad, project_initial
from hjader.predictor import PredictorError, PredictorPlan, plan_for, predict_with_h
from hjader.solver1d import RunResult, _AderStepper, march

__all__ = ["Mesh2D", "run2d", "step2d"]


def _face_pass(q, model, config, dt, mesh: Mesh2D, direction: int):
    ops = face_operators(2, config.k, direction)
    qp = pad(q, direction, config.boundary, config.k, 2)
    hn, ht = (mesh.dx, mesh.dy) if direction == 0 else (mesh.dy, mesh.dx)
    if model.space_dependent:
        if direction == 0:
            x, y = mesh.xf[:, None], mesh.yc[None, :]
        else:
            x, y = mesh.xc[:, None], mesh.yf[None, :]
    else:
        x = y = 0.0
    return face_terms(qp, direction, ops, model, config.C, dt, hn, ht, x, y)


def step2d(
    fld: ModalField,
    model: HamiltonianModel,
    config: SolverConfig,
    dt: float,
    tables: PredictorTables | None = None,
    slopes: np.ndarray | None = None,
) -> ModalField:
    mesh = fld.mesh
    k = fld.k
    Nx, Ny = mesh.shape
    plan = plan_for(2, k) if tables is None else PredictorPlan(tables)
    spec = plan.tables.spec

    centers = None
    if model.space_dependent:
        X, Y = np.meshgrid(mesh.xc, mesh.yc, indexing="ij")
        centers = (X.ravel(), Y.ravel())
    try:
        q, h = predict_with_h(
            fld.coeffs.reshape(-1, spec.Ls), plan.tables, model, dt, mesh.dx, mesh.dy, centers, plan=plan, slopes=slopes
        )
    except PredictorError as exc:
        cell = np.unravel_index(exc.cell, mesh.shape)
        raise StepError("predictor produced non-finite values", cell=tuple(int(c) for c in cell), t=fld.t) from exc

    q = q.reshape(Nx, Ny, spec.L)
    rhs = volume_integral(h, mesh.dx, mesh.dy, dim=2, k=k).reshape(Nx, Ny, spec.Ls)
    rhs += _face_pass(q, model, config, dt, mesh, 0)
    rhs += _face_pass(q, model, config, dt, mesh, 1)

    w = fld.coeffs - rhs / (mesh.cell_volume * spatial_mass_diagonal(spec))
    if not np.all(np.isfinite(w)):
        bad = np.argwhere(~np.isfinite(w).all(axis=-1))[0]
        raise StepError("non-finite update", cell=tuple(int(c) for c in bad), t=fld.t + dt)
    out = replace(fld, coeffs=w, t=fld.t + dt)
    if config.limiter:
        out = apply_limiter(out, config.boundary)
    return out


def run2d(case: ProblemCase, mesh: Mesh2D, config: SolverConfig, output_times=()) -> RunResult:
    if case.dim != 2:
        raise ValueError(f"{case.name} is not a 2D case")
    fld = project_initial(case, mesh, config.k)
    stepper = _AderStepper(case.model, config, step2d)
    return march(fld, case.model, config, stepper.advance, output_times, stepper.choose_dt)
