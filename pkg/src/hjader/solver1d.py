"""One-step ADER-DG update on a uniform 1D mesh."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from hjader.basis import PredictorTables, spatial_mass_diagonal
from hjader.flux import face_operators, face_terms, volume_integral
from hjader.hamiltonian import HamiltonianModel, ProblemCase
from hjader.mesh import (
    Mesh1D,
    ModalField,
    SolverConfig,
    StepError,
    apply_limiter,
    compute_dt,
    pad,
    project_initial,
)
from hjader.predictor import PredictorError, PredictorPlan, plan_for, predict_with_h

__all__ = [
    "Mesh1D",
    "ModalField",
    "RunResult",
    "SolverConfig",
    "StepError",
    "compute_dt",
    "march",
    "project_initial",
    "run",
    "step",
]


@dataclass
class RunResult:
    field: ModalField
    steps: int
    wall_time: float
    snapshots: dict[float, ModalField] = field(default_factory=dict)


class _AderStepper:
    """Pairs the time-step choice with the step so both use one set of nodal slopes."""

    def __init__(self, model: HamiltonianModel, config: SolverConfig, step_fn):
        self.model = model
        self.config = config
        self.step_fn = step_fn
        self._key = None
        self._slopes = None

    def choose_dt(self, fld: ModalField, config: SolverConfig) -> float:
        mesh = fld.mesh
        plan = plan_for(mesh.dim, fld.k)
        steps = (mesh.dx,) if mesh.dim == 1 else (mesh.dx, mesh.dy)
        self._slopes = plan.slopes(fld.coeffs.reshape(-1, fld.coeffs.shape[-1]), *steps)
        self._key = fld.coeffs
        return compute_dt(fld, self.model, config, slopes=self._slopes)

    def advance(self, fld: ModalField, dt: float) -> ModalField:
        slopes = self._slopes if self._key is fld.coeffs else None
        return self.step_fn(fld, self.model, self.config, dt, slopes=slopes)


def step(
    fld: ModalField,
    model: HamiltonianModel,
    config: SolverConfig,
    dt: float,
    tables: PredictorTables | None = None,
    slopes: np.ndarray | None = None,
) -> ModalField:
    mesh = fld.mesh
    k = fld.k
    dx = mesh.dx
    plan = plan_for(1, k) if tables is None else PredictorPlan(tables)
    tables = plan.tables
    try:
        q, h = predict_with_h(
            fld.coeffs, tables, model, dt, dx, centers=(mesh.centers,), plan=plan, slopes=slopes
        )
    except PredictorError as exc:
        raise StepError("predictor produced non-finite values", cell=exc.cell, t=fld.t) from exc

    rhs = volume_integral(h, dx, dim=1, k=k)

    qp = pad(q, 0, config.boundary, k, 1)
    xf = mesh.faces if model.space_dependent else 0.0
    rhs += face_terms(qp, 0, face_operators(1, k, 0), model, config.C, dt, dx, x=xf)

    mass = spatial_mass_diagonal(tables.spec)
    w = fld.coeffs - rhs / (dx * mass)
    if not np.all(np.isfinite(w)):
        bad = int(np.argwhere(~np.isfinite(w).all(axis=-1))[0, 0])
        raise StepError("non-finite update", cell=bad, t=fld.t + dt)
    out = replace(fld, coeffs=w, t=fld.t + dt)
    if config.limiter:
        out = apply_limiter(out, config.boundary)
    return out


def march(
    fld: ModalField,
    model: HamiltonianModel,
    config: SolverConfig,
    advance: Callable[[ModalField, float], ModalField],
    output_times=(),
    choose_dt: Callable[[ModalField, SolverConfig], float] | None = None,
) -> RunResult:
    """Advance ``fld`` to ``config.t_final``, stopping exactly on each output time."""
    stops = sorted({float(t) for t in output_times if fld.t < t < config.t_final} | {config.t_final})
    snapshots = {}
    for t_out in output_times:
        if np.isclose(t_out, fld.t):
            snapshots[float(t_out)] = fld.copy()
    nsteps = 0
    t0 = time.perf_counter()
    for t_stop in stops:
        sub = replace(config, t_final=t_stop)
        while fld.t < t_stop - 1.0e-14 * max(1.0, abs(t_stop)):
            dt = choose_dt(fld, sub) if choose_dt is not None else compute_dt(fld, model, sub)
            fld = advance(fld, dt)
            nsteps += 1
        fld = replace(fld, t=t_stop)
        if any(np.isclose(t_stop, t) for t in output_times):
            snapshots[t_stop] = fld.copy()
    return RunResult(fld, nsteps, time.perf_counter() - t0, snapshots)


def run(case: ProblemCase, mesh: Mesh1D, config: SolverConfig, output_times=()) -> RunResult:
    if case.dim != 1:
        raise ValueError(f"{case.name} is not a 1D case")
    fld = project_initial(case, mesh, config.k)
    stepper = _AderStepper(case.model, config, step)
    return march(fld, case.model, config, stepper.advance, output_times, stepper.choose_dt)
