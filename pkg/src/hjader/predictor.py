"""Local continuous spacetime Galerkin predictor.

``w`` has shape ``(ncells, Ls)`` and the returned spacetime coefficients
have shape ``(ncells, L)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from hjader.basis import PredictorTables, default_tables
from hjader.hamiltonian import HamiltonianModel

__all__ = ["PredictorError", "PredictorPlan", "plan_for", "predict", "predict_with_h", "predictor_residual"]


class PredictorError(FloatingPointError):
    def __init__(self, cell: int, message: str = "non-finite Hamiltonian value in predictor"):
        super().__init__(f"{message} (cell {cell})")
        self.cell = cell


@dataclass(frozen=True)
class PredictorPlan:
    """Table products reused by every call for a given set of tables.

    Nodal arrays are kept node-major, ``(nnodes, ncells)``, so that blocks of
    nodes are contiguous.  Nodes with ``tau = 0`` only see the spatial modes,
    so their slopes and Hamiltonian values are computed once per step.
    """

    tables: PredictorTables

    @cached_property
    def split(self):
        t = self.tables
        Ls = t.spec.Ls
        tau = t.nodal_points[:, -1]
        i0 = np.flatnonzero(tau == 0.0)
        i1 = np.flatnonzero(tau != 0.0)
        # q1 = -(Mhat0 h0 + Mhat h1) = -B hbar with h = N2M hbar
        B = np.hstack([t.Mhat0, t.Mhat]) @ t.N2M
        derivs = [t.Dxi] + ([t.Deta] if t.Deta is not None else [])
        # slopes from spatial modes, stacked as [u0, v0, us, vs]
        W = np.vstack([D[i0, :Ls] for D in derivs] + [D[i1, :Ls] for D in derivs])
        Wt = np.vstack([D[i1, Ls:] for D in derivs])
        return {
            "i0": i0,
            "i1": i1,
            "n0": len(i0),
            "n1": len(i1),
            "B0": np.ascontiguousarray(B[:, i0]),
            "B1": np.ascontiguousarray(B[:, i1]),
            "N0": np.ascontiguousarray(t.N2M[:, i0]),
            "N1": np.ascontiguousarray(t.N2M[:, i1]),
            "W": W,
            "Wt": Wt,
        }

    def scaled(self, dx: float, dy: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """``W`` and ``Wt`` with reference derivatives converted to physical ones."""
        key = (dx, dy)
        cache = self.__dict__.setdefault("_scaled", {})
        if key not in cache:
            s = self.split
            n0, n1 = s["n0"], s["n1"]
            steps = (dx,) if self.tables.spec.dim == 1 else (dx, dy)
            cw = np.concatenate([np.full(n, 1.0 / h) for n in (n0, n1) for h in steps])
            ct = np.concatenate([np.full(n1, 1.0 / h) for h in steps])
            cache[key] = (
                np.ascontiguousarray(s["W"] * cw[:, None]),
                np.ascontiguousarray(s["Wt"] * ct[:, None]),
            )
        return cache[key]

    def slopes(self, w: np.ndarray, dx: float, dy: float = 1.0) -> np.ndarray:
        """Physical slopes from the spatial modes at every node, node-major.

        Rows are ``[u0, v0, us, vs]`` (no ``v`` blocks in 1D).  ``u0``/``v0``
        are complete at the ``tau = 0`` nodes; ``us``/``vs`` still lack the
        contribution of the time modes.
        """
        return self.scaled(dx, dy)[0] @ w.T


_PLANS: dict[tuple[int, int], PredictorPlan] = {}


def plan_for(dim: int, k: int) -> PredictorPlan:
    """Shared plan for the default tables of ``(dim, k)``."""
    key = (dim, k)
    if key not in _PLANS:
        _PLANS[key] = PredictorPlan(default_tables(dim, k))
    return _PLANS[key]


CELL_BLOCK = 2048


def _check_finite(h: np.ndarray, offset: int = 0) -> None:
    bad = ~np.isfinite(h)
    if bad.any():
        raise PredictorError(offset + int(np.argwhere(bad.any(axis=0))[0, 0]))


def predict_with_h(
    w: np.ndarray,
    tables: PredictorTables,
    model: HamiltonianModel,
    dt: float,
    dx: float,
    dy: float = 1.0,
    centers: tuple[np.ndarray, ...] | None = None,
    iterations: int | None = None,
    plan: PredictorPlan | None = None,
    slopes: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Spacetime modes ``q`` and the modal Hamiltonian ``h = dt H`` of the final ``q``.

    ``centers`` holds the cell centers (``(xc,)`` or ``(xc, yc)``), needed
    only for space-dependent Hamiltonians.  ``slopes`` may pass in
    ``plan.slopes(w, dx, dy)`` when the caller already has it.

    Cells are independent, so they are swept in blocks of ``CELL_BLOCK``;
    this keeps the nodal work arrays small enough to stay in cache.
    """
    spec = tables.spec
    dim, Ls, L = spec.dim, spec.Ls, spec.L
    plan = plan if plan is not None else PredictorPlan(tables)
    s = plan.split
    niter = spec.k + 1 if iterations is None else iterations

    w = np.asarray(w, dtype=float)
    ncells = w.shape[0]

    xn = yn = None
    if model.space_dependent:
        if centers is None:
            raise ValueError("space-dependent Hamiltonian needs cell centers")
        nodes = tables.nodal_points
        xn = nodes[:, 0, None] * dx + centers[0][None, :]
        if dim == 2:
            yn = nodes[:, 1, None] * dy + centers[1][None, :]

    q = np.empty((ncells, L))
    q[:, :Ls] = w
    hhat = np.empty((ncells, L))
    for a in range(0, ncells, CELL_BLOCK):
        b = min(a + CELL_BLOCK, ncells)
        sl = plan.slopes(w[a:b], dx, dy) if slopes is None else slopes[:, a:b]
        pos = None
        if xn is not None:
            pos = (xn[:, a:b], yn[:, a:b] if yn is not None else None)
        q1, hb = _predict_block(sl, pos, plan, model, dt, dx, dy, niter, a)
        q[a:b, Ls:] = q1.T
        hhat[a:b] = hb.T
    return q, hhat


def _predict_block(sl, pos, plan: PredictorPlan, model, dt, dx, dy, niter, offset):
    s = plan.split
    dim = plan.tables.spec.dim
    n0, n1 = s["n0"], s["n1"]
    ncells = sl.shape[1]

    if pos is not None:
        xn, yn = pos
        x0, x1 = xn[s["i0"]], xn[s["i1"]]
        y0, y1 = (yn[s["i0"]], yn[s["i1"]]) if dim == 2 else (0.0, 0.0)
    else:
        x0 = x1 = y0 = y1 = 0.0

    if dim == 1:
        u0, v0, us, vs = sl[:n0], 0.0, sl[n0:], 0.0
    else:
        u0, v0 = sl[:n0], sl[n0 : 2 * n0]
        us, vs = sl[2 * n0 : 2 * n0 + n1], sl[2 * n0 + n1 :]
    Wt = plan.scaled(dx, dy)[1]
    B1 = dt * s["B1"]

    H0 = model.H(u0, v0, x0, y0)
    _check_finite(H0, offset)
    c0 = (dt * s["B0"]) @ H0

    def nodal_H(q1):
        if q1 is None:  # zero time modes: slopes are the spatial ones
            u1, v1 = us, vs
        else:
            d = Wt @ q1
            u1 = us + d[:n1]
            v1 = vs + d[n1:] if dim == 2 else 0.0
        H1 = model.H(u1, v1, x1, y1)
        _check_finite(H1, offset)
        return H1

    q1 = None
    for _ in range(niter):
        q1 = c0 + B1 @ nodal_H(q1)
        np.negative(q1, out=q1)
    if q1 is None:
        q1 = np.zeros((B1.shape[0], ncells))

    hhat = (dt * s["N0"]) @ H0 + (dt * s["N1"]) @ nodal_H(q1)
    return q1, hhat


def predict(w, tables, model, dt, dx, dy=1.0, centers=None, iterations=None, plan=None) -> np.ndarray:
    return predict_with_h(w, tables, model, dt, dx, dy, centers, iterations, plan)[0]


def predictor_residual(q: np.ndarray, h: np.ndarray, tables: PredictorTables) -> float:
    """Max-norm of ``q1 + Mhat h1 + Mhat0 h0``; zero at a fixed point."""
    Ls = tables.spec.Ls
    q = np.atleast_2d(q)
    h = np.atleast_2d(h)
    r = q[:, Ls:] + h[:, Ls:] @ tables.Mhat.T + h[:, :Ls] @ tables.Mhat0.T
    return float(np.max(np.abs(r), initial=0.0))
