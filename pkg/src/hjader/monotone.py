"""First-order monotone Lax-Friedrichs scheme, used as a viscosity-solution reference.

Values live at cell centers.  The dissipation coefficient is a global bound
on ``|H1|`` (``|H2|``) over the box of slopes present at each step, which
keeps the scheme monotone under ``alpha dt / h <= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from hjader.hamiltonian import HamiltonianModel, ProblemCase

__all__ = ["MonotoneSolution", "lax_friedrichs"]


@dataclass(frozen=True)
class MonotoneSolution:
    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    t: float
    steps: int

    def __call__(self, x, y=None):
        """Piecewise-linear interpolation; points beyond the outer centers are extrapolated."""
        if len(self.axes) == 1:
            xs = self.axes[0]
            x = np.asarray(x, dtype=float)
            slope_lo = (self.values[1] - self.values[0]) / (xs[1] - xs[0])
            slope_hi = (self.values[-1] - self.values[-2]) / (xs[-1] - xs[-2])
            out = np.interp(x, xs, self.values)
            out = np.where(x < xs[0], self.values[0] + slope_lo * (x - xs[0]), out)
            return np.where(x > xs[-1], self.values[-1] + slope_hi * (x - xs[-1]), out)
        interp = RegularGridInterpolator(self.axes, self.values, bounds_error=False, fill_value=None)
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return interp(np.stack([x.ravel(), y.ravel()], axis=1)).reshape(x.shape)


def _pad(phi: np.ndarray, axis: int, boundary: str) -> np.ndarray:
    if boundary == "periodic":
        return np.concatenate([np.take(phi, [-1], axis), phi, np.take(phi, [0], axis)], axis=axis)
    first, second = np.take(phi, [0], axis), np.take(phi, [1], axis)
    last, prev = np.take(phi, [-1], axis), np.take(phi, [-2], axis)
    return np.concatenate([2 * first - second, phi, 2 * last - prev], axis=axis)


def _one_sided(phi, axis, h, boundary):
    p = np.diff(_pad(phi, axis, boundary), axis=axis) / h
    n = p.shape[axis]
    return np.take(p, np.arange(0, n - 1), axis), np.take(p, np.arange(1, n), axis)


def _speed_bound(dH, lo, hi, other_lo, other_hi, x, y, samples: int = 41) -> float:
    ps = np.linspace(lo, hi, samples)
    qs = np.linspace(other_lo, other_hi, samples)
    P, Q = np.meshgrid(ps, qs, indexing="ij")
    return float(np.max(np.abs(dH(P, Q, x, y))))


def lax_friedrichs(
    case: ProblemCase,
    N: int,
    t_final: float | None = None,
    cfl: float = 0.8,
) -> MonotoneSolution:
    """Run the monotone scheme on ``N`` (or ``N x N``) cell centers to ``t_final``."""
    model: HamiltonianModel = case.model
    t_final = case.t_final if t_final is None else t_final
    b = case.bounds
    dim = case.dim
    hs = [(b[2 * d + 1] - b[2 * d]) / N for d in range(dim)]
    axes = tuple(b[2 * d] + (np.arange(N) + 0.5) * hs[d] for d in range(dim))
    if dim == 1:
        X, Y = axes[0], 0.0
        phi = np.asarray(case.initial_condition(X), dtype=float).copy()
    else:
        X, Y = np.meshgrid(*axes, indexing="ij")
        phi = np.asarray(case.initial_condition(X, Y), dtype=float).copy()
    if not model.space_dependent:
        X, Y = 0.0, 0.0

    t, steps = 0.0, 0
    while t < t_final * (1.0 - 1.0e-14):
        pm, pp = _one_sided(phi, 0, hs[0], case.boundary)
        if dim == 1:
            qm = qp = np.zeros(1)
        else:
            qm, qp = _one_sided(phi, 1, hs[1], case.boundary)
        plo, phi_ = min(pm.min(), pp.min()), max(pm.max(), pp.max())
        qlo, qhi = min(qm.min(), qp.min()), max(qm.max(), qp.max())

        if model.space_dependent:
            # linear bound from the actual one-sided slopes at each point
            ax = max(float(np.max(np.abs(model.H1(s, r, X, Y)))) for s in (pm, pp) for r in (qm, qp))
            ay = max(float(np.max(np.abs(model.H2(s, r, X, Y)))) for s in (pm, pp) for r in (qm, qp)) if dim == 2 else 0.0
        else:
            ax = _speed_bound(model.H1, plo, phi_, qlo, qhi, 0.0, 0.0)
            ay = _speed_bound(model.H2, plo, phi_, qlo, qhi, 0.0, 0.0) if dim == 2 else 0.0

        rate = ax / hs[0] + (ay / hs[1] if dim == 2 else 0.0)
        dt = cfl / rate if rate > 0 else cfl * min(hs)
        dt = min(dt, t_final - t)

        if dim == 1:
            Hn = model.H(0.5 * (pm + pp), 0.0, X, Y) - 0.5 * ax * (pp - pm)
        else:
            Hn = (
                model.H(0.5 * (pm + pp), 0.5 * (qm + qp), X, Y)
                - 0.5 * ax * (pp - pm)
                - 0.5 * ay * (qp - qm)
            )
        phi = phi - dt * Hn
        t += dt
        steps += 1
        if not np.all(np.isfinite(phi)):
            raise FloatingPointError(f"monotone reference blew up at t={t}")
    return MonotoneSolution(axes, phi, t_final, steps)
