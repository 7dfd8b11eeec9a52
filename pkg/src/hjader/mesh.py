"""Structured meshes, modal fields and the pieces both solvers share."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from hjader.basis import (
    build_basis,
    evaluate_modes,
    gauss_rule,
    spatial_mass_diagonal,
)
from hjader.flux import axis_slice
from hjader.hamiltonian import HamiltonianModel, ProblemCase
from hjader.predictor import plan_for

__all__ = [
    "Mesh1D",
    "Mesh2D",
    "ModalField",
    "SolverConfig",
    "StepError",
    "compute_dt",
    "minmod",
    "pad",
    "project_initial",
    "shift_matrix",
    "apply_limiter",
]


class StepError(FloatingPointError):
    def __init__(self, message: str, cell=None, t: float | None = None):
        super().__init__(f"{message} (cell {cell}, t={t})")
        self.cell = cell
        self.t = t


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    N: int

    def __post_init__(self):
        if self.N < 4:
            raise ValueError(f"need at least 4 cells, got {self.N}")
        if not self.b > self.a:
            raise ValueError("empty domain")

    dim = 1

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def centers(self) -> np.ndarray:
        return self.a + (np.arange(self.N) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.a + np.arange(self.N + 1) * self.dx

    @property
    def shape(self) -> tuple[int]:
        return (self.N,)

    @property
    def cell_volume(self) -> float:
        return self.dx

    @property
    def hmin(self) -> float:
        return self.dx


@dataclass(frozen=True)
class Mesh2D:
    a: float
    b: float
    c: float
    d: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if self.Nx < 4 or self.Ny < 4:
            raise ValueError(f"need at least 4 cells per direction, got {self.Nx}x{self.Ny}")
        if not (self.b > self.a and self.d > self.c):
            raise ValueError("empty domain")

    dim = 2

    @classmethod
    def square(cls, bounds, N: int) -> "Mesh2D":
        return cls(*bounds, N, N)

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.Nx

    @property
    def dy(self) -> float:
        return (self.d - self.c) / self.Ny

    @property
    def xc(self) -> np.ndarray:
        return self.a + (np.arange(self.Nx) + 0.5) * self.dx

    @property
    def yc(self) -> np.ndarray:
        return self.c + (np.arange(self.Ny) + 0.5) * self.dy

    @property
    def xf(self) -> np.ndarray:
        return self.a + np.arange(self.Nx + 1) * self.dx

    @property
    def yf(self) -> np.ndarray:
        return self.c + np.arange(self.Ny + 1) * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    @property
    def hmin(self) -> float:
        return min(self.dx, self.dy)


@dataclass
class ModalField:
    """Per-cell spatial modal coefficients, shape ``mesh.shape + (Ls,)``."""

    coeffs: np.ndarray
    k: int
    mesh: Mesh1D | Mesh2D
    t: float = 0.0

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def means(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def copy(self) -> "ModalField":
        return replace(self, coeffs=self.coeffs.copy())

    def evaluate(self, xi, eta=None) -> np.ndarray:
        """Values at reference points of every cell, shape ``mesh.shape + (npts,)``."""
        spec = build_basis(self.dim, self.k)
        cols = [np.atleast_1d(xi)] + ([np.atleast_1d(eta)] if self.dim == 2 else [])
        pts = np.stack(cols + [np.zeros_like(cols[0])], axis=1)
        E = evaluate_modes(spec, pts)[:, : spec.Ls]
        return self.coeffs @ E.T


@dataclass(frozen=True)
class SolverConfig:
    k: int
    cfl: float
    t_final: float
    C: float = 0.25
    limiter: bool = False
    boundary: str = "periodic"

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ValueError(f"degree must be 1, 2 or 3, got {self.k}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"CFL must lie in (0, 1], got {self.cfl}")
        if self.C < 0.0:
            raise ValueError("penalty constant must be non-negative")
        if self.boundary not in ("periodic", "extrapolation"):
            raise ValueError(f"unknown boundary kind {self.boundary!r}")
        if self.t_final < 0.0:
            raise ValueError("final time must be non-negative")

    @classmethod
    def for_case(cls, case: ProblemCase, k: int, **overrides) -> "SolverConfig":
        kw = dict(
            k=k,
            cfl=case.cfl.get(k, 0.05),
            t_final=case.t_final,
            limiter=case.limiter,
            boundary=case.boundary,
        )
        kw.update({key: v for key, v in overrides.items() if v is not None})
        return cls(**kw)


# {{{ projection


def project_initial(case: ProblemCase, mesh, k: int) -> ModalField:
    """Cell-wise L2 projection with ``k + 2`` Gauss points per direction."""
    spec = build_basis(mesh.dim, k)
    rule = gauss_rule(k + 2, mesh.dim)
    phi = evaluate_modes(spec, np.column_stack([rule.points, np.zeros(len(rule.weights))]))[:, : spec.Ls]
    proj = (rule.weights[:, None] * phi) / spatial_mass_diagonal(spec)[None, :]

    if mesh.dim == 1:
        x = mesh.centers[:, None] + mesh.dx * rule.points[None, :, 0]
        vals = case.initial_condition(x)
    else:
        x = mesh.xc[:, None, None] + mesh.dx * rule.points[None, None, :, 0]
        y = mesh.yc[None, :, None] + mesh.dy * rule.points[None, None, :, 1]
        vals = case.initial_condition(x, y)
    vals = np.broadcast_to(vals, x.shape if mesh.dim == 1 else np.broadcast_shapes(x.shape, y.shape))
    # project the offset from one sample per cell, so constants come out exact
    ref = vals[..., :1]
    coeffs = (vals - ref) @ proj
    coeffs[..., 0] += ref[..., 0]
    return ModalField(coeffs, k, mesh, 0.0)


# }}}


# {{{ ghost cells


@lru_cache(maxsize=None)
def shift_matrix(dim: int, k: int, direction: int, offset: int) -> np.ndarray:
    """Coefficients of ``p(xi + offset e_direction)`` from those of ``p``.

    Acts on spacetime coefficients (``S @ q``); its leading ``Ls x Ls``
    block acts on spatial coefficients.
    """
    spec = build_basis(dim, k)
    rule = gauss_rule(k + 2, dim, with_time=True)
    shifted = rule.points.copy()
    shifted[:, direction] += offset
    A = evaluate_modes(spec, rule.points)
    B = evaluate_modes(spec, shifted)
    S = np.linalg.lstsq(A, B, rcond=None)[0]
    S[np.abs(S) < 1.0e-14] = 0.0
    S.setflags(write=False)
    return S


def pad(a: np.ndarray, axis: int, boundary: str, k: int, dim: int) -> np.ndarray:
    """Add one ghost layer on each side of ``axis``.

    ``a`` carries modal coefficients in its last axis (spatial or
    spacetime).  Extrapolation continues the boundary cell's polynomial into
    the ghost, so a globally polynomial field has no jump at the boundary.
    """
    n = a.shape[axis]
    first = axis_slice(a, axis, 0, 1)
    last = axis_slice(a, axis, n - 1, n)
    if boundary == "periodic":
        lo, hi = last, first
    else:
        nm = a.shape[-1]
        Sp = shift_matrix(dim, k, axis, 1)[:nm, :nm]
        Sm = shift_matrix(dim, k, axis, -1)[:nm, :nm]
        lo, hi = first @ Sm.T, last @ Sp.T
    return np.concatenate([lo, a, hi], axis=axis)


# }}}


# {{{ time step


def compute_dt(
    field: ModalField,
    model: HamiltonianModel,
    config: SolverConfig,
    slopes: np.ndarray | None = None,
) -> float:
    """``CFL * h / alpha``, clipped so the last step lands on ``t_final``.

    ``alpha`` is the largest ``|H1|`` (and ``|H2|``) over the slopes sampled
    at the predictor nodes with ``tau = 0`` in every cell.  ``slopes`` may
    pass in the node-major slopes of :meth:`PredictorPlan.slopes`.
    """
    mesh = field.mesh
    plan = plan_for(mesh.dim, field.k)
    n0 = plan.split["n0"]
    steps = (mesh.dx,) if mesh.dim == 1 else (mesh.dx, mesh.dy)
    if slopes is None:
        slopes = plan.slopes(field.coeffs.reshape(-1, field.coeffs.shape[-1]), *steps)
    u = slopes[:n0]
    v = slopes[n0 : 2 * n0] if mesh.dim == 2 else 0.0
    x = y = 0.0
    if model.space_dependent:
        nodes = plan.tables.nodal_points[plan.split["i0"]]
        if mesh.dim == 1:
            x = nodes[:, 0, None] * mesh.dx + mesh.centers[None, :]
        else:
            X, Y = np.meshgrid(mesh.xc, mesh.yc, indexing="ij")
            x = nodes[:, 0, None] * mesh.dx + X.ravel()[None, :]
            y = nodes[:, 1, None] * mesh.dy + Y.ravel()[None, :]

    alpha = float(np.max(np.abs(model.H1(u, v, x, y))))
    if mesh.dim == 2:
        alpha = max(alpha, float(np.max(np.abs(model.H2(u, v, x, y)))))
    if not np.isfinite(alpha):
        raise StepError("non-finite wave speed", t=field.t)

    h = mesh.hmin
    dt = config.cfl * h / alpha if alpha > 0.0 else config.cfl * h
    remaining = config.t_final - field.t
    if dt >= remaining * (1.0 - 1.0e-12):
        dt = remaining
    return dt


# }}}


# {{{ limiter


def minmod(a, b, c):
    s = np.sign(a)
    same = (s == np.sign(b)) & (s == np.sign(c))
    return np.where(same, s * np.minimum(np.abs(a), np.minimum(np.abs(b), np.abs(c))), 0.0)


def apply_limiter(field: ModalField, boundary: str) -> ModalField:
    """Minmod limiting of the first moments against differences of cell means.

    Where a first moment changes, every moment above the linear ones is
    zeroed in that cell.
    """
    spec = build_basis(field.dim, field.k)
    w = field.coeffs.copy()
    changed = np.zeros(field.mesh.shape, dtype=bool)
    for d in range(field.dim):
        m = d + 1  # modes 1 (xi) and 2 (eta) are the first moments
        # ghost means need the full ghost polynomial, not just the boundary mean
        means = pad(w, d, boundary, field.k, field.dim)[..., 0]
        lo = axis_slice(means, d, 0, -2)
        mid = axis_slice(means, d, 1, -1)
        hi = axis_slice(means, d, 2, None)
        lim = minmod(w[..., m], hi - mid, mid - lo)
        hit = np.abs(lim - w[..., m]) > 1.0e-12 * (1.0 + np.abs(w[..., m]))
        w[..., m] = np.where(hit, lim, w[..., m])
        changed |= hit
    if spec.Ls > field.dim + 1:
        w[..., field.dim + 1 :][changed] = 0.0
    return replace(field, coeffs=w)


# }}}
