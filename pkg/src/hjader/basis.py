"""Reference-element machinery for the spacetime predictor.

Spatial modes are products of scaled Legendre polynomials on ``[-1/2, 1/2]``,
temporal modes are monomials in ``tau`` on ``[0, 1]``.  A spacetime mode is a
pair ``(alpha, p)`` of a spatial multi-index and a temporal power; the first
``Ls`` modes have ``p = 0``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np

__all__ = [
    "BasisError",
    "BasisSpec",
    "PredictorTables",
    "QuadratureRule",
    "assemble_predictor_tables",
    "build_basis",
    "default_tables",
    "dump_tables_csv",
    "evaluate_modes",
    "gauss_rule",
    "legendre_deriv",
    "legendre_eval",
    "nodal_points",
    "spatial_mass_diagonal",
    "third_order_2d_tables",
]


class BasisError(ValueError):
    """Unsupported order, bad argument or singular assembly."""


# {{{ scaled Legendre family


def legendre_eval(n: int, xi):
    """Scaled Legendre polynomial ``P_n`` on ``[-1/2, 1/2]``."""
    if n == 0:
        return np.ones_like(np.asarray(xi, dtype=float))
    if n == 1:
        return np.asarray(xi, dtype=float)
    if n == 2:
        xi = np.asarray(xi, dtype=float)
        return xi * xi - 1.0 / 12.0
    if n == 3:
        xi = np.asarray(xi, dtype=float)
        return xi * (xi * xi - 3.0 / 20.0)
    raise BasisError(f"Legendre degree must be in 0..3, got {n}")


def legendre_deriv(n: int, xi):
    xi = np.asarray(xi, dtype=float)
    if n == 0:
        return np.zeros_like(xi)
    if n == 1:
        return np.ones_like(xi)
    if n == 2:
        return 2.0 * xi
    if n == 3:
        return 3.0 * xi * xi - 3.0 / 20.0
    raise BasisError(f"Legendre degree must be in 0..3, got {n}")


# }}}


# {{{ quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule on ``[-1/2, 1/2]^dim x [0, 1]``.

    ``points`` has one column per coordinate (spatial first, then time when
    ``with_time`` is set); ``weights`` sum to the reference volume, which is 1.
    """

    points: np.ndarray
    weights: np.ndarray
    npoints_1d: int
    dim: int
    with_time: bool

    @property
    def degree(self) -> int:
        return 2 * self.npoints_1d - 1


def _gauss_1d(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def gauss_rule(npoints: int, dim: int = 1, with_time: bool = False) -> QuadratureRule:
    intervals = [(-0.5, 0.5)] * dim + ([(0.0, 1.0)] if with_time else [])
    if not intervals:
        raise BasisError("quadrature needs at least one coordinate")
    rules = [_gauss_1d(npoints, a, b) for a, b in intervals]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return QuadratureRule(points, weights, npoints, dim, with_time)


# }}}


# {{{ mode enumeration


@dataclass(frozen=True)
class BasisSpec:
    dim: int
    k: int
    modes: tuple[tuple[tuple[int, ...], int], ...]
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def order(self) -> int:
        return self.k + 1

    @property
    def Ls(self) -> int:
        return comb(self.k + self.dim, self.dim)

    @property
    def L(self) -> int:
        return len(self.modes)

    @property
    def Ln(self) -> int:
        return self.nodes.shape[0]

    @property
    def spatial_modes(self) -> tuple[tuple[int, ...], ...]:
        return tuple(a for a, _ in self.modes[: self.Ls])


def _spatial_indices(dim: int, k: int) -> list[tuple[int, ...]]:
    if dim == 1:
        return [(a,) for a in range(k + 1)]
    # degree by degree: pure xi, pure eta, then mixed with decreasing xi power
    out = [(0, 0)]
    for d in range(1, k + 1):
        out += [(d, 0), (0, d)] + [(d - j, j) for j in range(1, d)]
    return out


_NODES: dict[tuple[int, int], list[tuple[float, ...]]] = {
    (1, 1): [(0.5, 0), (-0.5, 0), (0, 1)],
    (1, 2): [(0, 0), (0.5, 0), (-0.5, 0), (0.5, 0.5), (-0.5, 0.5), (0, 1)],
    (1, 3): [
        (0, 0), (0.5, 0), (-0.5, 0), (0.25, 0), (-0.25, 0),
        (0, 1 / 3), (0.5, 1 / 3), (-0.5, 1 / 3),
        (0.5, 2 / 3), (-0.5, 2 / 3), (0, 1),
    ],
    (2, 1): [(0.5, 0, 0), (-0.5, 0, 0), (0, 0.5, 0), (0, -0.5, 0), (0, 0, 1)],
    (2, 2): [
        (0.5, 0, 0), (-0.5, 0, 0), (0, 0.5, 0), (0, -0.5, 0),
        (0.5, 0.5, 0), (-0.5, 0.5, 0), (0.5, -0.5, 0), (-0.5, -0.5, 0),
        (0.5, 0, 0.5), (-0.5, 0, 0.5), (0, 0.5, 0.5), (0, -0.5, 0.5), (0, 0, 1),
    ],
    (2, 3): [
        (0, 0, 0), (0.5, 0, 0), (-0.5, 0, 0), (0, 0.5, 0), (0, -0.5, 0),
        (0.5, 0.5, 0), (-0.5, 0.5, 0), (0.5, -0.5, 0), (-0.5, -0.5, 0),
        (0.25, 0, 0), (-0.25, 0, 0), (0, 0.25, 0), (0, -0.25, 0),
        (0, 0, 1 / 3), (0.5, 0.5, 1 / 3), (-0.5, 0.5, 1 / 3),
        (0.5, -0.5, 1 / 3), (-0.5, -0.5, 1 / 3),
        (0.5, 0, 2 / 3), (-0.5, 0, 2 / 3), (0, 0.5, 2 / 3), (0, -0.5, 2 / 3),
        (0, 0, 1),
    ],
}


def nodal_points(dim: int, k: int) -> np.ndarray:
    """Predictor nodes as rows ``(xi[, eta], tau)``."""
    try:
        return np.array(_NODES[dim, k], dtype=float)
    except KeyError:
        raise BasisError(f"unsupported order: dim={dim}, k={k}") from None


@lru_cache(maxsize=None)
def build_basis(dim: int, k: int) -> BasisSpec:
    if (dim, k) not in _NODES:
        raise BasisError(f"unsupported order: dim={dim}, k={k}")

    spatial = _spatial_indices(dim, k)
    modes = [(a, 0) for a in spatial]
    for a in spatial:
        for p in range(1, k - sum(a) + 1):
            modes.append((a, p))

    spec = BasisSpec(dim, k, tuple(modes), nodal_points(dim, k))
    assert spec.Ls == len(spatial)
    assert spec.L == comb(k + dim + 1, dim + 1)
    return spec


def evaluate_modes(spec: BasisSpec, points: np.ndarray, deriv: int | None = None) -> np.ndarray:
    """Evaluate every mode at ``points`` (rows ``(xi[, eta], tau)``).

    With ``deriv = d`` the derivative with respect to spatial coordinate ``d``
    is returned instead; ``deriv = spec.dim`` differentiates in ``tau``.
    Result has shape ``(npoints, L)``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tau = points[:, spec.dim]
    out = np.empty((points.shape[0], spec.L))
    for l, (alpha, p) in enumerate(spec.modes):
        if deriv == spec.dim:
            v = p * tau ** (p - 1) if p > 0 else np.zeros_like(tau)
        else:
            v = tau**p
        for d in range(spec.dim):
            if deriv == d:
                v = v * legendre_deriv(alpha[d], points[:, d])
            else:
                v = v * legendre_eval(alpha[d], points[:, d])
        out[:, l] = v
    return out


def spatial_mass_diagonal(spec: BasisSpec) -> np.ndarray:
    """``<phi_m, phi_m>`` over the unit reference cell for the spatial modes."""
    norms = {0: 1.0, 1: 1.0 / 12.0, 2: 1.0 / 180.0, 3: 1.0 / 2800.0}
    return np.array([np.prod([norms[a] for a in alpha]) for alpha in spec.spatial_modes])


# }}}


# {{{ predictor tables


@dataclass(frozen=True)
class PredictorTables:
    spec: BasisSpec
    Mhat: np.ndarray
    Mhat0: np.ndarray
    nodal_points: np.ndarray
    N2M: np.ndarray
    Dxi: np.ndarray
    Deta: np.ndarray | None
    source: str = "assembled"

    def __post_init__(self) -> None:
        for name in ("Mhat", "Mhat0", "nodal_points", "N2M", "Dxi", "Deta"):
            a = getattr(self, name)
            if a is not None:
                a.setflags(write=False)

    @property
    def E(self) -> np.ndarray:
        """Node evaluation matrix, ``(Ln, L)``."""
        return evaluate_modes(self.spec, self.nodal_points)


def assemble_predictor_tables(spec: BasisSpec, rule: QuadratureRule | None = None) -> PredictorTables:
    if rule is None:
        rule = gauss_rule(spec.k + 2, spec.dim, with_time=True)
    if not rule.with_time or rule.dim != spec.dim:
        raise BasisError("assembly needs a spacetime rule of matching dimension")
    if rule.degree < 2 * spec.k + 1:
        raise BasisError(f"rule of degree {rule.degree} is too weak for k={spec.k}")

    theta = evaluate_modes(spec, rule.points)
    dtheta = evaluate_modes(spec, rule.points, deriv=spec.dim)
    W = rule.weights[:, None]
    M = theta.T @ (W * theta)
    Ktau = theta.T @ (W * dtheta)

    Ls = spec.Ls
    K11 = Ktau[Ls:, Ls:]
    if np.linalg.cond(K11) > 1.0e12:
        raise BasisError("singular time-stiffness block; check mode ordering")
    Mhat = np.linalg.solve(K11, M[Ls:, Ls:])
    Mhat0 = np.linalg.solve(K11, M[Ls:, :Ls])

    nodes = spec.nodes
    E = evaluate_modes(spec, nodes)
    N2M = np.linalg.pinv(E)
    Dxi = evaluate_modes(spec, nodes, deriv=0)
    Deta = evaluate_modes(spec, nodes, deriv=1) if spec.dim == 2 else None
    return PredictorTables(spec, Mhat, Mhat0, nodes.copy(), N2M, Dxi, Deta)


# }}}


# {{{ hand-coded third-order 2D tables


def _iterate_2d3(h: np.ndarray) -> np.ndarray:
    # time modes (tau, tau^2, xi tau, eta tau)
    return np.array([
        -h[0] + 0.3 * h[7],
        -0.5 * h[6] - 0.6 * h[7],
        -h[1] - 2.0 / 3.0 * h[8],
        -h[2] - 2.0 / 3.0 * h[9],
    ])


def _xi_deriv_2d3(q: np.ndarray) -> np.ndarray:
    u = np.empty(13)
    u[0] = q[1] + q[3]
    u[1] = q[1] - q[3]
    u[2] = q[1] + 0.5 * q[5]
    u[3] = q[1] - 0.5 * q[5]
    u[4] = u[0] + 0.5 * q[5]
    u[5] = u[1] + 0.5 * q[5]
    u[6] = u[0] - 0.5 * q[5]
    u[7] = u[1] - 0.5 * q[5]
    u[8] = u[0] + 0.5 * q[8]
    u[9] = u[1] + 0.5 * q[8]
    u[10] = u[2] + 0.5 * q[8]
    u[11] = u[3] + 0.5 * q[8]
    u[12] = q[1] + q[8]
    return u


def _eta_deriv_2d3(q: np.ndarray) -> np.ndarray:
    v = np.empty(13)
    v[0] = q[2] + 0.5 * q[5]
    v[1] = q[2] - 0.5 * q[5]
    v[2] = q[2] + q[4]
    v[3] = q[2] - q[4]
    v[4] = v[0] + q[4]
    v[5] = v[1] + q[4]
    v[6] = v[0] - q[4]
    v[7] = v[1] - q[4]
    v[8] = v[0] + 0.5 * q[9]
    v[9] = v[1] + 0.5 * q[9]
    v[10] = v[2] + 0.5 * q[9]
    v[11] = v[3] + 0.5 * q[9]
    v[12] = q[2] + q[9]
    return v


def _nodal_to_modal_2d3(hb: np.ndarray) -> np.ndarray:
    h = np.empty(10)
    h[1] = hb[0] - hb[1]
    h[2] = hb[2] - hb[3]
    h[5] = 2.0 * (hb[4] - hb[5] - h[1])
    h[3] = 4.0 * (hb[4] - hb[2]) - 2.0 * h[1] - h[5]
    h[4] = 4.0 * (hb[4] - hb[0]) - 2.0 * h[2] - h[5]
    h[0] = (hb[:8].sum() - 5.0 / 6.0 * (h[3] + h[4])) / 8.0
    h[8] = 2.0 * (hb[8] - hb[9] - hb[0] + hb[1])
    h[9] = 2.0 * (hb[10] - hb[11] - hb[2] + hb[3])
    r1 = hb[8] + hb[9] - hb[0] - hb[1]
    r2 = hb[12] - h[0] + (h[3] + h[4]) / 12.0
    h[7] = 2.0 * (r2 - r1)
    h[6] = r2 - h[7]
    return h


def _linear_map(f, n: int) -> np.ndarray:
    return np.stack([f(e) for e in np.eye(n)], axis=1)


@lru_cache(maxsize=None)
def third_order_2d_tables() -> PredictorTables:
    spec = build_basis(2, 2)
    it = _linear_map(_iterate_2d3, 10)
    # q1 = -Mhat h1 - Mhat0 h0
    Mhat = -it[:, 6:]
    Mhat0 = -it[:, :6]
    return PredictorTables(
        spec,
        Mhat,
        Mhat0,
        spec.nodes.copy(),
        _linear_map(_nodal_to_modal_2d3, 13),
        _linear_map(_xi_deriv_2d3, 10),
        _linear_map(_eta_deriv_2d3, 10),
        source="explicit",
    )


@lru_cache(maxsize=None)
def default_tables(dim: int, k: int) -> PredictorTables:
    """Tables used by the solvers: explicit formulas for 2D k=2, assembly otherwise."""
    if (dim, k) == (2, 2):
        return third_order_2d_tables()
    return assemble_predictor_tables(build_basis(dim, k))


# }}}


def dump_tables_csv(tables: PredictorTables, path) -> Path | None:
    """Write every table row-major with 17 significant digits to a path or open text stream."""
    if hasattr(path, "write"):
        _write_tables(tables, path)
        return None
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            _write_tables(tables, fh)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _write_tables(tables: PredictorTables, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["table", "row", "col", "value"])
    for name in ("Mhat", "Mhat0", "nodal_points", "N2M", "Dxi", "Deta"):
        a = getattr(tables, name)
        if a is None:
            continue
        for i, j in np.ndindex(a.shape):
            w.writerow([name, i, j, f"{a[i, j]:.17g}"])
