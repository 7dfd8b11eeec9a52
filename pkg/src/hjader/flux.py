"""Roe speeds, entropy penalty parameters, frozen face fluxes and volume terms.

Face operators are generated from the basis by quadrature over the face and
the time slab, so the same code serves every ``(dim, k)``.  A face of
direction ``d`` separates a *minus* cell (left/below) from a *plus* cell
(right/above); the minus cell sees the face at reference coordinate
``+1/2`` and the plus cell at ``-1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from hjader.basis import BasisSpec, _gauss_1d, build_basis, evaluate_modes, gauss_rule
from hjader.hamiltonian import HamiltonianModel

__all__ = [
    "PENALTY_C",
    "FaceEval",
    "FaceOperators",
    "barycenter_derivatives",
    "entropy_params_1d",
    "face_contributions",
    "face_eval",
    "face_operators",
    "face_terms",
    "roe_speed_1d",
    "roe_speed_2d",
    "volume_integral",
    "volume_matrix",
]

PENALTY_C = 0.25
FACE_BLOCK = 2048


def _equal_slopes(pL, pR):
    return np.abs(pR - pL) <= 1.0e-12 * (1.0 + np.abs(pL) + np.abs(pR))


def _model_args(direction: int, normal, tangential):
    # H is called as H(p, q, ...): the normal slope goes in slot `direction`
    return (normal, tangential) if direction == 0 else (tangential, normal)


def _roe(model: HamiltonianModel, direction: int, pL, pR, tbar, x, y):
    dH = model.H1 if direction == 0 else model.H2
    aL = _model_args(direction, pL, tbar)
    aR = _model_args(direction, pR, tbar)
    HL, HR = model.H(*aL, x, y), model.H(*aR, x, y)
    dL, dR = dH(*aL, x, y), dH(*aR, x, y)
    jump = pR - pL
    same = _equal_slopes(pL, pR)
    Ht = np.where(same, 0.5 * (dL + dR), (HR - HL) / np.where(same, 1.0, jump))
    return Ht, dL, dR


def roe_speed_1d(pL, pR, model: HamiltonianModel, x=0.0):
    return _roe(model, 0, np.asarray(pL, float), np.asarray(pR, float), 0.0, x, 0.0)[0]


def roe_speed_2d(normal_dir: int, pL, pR, tangential_avg, model: HamiltonianModel, x=0.0, y=0.0):
    """Roe speed in the normal slope with the tangential slope frozen at its average."""
    return _roe(
        model, normal_dir, np.asarray(pL, float), np.asarray(pR, float), tangential_avg, x, y
    )[0]


def _entropy(Ht, dL, dR):
    delta = np.maximum(0.0, np.maximum(Ht - dL, dR - Ht))
    return delta, np.maximum(delta, np.abs(Ht))


def entropy_params_1d(pL, pR, model: HamiltonianModel, x=0.0):
    Ht, dL, dR = _roe(model, 0, np.asarray(pL, float), np.asarray(pR, float), 0.0, x, 0.0)
    return _entropy(Ht, dL, dR)


@dataclass(frozen=True)
class FaceEval:
    Htilde: np.ndarray
    delta: np.ndarray
    S: np.ndarray

    @property
    def lambda1(self):
        return np.minimum(self.Htilde, 0.0)

    @property
    def lambda2(self):
        return np.maximum(self.Htilde, 0.0)

    @property
    def lambda3(self):
        return self.S - np.abs(self.Htilde)


def face_eval(model: HamiltonianModel, direction: int, pL, pR, tbar=0.0, x=0.0, y=0.0) -> FaceEval:
    Ht, dL, dR = _roe(model, direction, pL, pR, tbar, x, y)
    delta, S = _entropy(Ht, dL, dR)
    return FaceEval(Ht, delta, S)


# {{{ face operators


@dataclass(frozen=True, eq=False)
class FaceOperators:
    """Face-time averaged traces for one face direction.

    ``T[a][b][m, l]`` integrates test function ``m`` of side ``a`` against
    mode ``l`` of side ``b`` (``0`` = minus side, ``1`` = plus side) over the
    reference face and ``tau in [0, 1]``; ``D`` does the same with the
    normal derivative of mode ``l``.  ``gn``/``gt`` are normal/tangential
    derivatives of each mode at the face spacetime barycenter.
    """

    spec: BasisSpec
    direction: int
    T: tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    D: tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    gn: tuple[np.ndarray, np.ndarray]
    gt: tuple[np.ndarray, np.ndarray] | None

    trace_factors: "TraceFactors | None" = None

    @cached_property
    def jump_matrix(self) -> np.ndarray:
        """Maps ``[qL, qR]`` to the four weighted jumps ``[T-L, T-R, D-L, D-R]``."""
        T, D = self.T, self.D
        cols = [np.vstack([-A[0].T, A[1].T]) for A in (T[0], T[1], D[0], D[1])]
        return np.ascontiguousarray(np.hstack(cols))


@dataclass(frozen=True, eq=False)
class TraceFactors:
    """Low-rank factorization ``T[a][b] = Qv[a].T @ Pv[b]`` (same for ``D``).

    ``Pv[b]`` maps spacetime modes of side ``b`` to coefficients of their
    face trace in an orthonormal basis of the trace space; ``Qv[a]`` holds
    the test functions of side ``a`` in that basis.  ``Pd``/``Qd`` do the
    same for the normal derivative.  ``P`` stacks, per side, the value and
    derivative trace maps and the barycenter gradients so one product per
    cell gives everything a face needs.
    """

    r: int
    rd: int
    P: np.ndarray
    Qv: tuple[np.ndarray, np.ndarray]
    Qd: tuple[np.ndarray, np.ndarray]


def _orthonormal_range(A: np.ndarray) -> np.ndarray:
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, sv > 1.0e-12 * sv[0]]


def _trace_factors(vals, ders, wts, Ls, gn, gt) -> TraceFactors:
    sw = np.sqrt(wts)[:, None]
    Uv = _orthonormal_range(np.hstack([sw * vals[0], sw * vals[1]]))
    Ud = _orthonormal_range(np.hstack([sw * ders[0], sw * ders[1]]))
    Pv = [Uv.T @ (sw * v) for v in vals]
    Pd = [Ud.T @ (sw * d) for d in ders]
    Qv = tuple(np.ascontiguousarray(Uv.T @ (sw * v[:, :Ls])) for v in vals)
    Qd = tuple(np.ascontiguousarray(Ud.T @ (sw * v[:, :Ls])) for v in vals)
    blocks = []
    for b in (0, 1):
        cols = [Pv[b].T, Pd[b].T, gn[b][:, None]]
        if gt is not None:
            cols.append(gt[b][:, None])
        blocks.append(np.hstack(cols))
    P = np.ascontiguousarray(np.hstack(blocks))
    return TraceFactors(Uv.shape[1], Ud.shape[1], P, Qv, Qd)


def _face_points(spec: BasisSpec, direction: int, side_coord: float, npts: int) -> tuple[np.ndarray, np.ndarray]:
    tp, tw = _gauss_1d(npts, 0.0, 1.0)
    if spec.dim == 1:
        pts = np.stack([np.full_like(tp, side_coord), tp], axis=1)
        return pts, tw
    sp, sw = _gauss_1d(npts, -0.5, 0.5)
    S, Tm = np.meshgrid(sp, tp, indexing="ij")
    W = np.outer(sw, tw).ravel()
    cols = [None, None, Tm.ravel()]
    cols[direction] = np.full(S.size, side_coord)
    cols[1 - direction] = S.ravel()
    return np.stack(cols, axis=1), W


@lru_cache(maxsize=None)
def face_operators(dim: int, k: int, direction: int = 0) -> FaceOperators:
    spec = build_basis(dim, k)
    Ls = spec.Ls
    npts = k + 2
    sides = (0.5, -0.5)  # minus cell sees +1/2, plus cell sees -1/2

    vals, ders, wts = [], [], None
    for c in sides:
        pts, wts = _face_points(spec, direction, c, npts)
        vals.append(evaluate_modes(spec, pts))
        ders.append(evaluate_modes(spec, pts, deriv=direction))

    def block(a, b, src):
        test = vals[a][:, :Ls]
        return test.T @ (wts[:, None] * src[b])

    T = tuple(tuple(block(a, b, vals) for b in (0, 1)) for a in (0, 1))
    D = tuple(tuple(block(a, b, ders) for b in (0, 1)) for a in (0, 1))

    bary = []
    for c in sides:
        p = np.zeros((1, dim + 1))
        p[0, direction] = c
        p[0, dim] = 0.5
        bary.append(p)
    gn = tuple(evaluate_modes(spec, p, deriv=direction)[0] for p in bary)
    gt = tuple(evaluate_modes(spec, p, deriv=1 - direction)[0] for p in bary) if dim == 2 else None
    tf = _trace_factors(vals, ders, wts, Ls, gn, gt)
    return FaceOperators(spec, direction, T, D, gn, gt, tf)


def barycenter_derivatives(qL, qR, ops: FaceOperators, h_normal: float, h_tangential: float = 1.0):
    """Normal and tangential slopes of the two traces at the face barycenter.

    Returns ``(uL, uR, vL, vR)`` in physical units; ``v`` is zero in 1D.
    """
    uL = (qL @ ops.gn[0]) / h_normal
    uR = (qR @ ops.gn[1]) / h_normal
    if ops.gt is None:
        z = np.zeros_like(uL)
        return uL, uR, z, z
    vL = (qL @ ops.gt[0]) / h_tangential
    vR = (qR @ ops.gt[1]) / h_tangential
    return uL, uR, vL, vR


def face_contributions(qL, qR, feval: FaceEval, ops: FaceOperators, C: float, dt: float, face_len: float = 1.0):
    """Flux and penalty increments for the minus and plus cell of each face.

    Returns ``(FL, FR)``, each of shape ``(nfaces, Ls)``, to be added to the
    left-hand side of the update for the respective cell.
    """
    shape = qL.shape[:-1]
    Q = np.concatenate([qL, qR], axis=-1).reshape(-1, 2 * qL.shape[-1])
    J = (Q @ ops.jump_matrix).reshape(*shape, 4, -1)
    jumpL, jumpR, djumpL, djumpR = J[..., 0, :], J[..., 1, :], J[..., 2, :], J[..., 3, :]

    scale = dt * face_len
    l1 = (feval.lambda1 * scale)[..., None]
    l2 = (feval.lambda2 * scale)[..., None]
    l3 = (C * feval.lambda3 * scale)[..., None]
    return l1 * jumpL - l3 * djumpL, l2 * jumpR - l3 * djumpR


def axis_slice(a: np.ndarray, axis: int, start: int, stop: int | None) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, stop)
    return a[tuple(idx)]


def face_terms(
    qp: np.ndarray,
    axis: int,
    ops: FaceOperators,
    model: HamiltonianModel,
    C: float,
    dt: float,
    h_normal: float,
    h_tangential: float = 1.0,
    x=0.0,
    y=0.0,
) -> np.ndarray:
    """Summed face increments for every cell, from ghost-padded modes ``qp``.

    ``qp`` has one ghost layer on each side of ``axis``.  Equivalent to
    :func:`barycenter_derivatives`, :func:`face_eval` and
    :func:`face_contributions` applied to every face, but the spacetime
    modes are reduced to face traces once per cell.  Face quantities are
    handled with the face axis leading and flattened, trace index first, so
    every block is contiguous.  Rows of cells are swept in blocks of about
    ``FACE_BLOCK`` faces to keep the work arrays in cache.
    """
    tf = ops.trace_factors
    r, rd = tf.r, tf.rd
    width = tf.P.shape[1] // 2
    Q = np.moveaxis(qp, axis, 0)
    n = Q.shape[0]
    rest = Q.shape[1:-1]
    m = int(np.prod(rest, dtype=int))
    Q = Q.reshape(n, m, -1)
    PT = np.ascontiguousarray(tf.P.T)
    scale = dt * (h_tangential if ops.gt is not None else 1.0)
    xs, ys = (_face_field(v, qp.shape, axis, m) for v in (x, y))

    out = np.empty((n - 2, m, tf.Qv[0].shape[1]))
    rows = max(1, FACE_BLOCK // m)
    for c0 in range(1, n - 1, rows):
        c1 = min(c0 + rows, n - 1)
        # padded cells c0 - 1 .. c1, faces c0 - 1 .. c1 - 1
        nb = c1 - c0 + 2
        tr = PT @ Q[c0 - 1 : c1 + 1].reshape(nb * m, -1).T
        lo = tr[:width, : (nb - 1) * m]
        hi = tr[width:, m:]
        uL = lo[r + rd] / h_normal
        uR = hi[r + rd] / h_normal
        if ops.gt is None:
            tbar = 0.0
        else:
            tbar = 0.5 * (lo[r + rd + 1] + hi[r + rd + 1]) / h_tangential
        fs = slice((c0 - 1) * m, c1 * m)
        fe = face_eval(model, ops.direction, uL, uR, tbar, xs[fs] if np.ndim(xs) else xs, ys[fs] if np.ndim(ys) else ys)

        j = hi[:r] - lo[:r]
        dj = hi[r : r + rd] - lo[r : r + rd]
        l3 = dj * ((C * scale) * fe.lambda3)
        FL = tf.Qv[0].T @ (j * (scale * fe.lambda1)) - tf.Qd[0].T @ l3
        FR = tf.Qv[1].T @ (j * (scale * fe.lambda2)) - tf.Qd[1].T @ l3
        out[c0 - 1 : c1 - 1] = (FL[:, m:] + FR[:, : (nb - 2) * m]).T.reshape(nb - 2, m, -1)
    return np.moveaxis(out.reshape(n - 2, *rest, -1), 0, axis)


def _face_field(v, padded_shape, axis, m):
    # face coordinates flattened in the face-axis-leading order
    if np.ndim(v) == 0:
        return v
    return np.moveaxis(np.broadcast_to(v, _face_shape(padded_shape, axis)), axis, 0).reshape(-1)


def _face_shape(padded_shape, axis):
    shape = list(padded_shape[:-1])
    shape[axis] -= 1
    return tuple(shape)


# }}}


# {{{ volume term


@lru_cache(maxsize=None)
def volume_matrix(dim: int, k: int) -> np.ndarray:
    """``V[m, l] = <phi_m, theta_l>`` over the reference spacetime cell."""
    spec = build_basis(dim, k)
    rule = gauss_rule(k + 2, dim, with_time=True)
    theta = evaluate_modes(spec, rule.points)
    V = theta[:, : spec.Ls].T @ (rule.weights[:, None] * theta)
    V[np.abs(V) < 1.0e-15] = 0.0
    V.setflags(write=False)
    return V


def volume_integral(h, dx: float, dy: float = 1.0, *, dim: int = 2, k: int = 2):
    """Spacetime integral of the Hamiltonian against each test function.

    ``h`` holds the modal coefficients of ``dt * H``; the result has the
    units of ``dt * H * cell volume``.
    """
    h = np.asarray(h, dtype=float)
    return (h @ volume_matrix(dim, k).T) * (dx * dy)


# }}}
