"""Hamiltonian models and the catalog of benchmark problems.

Every model is vectorized: ``H(p, q, x, y)`` accepts broadcastable arrays.
One-dimensional models ignore ``q`` and ``y``.  New problems are added by
building a :class:`HamiltonianModel` and a :class:`ProblemCase` and passing
them to the solvers directly; :func:`catalog` only knows the built-in names.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "CASE_NAMES",
    "HamiltonianModel",
    "OracleError",
    "ProblemCase",
    "UnknownCaseError",
    "catalog",
    "exact_solution",
    "sign",
]

Array = Any
Fn = Callable[..., Array]


class UnknownCaseError(KeyError):
    pass


class OracleError(RuntimeError):
    """Characteristic solve failed, typically because a kink has formed."""


def sign(a):
    # np.sign already maps 0 to 0
    return np.sign(a)


def _zero(p, q=None, x=None, y=None):
    return np.zeros_like(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class HamiltonianModel:
    name: str
    H: Fn
    H1: Fn
    H2: Fn = _zero
    dim: int = 1
    space_dependent: bool = False

    def eval(self, p, q=0.0, x=0.0, y=0.0):
        return self.H(p, q, x, y)

    def d_p(self, p, q=0.0, x=0.0, y=0.0):
        return self.H1(p, q, x, y)

    def d_q(self, p, q=0.0, x=0.0, y=0.0):
        return self.H2(p, q, x, y)


@dataclass(frozen=True)
class ProblemCase:
    name: str
    model: HamiltonianModel
    bounds: tuple[float, ...]
    initial: Fn
    boundary: str = "periodic"
    exact: Fn | None = None
    mask: Fn | None = None
    cfl: dict[int, float] = field(default_factory=lambda: {1: 0.15, 2: 0.10, 3: 0.05})
    t_final: float = 1.0
    limiter: bool = False
    output_times: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return self.model.dim

    def initial_condition(self, x, y=None):
        return self.initial(x) if self.dim == 1 else self.initial(x, y)


# {{{ characteristics oracles


def _newton_characteristics(x, t, df0, d2f0, dg, d2g, x0=None, tol=1.0e-13, maxit=60):
    """Solve ``x = x0 + t g'(f0'(x0))`` for the foot ``x0``."""
    x = np.asarray(x, dtype=float)
    x0 = x.copy() if x0 is None else x0
    for _ in range(maxit):
        P = df0(x0)
        F = x0 + t * dg(P) - x
        dF = 1.0 + t * d2g(P) * d2f0(x0)
        if np.any(dF <= 0.0):
            raise OracleError("characteristics cross: the solution is no longer smooth")
        step = F / dF
        x0 = x0 - step
        if np.max(np.abs(F), initial=0.0) < tol and np.max(np.abs(step), initial=0.0) < tol:
            return x0
    P = df0(x0)
    if np.max(np.abs(x0 + t * dg(P) - x), initial=0.0) < 10 * tol:
        return x0
    raise OracleError("Newton iteration on the characteristic equation did not converge")


def _smooth_convex_oracle(f0, df0, d2f0, g, dg, d2g):
    def exact(s, t):
        s = np.asarray(s, dtype=float)
        if t == 0.0:
            return f0(s)
        s0 = _newton_characteristics(s, t, df0, d2f0, dg, d2g)
        P = df0(s0)
        return f0(s0) + t * (P * dg(P) - g(P))

    return exact


# }}}


# {{{ one-dimensional cases


def _linear_sinx() -> ProblemCase:
    model = HamiltonianModel(
        "sin(x) p",
        H=lambda p, q, x, y: np.sin(x) * p,
        H1=lambda p, q, x, y: np.sin(x) + 0.0 * p,
        space_dependent=True,
    )

    def exact(x, y, t):
        return np.sin(2.0 * np.arctan(np.exp(-t) * np.tan(0.5 * np.asarray(x, dtype=float))))

    return ProblemCase(
        "linear-sinx-1d", model, (0.0, 2 * np.pi), np.sin,
        exact=exact, cfl={1: 0.15, 2: 0.10, 3: 0.05}, t_final=1.0,
    )


def _sign_coeff() -> ProblemCase:
    model = HamiltonianModel(
        "sign(cos x) p",
        H=lambda p, q, x, y: sign(np.cos(x)) * p,
        H1=lambda p, q, x, y: sign(np.cos(x)) + 0.0 * p,
        space_dependent=True,
    )

    def exact(x, y, t):
        # characteristics traced back inside the region of constant speed;
        # valid on the smooth region only
        x = np.asarray(x, dtype=float)
        return np.sin(x - t * sign(np.cos(x)))

    def mask(x, y=None):
        x = np.asarray(x, dtype=float)
        return ((x >= 0.0) & (x <= 1.0)) | ((x >= 2.0) & (x <= 3.4)) | ((x >= 6.0) & (x <= 2 * np.pi))

    return ProblemCase(
        "sign-coeff-1d", model, (0.0, 2 * np.pi), np.sin,
        exact=exact, mask=mask, cfl={1: 0.10, 2: 0.10, 3: 0.03}, t_final=1.0,
    )


def _cos_initial(x):
    return -np.cos(np.pi * np.asarray(x, dtype=float))


def _burgers_1d() -> ProblemCase:
    model = HamiltonianModel(
        "(p+1)^2/2",
        H=lambda p, q, x, y: 0.5 * (p + 1.0) ** 2,
        H1=lambda p, q, x, y: p + 1.0,
    )
    sol = _smooth_convex_oracle(
        _cos_initial,
        lambda s: np.pi * np.sin(np.pi * s),
        lambda s: np.pi**2 * np.cos(np.pi * s),
        lambda P: 0.5 * (P + 1.0) ** 2,
        lambda P: P + 1.0,
        lambda P: np.ones_like(P),
    )
    return ProblemCase(
        "burgers-1d", model, (-1.0, 1.0), _cos_initial,
        exact=lambda x, y, t: sol(x, t), t_final=0.5 / np.pi**2,
    )


def _burgers_nonsmooth() -> ProblemCase:
    model = HamiltonianModel(
        "p^2/2",
        H=lambda p, q, x, y: 0.5 * p * p,
        H1=lambda p, q, x, y: p,
    )

    def exact(x, y, t):
        # Hopf-Lax for the periodic V profile, valid for t < pi
        r = np.abs(np.asarray(x, dtype=float) - np.pi)
        if t == 0.0:
            return r
        return np.where(r < t, r * r / (2.0 * t), r - 0.5 * t)

    return ProblemCase(
        "burgers-nonsmooth-1d", model, (0.0, 2 * np.pi),
        lambda x: np.abs(np.asarray(x, dtype=float) - np.pi),
        exact=exact, t_final=1.0,
    )


def _noncvx_cos_1d() -> ProblemCase:
    model = HamiltonianModel(
        "-cos(p+1)",
        H=lambda p, q, x, y: -np.cos(p + 1.0),
        H1=lambda p, q, x, y: np.sin(p + 1.0),
    )
    sol = _smooth_convex_oracle(
        _cos_initial,
        lambda s: np.pi * np.sin(np.pi * s),
        lambda s: np.pi**2 * np.cos(np.pi * s),
        lambda P: -np.cos(P + 1.0),
        lambda P: np.sin(P + 1.0),
        lambda P: np.cos(P + 1.0),
    )
    return ProblemCase(
        "noncvx-cos-1d", model, (-1.0, 1.0), _cos_initial,
        exact=lambda x, y, t: sol(x, t), t_final=0.5 / np.pi**2,
    )


def _riemann_noncvx() -> ProblemCase:
    model = HamiltonianModel(
        "(p^2-1)(p^2-4)/4",
        H=lambda p, q, x, y: 0.25 * (p * p - 1.0) * (p * p - 4.0),
        H1=lambda p, q, x, y: p * (2.0 * p * p - 5.0) / 2.0,
    )
    return ProblemCase(
        "riemann-noncvx-1d", model, (-1.0, 1.0),
        lambda x: -2.0 * np.abs(np.asarray(x, dtype=float)),
        boundary="extrapolation", cfl={1: 0.15, 2: 0.10, 3: 0.05},
        t_final=1.0, limiter=True,
    )


# }}}


# {{{ two-dimensional cases


def _rotation_model() -> HamiltonianModel:
    return HamiltonianModel(
        "-y p + x q",
        H=lambda p, q, x, y: -y * p + x * q,
        H1=lambda p, q, x, y: -y + 0.0 * p,
        H2=lambda p, q, x, y: x + 0.0 * q,
        dim=2,
        space_dependent=True,
    )


def _rotated(f0):
    def exact(x, y, t):
        # counterclockwise rotation by t: trace the foot back
        c, s = np.cos(t), np.sin(t)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return f0(c * x + s * y, -s * x + c * y)

    return exact


def _gaussian(x, y, sigma=0.05):
    return np.exp(-((x - 0.4) ** 2 + (y - 0.4) ** 2) / (2.0 * sigma**2))


def _cone(x, y):
    r = np.sqrt((np.asarray(x, dtype=float) - 0.4) ** 2 + (np.asarray(y, dtype=float) - 0.4) ** 2)
    return np.where(r >= 0.3, 0.0, np.where(r > 0.1, 0.3 - r, 0.2))


def _rotation_smooth() -> ProblemCase:
    return ProblemCase(
        "rotation-smooth-2d", _rotation_model(), (-1.0, 1.0, -1.0, 1.0), _gaussian,
        exact=_rotated(_gaussian), cfl={1: 0.15, 2: 0.05, 3: 0.05}, t_final=1.0,
    )


def _rotation_cone() -> ProblemCase:
    return ProblemCase(
        "rotation-cone-2d", _rotation_model(), (-1.0, 1.0, -1.0, 1.0), _cone,
        exact=_rotated(_cone), cfl={1: 0.15, 2: 0.05, 3: 0.05}, t_final=2 * np.pi,
    )


def _diag_initial(x, y):
    return -np.cos(0.5 * np.pi * (np.asarray(x, dtype=float) + np.asarray(y, dtype=float)))


def _diagonal_oracle(g, dg, d2g):
    # phi = f(x + y, t) with f_t + g(f_s) = 0, where g(P) = H(P, P)
    sol = _smooth_convex_oracle(
        lambda s: -np.cos(0.5 * np.pi * s),
        lambda s: 0.5 * np.pi * np.sin(0.5 * np.pi * s),
        lambda s: 0.25 * np.pi**2 * np.cos(0.5 * np.pi * s),
        g, dg, d2g,
    )
    return lambda x, y, t: sol(np.asarray(x, dtype=float) + np.asarray(y, dtype=float), t)


def _burgers_2d() -> ProblemCase:
    model = HamiltonianModel(
        "(p+q+1)^2/2",
        H=lambda p, q, x, y: 0.5 * (p + q + 1.0) ** 2,
        H1=lambda p, q, x, y: p + q + 1.0,
        H2=lambda p, q, x, y: p + q + 1.0,
        dim=2,
    )
    exact = _diagonal_oracle(
        lambda P: 0.5 * (2.0 * P + 1.0) ** 2,
        lambda P: 2.0 * (2.0 * P + 1.0),
        lambda P: 4.0 * np.ones_like(P),
    )
    return ProblemCase(
        "burgers-2d", model, (-2.0, 2.0, -2.0, 2.0), _diag_initial,
        exact=exact, t_final=0.5 / np.pi**2,
    )


def _noncvx_cos_2d() -> ProblemCase:
    model = HamiltonianModel(
        "-cos(p+q+1)",
        H=lambda p, q, x, y: -np.cos(p + q + 1.0),
        H1=lambda p, q, x, y: np.sin(p + q + 1.0),
        H2=lambda p, q, x, y: np.sin(p + q + 1.0),
        dim=2,
    )
    exact = _diagonal_oracle(
        lambda P: -np.cos(2.0 * P + 1.0),
        lambda P: 2.0 * np.sin(2.0 * P + 1.0),
        lambda P: 4.0 * np.cos(2.0 * P + 1.0),
    )
    return ProblemCase(
        "noncvx-cos-2d", model, (-2.0, 2.0, -2.0, 2.0), _diag_initial,
        exact=exact, t_final=0.5 / np.pi**2,
    )


def _optimal_control() -> ProblemCase:
    model = HamiltonianModel(
        "sin(y) p + (sin(x) + sign(q)) q - sin(y)^2/2 + cos(x) - 1",
        H=lambda p, q, x, y: (
            np.sin(y) * p + (np.sin(x) + sign(q)) * q - 0.5 * np.sin(y) ** 2 + np.cos(x) - 1.0
        ),
        H1=lambda p, q, x, y: np.sin(y) + 0.0 * p,
        H2=lambda p, q, x, y: np.sin(x) + sign(q),
        dim=2,
        space_dependent=True,
    )
    return ProblemCase(
        "optimal-control-2d", model, (-np.pi, np.pi, -np.pi, np.pi),
        lambda x, y: np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape),
        t_final=1.0,
    )


def _riemann_sin() -> ProblemCase:
    model = HamiltonianModel(
        "sin(p+q)",
        H=lambda p, q, x, y: np.sin(p + q),
        H1=lambda p, q, x, y: np.cos(p + q),
        H2=lambda p, q, x, y: np.cos(p + q),
        dim=2,
    )
    return ProblemCase(
        "riemann-sin-2d", model, (-1.0, 1.0, -1.0, 1.0),
        lambda x, y: np.pi * (np.abs(np.asarray(y, dtype=float)) - np.abs(np.asarray(x, dtype=float))),
        boundary="extrapolation", t_final=1.0, limiter=True,
    )


def _propagating_surface() -> ProblemCase:
    def H(p, q, x, y):
        return -np.sqrt(p * p + q * q + 1.0)

    model = HamiltonianModel(
        "-sqrt(p^2+q^2+1)",
        H=H,
        H1=lambda p, q, x, y: p / H(p, q, x, y),
        H2=lambda p, q, x, y: q / H(p, q, x, y),
        dim=2,
    )
    return ProblemCase(
        "propagating-surface-2d", model, (0.0, 1.0, 0.0, 1.0),
        lambda x, y: 1.0 - 0.25 * (np.cos(2 * np.pi * np.asarray(x, dtype=float)) - 1.0)
        * (np.cos(2 * np.pi * np.asarray(y, dtype=float)) - 1.0),
        t_final=0.9, output_times=(0.0, 0.3, 0.6, 0.9),
    )


# }}}


_BUILDERS: dict[str, Callable[[], ProblemCase]] = {
    "linear-sinx-1d": _linear_sinx,
    "sign-coeff-1d": _sign_coeff,
    "burgers-1d": _burgers_1d,
    "burgers-nonsmooth-1d": _burgers_nonsmooth,
    "noncvx-cos-1d": _noncvx_cos_1d,
    "riemann-noncvx-1d": _riemann_noncvx,
    "rotation-smooth-2d": _rotation_smooth,
    "rotation-cone-2d": _rotation_cone,
    "burgers-2d": _burgers_2d,
    "noncvx-cos-2d": _noncvx_cos_2d,
    "optimal-control-2d": _optimal_control,
    "riemann-sin-2d": _riemann_sin,
    "propagating-surface-2d": _propagating_surface,
}

CASE_NAMES = tuple(_BUILDERS)


def catalog(name: str) -> ProblemCase:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise UnknownCaseError(f"unknown case {name!r}; expected one of {', '.join(CASE_NAMES)}") from None


def exact_solution(case: ProblemCase, x, y=None, t: float = 0.0):
    """Viscosity solution at ``(x[, y], t)`` for cases that carry an oracle."""
    if t == 0.0:
        return case.initial_condition(x, y)
    if case.exact is None:
        raise OracleError(f"{case.name} has no closed-form oracle; use the monotone reference")
    return case.exact(x, y, t)
