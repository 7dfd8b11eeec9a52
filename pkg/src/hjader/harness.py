"""Experiment engine: error norms, convergence sweeps, timing and CSV output."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from hjader.basis import build_basis, evaluate_modes, gauss_rule
from hjader.hamiltonian import ProblemCase, catalog, exact_solution
from hjader.mesh import Mesh1D, Mesh2D, ModalField, SolverConfig
from hjader.monotone import MonotoneSolution, lax_friedrichs
from hjader.rkdg import run_rkdg
from hjader.solver1d import RunResult, run
from hjader.solver2d import run2d

__all__ = [
    "BenchResult",
    "ErrorNorms",
    "ErrorReport",
    "ErrorRow",
    "RunSpec",
    "compute_orders",
    "convergence_sweep",
    "diagonal_cut",
    "dump_solution",
    "error_norms",
    "make_mesh",
    "read_csv",
    "reference_oracle",
    "run_case",
    "timing_benchmark",
]

FLOAT_FMT = "%.17g"


# {{{ norms


@dataclass(frozen=True)
class ErrorNorms:
    """Domain-integrated discrete norms.

    ``l1 = sum w |e|``, ``l2 = sqrt(sum w e^2)`` and ``linf = max |e|`` with
    physical Gauss weights ``w``; ``measure = sum w`` over the unmasked cells.
    """

    l1: float
    l2: float
    linf: float
    measure: float

    @property
    def normalized(self) -> tuple[float, float, float]:
        """Mean-value versions ``(l1 / |D|, l2 / sqrt(|D|), linf)``."""
        return self.l1 / self.measure, self.l2 / math.sqrt(self.measure), self.linf


def _sample_points(fld: ModalField, npts: int | None = None):
    """Gauss points of every cell, their physical weights and the field values there."""
    mesh = fld.mesh
    n = fld.k + 2 if npts is None else npts
    rule = gauss_rule(n, mesh.dim)
    spec = build_basis(mesh.dim, fld.k)
    E = evaluate_modes(spec, np.column_stack([rule.points, np.zeros(len(rule.weights))]))[:, : spec.Ls]
    vals = fld.coeffs @ E.T
    w = rule.weights * mesh.cell_volume
    if mesh.dim == 1:
        x = mesh.centers[:, None] + mesh.dx * rule.points[None, :, 0]
        return (x,), w, vals
    x = mesh.xc[:, None, None] + mesh.dx * rule.points[None, None, :, 0]
    y = mesh.yc[None, :, None] + mesh.dy * rule.points[None, None, :, 1]
    x, y = np.broadcast_arrays(x, y)
    return (x, y), w, vals


def _cell_mask(mesh, mask) -> np.ndarray:
    if mask is None:
        return np.ones(mesh.shape, dtype=bool)
    if mesh.dim == 1:
        return np.asarray(mask(mesh.centers), dtype=bool)
    X, Y = np.meshgrid(mesh.xc, mesh.yc, indexing="ij")
    return np.asarray(mask(X, Y), dtype=bool)


def error_norms(fld: ModalField, exact: Callable, mask: Callable | None = None) -> ErrorNorms:
    """Errors against ``exact(x)`` / ``exact(x, y)`` at ``k + 2`` Gauss points per direction.

    Cells whose center fails ``mask`` are dropped entirely.
    """
    coords, w, vals = _sample_points(fld)
    keep = _cell_mask(fld.mesh, mask)
    if not keep.any():
        raise ValueError("every cell is masked out")
    e = np.abs(vals - exact(*coords))[keep]
    ncells = int(keep.sum())
    return ErrorNorms(
        l1=float(np.sum(e * w)),
        l2=float(np.sqrt(np.sum(e * e * w))),
        linf=float(np.max(e)),
        measure=float(ncells * np.sum(w)),
    )


def reference_oracle(case: ProblemCase, t: float, reference_n: int | None = None) -> Callable:
    """Exact solution at time ``t`` or, for cases without one, a monotone reference."""
    if case.exact is not None:
        if case.dim == 1:
            return lambda x: exact_solution(case, x, t=t)
        return lambda x, y: exact_solution(case, x, y, t=t)
    n = reference_n or (2000 if case.dim == 1 else 400)
    ref: MonotoneSolution = lax_friedrichs(case, n, t_final=t)
    return ref


# }}}


# {{{ runs


def make_mesh(case: ProblemCase, N: int) -> Mesh1D | Mesh2D:
    return Mesh1D(*case.bounds, N) if case.dim == 1 else Mesh2D.square(case.bounds, N)


def run_case(case: ProblemCase, N: int, config: SolverConfig, scheme: str = "ader", output_times=()) -> RunResult:
    mesh = make_mesh(case, N)
    if scheme == "ader":
        solver = run if case.dim == 1 else run2d
        return solver(case, mesh, config, output_times)
    if scheme == "rkdg":
        return run_rkdg(case, mesh, config, output_times)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class RunSpec:
    example: str
    k: int
    meshes: tuple[int, ...]
    scheme: str = "ader"
    cfl: float | None = None
    t_final: float | None = None
    limiter: bool | None = None
    out: str | None = None

    def __post_init__(self):
        if not self.meshes:
            raise ValueError("mesh list is empty")
        if any(b <= a for a, b in zip(self.meshes, self.meshes[1:])):
            raise ValueError(f"mesh list must be strictly increasing, got {list(self.meshes)}")
        if self.cfl is not None and not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"CFL must lie in (0, 1], got {self.cfl}")
        if self.scheme not in ("ader", "rkdg"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def config(self, case: ProblemCase) -> SolverConfig:
        return SolverConfig.for_case(case, self.k, cfl=self.cfl, t_final=self.t_final, limiter=self.limiter)


# }}}


# {{{ convergence


def compute_orders(errors: Sequence[float], meshes: Sequence[int] | None = None) -> list[float | None]:
    """Observed orders between consecutive rows; ``log2(e_N / e_2N)`` for doubled meshes."""
    out: list[float | None] = [None]
    for i in range(1, len(errors)):
        a, b = errors[i - 1], errors[i]
        ratio = 2.0 if meshes is None else meshes[i] / meshes[i - 1]
        if a > 0.0 and b > 0.0:
            out.append(math.log(a / b) / math.log(ratio))
        else:
            out.append(float("nan"))
    return out


@dataclass
class ErrorRow:
    N: int
    norms: ErrorNorms
    steps: int
    wall_time: float


@dataclass
class ErrorReport:
    example: str
    k: int
    cfl: float
    t_final: float
    scheme: str
    rows: list[ErrorRow] = field(default_factory=list)

    @property
    def meshes(self) -> list[int]:
        return [r.N for r in self.rows]

    def errors(self, norm: str = "l2") -> list[float]:
        return [getattr(r.norms, norm) for r in self.rows]

    def orders(self, norm: str = "l2") -> list[float | None]:
        return compute_orders(self.errors(norm), self.meshes)

    @property
    def wall_time(self) -> float:
        return sum(r.wall_time for r in self.rows)

    COLUMNS = ("N", "l2", "l2_order", "l1", "l1_order", "linf", "linf_order", "steps")

    def table_rows(self) -> list[list]:
        o2, o1, oi = self.orders("l2"), self.orders("l1"), self.orders("linf")
        return [
            [r.N, r.norms.l2, o2[i], r.norms.l1, o1[i], r.norms.linf, oi[i], r.steps]
            for i, r in enumerate(self.rows)
        ]

    def header(self) -> list[str]:
        return [
            f"# example={self.example}",
            f"# scheme={self.scheme}",
            f"# k={self.k}",
            f"# cfl={FLOAT_FMT % self.cfl}",
            f"# t_final={FLOAT_FMT % self.t_final}",
            f"# wall_time={self.wall_time:.3f}",
        ]

    def to_csv(self, path, failure: str | None = None) -> None:
        lines = self.header() + [",".join(self.COLUMNS)]
        for row in self.table_rows():
            lines.append(",".join(_fmt(v) for v in row))
        if failure is not None:
            lines.append("FAILED," + failure.replace(",", ";").replace("\n", " "))
        _write_text(path, "\n".join(lines) + "\n")

    def format_table(self) -> str:
        out = [f"{'N':>6} {'l2':>11} {'ord':>5} {'l1':>11} {'ord':>5} {'linf':>11} {'ord':>5}"]
        for N, l2, o2, l1, o1, li, oi, _ in self.table_rows():
            out.append(f"{N:>6} {l2:11.3e} {_ord(o2)} {l1:11.3e} {_ord(o1)} {li:11.3e} {_ord(oi)}")
        return "\n".join(out)


def _ord(o) -> str:
    return f"{'-':>5}" if o is None else f"{o:5.2f}"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT % v


def _write_text(path, text: str) -> None:
    path = Path(path)
    try:
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def convergence_sweep(spec: RunSpec, oracle_n: int | None = None) -> ErrorReport:
    """Run every mesh of ``spec`` and tabulate errors and orders.

    When ``spec.out`` is set the CSV is written after the sweep; if a run
    fails, the rows finished so far are flushed with a ``FAILED`` marker row
    and the error propagates.
    """
    case = catalog(spec.example)
    cfg0 = spec.config(case)
    report = ErrorReport(spec.example, spec.k, cfg0.cfl, cfg0.t_final, spec.scheme)
    exact = reference_oracle(case, cfg0.t_final, oracle_n)
    for N in spec.meshes:
        try:
            res = run_case(case, N, cfg0, spec.scheme)
            norms = error_norms(res.field, exact, case.mask)
        except Exception as exc:
            if spec.out:
                report.to_csv(spec.out, failure=f"N={N}: {type(exc).__name__}: {exc}")
            raise
        report.rows.append(ErrorRow(N, norms, res.steps, res.wall_time))
    if spec.out:
        report.to_csv(spec.out)
    return report


# }}}


# {{{ timing


@dataclass(frozen=True)
class BenchResult:
    example: str
    k: int
    N: int
    ader_seconds: float
    rkdg_seconds: float
    samples: dict[str, list[float]]

    @property
    def ratio(self) -> float:
        return self.ader_seconds / self.rkdg_seconds


def _time_once(fn: Callable[[], object], min_seconds: float) -> float:
    """Seconds per call, repeating the call until one measurement spans ``min_seconds``."""
    loops = 1
    while True:
        t0 = time.process_time()
        for _ in range(loops):
            fn()
        elapsed = time.process_time() - t0
        if elapsed >= min_seconds:
            return elapsed / loops
        loops *= 2 if elapsed <= 0.0 else max(2, math.ceil(1.2 * min_seconds / elapsed))


def timing_benchmark(
    example: str,
    k: int,
    N: int,
    cfl: float | None = None,
    repeats: int = 3,
    min_seconds: float = 0.2,
) -> BenchResult:
    """Median CPU seconds of the ADER and RKDG runs with the same CFL and final time.

    CPU time of this process is measured; pin BLAS to one thread (for
    example ``OMP_NUM_THREADS=1``) before numpy is imported for serial timings.
    """
    case = catalog(example)
    config = SolverConfig.for_case(case, k, cfl=cfl)
    samples: dict[str, list[float]] = {"ader": [], "rkdg": []}
    for scheme in ("ader", "rkdg"):
        run_case(case, min(N, 16), config, scheme)  # warm caches
        for _ in range(max(3, repeats)):
            samples[scheme].append(_time_once(lambda: run_case(case, N, config, scheme), min_seconds))
    return BenchResult(
        example, k, N, statistics.median(samples["ader"]), statistics.median(samples["rkdg"]), samples
    )


# }}}


# {{{ solution output


def _csv_block(header: Sequence[str], columns: Sequence[np.ndarray], meta: Sequence[str] = ()) -> str:
    data = np.column_stack([np.ravel(c) for c in columns])
    lines = list(meta) + [",".join(header)]
    lines += [",".join(FLOAT_FMT % v for v in row) for row in data]
    return "\n".join(lines) + "\n"


def diagonal_cut(fld: ModalField, npts: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Samples along ``y = x`` through the diagonal cells of a square mesh.

    Returns ``(x, phi)``.  Diagonal cells ``(i, i)`` are sampled at reference
    points ``xi = eta = s`` for Gauss nodes ``s``.
    """
    mesh = fld.mesh
    if mesh.dim != 2 or mesh.Nx != mesh.Ny or not np.isclose(mesh.a, mesh.c) or not np.isclose(mesh.dx, mesh.dy):
        raise ValueError("diagonal cut needs a square mesh on a square domain")
    s, _ = np.polynomial.legendre.leggauss(npts or fld.k + 2)
    s = 0.5 * s
    spec = build_basis(2, fld.k)
    E = evaluate_modes(spec, np.column_stack([s, s, np.zeros_like(s)]))[:, : spec.Ls]
    idx = np.arange(mesh.Nx)
    vals = fld.coeffs[idx, idx] @ E.T
    x = mesh.xc[:, None] + mesh.dx * s[None, :]
    return x.ravel(), vals.ravel()


def dump_solution(fld: ModalField, path, exact: Callable | None = None, diagonal: bool = False) -> list[Path]:
    """Write sampled values as CSV; returns the files written.

    1D: ``x,phi[,phi_exact]`` at cell centers and Gauss points, sorted by ``x``.
    2D: ``x,y,phi[,phi_exact]`` at cell centers; with ``diagonal`` a second
    file ``<stem>_diag.csv`` holds ``x,y,phi`` along ``y = x``.
    """
    mesh = fld.mesh
    path = Path(path)
    meta = [f"# t={FLOAT_FMT % fld.t}", f"# k={fld.k}", f"# N={'x'.join(str(n) for n in mesh.shape)}"]
    written = []
    if mesh.dim == 1:
        (xg,), _, vg = _sample_points(fld)
        xc = mesh.centers
        vc = fld.evaluate(np.zeros(1))[:, 0]
        x = np.concatenate([xc, xg.ravel()])
        v = np.concatenate([vc, vg.ravel()])
        order = np.argsort(x, kind="stable")
        cols, header = [x[order], v[order]], ["x", "phi"]
        if exact is not None:
            cols.append(exact(x[order]))
            header.append("phi_exact")
    else:
        X, Y = np.meshgrid(mesh.xc, mesh.yc, indexing="ij")
        cols, header = [X, Y, fld.evaluate(np.zeros(1), np.zeros(1))[..., 0]], ["x", "y", "phi"]
        if exact is not None:
            cols.append(exact(X, Y))
            header.append("phi_exact")
    _write_text(path, _csv_block(header, cols, meta))
    written.append(path)
    if diagonal:
        xd, vd = diagonal_cut(fld)
        dpath = path.with_name(path.stem + "_diag" + (path.suffix or ".csv"))
        _write_text(dpath, _csv_block(["x", "y", "phi"], [xd, xd, vd], meta))
        written.append(dpath)
    return written


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a file written by this module into named columns; ``#`` lines are metadata."""
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:] if not ln.startswith("FAILED")]
    out = {}
    for j, name in enumerate(header):
        out[name] = np.array([float(r[j]) if r[j] != "" else np.nan for r in rows])
    return out


# }}}
