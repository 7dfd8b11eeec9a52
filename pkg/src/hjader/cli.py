"""Command line entry point ``hj-ader``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from hjader.basis import build_basis, default_tables, dump_tables_csv
from hjader.hamiltonian import CASE_NAMES, catalog
from hjader.harness import (
    RunSpec,
    convergence_sweep,
    dump_solution,
    error_norms,
    reference_oracle,
    run_case,
    timing_benchmark,
)
from hjader.mesh import SolverConfig


def _error_line(code: str, exc_type: str, message: str) -> str:
    return f"error: code={code} type={exc_type} message={json.dumps(message)}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(_error_line("usage", "ArgumentError", f"{self.prog}: {message}"), file=sys.stderr)
        raise SystemExit(2)


def _meshes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad mesh list {text!r}") from exc


def _degrees(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad degree list {text!r}") from exc
    if not ks or any(k not in (1, 2, 3) for k in ks):
        raise argparse.ArgumentTypeError(f"degrees must be drawn from 1, 2, 3, got {text!r}")
    return ks


def _per_degree(out: str | None, k: int, many: bool) -> str | None:
    """``t.csv`` becomes ``t_k2.csv`` when several degrees share one output name."""
    if out is None or not many:
        return out
    path = Path(out)
    return str(path.with_name(f"{path.stem}_k{k}{path.suffix or '.csv'}"))


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hj-ader", description="ADER-DG schemes for Hamilton-Jacobi equations")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--example", required=True, choices=CASE_NAMES)
        sp.add_argument("-k", type=int, required=True, choices=(1, 2, 3))
        sp.add_argument("--cfl", type=float)
        sp.add_argument("--t-final", type=float)

    r = sub.add_parser("run", help="run one case on one mesh")
    common(r)
    r.add_argument("--scheme", choices=("ader", "rkdg"), default="ader")
    r.add_argument("-n", type=int, required=True)
    r.add_argument("--limiter", action="store_true", default=None)
    r.add_argument("--out", help="CSV file for the sampled solution")
    r.add_argument("--diagonal", action="store_true", help="also write the y = x cut (2D)")

    s = sub.add_parser("sweep", help="convergence table over a list of meshes")
    s.add_argument("--example", required=True, choices=CASE_NAMES)
    s.add_argument("-k", type=_degrees, required=True, help="degree or comma list, e.g. 1,2,3")
    s.add_argument("--cfl", type=float)
    s.add_argument("--t-final", type=float)
    s.add_argument("--scheme", choices=("ader", "rkdg"), default="ader")
    s.add_argument("--meshes", type=_meshes, required=True)
    s.add_argument("--limiter", action="store_true", default=None)
    s.add_argument("--out", help="CSV file for the error table; with several degrees one file each, suffixed _k<k>")

    b = sub.add_parser("bench", help="CPU time of ADER against RKDG")
    b.add_argument("--example", required=True, choices=CASE_NAMES)
    b.add_argument("-k", type=_degrees, required=True, help="degree or comma list")
    b.add_argument("-n", type=int, required=True)
    b.add_argument("--cfl", type=float)
    b.add_argument("--repeats", type=int, default=3)

    t = sub.add_parser("tables", help="print or dump precomputed basis tables")
    t.add_argument("--dump-basis", action="store_true")
    t.add_argument("--dim", type=int, choices=(1, 2), default=2)
    t.add_argument("-k", type=int, choices=(1, 2, 3), default=2)
    t.add_argument("--out", help="CSV file (default: stdout)")
    return p


def _cmd_run(args) -> None:
    case = catalog(args.example)
    config = SolverConfig.for_case(case, args.k, cfl=args.cfl, t_final=args.t_final, limiter=args.limiter)
    res = run_case(case, args.n, config, args.scheme)
    summary = {"example": case.name, "scheme": args.scheme, "k": args.k, "N": args.n,
               "t": res.field.t, "steps": res.steps, "wall_time": round(res.wall_time, 4)}
    exact = None
    if case.exact is not None:
        exact = reference_oracle(case, res.field.t)
        norms = error_norms(res.field, exact, case.mask)
        summary.update(l1=norms.l1, l2=norms.l2, linf=norms.linf)
    if args.out:
        files = dump_solution(res.field, args.out, exact=exact, diagonal=args.diagonal)
        summary["files"] = [str(f) for f in files]
    print(json.dumps(summary))


def _cmd_sweep(args) -> None:
    many = len(args.k) > 1
    for i, k in enumerate(args.k):
        out = _per_degree(args.out, k, many)
        spec = RunSpec(args.example, k, args.meshes, args.scheme, args.cfl, args.t_final, args.limiter, out)
        report = convergence_sweep(spec)
        if i:
            print()
        print("\n".join(report.header()))
        print(report.format_table())


def _cmd_bench(args) -> None:
    for k in args.k:
        res = timing_benchmark(args.example, k, args.n, cfl=args.cfl, repeats=args.repeats)
        print(json.dumps({"example": res.example, "k": res.k, "N": res.N, "ader_seconds": res.ader_seconds,
                          "rkdg_seconds": res.rkdg_seconds, "ratio": res.ratio}), flush=True)


def _cmd_tables(args) -> None:
    if not args.dump_basis:
        spec = build_basis(args.dim, args.k)
        print(json.dumps({"dim": spec.dim, "k": spec.k, "L": spec.L, "Ls": spec.Ls, "Ln": spec.Ln}))
        return
    tables = default_tables(args.dim, args.k)
    if args.out:
        dump_tables_csv(tables, Path(args.out))
    else:
        dump_tables_csv(tables, sys.stdout)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "bench": _cmd_bench, "tables": _cmd_tables}
    try:
        handlers[args.command](args)
    except (ValueError, KeyError) as exc:
        print(_error_line("invalid-input", type(exc).__name__, str(exc)), file=sys.stderr)
        return 2
    except OSError as exc:
        print(_error_line("io", type(exc).__name__, str(exc)), file=sys.stderr)
        return 3
    except (FloatingPointError, RuntimeError, ArithmeticError) as exc:
        print(_error_line("numerical", type(exc).__name__, str(exc)), file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
