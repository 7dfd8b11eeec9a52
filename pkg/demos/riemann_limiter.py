"""Nonconvex Riemann problem with and without the minmod limiter.

Both runs are compared with a fine Lax-Friedrichs solution, and the
limited profile is written to riemann_noncvx.csv next to the reference.
"""

from __future__ import annotations

from pathlib import Path

from hjader.harness import dump_solution, error_norms, reference_oracle, run_case
from hjader.hamiltonian import catalog
from hjader.mesh import SolverConfig


def main(out_dir: Path = Path(".")) -> None:
    case = catalog("riemann-noncvx-1d")
    ref = reference_oracle(case, case.t_final)
    for limiter in (True, False):
        cfg = SolverConfig.for_case(case, 2, limiter=limiter)
        res = run_case(case, 81, cfg)
        e = error_norms(res.field, ref)
        l1, l2, linf = e.normalized
        print(f"limiter={limiter!s:5}  steps={res.steps}  l1={l1:.3e}  l2={l2:.3e}  linf={linf:.3e}")
        if limiter:
            files = dump_solution(res.field, out_dir / "riemann_noncvx.csv", exact=ref)
            print("wrote", *files)


if __name__ == "__main__":
    main()
