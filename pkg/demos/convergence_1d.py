"""Error table for the linear sin(x) case at degrees 1 to 3.

Each degree runs with its default CFL to t = 1 and prints l2/l1/linf
errors with the observed orders between consecutive meshes.
"""

from __future__ import annotations

from hjader.harness import RunSpec, convergence_sweep


def main() -> None:
    for k in (1, 2, 3):
        report = convergence_sweep(RunSpec("linear-sinx-1d", k, (20, 40, 80, 160)))
        print(f"k={k}  cfl={report.cfl}  wall={report.wall_time:.2f}s")
        print(report.format_table())
        print()


if __name__ == "__main__":
    main()
