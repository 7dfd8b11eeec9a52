"""CPU time of one-stage ADER-DG against RKDG on the 2D Burgers case.

Both schemes share CFL and final time.  Set OMP_NUM_THREADS=1 before
running for serial numbers; a small mesh keeps the demo short.
"""

from __future__ import annotations

import sys

from hjader.harness import timing_benchmark


def main(N: int = 40) -> None:
    print(f"{'k':>2} {'ader [s]':>10} {'rkdg [s]':>10} {'ratio':>6}")
    for k in (1, 2, 3):
        b = timing_benchmark("burgers-2d", k, N)
        print(f"{k:>2} {b.ader_seconds:10.3f} {b.rkdg_seconds:10.3f} {b.ratio:6.2f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 40)
