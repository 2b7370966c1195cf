"""Compare the compiled and the pure-Python element kernels.

    python3 bench/bench_kernels.py [--repeat 3] [--csv bench/results.csv]

For each mesh the local blocks of every cell are computed with both
backends (best of ``--repeat`` runs), the maximum entrywise deviation is
checked, and the full assembly time is reported.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from tevem import kernels
from tevem.assembly import assemble
from tevem.mesh import generate_structured, geometry

CASES = [
    ("unit_square", "triangle", 32),
    ("unit_square", "triangle", 64),
    ("unit_square", "quad", 64),
    ("unit_square", "hex", 32),
    ("unit_square", "distorted_hex", 32),
    ("disk", "polar", 64),
    ("l_shape", "triangle", 64),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def max_deviation(a, b):
    dev = 0.0
    for nk in b:
        for name in ("A_W", "A_V", "B_uu", "B_uphi", "B_psiu"):
            x, y = getattr(a[nk], name), getattr(b[nk], name)
            dev = max(dev, float(np.max(np.abs(x - y)) / max(1.0, np.max(np.abs(y)))))
    return dev


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--csv", help="also write the table as CSV")
    args = ap.parse_args(argv)
    if "fast" not in kernels.available_backends():
        print("compiled kernels not built; run: pip install -e . --no-build-isolation", file=sys.stderr)
        return 1
    rows = []
    head = f"{'mesh':34s} {'cells':>6s} {'reference s':>12s} {'fast s':>9s} {'speedup':>8s} {'max dev':>9s} {'assemble s':>11s}"
    print(head)
    for domain, family, N in CASES:
        m = generate_structured(domain, family, N)
        vh = geometry(m).vertex_h
        t_ref, ref = best_of(lambda: kernels.element_blocks(m, 16.0, vh, backend="reference"), args.repeat)
        t_fast, fast = best_of(lambda: kernels.element_blocks(m, 16.0, vh, backend="fast"), args.repeat)
        t_asm, _ = best_of(lambda: assemble(m, 16.0, backend="fast"), args.repeat)
        dev = max_deviation(fast, ref)
        label = f"{domain}/{family}/N={N}"
        rows.append([label, m.n_cells, t_ref, t_fast, t_ref / t_fast, dev, t_asm])
        print(f"{label:34s} {m.n_cells:6d} {t_ref:12.3f} {t_fast:9.4f} {t_ref / t_fast:8.1f} {dev:9.1e} {t_asm:11.3f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mesh", "cells", "reference_s", "fast_s", "speedup", "max_dev", "assemble_s"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
