"""Compiled vs pure-Python kernels.

Micro benchmarks call both kernel modules in one process; the end-to-end
rows run a fresh interpreter per backend (``SUPERAKNS_PURE_PYTHON=1``
selects the fallback at import).

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

from superakns._kernels import py
from superakns.diffring import parse

try:
    from superakns._kernels import _ckernels as cy
except ImportError:
    cy = None

PIPELINE = """
import time
from superakns import _kernels, hierarchy
t = time.perf_counter()
for mu in ("symbolic", 0):
    hierarchy.clear_cache()
    hierarchy.derive_levels(5, mu)
    for n in (1, 2, 3):
        assert hierarchy.zero_curvature_residual(n, mu).is_zero
print(_kernels.BACKEND, time.perf_counter() - t)
"""


def micro_cases():
    f = parse("p*q + mu*r*s_x - 2*alpha*beta + alpha_x*beta*p^2 + 1/2*q_xx*r")
    g = parse("mu^2*p*s + alpha*beta_x + 3*p_x*q_x*r - beta*alpha_x*s + s^3")
    fi, gi = list(f.items()), list(g.items())
    odd_a, odd_b = (1, 513, 1024), (257, 769, 1025)
    even_a, even_b = ((0, 2), (257, 1), (512, 3)), ((1, 1), (257, 2), (768, 1))
    return {
        "mul_terms": lambda k: k.mul_terms(fi, gi),
        "odd_merge": lambda k: k.odd_merge(odd_a, odd_b),
        "even_merge": lambda k: k.even_merge(even_a, even_b),
    }


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def pipeline(pure: bool) -> float:
    env = dict(os.environ)
    env.pop("SUPERAKNS_PURE_PYTHON", None)
    if pure:
        env["SUPERAKNS_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    return float(out[1])


def fmt(seconds) -> str:
    if seconds is None:
        return "n/a"
    if seconds < 1e-3:
        return f"{seconds * 1e6:.2f} us"
    return f"{seconds * 1e3:.1f} ms" if seconds < 1 else f"{seconds:.2f} s"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)
    rows = []
    for name, case in micro_cases().items():
        number = 200 if name == "mul_terms" else 20000
        t_py = best_of(lambda: case(py), args.repeat, number)
        t_cy = best_of(lambda: case(cy), args.repeat, number) if cy else None
        rows.append((name, t_py, t_cy))
    t_py = min(pipeline(True) for _ in range(max(1, args.repeat // 2)))
    t_cy = min(pipeline(False) for _ in range(max(1, args.repeat // 2))) if cy else None
    rows.append(("levels + zero curvature", t_py, t_cy))
    if args.json:
        print(json.dumps([{"case": n, "python_s": a, "compiled_s": b} for n, a, b in rows], indent=2))
        return
    print(f"{'case':<26}{'python':>12}{'compiled':>12}{'speedup':>9}")
    for name, a, b in rows:
        sp = f"{a / b:.2f}x" if b else "-"
        print(f"{name:<26}{fmt(a):>12}{fmt(b):>12}{sp:>9}")


if __name__ == "__main__":
    main()
