"""Compare the compiled kernels with their numpy twins.

Times each kernel on a few sizes, then one end-to-end CGALP run on the
projection problem and a short matrix-completion run, once per backend.

    python3 benchmarks/bench_backends.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import sys
import timeit

import numpy as np

from cgalp import _backend
from cgalp.problems import gen_matcomp_instance, gen_projection_instance, matcomp_problem
from cgalp.schedule import ParameterSchedule
from cgalp.solver import run


def kernel_cases(rng):
    cases = []
    for n in (8, 1024, 65536):
        x = rng.standard_normal(n)
        lo, hi = -np.ones(n), np.ones(n)
        cases += [
            (f"soft_threshold n={n}", lambda k, x=x: k.soft_threshold(x, 0.3)),
            (f"project_l1_ball n={n}", lambda k, x=x: k.project_l1_ball(x, 1.0)),
            (f"lmo_l1_ball n={n}", lambda k, x=x: k.lmo_l1_ball(x, 1.0)),
            (f"lmo_box n={n}", lambda k, x=x, lo=lo, hi=hi: k.lmo_box(lo, hi, x)),
        ]
    for m in (16, 64, 256):
        M = rng.standard_normal((m, m))
        v0 = rng.standard_normal(m)
        cases.append((f"power_iteration {m}x{m}",
                      lambda k, M=M, v0=v0: k.power_iteration(M, v0, 1e-9, 200)))
    return cases


def end_to_end_cases():
    proj = gen_projection_instance(0).problem
    s_proj = ParameterSchedule(a=0, b=0, delta=0.5, rho=5.0, c=1.0)
    mc = matcomp_problem(gen_matcomp_instance(32, 0.8, 0).data)
    s_mc = ParameterSchedule(a=0, b=0, delta=0.5, rho=15.0, c=1.0)
    return [
        ("projection CGALP 10^4 iters", lambda k: run(proj, s_proj, max_iters=10_000)),
        ("matcomp N=32 CGALP 500 iters", lambda k: run(mc, s_mc, max_iters=500)),
    ]


def best_time(fn, kernels, repeat, number=None):
    t = timeit.Timer(lambda: fn(kernels))
    if number is None:
        number, _ = t.autorange()
    return min(t.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None, help="also write results here")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "cython" not in backends:
        print("compiled extension not built; only the numpy backend is timed", file=sys.stderr)
    rng = np.random.default_rng(0)
    rows = []
    for label, fn in kernel_cases(rng):
        rows.append((label, {b: best_time(fn, _backend.get(b), args.repeat) for b in backends}))
    for label, fn in end_to_end_cases():
        times = {}
        for b in backends:
            with _backend.use_backend(b) as k:
                times[b] = best_time(fn, k, min(args.repeat, 3), number=1)
        rows.append((label, times))

    width = max(len(r[0]) for r in rows)
    head = f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends)
    if len(backends) > 1:
        head += "  speedup"
    print(head)
    for label, times in rows:
        line = f"{label:<{width}}  " + "  ".join(f"{times[b] * 1e6:>10.1f}us" for b in backends)
        if len(backends) > 1:
            line += f"  {times['python'] / times['cython']:>6.2f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({label: times for label, times in rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
