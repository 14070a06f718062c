"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--p 1 2 inf]

Times single slot solves, batched derived norms and a full sup-norm
estimate, and reports the largest value disagreement between backends.
"""

import argparse
import timeit

import numpy as np

from nnorms import EstimatorConfig, estimate_sup_norm, random_spd_metric, term_operators
from nnorms.cli import random_instance
from nnorms.core import Frame, InnerProductSpace
from nnorms.kernels import available_backends, get_backend


def _slot_problems(count, dim=4, n=3):
    out = []
    for seed in range(count):
        rng = np.random.default_rng(seed)
        s = InnerProductSpace(random_spd_metric(dim, rng))
        B = term_operators(Frame.from_coords(s, rng.standard_normal((n, dim))))
        out.append((rng.standard_normal(dim), B, rng.standard_normal(dim)))
    return out


def _best(fn, repeat, number=1):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--p", nargs="+", default=["1", "2", "inf"])
    args = ap.parse_args(argv)
    backends = available_backends()
    ps = [float(p) for p in args.p]
    problems = _slot_problems(20)
    X = np.random.default_rng(0).standard_normal((20000, 4))
    f = random_instance(np.random.default_rng(1), dims=(4, 4), n=(3, 3), k=(2, 2), kind="tensor")

    print(f"backends: {', '.join(backends)}")
    header = f"{'case':<28}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}{'max rel diff':>14}"
    print(header)

    for p in ps:
        rows = {}
        values = {}
        for b in backends:
            k = get_backend(b)
            values[b] = [k.slot_solve(a, B, p, x0, 500, 1e-10)[1] for a, B, x0 in problems]
            rows[b] = _best(lambda: [k.slot_solve(a, B, p, x0, 500, 1e-10) for a, B, x0 in problems], args.repeat)
            rows[b] /= len(problems)
        _row(f"slot_solve p={p:g}", rows, backends, values)

        rows, values = {}, {}
        B = problems[0][1]
        for b in backends:
            k = get_backend(b)
            values[b] = k.derived_norms(B, X, p)
            rows[b] = _best(lambda: k.derived_norms(B, X, p), args.repeat)
        _row(f"derived_norms 20k p={p:g}", rows, backends, values)

        rows, values = {}, {}
        for b in backends:
            cfg = EstimatorConfig(restarts=16, backend=b)
            values[b] = [estimate_sup_norm(f, p, cfg).value]
            rows[b] = _best(lambda: estimate_sup_norm(f, p, cfg), max(1, args.repeat // 2))
        _row(f"sup estimate 16 restarts p={p:g}", rows, backends, values)


def _row(name, times, backends, values):
    line = f"{name:<28}" + "".join(f"{_fmt(times[b]):>14}" for b in backends)
    if len(backends) > 1:
        a, b = (np.asarray(values[x], dtype=float) for x in ("python", "cython"))
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        line += f"{times['python'] / times['cython']:>9.0f}x{diff:>14.1e}"
    print(line)


def _fmt(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:.1f} us"
    if seconds < 1:
        return f"{seconds * 1e3:.2f} ms"
    return f"{seconds:.2f} s"


if __name__ == "__main__":
    main()
