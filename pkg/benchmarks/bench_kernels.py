#!/usr/bin/env python3
"""Compare the compiled kernel against the pure-Python fallback.

Times the three hot paths (scalar evaluation, long orbits, envelope
squeezing) on representative built-in models and prints a small table with
the speedup of the compiled kernel.  Run from the repository root:

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from monoembed.dynamics import _prepare_programs
from monoembed.kernels import _fallback
from monoembed.models import RickerModel
from monoembed.solver import find_trapping_box

try:
    from monoembed.kernels import _native
except ImportError:
    _native = None


def best_of(repeat: int, fn, *args):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(impl, label: str, steps: int, repeat: int) -> dict[str, float]:
    model = RickerModel(r=0.5, h=1.0, delay=2)
    spec = model.map_spec()
    prog = spec.program
    times: dict[str, float] = {}

    x = np.array([1.2, 1.1, 1.0])
    t, _ = best_of(repeat, lambda: [
        impl.eval_one(prog.ops, prog.args, prog.consts, x) for _ in range(10_000)
    ])
    times["eval_one x10k"] = t

    X = np.random.default_rng(0).uniform(0.5, 3.0, size=(100_000, 3))
    t, _ = best_of(repeat, impl.eval_many, prog.ops, prog.args, prog.consts, X, 0)
    times["eval_many 100k rows"] = t

    t, res = best_of(repeat, impl.orbit, prog.ops, prog.args, prog.consts,
                     x, steps, spec.domain.lo, spec.domain.hi)
    assert res[1] == 0, f"orbit error under {label}"
    times[f"orbit {steps} steps"] = t

    box = find_trapping_box(spec, (1.2, 1.2, 1.2))
    ops, args, consts, poff = _prepare_programs([spec])
    w = spec.wiring()
    t, res = best_of(repeat, impl.squeeze, ops, args, consts, poff, spec.arity,
                     w.kinds, w.indices, w.pair_signs,
                     np.array(box.P.concat()), np.array(box.Q.concat()),
                     np.array([1.2, 1.2, 1.2]), 1e-10, 10 ** 6,
                     spec.domain.lo, spec.domain.hi)
    assert res[0] == 0, f"squeeze did not converge under {label}"
    times["squeeze to 1e-10"] = t
    return times


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200_000,
                        help="orbit length (default 200000)")
    parser.add_argument("--repeat", type=int, default=3,
                        help="best-of repetitions per measurement (default 3)")
    args = parser.parse_args()

    pure = bench(_fallback, "python", args.steps, args.repeat)
    if _native is None:
        print("compiled kernel not built; pure-Python timings only\n")
        for name, t in pure.items():
            print(f"{name:24s} {t * 1e3:10.2f} ms")
        return

    native = bench(_native, "native", args.steps, args.repeat)
    width = max(map(len, pure))
    print(f"{'kernel benchmark':{width}s} {'python':>12s} {'native':>12s} {'speedup':>9s}")
    for name, t_pure in pure.items():
        t_nat = native[name]
        print(f"{name:{width}s} {t_pure * 1e3:10.2f} ms {t_nat * 1e3:10.2f} ms "
              f"{t_pure / t_nat:8.1f}x")


if __name__ == "__main__":
    main()
