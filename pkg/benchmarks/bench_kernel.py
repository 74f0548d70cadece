"""Compare the compiled trial kernel against the pure-Python fallback.

    python benchmarks/bench_kernel.py [--trials N] [--repeat R]
"""
import argparse
import time

from greenberg_lab import _fallback, stochastic

MODELS = {
    "norm Z/3": ((), (3,)),
    "class Z/3+Z/3": ((3, 3), ()),
    "class Z/9+Z/3, norm Z/3": ((9, 3), (3,)),
    "class (Z/3)^4, norm (Z/3)^2": ((3, 3, 3, 3), (3, 3)),
}


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    compiled = stochastic._compiled
    if compiled is None:
        raise SystemExit("compiled kernel not available; build with "
                         "`python setup.py build_ext --inplace`")
    print(f"{'model':<30} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}  match")
    for name, (cm, nm) in MODELS.items():
        call = (cm, nm, True, stochastic.DEFAULT_MAX_STEPS, args.seed, 0, args.trials)
        t_py, r_py = best_time(lambda: _fallback.run_trials(*call), args.repeat)
        t_cy, r_cy = best_time(lambda: compiled.run_trials(*call), args.repeat)
        same = dict(r_py[0]) == dict(r_cy[0]) and tuple(r_py[1]) == tuple(r_cy[1])
        print(f"{name:<30} {t_py:>11.4f} {t_cy:>11.4f} {t_py / t_cy:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
