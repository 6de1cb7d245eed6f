"""Timing profile of one field evaluation and of the distance kernels."""

import argparse

from lievf.bench import REFERENCE_MS_PER_ITERATION, bench_distance_kernels, bench_field_eval


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-samples", type=int, default=5000)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 8])
    a = p.parse_args()
    print(bench_field_eval(N=a.n_samples, trials=a.trials, workers=a.workers).table())
    print(f"  reference figure: {REFERENCE_MS_PER_ITERATION[0]} +/- {REFERENCE_MS_PER_ITERATION[1]} ms (other hardware)")
    print(bench_distance_kernels().table())


if __name__ == "__main__":
    main()
