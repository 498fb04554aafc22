"""Compare the compiled and numpy training kernels on a synthetic workload.

Run as a script: python benchmarks/bench_kernels.py [--rows N] [--cols D]
The compiled path is warmed up once before timing so JIT compilation does
not count against it.
"""

import argparse
import time

import numpy as np

from trialscreen import _kernels


def synthetic_problem(rows, cols, nnz_per_row, seed):
    rng = np.random.default_rng(seed)
    indptr = np.arange(0, (rows + 1) * nnz_per_row, nnz_per_row, dtype=np.int64)
    indices = rng.integers(0, cols, size=rows * nnz_per_row, dtype=np.int64)
    data = rng.normal(size=rows * nnz_per_row)
    row_norms = np.sqrt(np.add.reduceat(data * data, indptr[:-1]))
    data /= np.repeat(row_norms, nnz_per_row)
    y = rng.integers(0, 2, size=rows).astype(np.float64)
    sw = np.where(y == 1.0, 1.5, 1.0)
    return indptr, indices, data, y, sw


def run(fn, args, epochs, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        w, b, losses = fn(*args, 0.5, epochs, 1e-4)
        best = min(best, time.perf_counter() - start)
    return best, losses[-1]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--cols", type=int, default=5000)
    parser.add_argument("--nnz", type=int, default=24, help="nonzeros per row")
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    indptr, indices, data, y, sw = synthetic_problem(
        args.rows, args.cols, args.nnz, args.seed
    )
    problem = (indptr, indices, data, y, sw, args.cols)
    print(
        f"rows={args.rows} cols={args.cols} nnz/row={args.nnz} "
        f"epochs={args.epochs} repeats={args.repeats}"
    )

    numpy_time, numpy_loss = run(_kernels.train_numpy, problem, args.epochs, args.repeats)
    print(f"numpy : {numpy_time:8.3f}s  final loss {numpy_loss:.6f}")

    if _kernels.train_numba is None:
        print("numba : unavailable in this environment")
        return

    # Warm-up triggers compilation outside the timed region.
    _kernels.train_numba(*problem, 0.5, 1, 1e-4)
    numba_time, numba_loss = run(_kernels.train_numba, problem, args.epochs, args.repeats)
    speedup = numpy_time / numba_time if numba_time else float("inf")
    print(f"numba : {numba_time:8.3f}s  final loss {numba_loss:.6f}")
    print(f"speedup: {speedup:.2f}x (numpy/numba), active path: {_kernels.backend_name()}")
    if abs(numpy_loss - numba_loss) > 1e-9 * max(1.0, abs(numpy_loss)):
        print("WARNING: kernel losses diverge beyond tolerance")


if __name__ == "__main__":
    main()
