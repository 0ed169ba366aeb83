"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Run: python bench/bench_kernels.py [--batch 64] [--hidden 256] [--repeats 200]
"""

import argparse
import time

import numpy as np

from arn import kernels


def _time(fn, repeats):
    fn()  # warm-up (triggers JIT compilation on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--hidden", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    if kernels.NUMBA_IMPL is None:
        print("numba unavailable or disabled (ARN_NUMBA=0); nothing to compare")
        return

    rng = np.random.default_rng(0)
    b, h = args.batch, args.hidden
    pre = rng.standard_normal((b, 4 * h))
    c = rng.standard_normal((b, h))
    d_hc = rng.standard_normal((b, 2 * h))
    logits = rng.standard_normal((b, 10 * h))
    param = rng.standard_normal(4 * h * h)
    grad = rng.standard_normal(param.size)
    m = np.zeros_like(param)
    v = np.zeros_like(param)

    _, saved_np = kernels.NUMPY_IMPL["lstm_cell_forward"](pre, c)
    _, saved_nb = kernels.NUMBA_IMPL["lstm_cell_forward"](pre, c)

    cases = {
        "lstm_cell_forward": (
            lambda: kernels.NUMPY_IMPL["lstm_cell_forward"](pre, c),
            lambda: kernels.NUMBA_IMPL["lstm_cell_forward"](pre, c),
        ),
        "lstm_cell_backward": (
            lambda: kernels.NUMPY_IMPL["lstm_cell_backward"](d_hc, c, *saved_np),
            lambda: kernels.NUMBA_IMPL["lstm_cell_backward"](d_hc, c, *saved_nb),
        ),
        "softmax_rows": (
            lambda: kernels.NUMPY_IMPL["softmax_rows"](logits),
            lambda: kernels.NUMBA_IMPL["softmax_rows"](logits),
        ),
        "log_softmax_rows": (
            lambda: kernels.NUMPY_IMPL["log_softmax_rows"](logits),
            lambda: kernels.NUMBA_IMPL["log_softmax_rows"](logits),
        ),
        "adam_update": (
            lambda: kernels.NUMPY_IMPL["adam_update"](param, grad, m, v, 1, 1e-3, 0.9, 0.999, 1e-8),
            lambda: kernels.NUMBA_IMPL["adam_update"](param, grad, m, v, 1, 1e-3, 0.9, 0.999, 1e-8),
        ),
    }

    print(f"batch={b} hidden={h} repeats={args.repeats}")
    print(f"{'kernel':<20} {'numpy (us)':>12} {'numba (us)':>12} {'speedup':>9}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = _time(np_fn, args.repeats) * 1e6
        t_nb = _time(nb_fn, args.repeats) * 1e6
        print(f"{name:<20} {t_np:>12.1f} {t_nb:>12.1f} {t_np / t_nb:>8.2f}x")


if __name__ == "__main__":
    main()
