"""Times the compiled LSTM layer kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Runs forward and backward passes over a few representative shapes and
prints per-call times plus the speedup ratio. Numbers are medians over
--repeats timed loops.
"""

import argparse
import timeit

import numpy as np

from kinescore.kernels import get_backend

SHAPES = [
    # (timesteps, input dim, hidden units) roughly spanning real workloads
    (50, 6, 16),
    (100, 6, 16),
    (300, 6, 16),
    (300, 16, 16),
    (100, 4, 64),
]


def layer_inputs(t_len, in_dim, hidden, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(t_len, in_dim))
    w_in = rng.normal(size=(4 * hidden, in_dim)) * 0.3
    w_rec = rng.normal(size=(4 * hidden, hidden)) * 0.3
    bias = rng.normal(size=4 * hidden) * 0.1
    return x, w_in, w_rec, bias


def time_call(fn, repeats):
    loops = max(1, int(0.05 / max(timeit.timeit(fn, number=3) / 3, 1e-7)))
    samples = [timeit.timeit(fn, number=loops) / loops for _ in range(repeats)]
    return sorted(samples)[len(samples) // 2]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timed loops per shape")
    args = parser.parse_args()

    pure = get_backend("pure")
    try:
        compiled = get_backend("compiled")
    except ImportError:
        print("compiled extension not built; run pip install -e . first")
        return 1

    header = f"{'shape (T,D,H)':>16} {'pass':>8} {'pure':>12} {'compiled':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for t_len, in_dim, hidden in SHAPES:
        x, w_in, w_rec, bias = layer_inputs(t_len, in_dim, hidden)
        gates, h, c = pure.lstm_layer_forward(x, w_in, w_rec, bias)
        dh = np.zeros_like(h)
        dh[-1] = 1.0

        for label, call_pure, call_compiled in (
            ("forward",
             lambda: pure.lstm_layer_forward(x, w_in, w_rec, bias),
             lambda: compiled.lstm_layer_forward(x, w_in, w_rec, bias)),
            ("backward",
             lambda: pure.lstm_layer_backward(x, w_in, w_rec, gates, h, c, dh),
             lambda: compiled.lstm_layer_backward(x, w_in, w_rec, gates, h, c, dh)),
        ):
            t_pure = time_call(call_pure, args.repeats)
            t_comp = time_call(call_compiled, args.repeats)
            shape = f"({t_len},{in_dim},{hidden})"
            print(f"{shape:>16} {label:>8} {t_pure * 1e6:>10.1f}us {t_comp * 1e6:>10.1f}us "
                  f"{t_pure / t_comp:>7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
