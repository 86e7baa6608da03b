"""Scalar-loop reference for the LSTM encoder, MLP and generator.

Writes tests/data/golden_forward.json. Layouts:
  LSTM: W_x (4H x n, row-major), W_h (4H x H), b (4H); gate blocks i, f, o, g.
  MLP:  per layer W (out x in, row-major) then b.
"""
import json
import math
import random
import sys
from pathlib import Path


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm(params, n, H, seq):
    wx = params[: 4 * H * n]
    wh = params[4 * H * n : 4 * H * n + 4 * H * H]
    b = params[4 * H * n + 4 * H * H :]
    h = [0.0] * H
    c = [0.0] * H
    for x in seq:
        z = []
        for r in range(4 * H):
            acc = b[r]
            for j in range(n):
                acc += wx[r * n + j] * x[j]
            for j in range(H):
                acc += wh[r * H + j] * h[j]
            z.append(acc)
        new_h = []
        for u in range(H):
            i = sigmoid(z[u])
            f = sigmoid(z[H + u])
            o = sigmoid(z[2 * H + u])
            g = math.tanh(z[3 * H + u])
            c[u] = f * c[u] + i * g
            new_h.append(o * math.tanh(c[u]))
        h = new_h
    return h


def mlp(params, sizes, hidden_act, out_act, x):
    pos = 0
    a = list(x)
    for layer in range(len(sizes) - 1):
        fan_in, fan_out = sizes[layer], sizes[layer + 1]
        w = params[pos : pos + fan_in * fan_out]
        pos += fan_in * fan_out
        bias = params[pos : pos + fan_out]
        pos += fan_out
        z = []
        for r in range(fan_out):
            acc = bias[r]
            for j in range(fan_in):
                acc += w[r * fan_in + j] * a[j]
            z.append(acc)
        act = out_act if layer == len(sizes) - 2 else hidden_act
        a = [act(v) for v in z]
    assert pos == len(params)
    return a


def main():
    rng = random.Random(20240611)

    def draw(count, scale=1.0):
        return [round(rng.uniform(-scale, scale), 6) for _ in range(count)]

    n, H, k = 3, 4, 2
    lstm_params = draw(4 * H * (n + H + 1))
    seq = [draw(n, 2.0) for _ in range(k)]

    mlp_sizes = [3, 5, 4, 2]
    mlp_count = sum(mlp_sizes[i] * mlp_sizes[i + 1] + mlp_sizes[i + 1] for i in range(len(mlp_sizes) - 1))
    mlp_params = draw(mlp_count)
    mlp_x = draw(3, 2.0)

    gen_sizes = [H, 3, 2]
    gen_count = sum(gen_sizes[i] * gen_sizes[i + 1] + gen_sizes[i + 1] for i in range(len(gen_sizes) - 1))
    gen_params = draw(gen_count, 2.0)
    ranges = [[0.01, 0.10], [0.016, 0.024]]
    encoding = lstm(lstm_params, n, H, seq)
    o = mlp(gen_params, gen_sizes, math.tanh, sigmoid, encoding)
    hyper = [lo + oj * (hi - lo) for oj, (lo, hi) in zip(o, ranges)]

    out = {
        "lstm": {"input_dim": n, "hidden_dim": H, "sequence_length": k, "params": lstm_params,
                 "sequence": seq, "expected": lstm(lstm_params, n, H, seq),
                 "expected_first_step": lstm(lstm_params, n, H, seq[:1])},
        "mlp": {"sizes": mlp_sizes, "params": mlp_params, "input": mlp_x,
                "expected": mlp(mlp_params, mlp_sizes, math.tanh, lambda v: v, mlp_x)},
        "generator": {"sizes": gen_sizes, "params": gen_params, "encoding": encoding,
                      "ranges": ranges, "expected_unit": o, "expected": hyper},
    }
    path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data" / "golden_forward.json"
    path.write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
