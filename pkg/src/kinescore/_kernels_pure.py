"""Pure numpy LSTM layer kernels; reference implementation for the compiled ones.

Gate layout everywhere: rows/columns come in four blocks of hidden size,
ordered (input i, forget f, cell g, output o). ``gates`` arrays store the
post-activation values, which is what the backward pass needs.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_layer_forward(x, w_in, w_rec, bias):
    """Run one LSTM layer over a whole sequence.

    x: (T, D) input; w_in: (4H, D); w_rec: (4H, H); bias: (4H,).
    Returns (gates, h, c) with shapes (T, 4H), (T, H), (T, H). Initial
    hidden and cell state are zero.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    t_len = x.shape[0]
    hidden = w_rec.shape[1]
    pre = x @ w_in.T + bias  # (T, 4H)
    gates = np.empty((t_len, 4 * hidden), dtype=np.float64)
    h = np.empty((t_len, hidden), dtype=np.float64)
    c = np.empty((t_len, hidden), dtype=np.float64)
    h_prev = np.zeros(hidden, dtype=np.float64)
    c_prev = np.zeros(hidden, dtype=np.float64)
    for t in range(t_len):
        z = pre[t] + w_rec @ h_prev
        i = _sigmoid(z[:hidden])
        f = _sigmoid(z[hidden : 2 * hidden])
        g = np.tanh(z[2 * hidden : 3 * hidden])
        o = _sigmoid(z[3 * hidden :])
        c_t = f * c_prev + i * g
        h_t = o * np.tanh(c_t)
        gates[t, :hidden] = i
        gates[t, hidden : 2 * hidden] = f
        gates[t, 2 * hidden : 3 * hidden] = g
        gates[t, 3 * hidden :] = o
        c[t] = c_t
        h[t] = h_t
        h_prev, c_prev = h_t, c_t
    return gates, h, c


def lstm_layer_backward(x, w_in, w_rec, gates, h, c, dh_out):
    """Backpropagate one layer given upstream per-timestep gradients dh_out.

    Returns (dx, dw_in, dw_rec, dbias). dh_out must already include any
    dropout masking applied by the caller between layers.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    t_len, hidden = h.shape
    dz = np.empty((t_len, 4 * hidden), dtype=np.float64)
    dh_rec = np.zeros(hidden, dtype=np.float64)
    dc_next = np.zeros(hidden, dtype=np.float64)
    for t in range(t_len - 1, -1, -1):
        i = gates[t, :hidden]
        f = gates[t, hidden : 2 * hidden]
        g = gates[t, 2 * hidden : 3 * hidden]
        o = gates[t, 3 * hidden :]
        tc = np.tanh(c[t])
        dh = dh_out[t] + dh_rec
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        c_prev = c[t - 1] if t > 0 else np.zeros(hidden)
        dz[t, :hidden] = dc * g * i * (1.0 - i)
        dz[t, hidden : 2 * hidden] = dc * c_prev * f * (1.0 - f)
        dz[t, 2 * hidden : 3 * hidden] = dc * i * (1.0 - g * g)
        dz[t, 3 * hidden :] = do * o * (1.0 - o)
        dc_next = dc * f
        dh_rec = dz[t] @ w_rec
    dw_in = dz.T @ x
    dbias = dz.sum(axis=0)
    dw_rec = dz[1:].T @ h[:-1] if t_len > 1 else np.zeros_like(w_rec)
    dx = dz @ w_in
    return dx, dw_in, dw_rec, dbias
