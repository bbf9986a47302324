# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM layer kernels; mirrors _kernels_pure exactly (same API, same math).

The sequence-parallel matrix products stay in numpy (BLAS); only the
inherently sequential per-timestep recurrences run as C loops, which is
where the pure version loses its time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double _sig(double z) nogil:
    cdef double ez
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    ez = exp(z)
    return ez / (1.0 + ez)


def lstm_layer_forward(x, w_in, w_rec, bias):
    """Run one LSTM layer over a whole sequence; see _kernels_pure for the contract."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w_rec_arr = np.ascontiguousarray(w_rec, dtype=np.float64)
    cdef cnp.ndarray pre_arr = np.asarray(x @ np.asarray(w_in).T + bias, dtype=np.float64)
    cdef Py_ssize_t t_len = pre_arr.shape[0]
    cdef Py_ssize_t hidden = w_rec_arr.shape[1]

    gates_arr = np.empty((t_len, 4 * hidden), dtype=np.float64)
    h_arr = np.empty((t_len, hidden), dtype=np.float64)
    c_arr = np.empty((t_len, hidden), dtype=np.float64)

    cdef double[:, ::1] pre = pre_arr
    cdef double[:, ::1] wr = w_rec_arr
    cdef double[:, ::1] gates = gates_arr
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[::1] z = np.empty(4 * hidden, dtype=np.float64)

    cdef Py_ssize_t t, j, k
    cdef double acc, it, ft, gt, ot, ct
    with nogil:
        for t in range(t_len):
            for j in range(4 * hidden):
                acc = pre[t, j]
                if t > 0:
                    for k in range(hidden):
                        acc += wr[j, k] * h[t - 1, k]
                z[j] = acc
            for j in range(hidden):
                it = _sig(z[j])
                ft = _sig(z[hidden + j])
                gt = tanh(z[2 * hidden + j])
                ot = _sig(z[3 * hidden + j])
                ct = ft * (c[t - 1, j] if t > 0 else 0.0) + it * gt
                gates[t, j] = it
                gates[t, hidden + j] = ft
                gates[t, 2 * hidden + j] = gt
                gates[t, 3 * hidden + j] = ot
                c[t, j] = ct
                h[t, j] = ot * tanh(ct)
    return gates_arr, h_arr, c_arr


def lstm_layer_backward(x, w_in, w_rec, gates, h, c, dh_out):
    """Backpropagate one layer; see _kernels_pure for the contract."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w_in_arr = np.ascontiguousarray(w_in, dtype=np.float64)
    w_rec_arr = np.ascontiguousarray(w_rec, dtype=np.float64)
    gates_arr = np.ascontiguousarray(gates, dtype=np.float64)
    h_arr = np.ascontiguousarray(h, dtype=np.float64)
    c_arr = np.ascontiguousarray(c, dtype=np.float64)
    dh_out_arr = np.ascontiguousarray(dh_out, dtype=np.float64)

    cdef Py_ssize_t t_len = h_arr.shape[0]
    cdef Py_ssize_t hidden = h_arr.shape[1]
    dz_arr = np.empty((t_len, 4 * hidden), dtype=np.float64)

    cdef double[:, ::1] wr = w_rec_arr
    cdef double[:, ::1] gt_v = gates_arr
    cdef double[:, ::1] c_v = c_arr
    cdef double[:, ::1] dho = dh_out_arr
    cdef double[:, ::1] dz = dz_arr
    cdef double[::1] dh_rec = np.zeros(hidden, dtype=np.float64)
    cdef double[::1] dc_next = np.zeros(hidden, dtype=np.float64)

    cdef Py_ssize_t t, j, k
    cdef double i_g, f_g, g_g, o_g, tc, dh, do, dc, c_prev
    with nogil:
        for t in range(t_len - 1, -1, -1):
            for j in range(hidden):
                i_g = gt_v[t, j]
                f_g = gt_v[t, hidden + j]
                g_g = gt_v[t, 2 * hidden + j]
                o_g = gt_v[t, 3 * hidden + j]
                tc = tanh(c_v[t, j])
                dh = dho[t, j] + dh_rec[j]
                do = dh * tc
                dc = dh * o_g * (1.0 - tc * tc) + dc_next[j]
                c_prev = c_v[t - 1, j] if t > 0 else 0.0
                dz[t, j] = dc * g_g * i_g * (1.0 - i_g)
                dz[t, hidden + j] = dc * c_prev * f_g * (1.0 - f_g)
                dz[t, 2 * hidden + j] = dc * i_g * (1.0 - g_g * g_g)
                dz[t, 3 * hidden + j] = do * o_g * (1.0 - o_g)
                dc_next[j] = dc * f_g
            for k in range(hidden):
                dh_rec[k] = 0.0
                for j in range(4 * hidden):
                    dh_rec[k] += dz[t, j] * wr[j, k]
    dw_in = dz_arr.T @ x
    dbias = dz_arr.sum(axis=0)
    if t_len > 1:
        dw_rec = dz_arr[1:].T @ h_arr[:-1]
    else:
        dw_rec = np.zeros_like(w_rec_arr)
    dx = dz_arr @ w_in_arr
    return dx, dw_in, dw_rec, dbias
