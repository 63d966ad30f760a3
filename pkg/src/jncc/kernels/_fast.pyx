# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend; `_pure` holds the reference semantics."""

import numpy as np

from libc.math cimport atanh, fabs, tanh

DEF ATANH_LIM = 0.999999999999999  # 1 - 1e-15


cdef inline double _clip(double x, double lo, double hi) nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


cdef int _bp_single(const int[::1] chk_ptr, const int[::1] edge_var,
                    const double[::1] llr, double[::1] c2v, double[::1] scratch,
                    double[::1] fwd, double[::1] mfwd, double[::1] totals,
                    int max_iters, double clamp, bint min_sum, bint early_stop,
                    int* converged) nogil:
    cdef:
        Py_ssize_t n_checks = chk_ptr.shape[0] - 1
        Py_ssize_t n_edges = edge_var.shape[0]
        Py_ssize_t n_vars = llr.shape[0]
        Py_ssize_t c, e, k, s, t, d
        int it, par
        bint ok
        double v, bwd, loo, m, sbwd, mag

    for e in range(n_edges):
        c2v[e] = 0.0
    for k in range(n_vars):
        totals[k] = llr[k]

    converged[0] = 0
    for it in range(1, max_iters + 1):
        if min_sum:
            # scratch holds mu = -v2c; leave-one-out sign product and min.
            for e in range(n_edges):
                scratch[e] = -_clip(totals[edge_var[e]] - c2v[e], -clamp, clamp)
            for c in range(n_checks):
                s = chk_ptr[c]
                t = chk_ptr[c + 1]
                d = t - s
                fwd[0] = 1.0
                mfwd[0] = clamp + 1.0
                for k in range(d):
                    v = scratch[s + k]
                    fwd[k + 1] = -fwd[k] if v < 0 else fwd[k]
                    mag = fabs(v)
                    mfwd[k + 1] = mag if mag < mfwd[k] else mfwd[k]
                sbwd = 1.0
                mag = clamp + 1.0
                for k in range(d - 1, -1, -1):
                    v = fwd[k] * sbwd
                    loo = mfwd[k] if mfwd[k] < mag else mag
                    m = -v * loo
                    if scratch[s + k] < 0:
                        sbwd = -sbwd
                    if fabs(scratch[s + k]) < mag:
                        mag = fabs(scratch[s + k])
                    scratch[s + k] = _clip(m, -clamp, clamp)
        else:
            for e in range(n_edges):
                v = _clip(totals[edge_var[e]] - c2v[e], -clamp, clamp)
                scratch[e] = tanh(-0.5 * v)
            for c in range(n_checks):
                s = chk_ptr[c]
                t = chk_ptr[c + 1]
                d = t - s
                fwd[0] = 1.0
                for k in range(d):
                    fwd[k + 1] = fwd[k] * scratch[s + k]
                bwd = 1.0
                for k in range(d - 1, -1, -1):
                    loo = fwd[k] * bwd
                    bwd = bwd * scratch[s + k]
                    m = -2.0 * atanh(_clip(loo, -ATANH_LIM, ATANH_LIM))
                    scratch[s + k] = _clip(m, -clamp, clamp)
        for e in range(n_edges):
            c2v[e] = scratch[e]
        for k in range(n_vars):
            totals[k] = llr[k]
        for e in range(n_edges):
            totals[edge_var[e]] += c2v[e]
        ok = True
        for c in range(n_checks):
            par = 0
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                if totals[edge_var[e]] > 0.0:
                    par ^= 1
            if par:
                ok = False
                break
        converged[0] = 1 if ok else 0
        if ok and early_stop:
            return it
    return max_iters


def bp_run_batch(graph, double[:, ::1] llrs, int max_iters, double clamp,
                 bint min_sum, bint early_stop):
    cdef:
        int[::1] chk_ptr = np.ascontiguousarray(graph.chk_ptr, dtype=np.int32)
        int[::1] edge_var = np.ascontiguousarray(graph.edge_var, dtype=np.int32)
        Py_ssize_t b = llrs.shape[0]
        Py_ssize_t n_vars = llrs.shape[1]
        Py_ssize_t n_edges = edge_var.shape[0]
        Py_ssize_t i
        int conv_flag

    post = np.empty((b, n_vars), dtype=np.float64)
    iters = np.empty(b, dtype=np.int64)
    conv = np.zeros(b, dtype=np.uint8)
    cdef double[:, ::1] post_v = post
    cdef long[::1] iters_v = iters
    cdef unsigned char[::1] conv_v = conv
    cdef double[::1] c2v = np.empty(n_edges, dtype=np.float64)
    cdef double[::1] scratch = np.empty(n_edges, dtype=np.float64)
    cdef double[::1] fwd = np.empty(graph.max_deg + 1, dtype=np.float64)
    cdef double[::1] mfwd = np.empty(graph.max_deg + 1, dtype=np.float64)

    for i in range(b):
        iters_v[i] = _bp_single(chk_ptr, edge_var, llrs[i], c2v, scratch, fwd,
                                mfwd, post_v[i], max_iters, clamp, min_sum,
                                early_stop, &conv_flag)
        conv_v[i] = conv_flag
    return post, iters, conv.astype(bool)


def peel_run(graph, const unsigned char[::1] known, const unsigned char[::1] values):
    cdef:
        int[::1] chk_ptr = np.ascontiguousarray(graph.chk_ptr, dtype=np.int32)
        int[::1] edge_var = np.ascontiguousarray(graph.edge_var, dtype=np.int32)
        int[::1] edge_chk = np.ascontiguousarray(graph.edge_chk, dtype=np.int32)
        int[::1] var_ptr = np.ascontiguousarray(graph.var_ptr, dtype=np.int32)
        int[::1] var_edges = np.ascontiguousarray(graph.var_edges, dtype=np.int32)
        Py_ssize_t n_checks = chk_ptr.shape[0] - 1
        Py_ssize_t n_edges = edge_var.shape[0]
        Py_ssize_t c, e, v, top
        int c2
        long steps = 0
        unsigned char val

    resolved = np.array(known, dtype=np.uint8, copy=True)
    vals = np.array(values, dtype=np.uint8, copy=True)
    vals[resolved == 0] = 0
    unknowns = np.zeros(n_checks, dtype=np.int32)
    acc = np.zeros(n_checks, dtype=np.uint8)
    stack = np.empty(n_edges + n_checks + 1, dtype=np.int32)
    cdef unsigned char[::1] resolved_v = resolved
    cdef unsigned char[::1] vals_v = vals
    cdef int[::1] unknowns_v = unknowns
    cdef unsigned char[::1] acc_v = acc
    cdef int[::1] stack_v = stack

    with nogil:
        top = 0
        for c in range(n_checks):
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                v = edge_var[e]
                if resolved_v[v]:
                    acc_v[c] ^= vals_v[v]
                else:
                    unknowns_v[c] += 1
            if unknowns_v[c] == 1:
                stack_v[top] = <int> c
                top += 1
        while top > 0:
            top -= 1
            c = stack_v[top]
            if unknowns_v[c] != 1:
                continue
            v = -1
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                if not resolved_v[edge_var[e]]:
                    v = edge_var[e]
                    break
            val = acc_v[c]
            resolved_v[v] = 1
            vals_v[v] = val
            steps += 1
            for e in range(var_ptr[v], var_ptr[v + 1]):
                c2 = edge_chk[var_edges[e]]
                unknowns_v[c2] -= 1
                acc_v[c2] ^= val
                if unknowns_v[c2] == 1:
                    stack_v[top] = c2
                    top += 1
    return resolved, vals, int(steps)
