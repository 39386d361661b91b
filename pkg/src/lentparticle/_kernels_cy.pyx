# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend; signatures mirror _kernels_py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, tanh


def backend_name():
    return "cython"


cdef inline double _phi(int code, double a, double b, double c, double y) nogil:
    if code == 0:
        return y
    elif code == 1:
        return a * y + b
    elif code == 2:
        return a * sin(b * y) + c
    elif code == 3:
        return a * cos(b * y) + c
    return a * tanh(b * y)


cdef inline double _dphi(int code, double a, double b, double c, double y) nogil:
    cdef double th
    if code == 0:
        return 1.0
    elif code == 1:
        return a
    elif code == 2:
        return a * b * cos(b * y)
    elif code == 3:
        return -a * b * sin(b * y)
    th = tanh(b * y)
    return a * b * (1.0 - th * th)


def stoch_value(const double[:] jumps, int code, double a, double b, double c):
    cdef Py_ssize_t i, m = jumps.shape[0]
    cdef double y = 0.0, acc = 0.0
    for i in range(m):
        acc += _phi(code, a, b, c, y) * jumps[i]
        y += jumps[i]
    return acc


def stoch_inserted_value(const double[:] jumps, Py_ssize_t pos, double dj,
                         int code, double a, double b, double c):
    cdef Py_ssize_t i, m = jumps.shape[0]
    cdef double y = 0.0, acc = 0.0
    for i in range(pos):
        acc += _phi(code, a, b, c, y) * jumps[i]
        y += jumps[i]
    acc += _phi(code, a, b, c, y) * dj
    y += dj
    for i in range(pos, m):
        acc += _phi(code, a, b, c, y) * jumps[i]
        y += jumps[i]
    return acc


def stoch_inserted_deriv(const double[:] jumps, Py_ssize_t pos, double dj,
                         int code, double a, double b, double c):
    cdef Py_ssize_t i, m = jumps.shape[0]
    cdef double y = 0.0, acc
    for i in range(pos):
        y += jumps[i]
    acc = _phi(code, a, b, c, y)
    y += dj
    for i in range(pos, m):
        acc += _dphi(code, a, b, c, y) * jumps[i]
        y += jumps[i]
    return acc


def stoch_gamma_coeffs(const double[:] jumps, int code, double a, double b, double c):
    cdef Py_ssize_t i, m = jumps.shape[0]
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    if m == 0:
        return out_arr
    ym_arr = np.empty(m)
    cdef double[::1] ym = ym_arr
    cdef double y = 0.0, suf = 0.0
    for i in range(m):
        ym[i] = y
        y += jumps[i]
    for i in range(m - 1, -1, -1):
        out[i] = _phi(code, a, b, c, ym[i]) + suf
        suf += _dphi(code, a, b, c, ym[i]) * jumps[i]
    return out_arr


def sup_value(const double[:] incs, double h0):
    cdef Py_ssize_t i, m = incs.shape[0]
    cdef double h = h0, best = h0
    for i in range(m):
        h += incs[i]
        if h > best:
            best = h
    return best


def sup_insert_parts(const double[:] incs, double h0, Py_ssize_t pos):
    cdef Py_ssize_t i, m = incs.shape[0]
    cdef double h = h0, p = h0, s
    for i in range(pos):
        h += incs[i]
        if h > p:
            p = h
    # s starts from the value at event pos-1 (the segment the insertion
    # lands in) and accumulates the remaining event values.
    s = h
    for i in range(pos, m):
        h += incs[i]
        if h > s:
            s = h
    return p, s


def sup_atom_indicators(const double[:] incs, double h0, atom_mask):
    cdef Py_ssize_t i, m = incs.shape[0]
    if m == 0:
        return np.empty(0)
    mask = np.ascontiguousarray(atom_mask, dtype=np.uint8)
    cdef unsigned char[::1] am = mask
    h_arr = np.empty(m)
    pm_arr = np.empty(m)
    sm_arr = np.empty(m)
    cdef double[::1] h = h_arr, pm = pm_arr, sm = sm_arr
    cdef double y = h0, best = h0
    for i in range(m):
        pm[i] = best
        y += incs[i]
        h[i] = y
        if y > best:
            best = y
    best = h[m - 1]
    for i in range(m - 1, -1, -1):
        if h[i] > best:
            best = h[i]
        sm[i] = best
    out = []
    for i in range(m):
        if am[i]:
            out.append(1.0 if sm[i] >= pm[i] else 0.0)
    return np.asarray(out, dtype=float)


def triangular_value(const double[:] j1, const double[:] j2, double z1, double z2, double z3):
    cdef Py_ssize_t i, m1 = j1.shape[0], m2 = j2.shape[0]
    cdef double y1 = 0.0, y2 = 0.0, i1 = 0.0
    for i in range(m1):
        i1 += (z1 + y1) * j1[i]
        y1 += j1[i]
    for i in range(m2):
        y2 += j2[i]
    return np.array([z1 + y1, z2 + 2.0 * i1 + y2, z3 + i1 + 2.0 * y2])


def triangular_gamma(const double[:] j1, const double[:] j2, double z1):
    cdef Py_ssize_t i, m1 = j1.shape[0], m2 = j2.shape[0]
    cdef double y1t = 0.0, w, cc, sw = 0.0, swc = 0.0, swc2 = 0.0, w2 = 0.0
    for i in range(m1):
        y1t += j1[i]
    for i in range(m1):
        w = j1[i] * j1[i]
        cc = z1 + y1t - j1[i]
        sw += w
        swc += w * cc
        swc2 += w * cc * cc
    for i in range(m2):
        w2 += j2[i] * j2[i]
    g = np.zeros((3, 3))
    g[0, 0] = sw
    g[0, 1] = g[1, 0] = 2.0 * swc
    g[0, 2] = g[2, 0] = swc
    g[1, 1] = 4.0 * swc2 + w2
    g[1, 2] = g[2, 1] = 2.0 * swc2 + 2.0 * w2
    g[2, 2] = swc2 + 4.0 * w2
    return g
