# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels.

Same signatures and operand order as ``_fallback``; rows are distributed over
OpenMP threads. Each output element is written by exactly one thread and no
reduction crosses threads, so results do not depend on ``workers``.
"""

from cython.parallel cimport prange

NAME = "compiled"


cdef inline double _inflow(double[:, ::1] qx, double[:, ::1] qy, double[:, ::1] qd,
                           double[:, ::1] qa, Py_ssize_t j, Py_ssize_t i) noexcept nogil:
    # ((E + W) + (N + S)) + ((NE + SW) + (NW + SE))
    return (((-qx[j, i + 1]) + qx[j, i]) + ((-qy[j + 1, i]) + qy[j, i])) + \
        (((-qd[j + 1, i + 1]) + qd[j, i]) + ((-qa[j + 1, i]) + qa[j, i + 1]))


def net_inflow(double[:, ::1] qx, double[:, ::1] qy, double[:, ::1] qd, double[:, ::1] qa,
               out, int workers=1):
    cdef double[:, ::1] o = out
    cdef Py_ssize_t ny = o.shape[0], nx = o.shape[1], i, j
    for j in prange(ny, nogil=True, num_threads=workers, schedule="static"):
        for i in range(nx):
            o[j, i] = _inflow(qx, qy, qd, qa, j, i)
    return out


def predict_heights(double[:, ::1] v, double[:, ::1] hdot, double area, double half_dt,
                    out, int workers=1):
    cdef double[:, ::1] o = out
    cdef Py_ssize_t ny = v.shape[0], nx = v.shape[1], i, j
    cdef double hh
    for j in prange(ny, nogil=True, num_threads=workers, schedule="static"):
        for i in range(nx):
            hh = v[j, i] / area
            hh = hh + half_dt * hdot[j, i]
            o[j, i] = hh if hh > 0.0 else 0.0
    return out


cdef inline double _pipe(double q, double ha, double hb, double ea, double eb, double w,
                         double rl, double rg, double dt, double keep) noexcept nogil:
    cdef double acc = (rg * (ha - hb) + (ea - eb)) / rl
    cdef double c = (0.5 * (ha + hb)) * w
    return (q + dt * (c * acc)) * keep


def update_flows(double[:, ::1] hh, double[:, ::1] e,
                 double[:, ::1] qx, double[:, ::1] qy, double[:, ::1] qd, double[:, ::1] qa,
                 double rg, double rlx, double rly, double rld,
                 double wx, double wy, double wd, double dt, double keep, int workers=1):
    cdef Py_ssize_t ny = hh.shape[0], nx = hh.shape[1], i, j
    for j in prange(ny, nogil=True, num_threads=workers, schedule="static"):
        for i in range(nx - 1):
            qx[j, i + 1] = _pipe(qx[j, i + 1], hh[j, i], hh[j, i + 1], e[j, i], e[j, i + 1],
                                 wx, rlx, rg, dt, keep)
        if j < ny - 1:
            for i in range(nx):
                qy[j + 1, i] = _pipe(qy[j + 1, i], hh[j, i], hh[j + 1, i], e[j, i], e[j + 1, i],
                                     wy, rly, rg, dt, keep)
            for i in range(nx - 1):
                qd[j + 1, i + 1] = _pipe(qd[j + 1, i + 1], hh[j, i], hh[j + 1, i + 1],
                                         e[j, i], e[j + 1, i + 1], wd, rld, rg, dt, keep)
            for i in range(1, nx):
                qa[j + 1, i] = _pipe(qa[j + 1, i], hh[j, i], hh[j + 1, i - 1],
                                     e[j, i], e[j + 1, i - 1], wd, rld, rg, dt, keep)


def transfers(double[:, ::1] qo, double[:, ::1] qn, double half_dt, out, int workers=1):
    cdef double[:, ::1] o = out
    cdef Py_ssize_t rows = o.shape[0], cols = o.shape[1], r, c
    for r in prange(rows, nogil=True, num_threads=workers, schedule="static"):
        for c in range(cols):
            o[r, c] = (qo[r, c] + qn[r, c]) * half_dt
    return out


cdef inline double _neg(double x) noexcept nogil:
    return x if x < 0.0 else 0.0


cdef inline double _factor(double t, double fa, double fb) noexcept nogil:
    if t > 0.0:
        return fa
    if t < 0.0:
        return fb
    return 1.0


cdef void _scale(double[:, ::1] t, double[:, ::1] qo, double[:, ::1] qn, double[:, ::1] fp,
                 Py_ssize_t oa_r, Py_ssize_t oa_c, Py_ssize_t ob_r, Py_ssize_t ob_c,
                 int workers) noexcept nogil:
    # fp is the padded factor field; (oa_r, oa_c) / (ob_r, ob_c) offset a pipe
    # slot to its source / target column in padded coordinates
    cdef Py_ssize_t rows = t.shape[0], cols = t.shape[1], r, c
    cdef double f
    for r in prange(rows, num_threads=workers, schedule="static"):
        for c in range(cols):
            f = _factor(t[r, c], fp[r + oa_r, c + oa_c], fp[r + ob_r, c + ob_c])
            t[r, c] = t[r, c] * f
            qo[r, c] = qo[r, c] * f
            qn[r, c] = qn[r, c] * f


def scale_back(double[:, ::1] v, dv_arr, t, qo, qn, int max_iter, int workers=1):
    cdef double[:, ::1] dv = dv_arr
    cdef double[:, ::1] tx = t[0], ty = t[1], td = t[2], ta = t[3]
    cdef double[:, ::1] qox = qo[0], qoy = qo[1], qod = qo[2], qoa = qo[3]
    cdef double[:, ::1] qnx = qn[0], qny = qn[1], qnd = qn[2], qna = qn[3]
    cdef Py_ssize_t ny = v.shape[0], nx = v.shape[1], i, j
    cdef int it = 0, any_neg
    cdef double out
    import numpy as np
    fp_arr = np.ones((ny + 2, nx + 2))
    cdef double[:, ::1] fp = fp_arr
    while it < max_iter:
        any_neg = 0
        for j in range(ny):
            for i in range(nx):
                if v[j, i] + dv[j, i] < 0.0:
                    any_neg = 1
                    out = ((_neg(-tx[j, i + 1]) + _neg(tx[j, i])) + (_neg(-ty[j + 1, i]) + _neg(ty[j, i]))) + \
                        ((_neg(-td[j + 1, i + 1]) + _neg(td[j, i])) + (_neg(-ta[j + 1, i]) + _neg(ta[j, i + 1])))
                    fp[j + 1, i + 1] = v[j, i] / (-out)
                else:
                    fp[j + 1, i + 1] = 1.0
        if not any_neg:
            break
        with nogil:
            # qx[r, c]: (c-1, r) -> (c, r)
            _scale(tx, qox, qnx, fp, 1, 0, 1, 1, workers)
            # qy[r, c]: (c, r-1) -> (c, r)
            _scale(ty, qoy, qny, fp, 0, 1, 1, 1, workers)
            # qd[r, c]: (c-1, r-1) -> (c, r)
            _scale(td, qod, qnd, fp, 0, 0, 1, 1, workers)
            # qa[r, c]: (c, r-1) -> (c-1, r)
            _scale(ta, qoa, qna, fp, 0, 1, 1, 0, workers)
        net_inflow(tx, ty, td, ta, dv_arr, workers)
        it += 1
    return it


def surface_fields(double[:, ::1] h, double[:, ::1] hdot, double[:, ::1] qx, double[:, ::1] qy,
                   double wx, double wy, z_arr, zdot_arr, xdot_arr, ydot_arr, int workers=1):
    cdef double[:, ::1] z = z_arr, zdot = zdot_arr, xdot = xdot_arr, ydot = ydot_arr
    cdef Py_ssize_t ny = h.shape[0], nx = h.shape[1], i, j
    cdef double a, b, c, d, fx, cx, fy, cy
    for j in prange(ny - 1, nogil=True, num_threads=workers, schedule="static"):
        for i in range(nx - 1):
            a = h[j, i]
            b = h[j + 1, i]
            c = h[j, i + 1]
            d = h[j + 1, i + 1]
            z[j, i] = ((a + d) + (b + c)) / 4.0
            zdot[j, i] = ((hdot[j, i] + hdot[j + 1, i + 1]) + (hdot[j + 1, i] + hdot[j, i + 1])) / 4.0
            fx = (qx[j, i + 1] + qx[j + 1, i + 1]) / 2.0
            cx = ((0.5 * (a + c)) * wx + (0.5 * (b + d)) * wx) / 2.0
            fy = (qy[j + 1, i] + qy[j + 1, i + 1]) / 2.0
            cy = ((0.5 * (a + b)) * wy + (0.5 * (c + d)) * wy) / 2.0
            xdot[j, i] = fx / cx if cx > 0.0 else 0.0
            ydot[j, i] = fy / cy if cy > 0.0 else 0.0
