# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot numerical kernels.

Interface-identical twin of ``localcap._kernels_py``; selected by
``localcap.kernels`` when importable.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, fabs, hypot, isfinite, log, pow, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND_NAME = "cython"

ALPHA_DIRECT_MAX = 32.0

EVAL_OK = 0
EVAL_AT_TRANSMITTER = 1
EVAL_ON_INTERFERER = 2

TRACE_CLOSED = 0
TRACE_MAX_STEPS = 1
TRACE_DEGENERATE = 2
TRACE_SINGULAR = 3

cdef double _ALPHA_DIRECT_MAX = 32.0
cdef double _TINY_GRAD = 1e-300

cdef int _EVAL_OK = 0
cdef int _EVAL_AT_TRANSMITTER = 1
cdef int _EVAL_ON_INTERFERER = 2


cdef inline double _inv_ipow(double r2, int m) noexcept nogil:
    """r2^(-m) by repeated multiplication, m >= 1."""
    cdef double acc = r2
    cdef int k
    for k in range(m - 1):
        acc *= r2
    return 1.0 / acc


cdef inline int _half_alpha_int(double alpha) noexcept nogil:
    """m with alpha == 2*m exactly, else 0."""
    cdef int m = <int> (0.5 * alpha)
    if m >= 1 and 2.0 * m == alpha:
        return m
    return 0


cdef int _eval(const double* xs, const double* ys, Py_ssize_t n,
               Py_ssize_t i, double zx, double zy, double alpha,
               double cutoff2, bint need_grad, double* out) noexcept nogil:
    """SIR (and gradient) of transmitter i at (zx, zy).

    out[0] = S, out[1] = gx, out[2] = gy.  Returns a status code.
    """
    cdef double dxi = zx - xs[i]
    cdef double dyi = zy - ys[i]
    cdef double ri2 = dxi * dxi + dyi * dyi
    cdef double dx, dy, r2, u, ui, den, pvx, pvy, lmin, lr, s
    cdef Py_ssize_t j
    cdef int m = _half_alpha_int(alpha)
    out[1] = 0.0
    out[2] = 0.0
    if ri2 == 0.0:
        out[0] = INFINITY
        return _EVAL_AT_TRANSMITTER
    den = 0.0
    pvx = 0.0
    pvy = 0.0
    if alpha <= _ALPHA_DIRECT_MAX:
        ui = _inv_ipow(ri2, m) if m else pow(ri2, -0.5 * alpha)
        for j in range(n):
            if j == i:
                continue
            dx = zx - xs[j]
            dy = zy - ys[j]
            r2 = dx * dx + dy * dy
            if r2 > cutoff2:
                continue
            if r2 == 0.0:
                out[0] = 0.0
                return _EVAL_ON_INTERFERER
            u = _inv_ipow(r2, m) if m else pow(r2, -0.5 * alpha)
            den += u
            if need_grad:
                pvx += u * dx / r2
                pvy += u * dy / r2
    else:
        # log-domain normalization keeps huge exponents in range
        lmin = 0.5 * log(ri2)
        for j in range(n):
            if j == i:
                continue
            dx = zx - xs[j]
            dy = zy - ys[j]
            r2 = dx * dx + dy * dy
            if r2 > cutoff2:
                continue
            if r2 == 0.0:
                out[0] = 0.0
                return _EVAL_ON_INTERFERER
            lr = 0.5 * log(r2)
            if lr < lmin:
                lmin = lr
        ui = exp(-alpha * (0.5 * log(ri2) - lmin))
        for j in range(n):
            if j == i:
                continue
            dx = zx - xs[j]
            dy = zy - ys[j]
            r2 = dx * dx + dy * dy
            if r2 > cutoff2:
                continue
            u = exp(-alpha * (0.5 * log(r2) - lmin))
            den += u
            if need_grad:
                pvx += u * dx / r2
                pvy += u * dy / r2
    if den == 0.0:
        out[0] = INFINITY
        return _EVAL_OK
    s = ui / den
    out[0] = s
    if need_grad:
        out[1] = -alpha * s * (dxi / ri2 - pvx / den)
        out[2] = -alpha * s * (dyi / ri2 - pvy / den)
    return _EVAL_OK


def sir_eval(double[::1] xs, double[::1] ys, Py_ssize_t i, double zx,
             double zy, double alpha, double cutoff2, bint need_grad):
    cdef double out[3]
    cdef int status = _eval(&xs[0], &ys[0], xs.shape[0], i, zx, zy, alpha,
                            cutoff2, need_grad, out)
    return status, out[0], out[1], out[2]


def g_eval(double[::1] xs, double[::1] ys, Py_ssize_t i, double zx,
           double zy, double alpha, double cutoff2):
    cdef double out[3]
    cdef int status = _eval(&xs[0], &ys[0], xs.shape[0], i, zx, zy, alpha,
                            cutoff2, False, out)
    cdef double s = out[0]
    if status == _EVAL_AT_TRANSMITTER:
        return 1.0
    if status == _EVAL_ON_INTERFERER:
        return 0.0
    if s == INFINITY:
        return 1.0
    return s / (1.0 + s)


def count_at_least(double[::1] xs, double[::1] ys, double zx, double zy,
                   double K, double alpha, double cutoff2):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t j
    cdef double dx, dy, r2, lr, lmin, total, denom
    cdef double* u = <double*> malloc(n * sizeof(double))
    cdef unsigned char* inc = <unsigned char*> malloc(n)
    cdef int count = 0
    cdef bint first
    if u == NULL or inc == NULL:
        free(u)
        free(inc)
        raise MemoryError()
    try:
        for j in range(n):
            dx = zx - xs[j]
            dy = zy - ys[j]
            r2 = dx * dx + dy * dy
            if r2 == 0.0:
                return 1
            u[j] = r2
            inc[j] = 1 if r2 <= cutoff2 else 0
        if alpha <= _ALPHA_DIRECT_MAX:
            for j in range(n):
                u[j] = pow(u[j], -0.5 * alpha)
        else:
            lmin = 0.0
            first = True
            for j in range(n):
                lr = 0.5 * log(u[j])
                if first or lr < lmin:
                    lmin = lr
                    first = False
            for j in range(n):
                u[j] = exp(-alpha * (0.5 * log(u[j]) - lmin))
        total = 0.0
        for j in range(n):
            if inc[j]:
                total += u[j]
        for j in range(n):
            denom = total - (u[j] if inc[j] else 0.0)
            if denom <= 0.0:
                count += 1
            elif u[j] / denom >= K:
                count += 1
        return count
    finally:
        free(u)
        free(inc)


def trace_levelset(double[::1] xs, double[::1] ys, Py_ssize_t i, double K,
                   double alpha, double cutoff2, double x0, double y0,
                   double dt, long max_steps, long min_steps,
                   double closure_tol, double newton_tol,
                   long newton_max_iters, bint corrector):
    cdef Py_ssize_t n = xs.shape[0]
    cdef const double* px = &xs[0]
    cdef const double* py = &ys[0]
    cdef double zix = xs[i]
    cdef double ziy = ys[i]
    cdef double zx = x0, zy = y0
    cdef double area_dot = 0.0
    cdef double out[3]
    cdef double s, gx, gy, gn, g2, step
    cdef long k
    cdef long it
    cdef int st
    cdef Py_ssize_t cap = 4096
    cdef Py_ssize_t m = 1
    verts = np.empty((cap, 2), dtype=np.float64)
    cdef double[:, ::1] v = verts
    v[0, 0] = x0
    v[0, 1] = y0
    for k in range(max_steps):
        st = _eval(px, py, n, i, zx, zy, alpha, cutoff2, True, out)
        s = out[0]
        gx = out[1]
        gy = out[2]
        if st != _EVAL_OK or not isfinite(s):
            return np.asarray(verts[:m]), TRACE_SINGULAR, area_dot
        gn = hypot(gx, gy)
        if gn < _TINY_GRAD:
            return np.asarray(verts[:m]), TRACE_DEGENERATE, area_dot
        area_dot += -0.5 * ((zx - zix) * gx + (zy - ziy) * gy) / gn * dt
        zx += dt * gy / gn
        zy -= dt * gx / gn
        if corrector:
            for it in range(newton_max_iters):
                st = _eval(px, py, n, i, zx, zy, alpha, cutoff2, True, out)
                s = out[0]
                gx = out[1]
                gy = out[2]
                if st != _EVAL_OK or not isfinite(s):
                    return np.asarray(verts[:m]), TRACE_SINGULAR, area_dot
                if fabs(s - K) <= newton_tol * K:
                    break
                g2 = gx * gx + gy * gy
                if g2 < _TINY_GRAD:
                    return np.asarray(verts[:m]), TRACE_DEGENERATE, area_dot
                step = (s - K) / g2
                zx -= step * gx
                zy -= step * gy
        if m == cap:
            cap *= 2
            bigger = np.empty((cap, 2), dtype=np.float64)
            bigger[:m] = verts[:m]
            verts = bigger
            v = verts
        v[m, 0] = zx
        v[m, 1] = zy
        m += 1
        if k + 1 >= min_steps and hypot(zx - x0, zy - y0) <= closure_tol:
            return np.asarray(verts[:m]), TRACE_CLOSED, area_dot
    return np.asarray(verts[:m]), TRACE_MAX_STEPS, area_dot


def raster_count(double[::1] xs, double[::1] ys, Py_ssize_t i, double K,
                 double alpha, double cutoff2, double cx, double cy,
                 double cell, Py_ssize_t n):
    cdef Py_ssize_t nt = xs.shape[0]
    cdef const double* px = &xs[0]
    cdef const double* py = &ys[0]
    cdef double out[3]
    cdef Py_ssize_t ix, iy
    cdef double zx, zy
    cdef long count = 0
    cdef bint edge_hit = False
    cdef bint inside
    cdef int st
    cdef double half = (n - 1) / 2.0
    with nogil:
        for iy in range(n):
            zy = cy + (iy - half) * cell
            for ix in range(n):
                zx = cx + (ix - half) * cell
                st = _eval(px, py, nt, i, zx, zy, alpha, cutoff2, False, out)
                if st == _EVAL_AT_TRANSMITTER:
                    inside = True
                elif st == _EVAL_ON_INTERFERER:
                    inside = False
                else:
                    inside = out[0] >= K
                if inside:
                    count += 1
                    if ix == 0 or ix == n - 1 or iy == 0 or iy == n - 1:
                        edge_hit = True
    return count, edge_hit


cdef struct CellGrid:
    Py_ssize_t ncx
    Py_ssize_t ncy
    double cell
    double xmin
    double ymin
    Py_ssize_t* starts   # ncells + 1
    Py_ssize_t* items    # n


cdef int _build_grid(const double* xs, const double* ys, Py_ssize_t n,
                     double cell, CellGrid* g) except -1:
    cdef Py_ssize_t j, c, ncells
    cdef double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0]
    for j in range(1, n):
        if xs[j] < xmin: xmin = xs[j]
        if xs[j] > xmax: xmax = xs[j]
        if ys[j] < ymin: ymin = ys[j]
        if ys[j] > ymax: ymax = ys[j]
    g.cell = cell
    g.xmin = xmin
    g.ymin = ymin
    g.ncx = <Py_ssize_t>((xmax - xmin) / cell) + 1
    g.ncy = <Py_ssize_t>((ymax - ymin) / cell) + 1
    ncells = g.ncx * g.ncy
    g.starts = <Py_ssize_t*> malloc((ncells + 1) * sizeof(Py_ssize_t))
    g.items = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* counts = <Py_ssize_t*> malloc(ncells * sizeof(Py_ssize_t))
    if g.starts == NULL or g.items == NULL or counts == NULL:
        free(g.starts)
        free(g.items)
        free(counts)
        raise MemoryError()
    for c in range(ncells):
        counts[c] = 0
    for j in range(n):
        c = _cell_of(g, xs[j], ys[j])
        counts[c] += 1
    g.starts[0] = 0
    for c in range(ncells):
        g.starts[c + 1] = g.starts[c] + counts[c]
        counts[c] = 0
    for j in range(n):
        c = _cell_of(g, xs[j], ys[j])
        g.items[g.starts[c] + counts[c]] = j
        counts[c] += 1
    free(counts)
    return 0


cdef inline Py_ssize_t _cell_of(CellGrid* g, double x, double y) noexcept nogil:
    cdef Py_ssize_t cx = <Py_ssize_t>((x - g.xmin) / g.cell)
    cdef Py_ssize_t cy = <Py_ssize_t>((y - g.ymin) / g.cell)
    if cx >= g.ncx: cx = g.ncx - 1
    if cy >= g.ncy: cy = g.ncy - 1
    return cy * g.ncx + cx


cdef void _free_grid(CellGrid* g) noexcept:
    free(g.starts)
    free(g.items)


def select_exclusion(double[::1] xs, double[::1] ys,
                     Py_ssize_t[::1] order, double d):
    """Random sequential admission with strict exclusion distance d."""
    cdef Py_ssize_t n = xs.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.intp)
    cdef const double* px = &xs[0]
    cdef const double* py = &ys[0]
    cdef CellGrid g
    # clamped cell size keeps the bucket table bounded; scan radius stays 1
    cdef double span = 0.0
    cdef Py_ssize_t j
    for j in range(n):
        if fabs(px[j]) > span: span = fabs(px[j])
        if fabs(py[j]) > span: span = fabs(py[j])
    cdef double cell = d if d > span / 1024.0 else span / 1024.0
    _build_grid(px, py, n, cell, &g)
    cdef unsigned char* alive = <unsigned char*> malloc(n)
    admitted_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] admitted = admitted_arr
    cdef Py_ssize_t n_adm = 0
    cdef Py_ssize_t oi, idx, cx, cy, ccx, ccy, c, t, jj
    cdef double qx, qy, dx, dy
    cdef double d2 = d * d
    if alive == NULL:
        _free_grid(&g)
        raise MemoryError()
    for j in range(n):
        alive[j] = 1
    with nogil:
        for oi in range(n):
            idx = order[oi]
            if not alive[idx]:
                continue
            admitted[n_adm] = idx
            n_adm += 1
            alive[idx] = 0
            qx = px[idx]
            qy = py[idx]
            ccx = <Py_ssize_t>((qx - g.xmin) / g.cell)
            ccy = <Py_ssize_t>((qy - g.ymin) / g.cell)
            if ccx >= g.ncx: ccx = g.ncx - 1
            if ccy >= g.ncy: ccy = g.ncy - 1
            for cy in range(ccy - 1 if ccy > 0 else 0,
                            (ccy + 2) if ccy + 2 <= g.ncy else g.ncy):
                for cx in range(ccx - 1 if ccx > 0 else 0,
                                (ccx + 2) if ccx + 2 <= g.ncx else g.ncx):
                    c = cy * g.ncx + cx
                    for t in range(g.starts[c], g.starts[c + 1]):
                        jj = g.items[t]
                        if not alive[jj]:
                            continue
                        dx = px[jj] - qx
                        dy = py[jj] - qy
                        if dx * dx + dy * dy < d2:
                            alive[jj] = 0
    free(alive)
    _free_grid(&g)
    return admitted_arr[:n_adm].copy()


def select_csma(double[::1] xs, double[::1] ys, Py_ssize_t[::1] order,
                double theta, double alpha, double r_int):
    """Random sequential admission under a carrier-sense threshold."""
    cdef Py_ssize_t n = xs.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.intp)
    cdef const double* px = &xs[0]
    cdef const double* py = &ys[0]
    cdef bint finite_r = isfinite(r_int)
    cdef CellGrid g
    cdef double span = 0.0
    cdef Py_ssize_t j
    cdef double* accum = <double*> malloc(n * sizeof(double))
    admitted_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] admitted = admitted_arr
    cdef Py_ssize_t n_adm = 0
    cdef Py_ssize_t oi, idx, cx, cy, ccx, ccy, c, t, jj
    cdef double qx, qy, dx, dy, r2, contrib
    cdef double rint2 = r_int * r_int
    cdef double cell = 0.0
    if accum == NULL:
        raise MemoryError()
    for j in range(n):
        accum[j] = 0.0
    if finite_r:
        for j in range(n):
            if fabs(px[j]) > span: span = fabs(px[j])
            if fabs(py[j]) > span: span = fabs(py[j])
        cell = r_int if r_int > span / 1024.0 else span / 1024.0
        _build_grid(px, py, n, cell, &g)
    try:
        with nogil:
            for oi in range(n):
                idx = order[oi]
                if accum[idx] >= theta:
                    continue
                admitted[n_adm] = idx
                n_adm += 1
                accum[idx] = INFINITY
                qx = px[idx]
                qy = py[idx]
                if finite_r:
                    ccx = <Py_ssize_t>((qx - g.xmin) / g.cell)
                    ccy = <Py_ssize_t>((qy - g.ymin) / g.cell)
                    if ccx >= g.ncx: ccx = g.ncx - 1
                    if ccy >= g.ncy: ccy = g.ncy - 1
                    for cy in range(ccy - 1 if ccy > 0 else 0,
                                    (ccy + 2) if ccy + 2 <= g.ncy
                                    else g.ncy):
                        for cx in range(ccx - 1 if ccx > 0 else 0,
                                        (ccx + 2) if ccx + 2 <= g.ncx
                                        else g.ncx):
                            c = cy * g.ncx + cx
                            for t in range(g.starts[c], g.starts[c + 1]):
                                jj = g.items[t]
                                if jj == idx:
                                    continue
                                dx = px[jj] - qx
                                dy = py[jj] - qy
                                r2 = dx * dx + dy * dy
                                if r2 > rint2:
                                    continue
                                if alpha <= _ALPHA_DIRECT_MAX:
                                    contrib = pow(r2, -0.5 * alpha)
                                else:
                                    contrib = exp(-0.5 * alpha * log(r2))
                                accum[jj] += contrib
                else:
                    for jj in range(n):
                        if jj == idx:
                            continue
                        dx = px[jj] - qx
                        dy = py[jj] - qy
                        r2 = dx * dx + dy * dy
                        if alpha <= _ALPHA_DIRECT_MAX:
                            contrib = pow(r2, -0.5 * alpha)
                        else:
                            contrib = exp(-0.5 * alpha * log(r2))
                        accum[jj] += contrib
    finally:
        free(accum)
        if finite_r:
            _free_grid(&g)
    return admitted_arr[:n_adm].copy()
