# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-stepping kernel for the raster flood scheme.

Transliteration of kernel_py.run_simulation. Every update expression keeps
the association order and libm calls of the NumPy fallback so both backends
produce bit-identical depth fields; keep the two files in sync when editing.
"""

import numpy as np

from libc.math cimport fabs, frexp, isfinite, ldexp, sqrt

from ..errors import NumericalError

cdef double G = 9.80665
cdef long MAX_STEPS = 2000000
cdef double _CBRT2 = 1.2599210498948732
cdef double _CBRT4 = 1.5874010519681994


cdef inline double _cbrt(double x):
    """Cube root matching kernel_py._cbrt bit for bit (see note there)."""
    cdef double m, y, q, f
    cdef int e, r, k, it
    if x == 0.0:
        return 0.0
    m = frexp(x, &e)
    r = e % 3
    if r < 0:
        r += 3
    k = (e - r) // 3
    q = 1.74165913 + m * (-1.20274366 + m * 0.46374356)
    for it in range(4):
        q = q * (4.0 - m * (q * q * q)) * (1.0 / 3.0)
    y = m * (q * q)
    if r == 1:
        f = _CBRT2
    elif r == 2:
        f = _CBRT4
    else:
        f = 1.0
    return ldexp(y * f, k)



def run_simulation(
    double[:, ::1] z,
    unsigned char[:, ::1] wall,
    double[:, ::1] rain_w,
    double[:, ::1] infil,
    double[:, ::1] manning,
    double[::1] rain_rates,
    double[::1] phase_ends,
    double[:, ::1] d0,
    double cellsize,
    double cfl_alpha,
    double min_flow_depth,
    double dt_floor,
    double dt_cap,
    bint open_boundary,
    double weight_sum,
):
    cdef Py_ssize_t ny = z.shape[0]
    cdef Py_ssize_t nx = z.shape[1]
    cdef double cs = cellsize
    cdef double inv_cs = 1.0 / cs

    d_arr = np.array(d0, dtype=np.float64, copy=True)
    md_arr = d_arr.copy()
    qx_arr = np.zeros((ny, max(nx - 1, 0)))
    qy_arr = np.zeros((max(ny - 1, 0), nx))
    qe_w_arr = np.zeros(ny)
    qe_e_arr = np.zeros(ny)
    qe_n_arr = np.zeros(nx)
    qe_s_arr = np.zeros(nx)
    inf_total_arr = np.zeros((ny, nx))
    out_total_arr = np.zeros((ny, nx))
    fac_arr = np.ones((ny, nx))

    cdef double[:, ::1] d = d_arr
    cdef double[:, ::1] md = md_arr
    cdef double[:, ::1] qx = qx_arr
    cdef double[:, ::1] qy = qy_arr
    cdef double[::1] qe_w = qe_w_arr
    cdef double[::1] qe_e = qe_e_arr
    cdef double[::1] qe_n = qe_n_arr
    cdef double[::1] qe_s = qe_s_arr
    cdef double[:, ::1] inf_total = inf_total_arr
    cdef double[:, ::1] out_total = out_total_arr
    cdef double[:, ::1] fac = fac_arr

    cdef double rain_acc = 0.0
    cdef double t = 0.0
    cdef Py_ssize_t phase = 0
    cdef Py_ssize_t n_phases = phase_ends.shape[0]
    cdef long n_steps = 0

    cdef Py_ssize_t i, j
    cdef double rem, hmax, dt, dtcs, v
    cdef double eta_a, eta_b, hf, hp, s, num, den, qold, rate, rd, nm
    cdef double acc, pot, take, dval, vout, f
    cdef bint clipped
    cdef int bad

    while phase < n_phases:
        rem = phase_ends[phase] - t
        if rem <= 0.0:
            t = phase_ends[phase]
            phase += 1
            continue

        hmax = d[0, 0]
        bad = 0
        for i in range(ny):
            for j in range(nx):
                dval = d[i, j]
                if not isfinite(dval):
                    bad = 1
                if dval > hmax:
                    hmax = dval
        if bad or not isfinite(hmax):
            raise NumericalError(f"non-finite water depth at step {n_steps}")
        if hmax > 0.0:
            dt = cfl_alpha * cs / sqrt(G * hmax)
        else:
            dt = dt_cap
        if dt > dt_cap:
            dt = dt_cap
        if dt < dt_floor:
            dt = dt_floor
        clipped = dt >= rem
        if clipped:
            dt = rem
        dtcs = dt / cs

        # face flux updates (explicit, from the previous step's depths)
        for i in range(ny):
            for j in range(nx - 1):
                if wall[i, j] or wall[i, j + 1]:
                    qx[i, j] = 0.0
                    continue
                eta_a = z[i, j] + d[i, j]
                eta_b = z[i, j + 1] + d[i, j + 1]
                hf = (eta_a if eta_a > eta_b else eta_b) - (
                    z[i, j] if z[i, j] > z[i, j + 1] else z[i, j + 1]
                )
                if hf >= min_flow_depth:
                    hp = hf * hf * _cbrt(hf)
                    s = (eta_b - eta_a) * inv_cs
                    qold = qx[i, j]
                    nm = (manning[i, j] + manning[i, j + 1]) * 0.5
                    num = qold - G * hf * dt * s
                    qx[i, j] = num * hp / (hp + G * dt * (nm * nm) * fabs(qold))
                else:
                    qx[i, j] = 0.0
        for i in range(ny - 1):
            for j in range(nx):
                if wall[i, j] or wall[i + 1, j]:
                    qy[i, j] = 0.0
                    continue
                eta_a = z[i, j] + d[i, j]
                eta_b = z[i + 1, j] + d[i + 1, j]
                hf = (eta_a if eta_a > eta_b else eta_b) - (
                    z[i, j] if z[i, j] > z[i + 1, j] else z[i + 1, j]
                )
                if hf >= min_flow_depth:
                    hp = hf * hf * _cbrt(hf)
                    s = (eta_b - eta_a) * inv_cs
                    qold = qy[i, j]
                    nm = (manning[i, j] + manning[i + 1, j]) * 0.5
                    num = qold - G * hf * dt * s
                    qy[i, j] = num * hp / (hp + G * dt * (nm * nm) * fabs(qold))
                else:
                    qy[i, j] = 0.0

        if open_boundary:
            for i in range(ny):
                qe_w[i] = _edge_flux(qe_w[i], d[i, 0], wall[i, 0],
                                     manning[i, 0], dt, inv_cs, min_flow_depth)
                qe_e[i] = _edge_flux(qe_e[i], d[i, nx - 1], wall[i, nx - 1],
                                     manning[i, nx - 1], dt, inv_cs, min_flow_depth)
            for j in range(nx):
                qe_n[j] = _edge_flux(qe_n[j], d[0, j], wall[0, j],
                                     manning[0, j], dt, inv_cs, min_flow_depth)
                qe_s[j] = _edge_flux(qe_s[j], d[ny - 1, j], wall[ny - 1, j],
                                     manning[ny - 1, j], dt, inv_cs, min_flow_depth)

        # outflow limiter: a cell cannot export more water than it stores
        for i in range(ny):
            for j in range(nx):
                v = 0.0
                if j < nx - 1:
                    v = v + (qx[i, j] if qx[i, j] > 0.0 else 0.0)
                if j > 0:
                    v = v + (-qx[i, j - 1] if -qx[i, j - 1] > 0.0 else 0.0)
                if i < ny - 1:
                    v = v + (qy[i, j] if qy[i, j] > 0.0 else 0.0)
                if i > 0:
                    v = v + (-qy[i - 1, j] if -qy[i - 1, j] > 0.0 else 0.0)
                if j == 0:
                    v = v + qe_w[i]
                if j == nx - 1:
                    v = v + qe_e[i]
                if i == 0:
                    v = v + qe_n[j]
                if i == ny - 1:
                    v = v + qe_s[j]
                vout = dtcs * v
                dval = d[i, j]
                fac[i, j] = dval / vout if vout > dval else 1.0
        for i in range(ny):
            for j in range(nx - 1):
                qx[i, j] = qx[i, j] * (fac[i, j] if qx[i, j] > 0.0 else fac[i, j + 1])
        for i in range(ny - 1):
            for j in range(nx):
                qy[i, j] = qy[i, j] * (fac[i, j] if qy[i, j] > 0.0 else fac[i + 1, j])
        for i in range(ny):
            qe_w[i] = qe_w[i] * fac[i, 0]
            qe_e[i] = qe_e[i] * fac[i, nx - 1]
        for j in range(nx):
            qe_n[j] = qe_n[j] * fac[0, j]
            qe_s[j] = qe_s[j] * fac[ny - 1, j]

        # depth update: divergence, then boundary outflow, rain, infiltration
        rate = rain_rates[phase]
        rd = rate * dt
        for i in range(ny):
            for j in range(nx):
                acc = 0.0
                if j > 0:
                    acc = acc + qx[i, j - 1]
                if j < nx - 1:
                    acc = acc - qx[i, j]
                if i > 0:
                    acc = acc + qy[i - 1, j]
                if i < ny - 1:
                    acc = acc - qy[i, j]
                dval = d[i, j] + dtcs * acc
                if j == 0:
                    dval = dval - dtcs * qe_w[i]
                    out_total[i, j] = out_total[i, j] + dtcs * qe_w[i]
                if j == nx - 1:
                    dval = dval - dtcs * qe_e[i]
                    out_total[i, j] = out_total[i, j] + dtcs * qe_e[i]
                if i == 0:
                    dval = dval - dtcs * qe_n[j]
                    out_total[i, j] = out_total[i, j] + dtcs * qe_n[j]
                if i == ny - 1:
                    dval = dval - dtcs * qe_s[j]
                    out_total[i, j] = out_total[i, j] + dtcs * qe_s[j]
                if rate > 0.0:
                    dval = dval + rd * rain_w[i, j]
                pot = infil[i, j] * dt
                take = dval if dval < pot else pot
                dval = dval - take
                inf_total[i, j] = inf_total[i, j] + take
                d[i, j] = dval
                if dval > md[i, j]:
                    md[i, j] = dval
        if rate > 0.0:
            rain_acc = rain_acc + rd * weight_sum

        t = t + dt
        if clipped:
            t = phase_ends[phase]
            phase += 1
        n_steps += 1
        if n_steps > MAX_STEPS:
            raise NumericalError(f"step budget exceeded ({MAX_STEPS} steps)")

    return md_arr, d_arr, inf_total_arr, out_total_arr, rain_acc, n_steps


cdef inline double _edge_flux(
    double qold,
    double hf,
    unsigned char is_wall,
    double n_cell,
    double dt,
    double inv_cs,
    double min_flow_depth,
):
    """Outward flux across an open domain edge against a dry ghost cell."""
    cdef double hp, num, den, q
    if is_wall or hf < min_flow_depth:
        return 0.0
    hp = hf * hf * _cbrt(hf)
    num = qold + G * hf * dt * (hf * inv_cs)
    q = num * hp / (hp + G * dt * (n_cell * n_cell) * fabs(qold))
    return q if q > 0.0 else 0.0
