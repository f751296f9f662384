"""Pure-NumPy time-stepping kernel for the raster flood scheme.

This is the fallback used when the compiled extension is unavailable. The
compiled kernel mirrors each update expression of this file term for term
(same association order, same libm calls), so both backends produce
bit-identical depth fields; keep them in sync when editing.

Scheme: explicit local-inertial update per cell face,
    q <- (q - g*h_f*dt*S) / (1 + g*dt*n^2*|q| / h_f^(7/3)),
with h_f the face flow depth (max water surface minus max bed of the two
cells) and S the water-surface slope, followed by a per-cell outflow limiter
that prevents overdrawing storage, flux-divergence depth updates, rainfall,
and clamped constant-rate infiltration.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NumericalError

G = 9.80665
MAX_STEPS = 2_000_000

_CBRT2 = 1.2599210498948732
_CBRT4 = 1.5874010519681994


def _cbrt(x: np.ndarray) -> np.ndarray:
    """Cube root of non-negative values via frexp reduction plus Newton.

    Library cbrt implementations differ across vector backends in the last
    bit; this version uses only correctly-rounded IEEE primitives so the
    compiled kernel reproduces it exactly (division-free inverse iteration).
    Accurate to ~1 ulp, which is all the friction term needs.
    """
    m, e = np.frexp(x)
    r = np.mod(e, 3)
    k = (e - r) // 3
    q = 1.74165913 + m * (-1.20274366 + m * 0.46374356)  # m**(-1/3) on [0.5, 1)
    for _ in range(4):
        q = q * (4.0 - m * (q * q * q)) * (1.0 / 3.0)
    y = m * (q * q)
    f = np.where(r == 1, _CBRT2, np.where(r == 2, _CBRT4, 1.0))
    out = np.ldexp(y * f, k)
    return np.where(x == 0.0, 0.0, out)


def run_simulation(
    z: np.ndarray,
    wall: np.ndarray,
    rain_w: np.ndarray,
    infil: np.ndarray,
    manning: np.ndarray,
    rain_rates: np.ndarray,
    phase_ends: np.ndarray,
    d0: np.ndarray,
    cellsize: float,
    cfl_alpha: float,
    min_flow_depth: float,
    dt_floor: float,
    dt_cap: float,
    open_boundary: bool,
    weight_sum: float,
):
    """Advance the storm plus settle period; see engine.simulate for units.

    Returns (max_depth, depth, infil_total, outflow_total, rain_depth_cells,
    n_steps); the volume accumulators are in depth*cell units.
    """
    ny, nx = z.shape
    cs = float(cellsize)
    inv_cs = 1.0 / cs

    d = d0.astype(np.float64, copy=True)
    md = d.copy()
    qx = np.zeros((ny, nx - 1)) if nx > 1 else np.zeros((ny, 0))
    qy = np.zeros((ny - 1, nx)) if ny > 1 else np.zeros((0, nx))
    qe_w = np.zeros(ny)
    qe_e = np.zeros(ny)
    qe_n = np.zeros(nx)
    qe_s = np.zeros(nx)

    inf_total = np.zeros((ny, nx))
    out_total = np.zeros((ny, nx))
    rain_acc = 0.0

    flow = wall == 0
    okx = flow[:, :-1] & flow[:, 1:]
    oky = flow[:-1, :] & flow[1:, :]
    # squares via multiplication, matching the compiled kernel exactly
    nm_x = (manning[:, :-1] + manning[:, 1:]) * 0.5
    nsq_x = nm_x * nm_x
    nm_y = (manning[:-1, :] + manning[1:, :]) * 0.5
    nsq_y = nm_y * nm_y
    nsq_c = manning * manning
    if open_boundary:
        ew, ee = flow[:, 0], flow[:, -1]
        en, es = flow[0, :], flow[-1, :]
    else:
        ew = ee = np.zeros(ny, bool)
        en = es = np.zeros(nx, bool)

    zx_max = np.maximum(z[:, :-1], z[:, 1:])
    zy_max = np.maximum(z[:-1, :], z[1:, :])

    t = 0.0
    phase = 0
    n_phases = len(phase_ends)
    n_steps = 0

    while phase < n_phases:
        rem = float(phase_ends[phase]) - t
        if rem <= 0.0:
            t = float(phase_ends[phase])
            phase += 1
            continue
        hmax = float(np.max(d))
        if not math.isfinite(hmax):
            raise NumericalError(f"non-finite water depth at step {n_steps}")
        if hmax > 0.0:
            dt = cfl_alpha * cs / math.sqrt(G * hmax)
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

        # face flux updates (explicit, from the previous step's depths);
        # friction written as num*hp / (hp + g*dt*n^2*|q|) to spend one
        # division per face instead of two
        eta = z + d
        if nx > 1:
            eta_l, eta_r = eta[:, :-1], eta[:, 1:]
            hf = np.maximum(eta_l, eta_r) - zx_max
            ok = okx & (hf >= min_flow_depth)
            hp = np.where(ok, hf * hf * _cbrt(hf), 1.0)
            s = (eta_r - eta_l) * inv_cs
            num = qx - G * hf * dt * s
            qx = np.where(ok, num * hp / (hp + G * dt * nsq_x * np.abs(qx)), 0.0)
        if ny > 1:
            eta_u, eta_d = eta[:-1, :], eta[1:, :]
            hf = np.maximum(eta_u, eta_d) - zy_max
            ok = oky & (hf >= min_flow_depth)
            hp = np.where(ok, hf * hf * _cbrt(hf), 1.0)
            s = (eta_d - eta_u) * inv_cs
            num = qy - G * hf * dt * s
            qy = np.where(ok, num * hp / (hp + G * dt * nsq_y * np.abs(qy)), 0.0)

        if open_boundary:
            for qe, hf, ok_edge, nsq_edge in (
                (qe_w, d[:, 0], ew, nsq_c[:, 0]),
                (qe_e, d[:, -1], ee, nsq_c[:, -1]),
                (qe_n, d[0, :], en, nsq_c[0, :]),
                (qe_s, d[-1, :], es, nsq_c[-1, :]),
            ):
                ok = ok_edge & (hf >= min_flow_depth)
                hp = np.where(ok, hf * hf * _cbrt(hf), 1.0)
                num = qe + G * hf * dt * (hf * inv_cs)
                qe[:] = np.where(ok, num * hp / (hp + G * dt * nsq_edge * np.abs(qe)), 0.0)
                np.maximum(qe, 0.0, out=qe)

        # outflow limiter: a cell cannot export more water than it stores
        vsum = np.zeros((ny, nx))
        if nx > 1:
            vsum[:, :-1] += np.maximum(qx, 0.0)
            vsum[:, 1:] += np.maximum(-qx, 0.0)
        if ny > 1:
            vsum[:-1, :] += np.maximum(qy, 0.0)
            vsum[1:, :] += np.maximum(-qy, 0.0)
        vsum[:, 0] += qe_w
        vsum[:, -1] += qe_e
        vsum[0, :] += qe_n
        vsum[-1, :] += qe_s
        vout = dtcs * vsum
        over = vout > d
        fac = np.where(over, d / np.where(over, vout, 1.0), 1.0)
        if nx > 1:
            qx = qx * np.where(qx > 0.0, fac[:, :-1], fac[:, 1:])
        if ny > 1:
            qy = qy * np.where(qy > 0.0, fac[:-1, :], fac[1:, :])
        qe_w = qe_w * fac[:, 0]
        qe_e = qe_e * fac[:, -1]
        qe_n = qe_n * fac[0, :]
        qe_s = qe_s * fac[-1, :]

        # depth update: divergence, then boundary outflow, rain, infiltration
        div = np.zeros((ny, nx))
        if nx > 1:
            div[:, 1:] += qx
            div[:, :-1] -= qx
        if ny > 1:
            div[1:, :] += qy
            div[:-1, :] -= qy
        d = d + dtcs * div
        d[:, 0] -= dtcs * qe_w
        d[:, -1] -= dtcs * qe_e
        d[0, :] -= dtcs * qe_n
        d[-1, :] -= dtcs * qe_s
        out_total[:, 0] += dtcs * qe_w
        out_total[:, -1] += dtcs * qe_e
        out_total[0, :] += dtcs * qe_n
        out_total[-1, :] += dtcs * qe_s

        rate = rain_rates[phase]
        if rate > 0.0:
            rd = rate * dt
            d = d + rd * rain_w
            rain_acc += rd * weight_sum

        take = np.minimum(d, infil * dt)
        d = d - take
        inf_total += take

        np.maximum(md, d, out=md)

        t = t + dt
        if clipped:
            t = float(phase_ends[phase])
            phase += 1
        n_steps += 1
        if n_steps > MAX_STEPS:
            raise NumericalError(f"step budget exceeded ({MAX_STEPS} steps)")

    return md, d, inf_total, out_total, rain_acc, n_steps
