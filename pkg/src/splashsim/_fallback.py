"""Vectorised numpy implementation of the stencil kernels.

Used when the compiled extension is unavailable. Every expression is written
in the same operand order as the compiled and scalar versions, so all three
produce bitwise identical results.

Array layout: column fields are ``(ny, nx)`` indexed ``[j, i]``. Pipe fields
are padded so edge-crossing pipes have storage:

    qx (ny, nx+1)    qx[j, i+1]  flow (i, j)   -> (i+1, j)
    qy (ny+1, nx)    qy[j+1, i]  flow (i, j)   -> (i, j+1)
    qd (ny+1, nx+1)  qd[j+1, i+1] flow (i, j)  -> (i+1, j+1)
    qa (ny+1, nx+1)  qa[j+1, i]  flow (i, j)   -> (i-1, j+1)
"""

import numpy as np

NAME = "numpy"


def _paired(e, ne, n, nw, w, sw, s, se):
    # symmetric under grid rotations and reflections
    return ((e + w) + (n + s)) + ((ne + sw) + (nw + se))


def _inflow_terms(qx, qy, qd, qa, ny, nx):
    """Inflow-oriented pipe values per column: E, NE, N, NW, W, SW, S, SE."""
    return (
        -qx[:, 1:], -qd[1:, 1:], -qy[1:, :], -qa[1:, :nx],
        qx[:, :nx], qd[:ny, :nx], qy[:ny, :], qa[:ny, 1:],
    )


def net_inflow(qx, qy, qd, qa, out, workers=1):
    ny, nx = out.shape
    out[...] = _paired(*_inflow_terms(qx, qy, qd, qa, ny, nx))
    return out


def predict_heights(v, hdot, area, half_dt, out, workers=1):
    np.divide(v, area, out=out)
    out += half_dt * hdot
    np.copyto(out, 0.0, where=~(out > 0.0))
    return out


def _pipe_update(q, ha, hb, ea, eb, w, rl, rg, dt, keep):
    acc = (rg * (ha - hb) + (ea - eb)) / rl
    c = (0.5 * (ha + hb)) * w
    q[...] = (q + dt * (c * acc)) * keep


def update_flows(hh, e, qx, qy, qd, qa, rg, rlx, rly, rld, wx, wy, wd, dt, keep, workers=1):
    """Advance every interior pipe flow; edge pipes are left to the boundary rules."""
    ny, nx = hh.shape
    _pipe_update(qx[:, 1:nx], hh[:, :-1], hh[:, 1:], e[:, :-1], e[:, 1:], wx, rlx, rg, dt, keep)
    _pipe_update(qy[1:ny, :], hh[:-1, :], hh[1:, :], e[:-1, :], e[1:, :], wy, rly, rg, dt, keep)
    _pipe_update(qd[1:ny, 1:nx], hh[:-1, :-1], hh[1:, 1:], e[:-1, :-1], e[1:, 1:], wd, rld, rg, dt, keep)
    _pipe_update(qa[1:ny, 1:nx], hh[:-1, 1:], hh[1:, :-1], e[:-1, 1:], e[1:, :-1], wd, rld, rg, dt, keep)


def transfers(qo, qn, half_dt, out, workers=1):
    np.add(qo, qn, out=out)
    out *= half_dt
    return out


def _outflow_sum(t, ny, nx):
    """Per-column sum of the negative (outgoing) contributions."""
    terms = _inflow_terms(*t, ny, nx)
    return _paired(*(np.where(c < 0.0, c, 0.0) for c in terms))


def _pipe_factor(tq, fa, fb):
    return np.where(tq > 0.0, fa, np.where(tq < 0.0, fb, 1.0))


def scale_back(v, dv, t, qo, qn, max_iter, workers=1):
    """Shrink outflows of columns that would go negative; returns passes made."""
    ny, nx = v.shape
    it = 0
    while it < max_iter:
        neg = (v + dv) < 0.0
        if not neg.any():
            break
        out = _outflow_sum(t, ny, nx)
        fp = np.ones((ny + 2, nx + 2))
        fp[1:-1, 1:-1][neg] = v[neg] / (-out[neg])
        # (source, target) factor windows for qx, qy, qd, qa
        windows = (
            (fp[1:ny + 1, 0:nx + 1], fp[1:ny + 1, 1:nx + 2]),
            (fp[0:ny + 1, 1:nx + 1], fp[1:ny + 2, 1:nx + 1]),
            (fp[0:ny + 1, 0:nx + 1], fp[1:ny + 2, 1:nx + 2]),
            (fp[0:ny + 1, 1:nx + 2], fp[1:ny + 2, 0:nx + 1]),
        )
        for k, (fa, fb) in enumerate(windows):
            f = _pipe_factor(t[k], fa, fb)
            for arr in (t[k], qo[k], qn[k]):
                np.multiply(arr, f, out=arr)
        net_inflow(*t, out=dv)
        it += 1
    return it


def surface_fields(h, hdot, qx, qy, wx, wy, z, zdot, xdot, ydot, workers=1):
    """Mesh heights, vertical and horizontal surface velocities."""
    h00, h01, h10, h11 = h[:-1, :-1], h[1:, :-1], h[:-1, 1:], h[1:, 1:]
    z[...] = ((h00 + h11) + (h01 + h10)) / 4.0
    zdot[...] = ((hdot[:-1, :-1] + hdot[1:, 1:]) + (hdot[1:, :-1] + hdot[:-1, 1:])) / 4.0

    ny, nx = h.shape
    fx = (qx[:-1, 1:nx] + qx[1:, 1:nx]) / 2.0
    cx = ((0.5 * (h00 + h10)) * wx + (0.5 * (h01 + h11)) * wx) / 2.0
    fy = (qy[1:ny, :-1] + qy[1:ny, 1:]) / 2.0
    cy = ((0.5 * (h00 + h01)) * wy + (0.5 * (h10 + h11)) * wy) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        xdot[...] = np.where(cx > 0.0, fx / cx, 0.0)
        ydot[...] = np.where(cy > 0.0, fy / cy, 0.0)
