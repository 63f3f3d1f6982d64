"""Scalar reference kernels.

Plain loops over columns and pipes, one Python float at a time. Too slow for
production grids; exists as the oracle the vectorised and compiled kernels
are checked against. It shares no code with them.
"""

NAME = "reference"

# neighbour offsets (di, dj): E, NE, N, NW, W, SW, S, SE
CANONICAL = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def paired_sum(e, ne, n, nw, w, sw, s, se):
    """((E + W) + (N + S)) + ((NE + SW) + (NW + SE)).

    Every rotation or reflection of the grid only swaps operands of a single
    addition, so mirrored columns get bitwise equal sums.
    """
    return ((e + w) + (n + s)) + ((ne + sw) + (nw + se))


def pipe_slot(i, j, di, dj):
    """Storage for the pipe between column (i, j) and (i+di, j+dj).

    Returns ``(kind, row, col, sign)`` where ``sign`` is +1 when the stored
    value is the flow from (i, j) toward the neighbour.
    """
    if (di, dj) == (1, 0):
        return 0, j, i + 1, 1.0
    if (di, dj) == (-1, 0):
        return 0, j, i, -1.0
    if (di, dj) == (0, 1):
        return 1, j + 1, i, 1.0
    if (di, dj) == (0, -1):
        return 1, j, i, -1.0
    if (di, dj) == (1, 1):
        return 2, j + 1, i + 1, 1.0
    if (di, dj) == (-1, -1):
        return 2, j, i, -1.0
    if (di, dj) == (-1, 1):
        return 3, j + 1, i, 1.0
    if (di, dj) == (1, -1):
        return 3, j, i + 1, -1.0
    raise ValueError((di, dj))


def _inflow_at(pipes, i, j):
    terms = []
    for di, dj in CANONICAL:
        kind, r, c, sign = pipe_slot(i, j, di, dj)
        q = float(pipes[kind][r, c])
        terms.append(-q if sign > 0 else q)
    return paired_sum(*terms)


def net_inflow(qx, qy, qd, qa, out, workers=1):
    ny, nx = out.shape
    pipes = (qx, qy, qd, qa)
    for j in range(ny):
        for i in range(nx):
            out[j, i] = _inflow_at(pipes, i, j)
    return out


def predict_heights(v, hdot, area, half_dt, out, workers=1):
    ny, nx = v.shape
    for j in range(ny):
        for i in range(nx):
            h = float(v[j, i]) / area
            hh = h + half_dt * float(hdot[j, i])
            out[j, i] = hh if hh > 0.0 else 0.0
    return out


def _interior_pipes(nx, ny):
    """Yield (kind, row, col, (ia, ja), (ib, jb)) for pipes with both ends in the grid."""
    for j in range(ny):
        for i in range(nx):
            for di, dj, kind, r, c in (
                (1, 0, 0, j, i + 1),
                (0, 1, 1, j + 1, i),
                (1, 1, 2, j + 1, i + 1),
                (-1, 1, 3, j + 1, i),
            ):
                ib, jb = i + di, j + dj
                if 0 <= ib < nx and 0 <= jb < ny:
                    yield kind, r, c, (i, j), (ib, jb)


def update_flows(hh, e, qx, qy, qd, qa, rg, rlx, rly, rld, wx, wy, wd, dt, keep, workers=1):
    ny, nx = hh.shape
    pipes = (qx, qy, qd, qa)
    rls = (rlx, rly, rld, rld)
    ws = (wx, wy, wd, wd)
    for kind, r, c, (ia, ja), (ib, jb) in _interior_pipes(nx, ny):
        ha, hb = float(hh[ja, ia]), float(hh[jb, ib])
        ea, eb = float(e[ja, ia]), float(e[jb, ib])
        acc = (rg * (ha - hb) + (ea - eb)) / rls[kind]
        cross = (0.5 * (ha + hb)) * ws[kind]
        q = float(pipes[kind][r, c])
        pipes[kind][r, c] = (q + dt * (cross * acc)) * keep


def transfers(qo, qn, half_dt, out, workers=1):
    rows, cols = out.shape
    for r in range(rows):
        for c in range(cols):
            out[r, c] = (float(qo[r, c]) + float(qn[r, c])) * half_dt
    return out


def _endpoints(kind, r, c):
    """Columns (i, j) at the source and target end of a stored pipe value."""
    if kind == 0:
        return (c - 1, r), (c, r)
    if kind == 1:
        return (c, r - 1), (c, r)
    if kind == 2:
        return (c - 1, r - 1), (c, r)
    return (c, r - 1), (c - 1, r)


def scale_back(v, dv, t, qo, qn, max_iter, workers=1):
    ny, nx = v.shape
    it = 0
    while it < max_iter:
        factors = {}
        for j in range(ny):
            for i in range(nx):
                vv = float(v[j, i])
                if vv + float(dv[j, i]) < 0.0:
                    terms = []
                    for di, dj in CANONICAL:
                        kind, r, c, sign = pipe_slot(i, j, di, dj)
                        tq = float(t[kind][r, c])
                        contrib = -tq if sign > 0 else tq
                        terms.append(contrib if contrib < 0.0 else 0.0)
                    out = paired_sum(*terms)
                    factors[(i, j)] = vv / (-out)
        if not factors:
            break
        for kind in range(4):
            rows, cols = t[kind].shape
            for r in range(rows):
                for c in range(cols):
                    tq = float(t[kind][r, c])
                    if tq == 0.0:
                        continue
                    src, dst = _endpoints(kind, r, c)
                    donor = src if tq > 0.0 else dst
                    f = factors.get(donor)
                    if f is None:
                        continue
                    t[kind][r, c] = tq * f
                    qo[kind][r, c] = float(qo[kind][r, c]) * f
                    qn[kind][r, c] = float(qn[kind][r, c]) * f
        net_inflow(*t, out=dv)
        it += 1
    return it


def surface_fields(h, hdot, qx, qy, wx, wy, z, zdot, xdot, ydot, workers=1):
    ny, nx = h.shape
    for j in range(ny - 1):
        for i in range(nx - 1):
            a, b, c, d = (float(h[j, i]), float(h[j + 1, i]), float(h[j, i + 1]), float(h[j + 1, i + 1]))
            # diagonal pairs first so mirrored cells match bitwise
            z[j, i] = ((a + d) + (b + c)) / 4.0
            zdot[j, i] = (
                (float(hdot[j, i]) + float(hdot[j + 1, i + 1])) + (float(hdot[j + 1, i]) + float(hdot[j, i + 1]))
            ) / 4.0
            fx = (float(qx[j, i + 1]) + float(qx[j + 1, i + 1])) / 2.0
            cx = ((0.5 * (a + c)) * wx + (0.5 * (b + d)) * wx) / 2.0
            fy = (float(qy[j + 1, i]) + float(qy[j + 1, i + 1])) / 2.0
            cy = ((0.5 * (a + b)) * wy + (0.5 * (c + d)) * wy) / 2.0
            xdot[j, i] = fx / cx if cx > 0.0 else 0.0
            ydot[j, i] = fy / cy if cy > 0.0 else 0.0
