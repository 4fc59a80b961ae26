"""Numba kernels for the finite-volume update.

The step kernel sweeps angular columns with rolling face buffers so each
step touches O(grid) memory once: full face arrays would triple the memory
traffic and dominate the runtime on large grids.  Faces between identical
states short-circuit to zero work, which skips most of the domain while
the waves are still spreading.

Layout: padded conserved array q[j, i, comp] with j the angular index,
i the radial index, two ghost layers per side.  Radial faces live on
radial edges i (between cells i-1 and i of one column), angular faces on
angular edges j (between columns j-1 and j of one row).
"""

import numpy as np
from numba import njit

# limiter ids
LIM_NONE = 0
LIM_MINMOD = 1
LIM_MC = 2


@njit(cache=True, fastmath=True)
def eval_pc(q, p, c, gamma):
    """Pressure and sound speed per cell (ghosts included)."""
    ntp, nrp = q.shape[0], q.shape[1]
    for j in range(ntp):
        for i in range(nrp):
            rho = q[j, i, 0]
            if gamma == 3.0:
                p[j, i] = rho * rho * rho
                c[j, i] = rho * np.sqrt(3.0)
            else:
                p[j, i] = rho**gamma
                c[j, i] = np.sqrt(gamma * rho ** (gamma - 1.0))


@njit(cache=True, fastmath=True)
def cfl_dt(c, vol, chord, dr, nr, nt):
    """min over real cells of vol / (cell sound speed * max face length)."""
    best = 1e300
    for j in range(2, nt + 2):
        for i in range(2, nr + 2):
            maxlen = dr
            if chord[i] > maxlen:
                maxlen = chord[i]
            if chord[i + 1] > maxlen:
                maxlen = chord[i + 1]
            val = vol[i] / (c[j, i] * maxlen)
            if val < best:
                best = val
    return best


@njit(cache=True, fastmath=True, inline="always")
def _philim(a, a_up, lim_id):
    """Limited wave strength for the scalar-ratio limiter."""
    if a == 0.0:
        return 0.0
    th = a_up / a
    if lim_id == LIM_NONE:
        phi = 1.0
    elif lim_id == LIM_MINMOD:
        phi = min(1.0, th)
        if phi < 0.0:
            phi = 0.0
    else:  # MC
        phi = min(0.5 * (1.0 + th), 2.0, 2.0 * th)
        if phi < 0.0:
            phi = 0.0
    return a * phi


@njit(cache=True, fastmath=True, inline="always")
def _face_solve(rl, ml, nl, rr, mr, nrt, pl, pr, cl, cr, nx, ny, out, k):
    """Roe solve in the face-normal frame; writes 9 fields into out[k].

    Fields: 0-2 left-going fluctuation, 3-5 right-going fluctuation,
    6 strength of the -chat wave, 7 strength of the +chat wave, 8 chat.
    """
    drho = rr - rl
    dm = mr - ml
    dn = nrt - nl
    if drho == 0.0 and dm == 0.0 and dn == 0.0:
        for f in range(9):
            out[k, f] = 0.0
        return
    if abs(drho) > 1e-12 * (rl + rr):
        ch2 = (pr - pl) / drho
    else:
        cm = 0.5 * (cl + cr)
        ch2 = cm * cm
    ch = np.sqrt(ch2)
    dmn = dm * nx + dn * ny
    a1 = 0.5 * (drho - dmn / ch)
    a3 = 0.5 * (drho + dmn / ch)
    out[k, 0] = -ch * a1
    out[k, 1] = ch2 * a1 * nx
    out[k, 2] = ch2 * a1 * ny
    out[k, 3] = ch * a3
    out[k, 4] = ch2 * a3 * nx
    out[k, 5] = ch2 * a3 * ny
    out[k, 6] = a1
    out[k, 7] = a3
    out[k, 8] = ch


@njit(cache=True, fastmath=True)
def _fill_rad_col(q, p, c, RAD, slot, j, nrp, nx, ny):
    """All radial-face solves of column j into RAD[slot]."""
    for i in range(1, nrp):
        _face_solve(
            q[j, i - 1, 0], q[j, i - 1, 1], q[j, i - 1, 2],
            q[j, i, 0], q[j, i, 1], q[j, i, 2],
            p[j, i - 1], p[j, i], c[j, i - 1], c[j, i],
            nx, ny, RAD[slot], i,
        )


@njit(cache=True, fastmath=True)
def _fill_ang_edge(q, p, c, ANG, slot, e, nrp, nx, ny):
    """All angular-face solves of edge e (between columns e-1 and e)."""
    for i in range(1, nrp - 1):
        _face_solve(
            q[e - 1, i, 0], q[e - 1, i, 1], q[e - 1, i, 2],
            q[e, i, 0], q[e, i, 1], q[e, i, 2],
            p[e - 1, i], p[e, i], c[e - 1, i], c[e, i],
            nx, ny, ANG[slot], i,
        )


@njit(cache=True, fastmath=True)
def step_kernel(
    q, qn, p, c,
    dr, vol, chord, hth,
    cos_c, sin_c, cos_e, sin_e,
    dt, order, lim_id, transverse,
    bflux,
):
    """One fluctuation-form update of the real cells; returns (minrho, jmin, imin).

    bflux receives the time-integrated conservative flux totals through the
    four domain edges (rows: inner r, outer r, low theta, high theta).
    """
    ntp, nrp = q.shape[0], q.shape[1]
    nt = ntp - 4
    nr = nrp - 4

    RAD = np.zeros((3, nrp + 1, 9))
    ANG = np.zeros((4, nrp, 9))
    FR = np.zeros((nrp + 1, 3))
    FTbuf = np.zeros((2, nrp, 3))

    second = order == 2
    do_trans = second and transverse

    minrho = 1e300
    jmin = -1
    imin = -1

    # prime: radial columns 1,2,3 and angular edges 1..4
    for jj in range(1, 4):
        _fill_rad_col(q, p, c, RAD, jj % 3, jj, nrp, cos_c[jj], sin_c[jj])
    for ee in range(1, 5):
        _fill_ang_edge(q, p, c, ANG, ee % 4, ee, nrp, -sin_e[ee], cos_e[ee])
    if second:
        _assemble_ft(q, p, c, ANG, RAD, FTbuf, 0, 2, nrp, dr, hth,
                     -sin_e[2], cos_e[2], dt, lim_id, do_trans)
        _assemble_ft(q, p, c, ANG, RAD, FTbuf, 1, 3, nrp, dr, hth,
                     -sin_e[3], cos_e[3], dt, lim_id, do_trans)

    for jc in range(2, nt + 2):
        if jc > 2:
            jnew = jc + 1
            _fill_rad_col(q, p, c, RAD, jnew % 3, jnew, nrp, cos_c[jnew], sin_c[jnew])
            enew = jc + 2
            _fill_ang_edge(q, p, c, ANG, enew % 4, enew, nrp, -sin_e[enew], cos_e[enew])
            if second:
                _assemble_ft(q, p, c, ANG, RAD, FTbuf, (jc + 1) % 2, jc + 1, nrp,
                             dr, hth, -sin_e[jc + 1], cos_e[jc + 1], dt, lim_id, do_trans)

        # radial-face corrections for this column
        if second:
            _assemble_fr(ANG, RAD, FR, jc, nr, nrp, dr, hth,
                         cos_c[jc], sin_c[jc], dt, c, vol, lim_id, do_trans)

        slot = jc % 3
        elo = jc % 2
        ehi = (jc + 1) % 2
        slo = jc % 4
        shi = (jc + 1) % 4
        for i in range(2, nr + 2):
            inv = dt / vol[i]
            for comp in range(3):
                fo = (
                    chord[i] * RAD[slot, i, 3 + comp]
                    + chord[i + 1] * RAD[slot, i + 1, comp]
                    + dr * (ANG[slo, i, 3 + comp] + ANG[shi, i, comp])
                )
                if second:
                    fo += chord[i + 1] * FR[i + 1, comp] - chord[i] * FR[i, comp]
                    fo += dr * (FTbuf[ehi, i, comp] - FTbuf[elo, i, comp])
                qn[jc, i, comp] = q[jc, i, comp] - inv * fo
            if qn[jc, i, 0] < minrho:
                minrho = qn[jc, i, 0]
                jmin = jc
                imin = i

        # boundary flux bookkeeping (conservative interface fluxes)
        _acc_rad_bflux(q, p, RAD, FR, bflux, 0, slot, 2, jc,
                       cos_c[jc], sin_c[jc], chord[2], second, dt)
        _acc_rad_bflux(q, p, RAD, FR, bflux, 1, slot, nr + 2, jc,
                       cos_c[jc], sin_c[jc], chord[nr + 2], second, dt)
        if jc == 2:
            _acc_ang_bflux(q, p, ANG, FTbuf, bflux, 2, slo, elo, 2, nr,
                           -sin_e[2], cos_e[2], dr, second, dt)
        if jc == nt + 1:
            _acc_ang_bflux(q, p, ANG, FTbuf, bflux, 3, shi, ehi, nt + 2, nr,
                           -sin_e[nt + 2], cos_e[nt + 2], dr, second, dt)

    return minrho, jmin, imin


@njit(cache=True, fastmath=True)
def _assemble_fr(ANG, RAD, FR, jc, nr, nrp, dr, hth, nx, ny, dt, c, vol, lim_id, do_trans):
    """Correction fluxes on the radial faces of column jc."""
    slot = jc % 3
    slo = jc % 4
    shi = (jc + 1) % 4
    for i in range(2, nr + 3):
        ch = RAD[slot, i, 8]
        f0 = 0.0
        f1 = 0.0
        f2 = 0.0
        if ch > 0.0:
            a1 = _philim(RAD[slot, i, 6], RAD[slot, i + 1, 6], lim_id)
            a3 = _philim(RAD[slot, i, 7], RAD[slot, i - 1, 7], lim_id)
            fac = 0.5 * ch * (1.0 - ch * dt / dr)
            f0 = fac * (a1 + a3)
            fmn = fac * ch * (a3 - a1)
            f1 = fmn * nx
            f2 = fmn * ny
        if do_trans:
            # fluctuations entering the two cells sharing this face,
            # split radially; parts moving toward the face modify it
            v0 = ANG[slo, i - 1, 3] + ANG[shi, i - 1, 0]
            v1 = ANG[slo, i - 1, 4] + ANG[shi, i - 1, 1]
            v2 = ANG[slo, i - 1, 5] + ANG[shi, i - 1, 2]
            if v0 != 0.0 or v1 != 0.0 or v2 != 0.0:
                ct = c[jc, i - 1]
                vn = v1 * nx + v2 * ny
                b3 = 0.5 * (v0 + vn / ct)
                fct = -dt / (2.0 * hth[i - 1]) * ct * b3
                f0 += fct
                f1 += fct * ct * nx
                f2 += fct * ct * ny
            w0 = ANG[slo, i, 3] + ANG[shi, i, 0]
            w1 = ANG[slo, i, 4] + ANG[shi, i, 1]
            w2 = ANG[slo, i, 5] + ANG[shi, i, 2]
            if w0 != 0.0 or w1 != 0.0 or w2 != 0.0:
                ct = c[jc, i]
                wn = w1 * nx + w2 * ny
                b1 = 0.5 * (w0 - wn / ct)
                fct = -dt / (2.0 * hth[i]) * (-ct * b1)
                f0 += fct
                f1 += fct * (-ct * nx)
                f2 += fct * (-ct * ny)
        FR[i, 0] = f0
        FR[i, 1] = f1
        FR[i, 2] = f2


@njit(cache=True, fastmath=True)
def _assemble_ft(q, p, c, ANG, RAD, FTbuf, dest, e, nrp, dr, hth, nx, ny, dt, lim_id, do_trans):
    """Correction fluxes on angular edge e into FTbuf[dest]."""
    nr = nrp - 4
    se = e % 4
    sdn = (e - 1) % 4
    sup = (e + 1) % 4
    cdn = (e - 1) % 3
    cup = e % 3
    for i in range(2, nr + 2):
        ch = ANG[se, i, 8]
        f0 = 0.0
        f1 = 0.0
        f2 = 0.0
        if ch > 0.0:
            a1 = _philim(ANG[se, i, 6], ANG[sup, i, 6], lim_id)
            a3 = _philim(ANG[se, i, 7], ANG[sdn, i, 7], lim_id)
            fac = 0.5 * ch * (1.0 - ch * dt / hth[i])
            f0 = fac * (a1 + a3)
            fmn = fac * ch * (a3 - a1)
            f1 = fmn * nx
            f2 = fmn * ny
        if do_trans:
            v0 = RAD[cdn, i, 3] + RAD[cdn, i + 1, 0]
            v1 = RAD[cdn, i, 4] + RAD[cdn, i + 1, 1]
            v2 = RAD[cdn, i, 5] + RAD[cdn, i + 1, 2]
            if v0 != 0.0 or v1 != 0.0 or v2 != 0.0:
                ct = c[e - 1, i]
                vn = v1 * nx + v2 * ny
                b3 = 0.5 * (v0 + vn / ct)
                fct = -dt / (2.0 * dr) * ct * b3
                f0 += fct
                f1 += fct * ct * nx
                f2 += fct * ct * ny
            w0 = RAD[cup, i, 3] + RAD[cup, i + 1, 0]
            w1 = RAD[cup, i, 4] + RAD[cup, i + 1, 1]
            w2 = RAD[cup, i, 5] + RAD[cup, i + 1, 2]
            if w0 != 0.0 or w1 != 0.0 or w2 != 0.0:
                ct = c[e, i]
                wn = w1 * nx + w2 * ny
                b1 = 0.5 * (w0 - wn / ct)
                fct = -dt / (2.0 * dr) * (-ct * b1)
                f0 += fct
                f1 += fct * (-ct * nx)
                f2 += fct * (-ct * ny)
        FTbuf[dest, i, 0] = f0
        FTbuf[dest, i, 1] = f1
        FTbuf[dest, i, 2] = f2


@njit(cache=True, fastmath=True)
def _acc_rad_bflux(q, p, RAD, FR, bflux, row, slot, i, jc, nx, ny, length, second, dt):
    """Conservative flux through radial boundary face i of column jc."""
    mnl = q[jc, i - 1, 1] * nx + q[jc, i - 1, 2] * ny
    mnr = q[jc, i, 1] * nx + q[jc, i, 2] * ny
    pm = 0.5 * (p[jc, i - 1] + p[jc, i])
    f0 = 0.5 * (mnl + mnr) - 0.5 * (RAD[slot, i, 3] - RAD[slot, i, 0])
    f1 = pm * nx - 0.5 * (RAD[slot, i, 4] - RAD[slot, i, 1])
    f2 = pm * ny - 0.5 * (RAD[slot, i, 5] - RAD[slot, i, 2])
    if second:
        f0 += FR[i, 0]
        f1 += FR[i, 1]
        f2 += FR[i, 2]
    bflux[row, 0] += dt * length * f0
    bflux[row, 1] += dt * length * f1
    bflux[row, 2] += dt * length * f2


@njit(cache=True, fastmath=True)
def _acc_ang_bflux(q, p, ANG, FTbuf, bflux, row, se, dest, e, nr, nx, ny, dr, second, dt):
    """Conservative flux through angular boundary edge e (all real rows)."""
    for i in range(2, nr + 2):
        mnl = q[e - 1, i, 1] * nx + q[e - 1, i, 2] * ny
        mnr = q[e, i, 1] * nx + q[e, i, 2] * ny
        pm = 0.5 * (p[e - 1, i] + p[e, i])
        f0 = 0.5 * (mnl + mnr) - 0.5 * (ANG[se, i, 3] - ANG[se, i, 0])
        f1 = pm * nx - 0.5 * (ANG[se, i, 4] - ANG[se, i, 1])
        f2 = pm * ny - 0.5 * (ANG[se, i, 5] - ANG[se, i, 2])
        if second:
            f0 += FTbuf[dest, i, 0]
            f1 += FTbuf[dest, i, 1]
            f2 += FTbuf[dest, i, 2]
        bflux[row, 0] += dt * dr * f0
        bflux[row, 1] += dt * dr * f1
        bflux[row, 2] += dt * dr * f2
