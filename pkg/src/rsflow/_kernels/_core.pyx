# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Must stay semantically identical to ``rsflow._kernels.pydp``; the test
suite cross-checks the two backends on random inputs.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def monotone_imax(adm, int jmax):
    cdef cnp.uint8_t[:, ::1] A = np.ascontiguousarray(adm, dtype=np.uint8)
    cdef Py_ssize_t n1 = A.shape[0], m1 = A.shape[1]
    cdef Py_ssize_t i, j
    cdef int imax = -1
    if not A[0, 0]:
        return -1
    cdef cnp.int32_t[::1] streak = np.full(m1, -1, dtype=np.int32)
    cdef cnp.int32_t[::1] prev = np.full(m1, -1, dtype=np.int32)
    cdef bint land, any_reach
    # Row 0: the only landing is (0, 0).
    streak[0] = 0
    for j in range(1, m1):
        if A[0, j] and streak[j - 1] >= 0 and streak[j - 1] < jmax:
            streak[j] = streak[j - 1] + 1
        else:
            streak[j] = -1
    imax = 0
    for i in range(1, n1):
        prev[:] = streak
        any_reach = False
        for j in range(m1):
            if not A[i, j]:
                streak[j] = -1
                continue
            land = prev[j] >= 0 or (j > 0 and prev[j - 1] >= 0)
            if land:
                streak[j] = 0
                any_reach = True
            elif j > 0 and streak[j - 1] >= 0 and streak[j - 1] < jmax:
                streak[j] = streak[j - 1] + 1
                any_reach = True
            else:
                streak[j] = -1
        if not any_reach:
            break
        imax = i
    return imax


def monotone_table(adm, int jmax):
    cdef cnp.uint8_t[:, ::1] A = np.ascontiguousarray(adm, dtype=np.uint8)
    cdef Py_ssize_t n1 = A.shape[0], m1 = A.shape[1]
    out_arr = np.full((n1, m1), -1, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] S = out_arr
    cdef Py_ssize_t i, j
    cdef int imax = -1
    cdef bint land, any_reach
    if not A[0, 0]:
        return -1, out_arr
    S[0, 0] = 0
    for j in range(1, m1):
        if A[0, j] and S[0, j - 1] >= 0 and S[0, j - 1] < jmax:
            S[0, j] = S[0, j - 1] + 1
    imax = 0
    for i in range(1, n1):
        any_reach = False
        for j in range(m1):
            if not A[i, j]:
                continue
            land = S[i - 1, j] >= 0 or (j > 0 and S[i - 1, j - 1] >= 0)
            if land:
                S[i, j] = 0
                any_reach = True
            elif j > 0 and S[i, j - 1] >= 0 and S[i, j - 1] < jmax:
                S[i, j] = S[i, j - 1] + 1
                any_reach = True
        if not any_reach:
            for j in range(m1):
                S[i, j] = -1
            break
        imax = i
    return imax, out_arr


def slope_imax(adm, int dkmin, int dkmax):
    cdef cnp.uint8_t[:, ::1] A = np.ascontiguousarray(adm, dtype=np.uint8)
    cdef Py_ssize_t n1 = A.shape[0], K = A.shape[1]
    cdef cnp.uint8_t[::1] cur = np.zeros(K, dtype=np.uint8)
    cdef cnp.uint8_t[::1] nxt = np.zeros(K, dtype=np.uint8)
    cdef Py_ssize_t i, k
    cdef long cnt
    cdef int imax
    if not A[0, 0]:
        return -1
    cur[0] = 1
    imax = 0
    for i in range(1, n1):
        # Sliding count of reachable predecessors in [k-dkmax, k-dkmin].
        cnt = 0
        for k in range(K):
            if k - dkmin >= 0 and cur[k - dkmin]:
                cnt += 1
            if k - dkmax - 1 >= 0 and cur[k - dkmax - 1]:
                cnt -= 1
            nxt[k] = 1 if (cnt > 0 and A[i, k]) else 0
        cur, nxt = nxt, cur
        cnt = 0
        for k in range(K):
            if cur[k]:
                cnt = 1
                break
        if cnt == 0:
            break
        imax = i
    return imax


def slope_table(adm, int dkmin, int dkmax):
    cdef cnp.uint8_t[:, ::1] A = np.ascontiguousarray(adm, dtype=np.uint8)
    cdef Py_ssize_t n1 = A.shape[0], K = A.shape[1]
    out_arr = np.zeros((n1, K), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] R = out_arr
    cdef Py_ssize_t i, k
    cdef long cnt
    cdef int imax
    cdef bint any_reach
    if not A[0, 0]:
        return -1, out_arr
    R[0, 0] = 1
    imax = 0
    for i in range(1, n1):
        cnt = 0
        any_reach = False
        for k in range(K):
            if k - dkmin >= 0 and R[i - 1, k - dkmin]:
                cnt += 1
            if k - dkmax - 1 >= 0 and R[i - 1, k - dkmax - 1]:
                cnt -= 1
            if cnt > 0 and A[i, k]:
                R[i, k] = 1
                any_reach = True
        if not any_reach:
            break
        imax = i
    return imax, out_arr


def relaxed_reach(adm, int jmax, start):
    cdef cnp.uint8_t[:, ::1] A = np.ascontiguousarray(adm, dtype=np.uint8)
    cdef cnp.uint8_t[::1] S0 = np.ascontiguousarray(start, dtype=np.uint8)
    cdef Py_ssize_t n1 = A.shape[0], m1 = A.shape[1]
    out_arr = np.zeros((n1, m1), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] R = out_arr
    cdef Py_ssize_t i, j, lo, hi
    cdef long cnt
    cdef bint any_reach
    any_reach = False
    for j in range(m1):
        if A[0, j] and S0[j]:
            R[0, j] = 1
            any_reach = True
    for i in range(1, n1):
        if not any_reach:
            break
        any_reach = False
        cnt = 0
        # Window [j-jmax, j+jmax] over the previous row, slid as j grows.
        for j in range(m1):
            if j == 0:
                hi = jmax if jmax < m1 - 1 else m1 - 1
                for lo in range(hi + 1):
                    if R[i - 1, lo]:
                        cnt += 1
            else:
                if j + jmax < m1 and R[i - 1, j + jmax]:
                    cnt += 1
                if j - jmax - 1 >= 0 and R[i - 1, j - jmax - 1]:
                    cnt -= 1
            if cnt > 0 and A[i, j]:
                R[i, j] = 1
                any_reach = True
    return out_arr


def lorenz_orbit(x0, double dt, long n, double sigma, double rho, double beta):
    out_arr = np.empty((n + 1, 3))
    cdef double[:, ::1] out = out_arr
    cdef double x = x0[0], y = x0[1], z = x0[2]
    cdef double ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz
    cdef double x1, y1, z1, x2, y2, z2, x3, y3, z3
    cdef long i
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    for i in range(1, n + 1):
        ax = sigma * (y - x)
        ay = x * (rho - z) - y
        az = x * y - beta * z
        x1 = x + 0.5 * dt * ax
        y1 = y + 0.5 * dt * ay
        z1 = z + 0.5 * dt * az
        bx = sigma * (y1 - x1)
        by = x1 * (rho - z1) - y1
        bz = x1 * y1 - beta * z1
        x2 = x + 0.5 * dt * bx
        y2 = y + 0.5 * dt * by
        z2 = z + 0.5 * dt * bz
        cx = sigma * (y2 - x2)
        cy = x2 * (rho - z2) - y2
        cz = x2 * y2 - beta * z2
        x3 = x + dt * cx
        y3 = y + dt * cy
        z3 = z + dt * cz
        dx = sigma * (y3 - x3)
        dy = x3 * (rho - z3) - y3
        dz = x3 * y3 - beta * z3
        x = x + dt / 6.0 * (ax + 2.0 * bx + 2.0 * cx + dx)
        y = y + dt / 6.0 * (ay + 2.0 * by + 2.0 * cy + dy)
        z = z + dt / 6.0 * (az + 2.0 * bz + 2.0 * cz + dz)
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
    return out_arr


def lorenz_orbit_batch(X0, double dt, long n, double sigma, double rho, double beta):
    X0_arr = np.atleast_2d(np.asarray(X0, dtype=np.float64))
    cdef double[:, ::1] S = np.ascontiguousarray(X0_arr)
    cdef Py_ssize_t N = S.shape[0]
    out_arr = np.empty((N, n + 1, 3))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t p
    cdef long i
    cdef double x, y, z
    cdef double ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz
    cdef double x1, y1, z1, x2, y2, z2, x3, y3, z3
    for p in range(N):
        x = S[p, 0]
        y = S[p, 1]
        z = S[p, 2]
        out[p, 0, 0] = x
        out[p, 0, 1] = y
        out[p, 0, 2] = z
        for i in range(1, n + 1):
            ax = sigma * (y - x)
            ay = x * (rho - z) - y
            az = x * y - beta * z
            x1 = x + 0.5 * dt * ax
            y1 = y + 0.5 * dt * ay
            z1 = z + 0.5 * dt * az
            bx = sigma * (y1 - x1)
            by = x1 * (rho - z1) - y1
            bz = x1 * y1 - beta * z1
            x2 = x + 0.5 * dt * bx
            y2 = y + 0.5 * dt * by
            z2 = z + 0.5 * dt * bz
            cx = sigma * (y2 - x2)
            cy = x2 * (rho - z2) - y2
            cz = x2 * y2 - beta * z2
            x3 = x + dt * cx
            y3 = y + dt * cy
            z3 = z + dt * cz
            dx = sigma * (y3 - x3)
            dy = x3 * (rho - z3) - y3
            dz = x3 * y3 - beta * z3
            x = x + dt / 6.0 * (ax + 2.0 * bx + 2.0 * cx + dx)
            y = y + dt / 6.0 * (ay + 2.0 * by + 2.0 * cy + dy)
            z = z + dt / 6.0 * (az + 2.0 * bz + 2.0 * cz + dz)
            out[p, i, 0] = x
            out[p, i, 1] = y
            out[p, i, 2] = z
    return out_arr
