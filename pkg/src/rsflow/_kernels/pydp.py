"""Pure NumPy implementations of the hot kernels.

Mirrors ``rsflow._kernels._core`` (the Cython extension) exactly; the
package selects between them at import time.  Row recurrences are
vectorized over the lattice columns, so this backend stays usable for
tests and small runs, just slower than the compiled one (see
``benchmarks/bench_kernels.py``).

Lattice conventions shared by both backends: ``adm[i, j]`` says whether
matching constrained grid time ``i*dt`` against warped time ``j*dt``
(or ``j*dt/q`` on the fine grid) keeps the pair inside the rescaled
tube.  Paths start at (0, 0) -- the anchored time origin -- and a query
is feasible at horizon ``t`` when some path reaches row ``round(t/dt)``.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def _vertical_closure(adm_row, land, jmax):
    """Columns reachable from a landing cell by <= jmax admissible j-steps."""
    m = adm_row.shape[0]
    idx = np.arange(m)
    last_block = np.maximum.accumulate(np.where(~adm_row, idx, -1))
    last_land = np.maximum.accumulate(np.where(land, idx, -1))
    return adm_row & (last_land > last_block) & (last_land >= idx - jmax)


def monotone_imax(adm: np.ndarray, jmax: int) -> int:
    """Deepest reachable row under monotone moves with a j-streak cap.

    Moves from (i, j): advance i, advance j, or both; at most ``jmax``
    consecutive j-advances between i-advances (the warp may pause but can
    only jump a bounded amount per constrained step).
    """
    adm = adm.astype(bool)
    n1, m1 = adm.shape
    if not adm[0, 0]:
        return -1
    land = np.zeros(m1, dtype=bool)
    land[0] = True
    reach = _vertical_closure(adm[0], land, jmax)
    imax = 0
    for i in range(1, n1):
        land = adm[i] & (reach | np.concatenate([[False], reach[:-1]]))
        reach = _vertical_closure(adm[i], land, jmax)
        if not reach.any():
            break
        imax = i
    return imax


def monotone_table(adm: np.ndarray, jmax: int) -> tuple[int, np.ndarray]:
    """Like ``monotone_imax`` but returns the per-cell streak table.

    ``streak[i, j]`` is -1 if unreachable, else the number of j-advances
    since the path last landed on row i; landings have streak 0.  The
    table is enough to backtrack a witness path.
    """
    adm = adm.astype(bool)
    n1, m1 = adm.shape
    streak = np.full((n1, m1), -1, dtype=np.int32)
    if not adm[0, 0]:
        return -1, streak
    idx = np.arange(m1)

    def fill_row(i, land):
        last_block = np.maximum.accumulate(np.where(~adm[i], idx, -1))
        last_land = np.maximum.accumulate(np.where(land, idx, -1))
        ok = adm[i] & (last_land > last_block) & (last_land >= idx - jmax)
        streak[i, ok] = (idx - last_land)[ok]
        return ok

    land = np.zeros(m1, dtype=bool)
    land[0] = True
    reach = fill_row(0, land)
    imax = 0
    for i in range(1, n1):
        land = adm[i] & (reach | np.concatenate([[False], reach[:-1]]))
        reach = fill_row(i, land)
        if not reach.any():
            break
        imax = i
    return imax, streak


def _window_any(reach: np.ndarray, lo_off: int, hi_off: int) -> np.ndarray:
    """out[k] = any reach[k-hi_off .. k-lo_off] (offsets >= 0, clipped)."""
    m = reach.shape[0]
    c = np.concatenate([[0], np.cumsum(reach.astype(np.int64))])
    k = np.arange(m)
    hi = np.clip(k - lo_off, -1, m - 1)
    lo = np.clip(k - hi_off, 0, m)
    out = np.zeros(m, dtype=bool)
    valid = hi >= 0
    out[valid] = (c[hi[valid] + 1] - c[lo[valid]]) > 0
    return out


def slope_imax(adm: np.ndarray, dkmin: int, dkmax: int) -> int:
    """Deepest reachable row when each i-step advances h by dkmin..dkmax
    fine-grid cells (the slope-constrained matcher)."""
    adm = adm.astype(bool)
    n1, K = adm.shape
    if not adm[0, 0]:
        return -1
    reach = np.zeros(K, dtype=bool)
    reach[0] = True
    imax = 0
    for i in range(1, n1):
        reach = adm[i] & _window_any(reach, dkmin, dkmax)
        if not reach.any():
            break
        imax = i
    return imax


def slope_table(adm: np.ndarray, dkmin: int, dkmax: int) -> tuple[int, np.ndarray]:
    adm = adm.astype(bool)
    n1, K = adm.shape
    table = np.zeros((n1, K), dtype=np.uint8)
    if not adm[0, 0]:
        return -1, table
    reach = np.zeros(K, dtype=bool)
    reach[0] = True
    table[0] = reach
    imax = 0
    for i in range(1, n1):
        reach = adm[i] & _window_any(reach, dkmin, dkmax)
        if not reach.any():
            break
        table[i] = reach
        imax = i
    return imax, table


def relaxed_reach(adm: np.ndarray, jmax: int, start: np.ndarray) -> np.ndarray:
    """Reachability when the warp may also move backward.

    Moves are (i+1, j+d) with |d| <= jmax and no monotonicity constraint;
    intermediate cells are not checked.  This deliberately over-approximates
    continuous non-monotone matchings, which is the safe direction for the
    calibration probe that uses it.
    """
    adm = adm.astype(bool)
    n1, m1 = adm.shape
    out = np.zeros((n1, m1), dtype=np.uint8)
    reach = adm[0] & start.astype(bool)
    out[0] = reach
    for i in range(1, n1):
        if not reach.any():
            break
        reach = adm[i] & _window_any(reach, -jmax, jmax)
        out[i] = reach
    return out


def lorenz_orbit(
    x0: np.ndarray, dt: float, n: int, sigma: float, rho: float, beta: float
) -> np.ndarray:
    """Classical RK4 trajectory of the Lorenz field, including the start."""
    out = np.empty((n + 1, 3))
    x, y, z = float(x0[0]), float(x0[1]), float(x0[2])
    out[0] = (x, y, z)
    h = dt
    for i in range(1, n + 1):
        ax = sigma * (y - x)
        ay = x * (rho - z) - y
        az = x * y - beta * z
        x1, y1, z1 = x + 0.5 * h * ax, y + 0.5 * h * ay, z + 0.5 * h * az
        bx = sigma * (y1 - x1)
        by = x1 * (rho - z1) - y1
        bz = x1 * y1 - beta * z1
        x2, y2, z2 = x + 0.5 * h * bx, y + 0.5 * h * by, z + 0.5 * h * bz
        cx = sigma * (y2 - x2)
        cy = x2 * (rho - z2) - y2
        cz = x2 * y2 - beta * z2
        x3, y3, z3 = x + h * cx, y + h * cy, z + h * cz
        dx = sigma * (y3 - x3)
        dy = x3 * (rho - z3) - y3
        dz = x3 * y3 - beta * z3
        x += h / 6.0 * (ax + 2.0 * bx + 2.0 * cx + dx)
        y += h / 6.0 * (ay + 2.0 * by + 2.0 * cy + dy)
        z += h / 6.0 * (az + 2.0 * bz + 2.0 * cz + dz)
        out[i] = (x, y, z)
    return out


def lorenz_orbit_batch(
    X0: np.ndarray, dt: float, n: int, sigma: float, rho: float, beta: float
) -> np.ndarray:
    """Vectorized RK4 over a batch of initial conditions, shape (N, n+1, 3)."""

    def f(s):
        x, y, z = s[:, 0], s[:, 1], s[:, 2]
        return np.column_stack(
            [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]
        )

    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    out = np.empty((X0.shape[0], n + 1, 3))
    s = X0.copy()
    out[:, 0] = s
    for i in range(1, n + 1):
        k1 = f(s)
        k2 = f(s + 0.5 * dt * k1)
        k3 = f(s + 0.5 * dt * k2)
        k4 = f(s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[:, i] = s
    return out
