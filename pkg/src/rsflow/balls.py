"""Membership oracles for speed-rescaled dynamical balls.

A candidate y belongs to a rescaled ball around x when some time change
h (from the query's regularity class, always anchored at h(0) = 0)
keeps the matched orbits inside the tube whose radius is eps times the
local speed of the constrained orbit:

* ``B1``            -- identity time, both orbits on the same clock;
* ``B2``            -- h warps x's clock; the tube radius follows x at
                       the warped time;
* ``B3``            -- h warps y's clock; the tube radius follows x at
                       the running time;
* ``GAMMA_FORWARD`` -- B3-shaped constraint over [0, t], the finite-
                       horizon stand-in for the one-sided infinite ball;
* ``GAMMA_TWO_SIDED`` -- forward plus time-reversed runs, both anchored
                       at h(0) = 0.

Feasibility is decided by dynamic programming on the matching lattice:
rows index the covering clock (which must reach the horizon), columns
the warped clock.  One lattice pass reports the deepest coverable row,
which answers every horizon up to the maximum at once.

Membership is decided on grid times only; a grid verdict at radius eps
implies a continuum verdict at eps * (1 + L*dt) for L-Lipschitz fields,
and results carry a margin so callers can reject near-boundary calls.
Merely-continuous time changes are realized by the increasing-warp
oracle: below a calibrated radius the two notions agree at the ball
level, and the radius gap is absorbed into the calibration tables.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .geometry import EuclideanBox, FlatTorus, GluedCylinder
from .reparam import PiecewiseLinearReparam, ReparamClass, identity_reparam
from .systems import (
    Direction,
    FlowSystem,
    require_regular,
    sample_flow,
    sample_flow_batch,
)

DEFAULT_ALPHA_MAX = 0.9  # warp-speed allowance used to size the warped orbit
PLATEAU_SLOPE_FLOOR = 1e-9


class BallVariant(Enum):
    B1 = "b1"
    B2 = "b2"
    B3 = "b3"
    GAMMA_TWO_SIDED = "gamma_two_sided"
    GAMMA_FORWARD = "gamma_forward"


class InsufficientHorizonError(RuntimeError):
    """The warped-side trajectory was too short to decide the query."""


@dataclass(frozen=True)
class BallQuery:
    variant: BallVariant
    center: np.ndarray
    radius: float  # dimensionless eps
    horizon: float
    dt: float
    reparam_class: ReparamClass = ReparamClass.REP
    alpha: float | None = None
    h_resolution: int = 2  # fine-grid subdivision for slope-constrained warps
    alpha_max: float = DEFAULT_ALPHA_MAX

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon < self.dt:
            raise ValueError("horizon must cover at least one step")
        if self.variant in (BallVariant.B2, BallVariant.B3):
            if self.reparam_class is ReparamClass.ANY_C00:
                raise ValueError(
                    "finite-horizon warped balls need an increasing class"
                )
        if self.reparam_class in (ReparamClass.REP_ALPHA, ReparamClass.REP_ALPHA_STAR):
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("alpha in (0,1) required for slope-bounded classes")
            if self.h_resolution < 2:
                raise ValueError("h_resolution must be >= 2 for slope-bounded classes")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).copy())

    @property
    def uses_slope_class(self) -> bool:
        return self.reparam_class in (
            ReparamClass.REP_ALPHA,
            ReparamClass.REP_ALPHA_STAR,
        )

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def warp_steps(self) -> int:
        span = (1.0 + self.alpha_max) * self.horizon + 3.0 * self.radius
        return int(np.ceil(span / self.dt))

    @property
    def jump_cap(self) -> int:
        # Matched times drift O(eps) per flowbox crossing, hence the cap.
        return max(1, int(np.ceil(3.0 * self.radius / self.dt)))


@dataclass(frozen=True)
class MatchResult:
    member: bool
    witness: PiecewiseLinearReparam | None
    margin: float
    horizon: float

    def __post_init__(self):
        if self.member and self.witness is None:
            raise ValueError("members must carry a witness")


# ---------------------------------------------------------------------------
# Pairwise distances per geometry.  The admissibility matrix is the
# numpy-side hot spot, so angle extraction is hoisted out of the grid.


def pairwise_distance(sys: FlowSystem, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    geom = sys.geometry
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if isinstance(geom, FlatTorus):
        p = np.asarray(geom.periods)
        d = np.abs(np.mod(A[:, None, :] - B[None, :, :], p))
        d = np.minimum(d, p - d)
        return np.sqrt(np.sum(d * d, axis=-1))
    if isinstance(geom, EuclideanBox):
        diff = A[:, None, :] - B[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))
    xa = geom.base_coord(A)[:, None]
    xb = geom.base_coord(B)[None, :]
    ra = A[:, 2][:, None]
    rb = B[:, 2][None, :]
    arc = geom._arc
    out = np.hypot(arc(xa, xb), ra - rb)
    out = np.minimum(out, (1.0 - ra) + np.hypot(arc(np.mod(2.0 * xa, 1.0), xb), rb))
    out = np.minimum(out, (1.0 - rb) + np.hypot(arc(np.mod(2.0 * xb, 1.0), xa), ra))
    out = np.minimum(
        out,
        ra
        + np.minimum(
            np.hypot(arc(xa / 2.0, xb), 1.0 - rb),
            np.hypot(arc(xa / 2.0 + 0.5, xb), 1.0 - rb),
        ),
    )
    out = np.minimum(
        out,
        rb
        + np.minimum(
            np.hypot(arc(xb / 2.0, xa), 1.0 - ra),
            np.hypot(arc(xb / 2.0 + 0.5, xa), 1.0 - ra),
        ),
    )
    return out


def _interp_states(sys: FlowSystem, states: np.ndarray, q: int) -> np.ndarray:
    """States resampled on the q-fold finer grid by linear interpolation.

    Interpolation respects wrap-around on tori; on the glued cylinder,
    steps that straddle a gluing crossing fall back to the nearer sample
    (error at most dt/2 at unit speed, absorbed by the slope oracle's
    tolerance inflation).
    """
    geom = sys.geometry
    n = states.shape[0] - 1
    K = n * q + 1
    w = (np.arange(K) % q) / q
    j = np.minimum(np.arange(K) // q, n - 1)
    w = np.where(np.arange(K) // q >= n, 1.0, w)
    a, b = states[j], states[j + 1]
    if isinstance(geom, FlatTorus):
        p = np.asarray(geom.periods)
        d = b - a
        d -= p * np.round(d / p)
        return geom.reduce(a + w[:, None] * d)
    if isinstance(geom, GluedCylinder):
        base_a, base_b = geom.base_coord(a), geom.base_coord(b)
        db = base_b - base_a
        db -= np.round(db)
        roof_a, roof_b = a[:, 2], b[:, 2]
        out = geom.from_intrinsic(
            np.mod(base_a + w * db, 1.0), roof_a + w * (roof_b - roof_a)
        )
        crossing = roof_b < roof_a  # gluing inside this step
        out[crossing & (w <= 0.5)] = a[crossing & (w <= 0.5)]
        out[crossing & (w > 0.5)] = b[crossing & (w > 0.5)]
        return out
    return a + w[:, None] * (b - a)


def interp_inflation(sys: FlowSystem, dt: float, radius: float) -> float:
    """Relative tube inflation covering interpolation error on the fine
    grid: L*dt for Lipschitz fields, plus the gluing-crossing slack on
    the suspension space (nearest-sample fallback, error <= dt/2)."""
    L = sys.lipschitz_hint if sys.lipschitz_hint is not None else 1.0
    kappa = L * dt
    if isinstance(sys.geometry, GluedCylinder):
        kappa = max(kappa, 0.5 * dt / radius)
    return kappa


# ---------------------------------------------------------------------------
# Lattice assembly


def _lattice(sys: FlowSystem, q: BallQuery, y: np.ndarray, direction: Direction):
    """Admissibility matrix plus path-evaluation closures for one query.

    Returns (adm, dp_args, evaluate) where evaluate(cols) gives
    (distances, tubes) along a lattice path for margin computation.
    """
    n, m = q.n_steps, q.warp_steps
    if q.variant is BallVariant.B2:
        cov = sample_flow(sys, y, q.dt, n, direction, check_escape=False)
        warp = sample_flow(sys, q.center, q.dt, m, direction, check_escape=False)
        tube_on_cols = True
    else:
        cov = sample_flow(sys, q.center, q.dt, n, direction, check_escape=False)
        warp = sample_flow(sys, y, q.dt, m, direction, check_escape=False)
        tube_on_cols = False

    if q.uses_slope_class:
        kappa = interp_inflation(sys, q.dt, q.radius)
        warp_eval = _interp_states(sys, warp, q.h_resolution)
        scale = q.radius * (1.0 + kappa)
    else:
        warp_eval = warp
        scale = q.radius

    d = pairwise_distance(sys, cov, warp_eval)
    if tube_on_cols:
        tube = scale * sys.speed(warp_eval)
        adm = (d <= tube[None, :]).astype(np.uint8)
    else:
        tube = scale * sys.speed(cov)
        adm = (d <= tube[:, None]).astype(np.uint8)

    def evaluate(cols):
        dd = d[np.arange(len(cols)), cols]
        tt = tube[cols] if tube_on_cols else tube[: len(cols)]
        return dd, tt

    return adm, evaluate


def _witness_from_cols(cols, dt_cov: float, dt_warp: float) -> PiecewiseLinearReparam:
    h = np.asarray(cols, dtype=float) * dt_warp
    out = np.empty_like(h)
    out[0] = 0.0
    for i in range(1, len(h)):
        # Collapse plateaus to strict increase (homeomorphism surrogate).
        out[i] = max(h[i], out[i - 1] + PLATEAU_SLOPE_FLOOR * dt_cov)
    s = dt_cov * np.arange(len(h))
    return PiecewiseLinearReparam(tuple(zip(s.tolist(), out.tolist())))


def _backtrack_monotone(streak: np.ndarray, n_t: int) -> np.ndarray:
    j = int(np.flatnonzero(streak[n_t] >= 0)[0])
    cols = np.zeros(n_t + 1, dtype=np.int64)
    cols[n_t] = j
    i = n_t
    while i > 0 or j > 0:
        if streak[i, j] > 0:
            j -= 1
        else:
            if j > 0 and streak[i - 1, j - 1] >= 0:
                j -= 1
            i -= 1
            cols[i] = j
    return cols


def _backtrack_slope(reach, n_t: int, dkmin: int, dkmax: int, qres: int) -> np.ndarray:
    k = int(np.flatnonzero(reach[n_t])[0])
    cols = np.zeros(n_t + 1, dtype=np.int64)
    cols[n_t] = k
    for i in range(n_t, 0, -1):
        lo, hi = max(0, k - dkmax), k - dkmin
        prefer = k - qres  # slope-1 predecessor
        cands = sorted(range(lo, hi + 1), key=lambda c: (abs(c - prefer), c))
        k = next(c for c in cands if reach[i - 1, c])
        cols[i - 1] = k
    return cols


def _slope_dk(q: BallQuery) -> tuple[int, int]:
    dkmin = int(np.ceil((1.0 - q.alpha) * q.h_resolution - 1e-9))
    dkmax = int(np.floor((1.0 + q.alpha) * q.h_resolution + 1e-9))
    return dkmin, dkmax


def _run_member(sys, q, y, direction) -> MatchResult:
    adm, evaluate = _lattice(sys, q, y, direction)
    n = q.n_steps
    if q.uses_slope_class:
        dkmin, dkmax = _slope_dk(q)
        imax, table = _kernels.slope_table(adm, dkmin, dkmax)
    else:
        imax, table = _kernels.monotone_table(adm, q.jump_cap)
    if imax < n:
        saturated = imax >= 0 and (
            bool(table[imax, -1]) if q.uses_slope_class else table[imax, -1] >= 0
        )
        if saturated:
            raise InsufficientHorizonError(
                f"warp lattice saturated its column budget at row {imax}"
            )
        return MatchResult(False, None, float("nan"), q.horizon)
    if q.uses_slope_class:
        cols = _backtrack_slope(table, n, dkmin, dkmax, q.h_resolution)
        witness = PiecewiseLinearReparam(
            tuple((i * q.dt, k * q.dt / q.h_resolution) for i, k in enumerate(cols))
        )
    else:
        cols = _backtrack_monotone(table, n)
        witness = _witness_from_cols(cols, q.dt, q.dt)
    dd, tt = evaluate(cols)
    margin = float(np.min((tt - dd) / tt))
    return MatchResult(True, witness, margin, q.horizon)


# ---------------------------------------------------------------------------
# Public oracles


def b1_member(sys: FlowSystem, q: BallQuery, y: np.ndarray) -> MatchResult:
    """Identity-time membership: orbits stay matched sample by sample."""
    require_regular(sys, q.center)
    n = q.n_steps
    xs = sample_flow(sys, q.center, q.dt, n)
    ys = sample_flow(sys, np.asarray(y, dtype=float), q.dt, n)
    tube = q.radius * sys.speed(xs)
    d = sys.distance(xs, ys)
    slack = (tube - d) / tube
    member = bool(np.all(d <= tube))
    return MatchResult(
        member=member,
        witness=identity_reparam(q.horizon) if member else None,
        margin=float(slack.min()),
        horizon=q.horizon,
    )


def monotone_member(sys: FlowSystem, q: BallQuery, y: np.ndarray) -> MatchResult:
    """Increasing-warp membership on [0, t] with witness extraction."""
    require_regular(sys, q.center)
    if q.uses_slope_class:
        raise ValueError("slope-bounded classes go through slope_member")
    if q.variant is BallVariant.B1:
        raise ValueError("monotone_member needs a warped variant")
    return _run_member(sys, q, np.asarray(y, dtype=float), Direction.FORWARD)


def slope_member(sys: FlowSystem, q: BallQuery, y: np.ndarray) -> MatchResult:
    """Almost-identity-warp membership: witness slopes in [1-a, 1+a].

    The warped orbit is evaluated on an h_resolution-fold finer grid by
    interpolation, with the tube inflated by ``interp_inflation``.
    """
    require_regular(sys, q.center)
    if not q.uses_slope_class:
        raise ValueError("slope_member requires a slope-bounded class")
    return _run_member(sys, q, np.asarray(y, dtype=float), Direction.FORWARD)


def gamma_member(sys: FlowSystem, q: BallQuery, y: np.ndarray) -> MatchResult:
    """Finite-horizon rescaled dynamical ball membership.

    Forward mode matches on [0, t]; two-sided mode additionally matches
    the time-reversed orbits, both runs anchored at h(0) = 0.  The
    verdict is *at this horizon* (the ideal ball is the intersection
    over all horizons), so callers should sweep horizons and watch the
    decay.  A merely-continuous query class is realized by the
    increasing-warp oracle.
    """
    require_regular(sys, q.center)
    if q.variant not in (BallVariant.GAMMA_FORWARD, BallVariant.GAMMA_TWO_SIDED):
        raise ValueError("gamma_member needs a gamma variant")
    qq = q
    if q.reparam_class is ReparamClass.ANY_C00:
        qq = BallQuery(
            variant=q.variant,
            center=q.center,
            radius=q.radius,
            horizon=q.horizon,
            dt=q.dt,
            reparam_class=ReparamClass.REP,
            alpha=q.alpha,
            h_resolution=q.h_resolution,
            alpha_max=q.alpha_max,
        )
    y = np.asarray(y, dtype=float)
    fwd = _run_member(sys, qq, y, Direction.FORWARD)
    if qq.variant is BallVariant.GAMMA_FORWARD or not fwd.member:
        return fwd
    bwd = _run_member(sys, qq, y, Direction.BACKWARD)
    if not bwd.member:
        return MatchResult(False, None, float("nan"), q.horizon)
    knots_b = [(-s, -h) for s, h in bwd.witness.knots if s > 0.0]
    witness = PiecewiseLinearReparam(tuple(sorted(knots_b + list(fwd.witness.knots))))
    return MatchResult(True, witness, min(fwd.margin, bwd.margin), q.horizon)


# ---------------------------------------------------------------------------
# Batched horizon sweep


def member_horizon_batch(
    sys: FlowSystem,
    q: BallQuery,
    candidates: np.ndarray,
    chunk: int = 256,
) -> np.ndarray:
    """Deepest matched grid row per candidate (-1: fails at the anchor).

    A candidate is a member at horizon t iff its entry >= round(t/dt),
    so one call serves a whole horizon sweep.  The anchored time origin
    prefilters candidates (h(0)=0 forces d(x,y) <= eps*speed(x)) before
    any lattice work.  Gamma two-sided reports the min of forward and
    backward depths.
    """
    require_regular(sys, q.center)
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if q.variant is BallVariant.B1:
        return _b1_horizons(sys, q, candidates, chunk)
    fwd = _warp_horizons(sys, q, candidates, chunk, Direction.FORWARD)
    if q.variant is not BallVariant.GAMMA_TWO_SIDED:
        return fwd
    bwd = _warp_horizons(sys, q, candidates, chunk, Direction.BACKWARD)
    return np.minimum(fwd, bwd)


def _b1_horizons(sys, q, candidates, chunk):
    n = q.n_steps
    xs = sample_flow(sys, q.center, q.dt, n)
    tube = q.radius * sys.speed(xs)
    out = np.empty(len(candidates), dtype=np.int64)
    for lo in range(0, len(candidates), chunk):
        block = candidates[lo : lo + chunk]
        near = sys.distance(block, q.center) <= tube[0]
        res = np.full(len(block), -1, dtype=np.int64)
        if near.any():
            ys = sample_flow_batch(sys, block[near], q.dt, n)
            ok = sys.distance(ys, xs[None, :, :]) <= tube[None, :]
            bad = ~ok
            first_bad = np.where(bad.any(axis=1), bad.argmax(axis=1), n + 1)
            res[near] = first_bad - 1
        out[lo : lo + len(block)] = res
    return out


def _warp_horizons(sys, q, candidates, chunk, direction):
    n, m = q.n_steps, q.warp_steps
    rq = q
    if q.reparam_class is ReparamClass.ANY_C00:
        rq = BallQuery(
            variant=q.variant,
            center=q.center,
            radius=q.radius,
            horizon=q.horizon,
            dt=q.dt,
            reparam_class=ReparamClass.REP,
            alpha=q.alpha,
            h_resolution=q.h_resolution,
            alpha_max=q.alpha_max,
        )
    slope = rq.uses_slope_class
    if slope:
        dkmin, dkmax = _slope_dk(rq)
        kappa = interp_inflation(sys, rq.dt, rq.radius)
    b2 = rq.variant is BallVariant.B2
    if b2:
        warp = sample_flow(sys, rq.center, rq.dt, m, direction, check_escape=False)
        warp_eval = _interp_states(sys, warp, rq.h_resolution) if slope else warp
        scale = rq.radius * (1.0 + kappa) if slope else rq.radius
        tube_cols = scale * sys.speed(warp_eval)
    else:
        cov = sample_flow(sys, rq.center, rq.dt, n, direction, check_escape=False)
        scale = rq.radius * (1.0 + kappa) if slope else rq.radius
        tube_rows = scale * sys.speed(cov)
    r0 = rq.radius * float(sys.speed(rq.center))
    out = np.empty(len(candidates), dtype=np.int64)
    for lo in range(0, len(candidates), chunk):
        block = candidates[lo : lo + chunk]
        near = sys.distance(block, rq.center) <= r0
        res = np.full(len(block), -1, dtype=np.int64)
        idx = np.flatnonzero(near)
        if idx.size:
            steps = n if b2 else m
            ys = sample_flow_batch(sys, block[near], rq.dt, steps, direction, check_escape=False)
            for pos, ci in enumerate(idx):
                if b2:
                    d = pairwise_distance(sys, ys[pos], warp_eval)
                    adm = (d <= tube_cols[None, :]).astype(np.uint8)
                else:
                    y_eval = (
                        _interp_states(sys, ys[pos], rq.h_resolution)
                        if slope
                        else ys[pos]
                    )
                    d = pairwise_distance(sys, cov, y_eval)
                    adm = (d <= tube_rows[:, None]).astype(np.uint8)
                if slope:
                    res[ci] = _kernels.slope_imax(adm, dkmin, dkmax)
                else:
                    res[ci] = _kernels.monotone_imax(adm, rq.jump_cap)
        out[lo : lo + len(block)] = res
    return out
