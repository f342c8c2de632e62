"""Flowbox charts and empirical estimation of the flow's structural scales.

Five quantities calibrate the matching and entropy machinery:

* ``L``      -- a global bound on the field's Jacobian norm (growth rate
                of speeds and of orbit separation);
* ``c``      -- the relative radius inside which speeds of nearby regular
                points agree within a factor of two;
* ``T0``     -- the flowbox time scale: charts of relative size T0 around
                regular points behave like straightened flow, derivative
                pinched between 1/3 and 3;
* ``gamma_T``-- the separation modulus: within time offsets in [T, T0] an
                orbit moves at least gamma_T times its local speed;
* ``delta_T``-- the matching radius below which every feasible anchored
                matching on [-T0, T0] must advance past time T.

The underlying existence proofs are nonconstructive, so everything here
is a randomized empirical certificate: recorded seeds, safety factors
(0.9 shrink on minima, 1.1 inflation on maxima), and resampling hooks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import EuclideanBox, FlatTorus, GluedCylinder
from .systems import (
    Direction,
    FlowSystem,
    SingularCenterError,
    min_regular_speed,
    sample_flow,
    sample_near,
    sample_regular,
)


class EstimationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Lipschitz bound


def finite_difference_jacobian(field, pts: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobians, shape (n, dim, dim)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n, d = pts.shape
    J = np.empty((n, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        J[:, :, k] = (field(pts + e) - field(pts - e)) / (2.0 * step)
    return J


def estimate_lipschitz(
    sys: FlowSystem, n_samples: int = 500, seed: int = 0, step: float = 1e-5
) -> float:
    """Max sampled operator norm of the field's Jacobian, inflated by 1.1."""
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    pts = sys.geometry.sample(rng, n_samples)
    J = finite_difference_jacobian(sys.field, pts, step)
    sv = np.linalg.svd(J, compute_uv=False)
    return float(sv[:, 0].max() * 1.1)


# ---------------------------------------------------------------------------
# Speed-ratio radius


def estimate_speed_ratio_c(
    sys: FlowSystem,
    n_pairs: int = 2000,
    seed: int = 0,
    s_min: float | None = None,
    grid_levels: int = 21,
) -> float:
    """Largest grid radius factor keeping nearby speeds within [1/2, 2].

    Scans c over {2^-k}; for each candidate, samples regular x and domain
    points y with d(x, y) < c * speed(x) and checks the two-sided ratio.
    Returns the first passing grid value scanning downward (one step
    below the first failure when the top fails).
    """
    if n_pairs < 1000:
        raise ValueError("need at least 1000 pairs")
    s_min = min_regular_speed(sys) if s_min is None else s_min
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_pairs, s_min)
    sx = sys.speed(xs)
    for k in range(grid_levels):
        c = 2.0 ** (-k)
        ok = True
        for x, sp in zip(xs, sx):
            y = sample_near(sys, x, c * sp, rng)
            if sys.distance(x, y) >= c * sp:
                continue
            sy = float(sys.speed(y))
            if not (0.5 * sp <= sy <= 2.0 * sp):
                ok = False
                break
        if ok:
            return c
    raise EstimationError("speed-ratio radius below the search grid")


# ---------------------------------------------------------------------------
# Separation modulus


def estimate_separation(
    sys: FlowSystem,
    T: float,
    T0: float,
    n_samples: int = 200,
    seed: int = 0,
    s_min: float | None = None,
) -> float:
    """0.9 times the sampled minimum of d(flow_t(x), x)/speed(x) over
    regular x and |t| in [T, T0] (grid step T/20)."""
    if not 0.0 < T < T0:
        raise ValueError("need 0 < T < T0")
    s_min = min_regular_speed(sys) if s_min is None else s_min
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_samples, s_min)
    dt = T / 20.0
    n = int(round(T0 / dt))
    i_lo = int(np.ceil(T / dt - 1e-9))
    best = np.inf
    for direction in (Direction.FORWARD, Direction.BACKWARD):
        for x in xs:
            states = sample_flow(sys, x, dt, n, direction, check_escape=False)
            d = sys.distance(states[i_lo:], x)
            best = min(best, float(np.min(d) / sys.speed(x)))
    if not np.isfinite(best):
        raise EstimationError("no valid separation samples")
    return 0.9 * best


# ---------------------------------------------------------------------------
# Flowbox charts

_FLOW_STEPS = 24  # integration steps used for one chart evaluation


def chart_dim(sys: FlowSystem) -> int:
    """Intrinsic manifold dimension (the glued cylinder is a surface)."""
    return 2 if isinstance(sys.geometry, GluedCylinder) else sys.dim


@dataclass(frozen=True)
class FlowboxChart:
    """Chart (v, t) -> flow_t(exp_x(v)) on the box |v| <= r*speed(x), |t| <= r.

    ``normal_frame`` spans the orthogonal complement of the field at the
    base point (in intrinsic coordinates on the glued cylinder).  The
    ``point`` method realizes exp_x as translation; ``forward`` evaluates
    the chart by integrating the flow.
    """

    sys: FlowSystem
    base: np.ndarray
    r: float
    normal_frame: np.ndarray  # (dim_intrinsic - 1, dim coords) or intrinsic tag

    @property
    def speed(self) -> float:
        return float(self.sys.speed(self.base))

    def point(self, v_coords: np.ndarray) -> np.ndarray:
        """exp of a normal vector given by its frame coordinates."""
        v_coords = np.atleast_1d(np.asarray(v_coords, dtype=float))
        geom = self.sys.geometry
        if isinstance(geom, GluedCylinder):
            base = geom.base_coord(self.base) + v_coords[0]
            return geom.reduce(
                geom.from_intrinsic(np.mod(base, 1.0), self.base[2])
            )
        y = self.base + v_coords @ self.normal_frame
        if isinstance(geom, FlatTorus):
            y = geom.reduce(y)
        return y

    def forward(self, v_coords: np.ndarray, t: float) -> np.ndarray:
        y = self.point(v_coords)
        if t == 0.0:
            return y
        direction = Direction.FORWARD if t > 0 else Direction.BACKWARD
        return sample_flow(
            self.sys, y, abs(t) / _FLOW_STEPS, _FLOW_STEPS, direction, check_escape=False
        )[-1]

    def derivative_singular_values(
        self, v_coords: np.ndarray, t: float, fd_step: float | None = None
    ) -> np.ndarray:
        """Singular values of the finite-difference chart derivative.

        Columns are taken against orthonormal box coordinates: the normal
        frame directions plus the unit flow direction (one unit of which
        is 1/speed(x) of chart time).
        """
        k = chart_dim(self.sys) - 1
        v_coords = np.zeros(k) if v_coords is None else np.asarray(v_coords, float)
        sp = self.speed
        h = fd_step if fd_step is not None else max(1e-6, 1e-3 * self.r * sp)
        cols = []
        for a in range(k):
            e = np.zeros(k)
            e[a] = h
            cols.append(
                self._displacement(
                    self.forward(v_coords + e, t), self.forward(v_coords - e, t)
                )
                / (2.0 * h)
            )
        dtau = h / sp  # unit box length along the flow axis
        cols.append(
            self._displacement(
                self.forward(v_coords, t + dtau), self.forward(v_coords, t - dtau)
            )
            / (2.0 * h)
        )
        M = np.column_stack(cols)
        if not np.all(np.isfinite(M)):
            return np.full(M.shape[1], np.nan)
        return np.linalg.svd(M, compute_uv=False)

    def _displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Difference vector respecting the geometry's identifications."""
        geom = self.sys.geometry
        if isinstance(geom, FlatTorus):
            p = np.asarray(geom.periods)
            d = a - b
            return d - p * np.round(d / p)
        if isinstance(geom, GluedCylinder):
            db = geom.base_coord(a) - geom.base_coord(b)
            db -= np.round(db)
            return np.array([db, a[2] - b[2]])
        return a - b

    def image_is_regular(self, grid: int = 5, s_min: float | None = None) -> bool:
        """Spot check: no rest point inside the chart image."""
        s_min = 0.0 if s_min is None else s_min
        k = chart_dim(self.sys) - 1
        sp = self.speed
        for t in np.linspace(-self.r, self.r, grid):
            for _ in range(grid):
                v = np.random.default_rng(grid).uniform(-1, 1, size=k)
                v *= self.r * sp / max(np.linalg.norm(v), 1e-12)
                if float(self.sys.speed(self.forward(v, t))) <= s_min:
                    return False
        return True


def build_flowbox(
    sys: FlowSystem, x: np.ndarray, r: float, s_min: float | None = None
) -> FlowboxChart:
    """Orthonormal flowbox chart at a regular point.

    The normal frame comes from a QR factorization seeded with the unit
    field direction (Gram-Schmidt against it).
    """
    x = np.asarray(x, dtype=float)
    s_min = min_regular_speed(sys) if s_min is None else s_min
    sp = float(sys.speed(x))
    if sp < s_min:
        raise SingularCenterError(f"flowbox base speed {sp:.3e} below guard")
    if isinstance(sys.geometry, GluedCylinder):
        frame = np.array([[1.0, 0.0]])  # intrinsic base direction
    else:
        u = sys.field(x) / sp
        d = sys.dim
        cols = [u] + [e for e in np.eye(d)[np.argsort(np.abs(u))[:-1]]]
        q, _ = np.linalg.qr(np.column_stack(cols))
        if np.dot(q[:, 0], u) < 0:
            q = -q
        frame = q[:, 1:].T
    return FlowboxChart(sys=sys, base=x, r=float(r), normal_frame=frame)


DERIV_LO, DERIV_HI = 1.0 / 3.0 * 0.9, 3.0 * 1.1  # acceptance bounds
_T0_LO, _T0_HI = 0.35, 3.0  # stricter internal bounds for the T0 search


def _chart_ok(sys, x, r, rng, s_min, n_probe=4) -> bool:
    chart = build_flowbox(sys, x, r, s_min)
    k = chart_dim(sys) - 1
    sp = chart.speed
    probes = [(np.zeros(k), 0.0)]
    for _ in range(n_probe):
        v = rng.uniform(-1, 1, size=k)
        v *= 0.8 * r * sp / max(np.linalg.norm(v), 1e-12)
        probes.append((v, rng.uniform(-0.8 * r, 0.8 * r)))
    pts = []
    with np.errstate(over="ignore", invalid="ignore"):
        for v, t in probes:
            sv = chart.derivative_singular_values(v, t)
            if not np.all(np.isfinite(sv)):
                return False
            if sv[0] > _T0_HI or sv[-1] < _T0_LO:
                return False
            y = chart.forward(v, t)
            if not np.all(np.isfinite(y)) or float(sys.speed(y)) <= 0.0:
                return False
            pts.append((np.append(v, t * sp), y))
    # Injectivity spot check: distant box points must stay separated by a
    # fraction of the derivative lower bound.
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            du = np.linalg.norm(pts[i][0] - pts[j][0])
            if du > 0.25 * r * sp:
                if sys.distance(pts[i][1], pts[j][1]) < 0.15 * du:
                    return False
    return True


def estimate_t0(
    sys: FlowSystem,
    n_points: int = 50,
    seed: int = 0,
    s_min: float | None = None,
    top: float = 1.0,
    levels: int = 16,
    shrink: float = 0.75,
) -> float:
    """Largest grid scale at which flowbox checks pass at sampled points."""
    s_min = min_regular_speed(sys) if s_min is None else s_min
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_points, s_min)
    for lev in range(levels):
        r = top * shrink**lev
        try:
            if all(_chart_ok(sys, x, r, rng, s_min) for x in xs):
                return r
        except Exception:
            continue
    raise EstimationError("no flowbox scale passed the derivative checks")


# ---------------------------------------------------------------------------
# Matching-radius calibration (delta_T)


def _two_sided_feasible(sys, x, y, delta, T0, dt, jmax):
    """Relaxed two-sided matching probe.

    Returns (feasible, fwd_reach, bwd_ok, j0): reachability tables for
    the forward warp lattice (rows = x's grid times in [0, T0], cols =
    y's grid times in [-T0-slack, T0+slack]).
    """
    n0 = int(round(T0 / dt))
    m = n0 + jmax + 2
    xf = sample_flow(sys, x, dt, n0, Direction.FORWARD, check_escape=False)
    xb = sample_flow(sys, x, dt, n0, Direction.BACKWARD, check_escape=False)
    yf = sample_flow(sys, y, dt, m, Direction.FORWARD, check_escape=False)
    yb = sample_flow(sys, y, dt, m, Direction.BACKWARD, check_escape=False)
    y_line = np.concatenate([yb[::-1], yf[1:]])  # index j0 + k is time k*dt
    j0 = m

    def reaches(x_states):
        tube = delta * sys.speed(x_states)
        adm = (
            sys.distance(x_states[:, None, :], y_line[None, :, :])
            <= tube[:, None]
        ).astype(np.uint8)
        start = np.zeros(y_line.shape[0], dtype=np.uint8)
        start[j0] = 1
        fwd = _kernels.relaxed_reach(adm, jmax, start)
        bwd = _kernels.relaxed_reach(adm[::-1].copy(), jmax, adm[-1])[::-1]
        return fwd, bwd

    fwdF, bwdF = reaches(xf)
    covering_F = bool((fwdF[-1] & bwdF[-1]).any())
    fwdB, bwdB = reaches(xb)
    covering_B = bool((fwdB[-1] & bwdB[-1]).any())
    return covering_F and covering_B, fwdF, bwdF, j0


def calibrate_delta(
    sys: FlowSystem,
    T: float,
    n_trials: int = 60,
    seed: int = 0,
    T0: float | None = None,
    dt: float | None = None,
    s_min: float | None = None,
    top: float = 0.5,
    grid_levels: int = 14,
) -> tuple[float, dict]:
    """Largest grid radius at which every feasible anchored two-sided
    matching advances past T (value at T strictly positive).

    The probe allows non-monotone warps (see ``relaxed_reach``), which
    over-approximates continuous matchings; the returned radius errs
    small.  Returns (delta, events) where events records, per grid
    level, feasible-pair and violation counts; the events for the level
    above the returned one document why the scan stopped.
    """
    T0 = estimate_t0(sys, seed=seed, s_min=s_min) if T0 is None else T0
    if not 0.0 < T < T0:
        raise ValueError("need 0 < T < T0")
    dt = T / 10.0 if dt is None else dt
    s_min = min_regular_speed(sys) if s_min is None else s_min
    rng = np.random.default_rng(seed)
    i_T = int(round(T / dt))
    events = []
    chosen = None
    flagged = False
    for lev in range(grid_levels):
        delta = top * 2.0 ** (-lev)
        jmax = max(1, int(np.ceil(3.0 * delta / dt)) + 1)
        feasible = violations = 0
        for _ in range(n_trials):
            x = sample_regular(sys, rng, 1, s_min)[0]
            if rng.random() < 0.5:
                u = rng.uniform(-delta, delta)
                y = sample_flow(
                    sys,
                    x,
                    abs(u) / 8.0 + 1e-12,
                    8,
                    Direction.FORWARD if u >= 0 else Direction.BACKWARD,
                    check_escape=False,
                )[-1]
            else:
                y = sample_near(sys, x, delta * float(sys.speed(x)), rng)
            ok, fwd, bwd, j0 = _two_sided_feasible(sys, x, y, delta, T0, dt, jmax)
            if not ok:
                continue
            feasible += 1
            if (fwd[i_T, : j0 + 1] & bwd[i_T, : j0 + 1]).any():
                violations += 1
        events.append(
            {"delta": delta, "feasible": feasible, "violations": violations}
        )
        if feasible > 0 and violations == 0:
            chosen = delta
            break
    if chosen is None:
        chosen = top * 2.0 ** (-(grid_levels - 1))
        flagged = True
    return chosen, {"events": events, "flagged": flagged, "seed": seed, "T": T}


# ---------------------------------------------------------------------------
# Bundle


@dataclass(frozen=True)
class FlowConstants:
    L: float
    c: float
    T0: float
    gamma_of: dict  # T -> gamma_T
    delta_of: dict  # T -> delta_T
    provenance: dict

    def __post_init__(self):
        vals = [self.L, self.c, self.T0, *self.gamma_of.values(), *self.delta_of.values()]
        if any(v < 0.0 for v in vals) or any(
            v <= 0.0 for v in [self.c, self.T0, *self.gamma_of.values()]
        ):
            raise ValueError("structural constants must be positive")

    def gamma_at(self, T: float) -> float:
        """Table lookup with conservative fallback to the next smaller T."""
        keys = sorted(self.gamma_of)
        below = [k for k in keys if k <= T * (1.0 + 1e-9)]
        if not below:
            raise KeyError(f"no gamma entry at or below T={T}")
        return self.gamma_of[below[-1]]


def estimate_constants(
    sys: FlowSystem,
    seed: int = 0,
    n_samples: int = 500,
    n_pairs: int = 2000,
    gamma_fractions: tuple[float, ...] = (0.125, 0.25, 0.5, 0.75),
    delta_fractions: tuple[float, ...] = (0.25, 0.5),
    with_delta: bool = True,
) -> FlowConstants:
    """Estimate the full constants bundle with one recorded protocol."""
    L = estimate_lipschitz(sys, max(100, n_samples), seed=seed)
    c = estimate_speed_ratio_c(sys, max(1000, n_pairs), seed=seed)
    # Derivative pinching forces T0 <= ~ln(3)/L, so start the scan there.
    top = min(1.0, 5.0 / L) if L > 5.0 else 1.0
    T0 = estimate_t0(sys, seed=seed, top=top)
    gamma = {}
    for frac in gamma_fractions:
        T = frac * T0
        gamma[T] = estimate_separation(sys, T, T0, n_samples=200, seed=seed)
    delta = {}
    delta_events = {}
    if with_delta:
        for frac in delta_fractions:
            T = frac * T0
            d, info = calibrate_delta(sys, T, seed=seed, T0=T0)
            delta[T] = d
            delta_events[T] = info
    prov = {
        "seed": seed,
        "n_samples": n_samples,
        "n_pairs": n_pairs,
        "delta_events": delta_events,
    }
    return FlowConstants(L=L, c=c, T0=T0, gamma_of=gamma, delta_of=delta, provenance=prov)


def almost_identity_epsilon(
    L: float, T0: float, c: float, gamma_b: float, lam: float, b: float, dt: float = 0.0
) -> float:
    """Radius below which any anchored matching is an almost-identity
    time change: |h(t) - t| <= lam * t on [b, T].

    The three-way minimum mirrors the constructive choice in the
    underlying argument; the optional ``dt`` deflation absorbs the
    grid-sampling inflation (tube checks hold only at grid times), and
    the 0.9 factor is the house safety margin on minima.
    """
    if not 0.0 < b < T0:
        raise ValueError("need 0 < b < T0")
    w = 1.0 + np.exp(2.0 * L * T0)
    eps = min(gamma_b / (2.0 * w), lam * b / (6.0 * w), np.exp(-2.0 * L * T0) * c)
    return 0.9 * eps / (1.0 + L * dt)


def constants_to_json(sys: FlowSystem, fc: FlowConstants) -> dict:
    return {
        "system": sys.name,
        "L": fc.L,
        "c": fc.c,
        "T0": fc.T0,
        "gamma_table": sorted([[k, v] for k, v in fc.gamma_of.items()]),
        "delta_table": sorted([[k, v] for k, v in fc.delta_of.items()]),
        "seed": fc.provenance.get("seed"),
        "n_samples": fc.provenance.get("n_samples"),
    }


def constants_from_json(obj: dict) -> FlowConstants:
    return FlowConstants(
        L=float(obj["L"]),
        c=float(obj["c"]),
        T0=float(obj["T0"]),
        gamma_of={float(k): float(v) for k, v in obj["gamma_table"]},
        delta_of={float(k): float(v) for k, v in obj["delta_table"]},
        provenance={"seed": obj.get("seed"), "n_samples": obj.get("n_samples")},
    )


def save_constants(path, sys: FlowSystem, fc: FlowConstants) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(constants_to_json(sys, fc), fh, indent=2, sort_keys=True)
        fh.write("\n")
