"""Benchmark vector fields, flow integration, and sampled trajectories.

Every system couples a vector field with a domain geometry and the list
of its rest points (where the field vanishes).  Trajectories are sampled
on uniform time grids because the ball-matching lattice requires it.

Integration strategy per system:

* ``lorenz``            -- classical fixed-step RK4 (compiled kernel when
                           available, NumPy fallback otherwise);
* ``torus_rotation`` / ``torus_constant`` -- the field is constant, so the
                           RK4 update collapses to the exact linear flow,
                           which is what gets evaluated;
* ``doubling_suspension`` -- the roof coordinate advances at unit speed and
                           the base only changes at gluing crossings, so the
                           flow is evaluated in closed form (RK4 on this
                           field is exact between crossings);
* ``north_south_circle``  -- generic RK4.

Backward time integrates the negated field.  On the glued cylinder the
backward gluing uses the principal halving branch; see the module notes
in ``geometry``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from typing import Callable

import numpy as np

from . import _kernels
from .geometry import (
    EuclideanBox,
    FlatTorus,
    Geometry,
    GluedCylinder,
    geometry_from_config,
    geometry_to_config,
)

CACHE_MAGIC = b"RSFL1"
SINGULARITY_NORM_TOL = 1e-12

BUILTIN_NAMES = (
    "torus_rotation",
    "doubling_suspension",
    "lorenz",
    "north_south_circle",
    "torus_constant",
)


class Direction(Enum):
    FORWARD = 0
    BACKWARD = 1


class UnknownSystemError(ValueError):
    pass


class EscapeError(RuntimeError):
    """Orbit left the trapping box; carries the first escape time."""

    def __init__(self, escape_time: float):
        self.escape_time = escape_time
        super().__init__(f"trajectory escaped the trapping box at t={escape_time:.6g}")


@dataclass(frozen=True)
class FlowSystem:
    name: str
    dim: int
    geometry: Geometry
    field: Callable[[np.ndarray], np.ndarray]
    singularities: np.ndarray
    params: dict = dataclass_field(default_factory=dict)
    known_entropy: float | None = None
    entropy_note: str = ""
    lipschitz_hint: float | None = None
    stepper: str | None = None

    def __post_init__(self):
        sings = np.asarray(self.singularities, dtype=float).reshape(-1, self.dim)
        object.__setattr__(self, "singularities", sings)
        if sings.size:
            norms = np.linalg.norm(self.field(sings), axis=-1)
            if np.any(norms > SINGULARITY_NORM_TOL):
                raise ValueError(
                    f"listed rest point has nonzero field norm: {norms.max():.3e}"
                )
            if not np.all(self.geometry.contains(sings)):
                raise ValueError("rest point outside the domain geometry")

    def speed(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.field(np.asarray(x, dtype=float)), axis=-1)

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.geometry.distance(a, b)


@dataclass(frozen=True)
class Trajectory:
    origin: np.ndarray
    t0: float
    dt: float
    states: np.ndarray  # (n+1, dim); states[i] ~ flow at t0 + i*dt (signed)
    speeds: np.ndarray  # (n+1,)
    direction: Direction

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if len(self.states) != len(self.speeds) or len(self.states) < 2:
            raise ValueError("need at least two samples with matching speeds")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def horizon(self) -> float:
        return (len(self.states) - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        sign = 1.0 if self.direction is Direction.FORWARD else -1.0
        return self.t0 + sign * self.dt * np.arange(len(self.states))


# ---------------------------------------------------------------------------
# Builtin systems


def _lorenz_field(sigma, rho, beta):
    def f(s):
        s = np.asarray(s, dtype=float)
        x, y, z = s[..., 0], s[..., 1], s[..., 2]
        return np.stack(
            [sigma * (y - x), x * (rho - z) - y, x * y - beta * z], axis=-1
        )

    return f


def _constant_field(v):
    v = np.asarray(v, dtype=float)

    def f(s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(v, s.shape).copy()

    return f


def _north_south_field(s):
    s = np.asarray(s, dtype=float)
    return np.sin(s)


def make_builtin(name: str, params: dict | None = None) -> FlowSystem:
    """Construct one of the benchmark systems.

    Parameters and their defaults:

    * ``torus_rotation``: ``omega`` (default sqrt(2)) -- field (1, omega)
      on the unit flat 2-torus.
    * ``torus_constant``: none -- field (1, 0) on the unit flat 2-torus.
    * ``doubling_suspension``: none -- unit-speed roof flow on the glued
      cylinder over the circle-doubling map.
    * ``lorenz``: ``sigma`` (10), ``rho`` (28), ``beta`` (8/3) on a fixed
      trapping box; requires ``rho > 1`` so the wing equilibria exist.
    * ``north_south_circle``: none -- d(theta)/dt = sin(theta) on the
      circle of circumference 2*pi; rest points at 0 and pi.
    """
    params = dict(params or {})

    if name == "torus_rotation":
        omega = float(params.pop("omega", np.sqrt(2.0)))
        if params:
            raise ValueError(f"unexpected parameters: {sorted(params)}")
        if omega == 0.0:
            raise ValueError("omega must be nonzero")
        return FlowSystem(
            name="torus_rotation",
            dim=2,
            geometry=FlatTorus((1.0, 1.0)),
            field=_constant_field([1.0, omega]),
            singularities=np.empty((0, 2)),
            params={"omega": omega},
            known_entropy=0.0,
            entropy_note="linear flow on the torus; isometric, zero entropy",
            lipschitz_hint=0.0,
            stepper="linear_torus",
        )

    if name == "torus_constant":
        if params:
            raise ValueError(f"unexpected parameters: {sorted(params)}")
        return FlowSystem(
            name="torus_constant",
            dim=2,
            geometry=FlatTorus((1.0, 1.0)),
            field=_constant_field([1.0, 0.0]),
            singularities=np.empty((0, 2)),
            params={},
            known_entropy=0.0,
            entropy_note="unit translation flow; isometric, zero entropy",
            lipschitz_hint=0.0,
            stepper="linear_torus",
        )

    if name == "doubling_suspension":
        if params:
            raise ValueError(f"unexpected parameters: {sorted(params)}")
        return FlowSystem(
            name="doubling_suspension",
            dim=3,
            geometry=GluedCylinder(),
            field=_constant_field([0.0, 0.0, 1.0]),
            singularities=np.empty((0, 3)),
            params={},
            known_entropy=float(np.log(2.0)),
            entropy_note="unit roof over the circle-doubling map: log 2 per time unit",
            lipschitz_hint=0.0,
            stepper="suspension",
        )

    if name == "lorenz":
        sigma = float(params.pop("sigma", 10.0))
        rho = float(params.pop("rho", 28.0))
        beta = float(params.pop("beta", 8.0 / 3.0))
        if params:
            raise ValueError(f"unexpected parameters: {sorted(params)}")
        if sigma <= 0.0 or beta <= 0.0 or rho <= 1.0:
            raise ValueError("require sigma > 0, beta > 0, rho > 1")
        a = np.sqrt(beta * (rho - 1.0))
        sings = np.array([[0.0, 0.0, 0.0], [a, a, rho - 1.0], [-a, -a, rho - 1.0]])
        return FlowSystem(
            name="lorenz",
            dim=3,
            geometry=EuclideanBox((-25.0, -35.0, -5.0), (25.0, 35.0, 60.0)),
            field=_lorenz_field(sigma, rho, beta),
            singularities=sings,
            params={"sigma": sigma, "rho": rho, "beta": beta},
            known_entropy=None,
            entropy_note="no closed form; bracketed by the leading Lyapunov exponent",
            stepper="lorenz",
        )

    if name == "north_south_circle":
        if params:
            raise ValueError(f"unexpected parameters: {sorted(params)}")
        return FlowSystem(
            name="north_south_circle",
            dim=1,
            geometry=FlatTorus((2.0 * np.pi,)),
            field=_north_south_field,
            singularities=np.array([[0.0], [np.pi]]),
            params={},
            known_entropy=0.0,
            entropy_note="source at 0, sink at pi; gradient-like, zero entropy",
            stepper=None,
        )

    raise UnknownSystemError(f"unknown system: {name!r}")


def system_to_config(sys: FlowSystem) -> dict:
    return {
        "name": sys.name,
        "params": dict(sys.params),
        "geometry": geometry_to_config(sys.geometry),
    }


def system_from_config(cfg: dict) -> FlowSystem:
    sys = make_builtin(cfg["name"], cfg.get("params"))
    if "geometry" in cfg:
        declared = geometry_from_config(cfg["geometry"])
        if declared != sys.geometry:
            raise ValueError("config geometry does not match the builtin's")
    return sys


# ---------------------------------------------------------------------------
# Flow sampling


def _rk4_batch(field, X, dt, n, reduce=None):
    """Generic classical RK4 over a batch of states, all samples kept.

    Divergent orbits (e.g. backward time off an attractor) saturate to
    inf/nan; callers treat non-finite states as unmatched.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty((X.shape[0], n + 1, X.shape[1]))
    s = X.copy()
    out[:, 0] = s
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n + 1):
            k1 = field(s)
            k2 = field(s + 0.5 * dt * k1)
            k3 = field(s + 0.5 * dt * k2)
            k4 = field(s + dt * k3)
            s = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if reduce is not None:
                s = reduce(s)
            out[:, i] = s
    return out


def _suspension_samples(geom: GluedCylinder, X0, dt, n, sign):
    """Closed-form roof flow with gluing at crossings, batched over X0."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    t = sign * dt * np.arange(n + 1)
    rtot = X0[:, 2:3] + t  # (N, n+1)
    cross = np.floor(rtot).astype(np.int64)
    roof = rtot - cross
    out = np.empty((X0.shape[0], n + 1, 3))
    out[:, :, 2] = roof
    ang = X0[:, :2].copy()
    R = geom.base_radius
    if sign > 0:
        depths = range(0, int(cross.max()) + 1)
    else:
        depths = range(0, int(cross.min()) - 1, -1)
    for depth in depths:
        sel = cross == depth
        if sel.any():
            out[:, :, 0][sel] = np.broadcast_to(ang[:, 0:1], sel.shape)[sel]
            out[:, :, 1][sel] = np.broadcast_to(ang[:, 1:2], sel.shape)[sel]
        if sign > 0:
            cx, cy = ang[:, 0], ang[:, 1]
            nx = (cx * cx - cy * cy) / R
            ny = 2.0 * cx * cy / R
            nrm = np.hypot(nx, ny)
            ang = np.column_stack([nx / nrm * R, ny / nrm * R])
        else:
            th = np.arctan2(ang[:, 1], ang[:, 0]) / 2.0
            ang = np.column_stack([R * np.cos(th), R * np.sin(th)])
    return out


def sample_flow_batch(
    sys: FlowSystem,
    X0: np.ndarray,
    dt: float,
    n_steps: int,
    direction: Direction = Direction.FORWARD,
    check_escape: bool = True,
) -> np.ndarray:
    """States (N, n_steps+1, dim) of the flow from each row of X0.

    Uses the system's fast path when one exists; raises ``EscapeError``
    if any orbit leaves a Euclidean trapping box.  Chart-local probes
    pass ``check_escape=False``: the trapping box bounds long orbits,
    not short local integrations near its boundary.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    sign = 1.0 if direction is Direction.FORWARD else -1.0

    if sys.stepper == "linear_torus":
        v = sys.field(X0[0])
        t = sign * dt * np.arange(n_steps + 1)
        out = X0[:, None, :] + t[None, :, None] * v[None, None, :]
        out = sys.geometry.reduce(out)
    elif sys.stepper == "suspension":
        out = _suspension_samples(sys.geometry, X0, dt, n_steps, sign)
    elif sys.stepper == "lorenz" and direction is Direction.FORWARD:
        p = sys.params
        if X0.shape[0] == 1:
            out = _kernels.lorenz_orbit(
                X0[0], dt, n_steps, p["sigma"], p["rho"], p["beta"]
            )[None, :, :]
        else:
            out = _kernels.lorenz_orbit_batch(
                X0, dt, n_steps, p["sigma"], p["rho"], p["beta"]
            )
    else:
        fld = sys.field if sign > 0 else (lambda s: -sys.field(s))
        reduce = (
            sys.geometry.reduce if isinstance(sys.geometry, FlatTorus) else None
        )
        raw = _rk4_batch(fld, X0.reshape(X0.shape[0], -1), dt, n_steps, reduce)
        out = raw.reshape(X0.shape[0], n_steps + 1, sys.dim)

    if check_escape and isinstance(sys.geometry, EuclideanBox):
        inside = sys.geometry.contains(out.reshape(-1, sys.dim)).reshape(out.shape[:2])
        if not inside.all():
            bad = np.argwhere(~inside)
            raise EscapeError(float(bad[0, 1] * dt))
    return out


def sample_flow(
    sys, x0, dt, n_steps, direction=Direction.FORWARD, check_escape=True
) -> np.ndarray:
    return sample_flow_batch(
        sys, np.asarray(x0)[None, :], dt, n_steps, direction, check_escape
    )[0]


def integrate(
    sys: FlowSystem,
    x0: np.ndarray,
    horizon: float,
    dt: float,
    direction: Direction = Direction.FORWARD,
    t0: float = 0.0,
) -> Trajectory:
    """Sampled orbit segment of length ``horizon`` from ``x0``."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if horizon < dt:
        raise ValueError("horizon must be at least one step")
    x0 = np.asarray(x0, dtype=float)
    n = int(round(horizon / dt))
    states = sample_flow(sys, x0, dt, n, direction)
    speeds = sys.speed(states)
    return Trajectory(
        origin=x0, t0=t0, dt=dt, states=states, speeds=speeds, direction=direction
    )


def min_speed_on(traj: Trajectory) -> float:
    return float(np.min(traj.speeds))


# ---------------------------------------------------------------------------
# Regular-point guard

_REFERENCE_SPEED_CACHE: dict[str, float] = {}


def reference_speed(sys: FlowSystem) -> float:
    """Median field norm over a fixed uniform domain sample.

    A system-level scale for the regular-point guard; deliberately NOT
    measure-dependent so degenerate measures (mass piled on rest points)
    still get flagged.
    """
    key = sys.name + json.dumps(sys.params, sort_keys=True)
    if key not in _REFERENCE_SPEED_CACHE:
        rng = np.random.default_rng(0)
        pts = sys.geometry.sample(rng, 1024)
        _REFERENCE_SPEED_CACHE[key] = float(np.median(sys.speed(pts)))
    return _REFERENCE_SPEED_CACHE[key]


def min_regular_speed(sys: FlowSystem) -> float:
    """Default guard: 1e-3 of the system's reference speed."""
    return 1e-3 * reference_speed(sys)


class SingularCenterError(ValueError):
    pass


def require_regular(sys: FlowSystem, x: np.ndarray, s_min: float | None = None):
    s_min = min_regular_speed(sys) if s_min is None else s_min
    sp = float(sys.speed(np.asarray(x, dtype=float)))
    if sp < s_min:
        raise SingularCenterError(
            f"center speed {sp:.3e} below the regular-point guard {s_min:.3e}"
        )


def sample_regular(
    sys: FlowSystem,
    rng: np.random.Generator,
    n: int,
    s_min: float | None = None,
    max_tries: int = 200,
) -> np.ndarray:
    """Uniform domain points with field norm at least ``s_min``."""
    s_min = min_regular_speed(sys) if s_min is None else s_min
    out = []
    for _ in range(max_tries):
        pts = sys.geometry.sample(rng, n)
        pts = pts[sys.speed(pts) >= s_min]
        out.append(pts)
        if sum(len(p) for p in out) >= n:
            break
    pts = np.concatenate(out)
    if len(pts) < n:
        raise SingularCenterError("no regular points found at the requested guard")
    return pts[:n]


def sample_near(
    sys: FlowSystem, x: np.ndarray, radius: float, rng: np.random.Generator
) -> np.ndarray:
    """A domain point within ``radius`` of ``x`` (uniform direction).

    On the glued cylinder the perturbation is intrinsic (base arc and
    roof), so the result stays on the manifold.
    """
    x = np.asarray(x, dtype=float)
    geom = sys.geometry
    if isinstance(geom, GluedCylinder):
        d = rng.uniform(0.0, radius)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        base = geom.base_coord(x) + d * np.cos(phi)
        roof = x[2] + d * np.sin(phi)
        return geom.reduce(geom.from_intrinsic(np.mod(base, 1.0), roof))
    v = rng.normal(size=x.shape)
    v /= max(np.linalg.norm(v), 1e-300)
    y = x + rng.uniform(0.0, radius) * v
    if isinstance(geom, FlatTorus):
        return geom.reduce(y)
    lo, hi = np.asarray(geom.lo), np.asarray(geom.hi)
    return np.clip(y, lo, hi)


# ---------------------------------------------------------------------------
# Trajectory cache files

_HEADER = struct.Struct("<5sIQddB")


def write_trajectory(path, traj: Trajectory) -> None:
    """Binary layout: header {magic, dim u32, count u64, dt f64, t0 f64,
    direction u8}, then count*dim f64 states, then count f64 speeds, LE."""
    states = np.ascontiguousarray(traj.states, dtype="<f8")
    speeds = np.ascontiguousarray(traj.speeds, dtype="<f8")
    count, dim = states.shape
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(CACHE_MAGIC, dim, count, traj.dt, traj.t0, traj.direction.value)
        )
        fh.write(states.tobytes())
        fh.write(speeds.tobytes())


def read_trajectory(path) -> Trajectory:
    with open(path, "rb") as fh:
        magic, dim, count, dt, t0, dirv = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != CACHE_MAGIC:
            raise ValueError(f"bad trajectory file magic: {magic!r}")
        states = np.frombuffer(fh.read(count * dim * 8), dtype="<f8").reshape(
            count, dim
        )
        speeds = np.frombuffer(fh.read(count * 8), dtype="<f8")
    return Trajectory(
        origin=states[0].copy(),
        t0=t0,
        dt=dt,
        states=states.copy(),
        speeds=speeds.copy(),
        direction=Direction(dirv),
    )
