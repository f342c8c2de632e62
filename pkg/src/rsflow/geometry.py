"""Domain geometries and their metrics.

Three geometries are supported: flat tori (periodic box), Euclidean
trapping boxes, and the glued cylinder used by the expanding-circle
suspension system.  Every distance routine broadcasts over leading axes
so ball queries can test thousands of candidate points in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FlatTorus:
    """Product of circles; ``periods[k]`` is the circumference of axis k."""

    periods: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.periods)

    def reduce(self, x: np.ndarray) -> np.ndarray:
        return np.mod(x, np.asarray(self.periods))

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        p = np.asarray(self.periods)
        d = np.abs(np.mod(np.asarray(a) - np.asarray(b), p))
        d = np.minimum(d, p - d)
        return np.sqrt(np.sum(d * d, axis=-1))

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.ones(x.shape[0], dtype=bool)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(0.0, self.periods, size=(n, self.dim))


@dataclass(frozen=True)
class EuclideanBox:
    """Axis-aligned trapping box; states outside it count as escaped."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.lo)

    def reduce(self, x: np.ndarray) -> np.ndarray:
        return x

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = np.asarray(a) - np.asarray(b)
        return np.sqrt(np.sum(d * d, axis=-1))

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))


@dataclass(frozen=True)
class GluedCylinder:
    """Mapping cylinder of the circle-doubling map x -> 2x (mod 1).

    States are 3-vectors ``(cx, cy, r)``: a point on the planar base
    circle of circumference 1 (radius 1/2pi) plus a roof coordinate
    r in [0, 1).  Crossing the roof applies the gluing: the roof wraps
    to 0 and the base angle doubles.  The metric is the product of the
    base arc metric and the roof interval, except that paths through a
    single gluing are also considered, so points just below the roof
    and just above the floor can be close.  Two-crossing paths have
    length >= 1 and are ignored.
    """

    base_radius: float = 1.0 / TWO_PI

    @property
    def dim(self) -> int:
        return 3

    def reduce(self, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=float, copy=True)
        cx, cy, r = x[..., 0], x[..., 1], x[..., 2]
        # Gluing is applied once per unit of roof travel; inner loop bound
        # is the largest whole-unit overshoot present in the batch.
        while np.any(r >= 1.0):
            m = r >= 1.0
            r[m] -= 1.0
            cxm, cym = cx[m], cy[m]
            cx2 = (cxm * cxm - cym * cym) / self.base_radius
            cy2 = 2.0 * cxm * cym / self.base_radius
            nrm = np.hypot(cx2, cy2)
            cx[m] = cx2 / nrm * self.base_radius
            cy[m] = cy2 / nrm * self.base_radius
        while np.any(r < 0.0):
            m = r < 0.0
            r[m] += 1.0
            # Backward crossing: halve the angle, principal branch.
            th = np.arctan2(cy[m], cx[m]) / 2.0
            cx[m] = self.base_radius * np.cos(th)
            cy[m] = self.base_radius * np.sin(th)
        x[..., 0], x[..., 1], x[..., 2] = cx, cy, r
        return x

    def base_coord(self, x: np.ndarray) -> np.ndarray:
        """Base position in [0, 1) along the circle."""
        th = np.arctan2(np.asarray(x)[..., 1], np.asarray(x)[..., 0])
        return np.mod(th / TWO_PI, 1.0)

    @staticmethod
    def _arc(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        d = np.abs(np.mod(u - v, 1.0))
        return np.minimum(d, 1.0 - d)

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        xa, xb = self.base_coord(a), self.base_coord(b)
        ra, rb = a[..., 2], b[..., 2]
        direct = np.hypot(self._arc(xa, xb), ra - rb)
        # One-crossing paths: ascend through the roof (angle doubles) or
        # descend through the floor (angle halves, two preimages).
        up_a = (1.0 - ra) + np.hypot(self._arc(np.mod(2.0 * xa, 1.0), xb), rb)
        up_b = (1.0 - rb) + np.hypot(self._arc(np.mod(2.0 * xb, 1.0), xa), ra)
        down_a = ra + np.minimum(
            np.hypot(self._arc(xa / 2.0, xb), 1.0 - rb),
            np.hypot(self._arc(xa / 2.0 + 0.5, xb), 1.0 - rb),
        )
        down_b = rb + np.minimum(
            np.hypot(self._arc(xb / 2.0, xa), 1.0 - ra),
            np.hypot(self._arc(xb / 2.0 + 0.5, xa), 1.0 - ra),
        )
        out = direct
        for alt in (up_a, up_b, down_a, down_b):
            out = np.minimum(out, alt)
        return out

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        on_circle = np.abs(np.hypot(x[:, 0], x[:, 1]) - self.base_radius) < 1e-6
        return on_circle & (x[:, 2] >= 0.0) & (x[:, 2] < 1.0)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        th = rng.uniform(0.0, TWO_PI, size=n)
        r = rng.uniform(0.0, 1.0, size=n)
        return np.column_stack(
            [self.base_radius * np.cos(th), self.base_radius * np.sin(th), r]
        )

    def from_intrinsic(self, base: np.ndarray, roof: np.ndarray) -> np.ndarray:
        th = TWO_PI * np.asarray(base)
        return np.stack(
            [
                self.base_radius * np.cos(th),
                self.base_radius * np.sin(th),
                np.asarray(roof, dtype=float),
            ],
            axis=-1,
        )


Geometry = FlatTorus | EuclideanBox | GluedCylinder


def geometry_to_config(geom: Geometry) -> dict:
    if isinstance(geom, FlatTorus):
        return {"kind": "flat_torus", "periods": list(geom.periods)}
    if isinstance(geom, EuclideanBox):
        return {"kind": "euclidean_box", "lo": list(geom.lo), "hi": list(geom.hi)}
    return {"kind": "glued_cylinder", "base_radius": geom.base_radius}


def geometry_from_config(cfg: dict) -> Geometry:
    kind = cfg["kind"]
    if kind == "flat_torus":
        return FlatTorus(tuple(float(p) for p in cfg["periods"]))
    if kind == "euclidean_box":
        return EuclideanBox(
            tuple(float(v) for v in cfg["lo"]), tuple(float(v) for v in cfg["hi"])
        )
    if kind == "glued_cylinder":
        return GluedCylinder(float(cfg.get("base_radius", 1.0 / TWO_PI)))
    raise ValueError(f"unknown geometry kind: {kind!r}")
