"""Piecewise-linear time reparametrizations and their regularity classes.

A reparametrization is a continuous map h with h(0) = 0, applied to one
orbit's clock when comparing two orbits.  Three nested classes matter:

* ``ANY_C00``    -- continuous, h(0)=0, no further restriction;
* ``REP``        -- increasing homeomorphism;
* ``REP_ALPHA``  -- every difference quotient within ``alpha`` of 1
                    (an "almost identity" time change);
* ``REP_ALPHA_STAR`` -- both of the above.

All maps here are piecewise linear with finitely many knots and affine
extension past the knot range; class membership is decided on the stored
range.  For PL maps the pairwise difference-quotient condition reduces to
a segmentwise slope check, because any difference quotient is a convex
combination of segment slopes.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

SLOPE_TOL = 1e-12


class ReparamClass(Enum):
    ANY_C00 = "any_c00"
    REP = "rep"
    REP_ALPHA = "rep_alpha"
    REP_ALPHA_STAR = "rep_alpha_star"


class NonMonotoneAnchors(ValueError):
    """Anchor heights were not strictly increasing.

    Signals that the matching radius used to gather the anchors exceeded
    the calibrated threshold: below it every feasibility witness advances
    over each block, so this cannot fire.
    """


@dataclass(frozen=True)
class PiecewiseLinearReparam:
    """PL map through ``knots`` (strictly increasing s), containing (0,0).

    Evaluation is exact linear interpolation between knots and affine
    continuation with the terminal slopes outside the knot range.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        s = np.array([k[0] for k in self.knots])
        if len(s) < 2:
            raise ValueError("need at least two knots")
        if not np.all(np.diff(s) > 0):
            raise ValueError("knot s-coordinates must be strictly increasing")
        if not np.any((s == 0.0) & (np.abs(self.values) < 1e-15)):
            raise ValueError("knots must contain (0, 0)")

    @property
    def times(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots])

    @property
    def values(self) -> np.ndarray:
        return np.array([k[1] for k in self.knots])

    @property
    def slopes(self) -> np.ndarray:
        s, h = self.times, self.values
        return np.diff(h) / np.diff(s)

    def __call__(self, s) -> np.ndarray | float:
        s = np.asarray(s, dtype=float)
        t, v = self.times, self.values
        sl = self.slopes
        idx = np.clip(np.searchsorted(t, s, side="right") - 1, 0, len(sl) - 1)
        out = v[idx] + sl[idx] * (s - t[idx])
        return out if out.ndim else float(out)

    def restricted(self, lo: float, hi: float) -> "PiecewiseLinearReparam":
        """Knots clipped to [lo, hi], endpoints evaluated exactly."""
        t = self.times
        inside = (t > lo) & (t < hi)
        ts = np.concatenate([[lo], t[inside], [hi]])
        return PiecewiseLinearReparam(tuple(zip(ts.tolist(), self(ts).tolist())))


def identity_reparam(span: float = 1.0) -> PiecewiseLinearReparam:
    return PiecewiseLinearReparam(((0.0, 0.0), (float(span), float(span))))


def alpha_bound(h: PiecewiseLinearReparam) -> float:
    """Smallest alpha such that all segment slopes lie in [1-a, 1+a]."""
    return float(np.max(np.abs(h.slopes - 1.0)))


def classify(h: PiecewiseLinearReparam, alpha: float | None = None) -> set[ReparamClass]:
    """Regularity tags of ``h`` on its stored range.

    ``REP_ALPHA`` / ``REP_ALPHA_STAR`` are only reported when ``alpha``
    is supplied (they are parametric).
    """
    tags = {ReparamClass.ANY_C00}
    sl = h.slopes
    increasing = bool(np.all(sl > 0.0))
    if increasing:
        tags.add(ReparamClass.REP)
    if alpha is not None:
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if np.max(np.abs(sl - 1.0)) <= alpha + SLOPE_TOL:
            tags.add(ReparamClass.REP_ALPHA)
            if increasing:
                tags.add(ReparamClass.REP_ALPHA_STAR)
    return tags


def boost_to_monotone(
    anchors: list[tuple[float, float]], block: float
) -> PiecewiseLinearReparam:
    """Increasing PL map through anchors sampled at multiples of ``block``.

    ``anchors`` must be consecutive multiples of ``block`` starting at
    (0, 0) with strictly increasing heights; the height increase is the
    caller's obligation (guaranteed below the calibrated matching radius).
    """
    anchors = sorted(anchors)
    s = np.array([a[0] for a in anchors])
    v = np.array([a[1] for a in anchors])
    k = np.round(s / block)
    if not np.allclose(s, k * block, atol=1e-9 * block) or not np.allclose(
        np.diff(k), 1.0
    ):
        raise ValueError("anchor times must be consecutive multiples of the block")
    if abs(v[s == 0.0][0]) > 1e-15:
        raise ValueError("anchors must satisfy h(0) = 0")
    if np.any(np.diff(v) <= 0.0):
        raise NonMonotoneAnchors(
            f"anchor heights not strictly increasing: {v.tolist()}"
        )
    return PiecewiseLinearReparam(tuple(zip(s.tolist(), v.tolist())))


def linearize_blocks(
    h: PiecewiseLinearReparam, block: float, t_max: float, t_min: float = 0.0
) -> PiecewiseLinearReparam:
    """Replace ``h`` by the PL map agreeing with it at multiples of ``block``.

    Interior wiggles inside each block are discarded; the output picks up
    the almost-identity tag whenever the block difference quotients do.
    """
    if block <= 0.0:
        raise ValueError("block must be positive")
    ks = np.arange(np.floor(t_min / block), np.floor(t_max / block) + 1)
    s = ks * block
    if 0.0 not in s:
        s = np.sort(np.append(s, 0.0))
    return PiecewiseLinearReparam(tuple(zip(s.tolist(), np.asarray(h(s)).tolist())))


def compose(
    h1: PiecewiseLinearReparam, h2: PiecewiseLinearReparam
) -> PiecewiseLinearReparam:
    """Exact PL composition s -> h1(h2(s)).

    Breakpoints are h2's knots plus h2-preimages of h1's knots; h2 must be
    increasing for preimages to be well defined.
    """
    if ReparamClass.REP not in classify(h2):
        raise ValueError("compose requires the inner map to be increasing")
    inv2 = invert(h2)
    pre = [float(inv2(v)) for v in h1.times]
    s = np.unique(np.concatenate([h2.times, pre, [0.0]]))
    vals = np.asarray(h1(np.asarray(h2(s))))
    return PiecewiseLinearReparam(tuple(zip(s.tolist(), vals.tolist())))


def invert(h: PiecewiseLinearReparam) -> PiecewiseLinearReparam:
    """Inverse of an increasing PL map: reflect the knots."""
    if ReparamClass.REP not in classify(h):
        raise ValueError("invert requires an increasing homeomorphism")
    return PiecewiseLinearReparam(tuple((v, s) for s, v in h.knots))


def reparam_to_json(h: PiecewiseLinearReparam) -> dict:
    return {"knots": [[s, v] for s, v in h.knots]}


def reparam_from_json(obj: dict) -> PiecewiseLinearReparam:
    return PiecewiseLinearReparam(tuple((float(s), float(v)) for s, v in obj["knots"]))
