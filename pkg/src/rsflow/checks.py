"""Executable property checks tying the toolkit to its guarantees.

Each check runs a randomized (seeded) trial battery and reports a
violation count with details; the command-line ``check-lemmas`` drives a
standard battery and the acceptance suite reruns the same functions at
full trial counts.  Checks that certify strict implications apply the
documented margin rejection: verdicts within the grid-noise band of the
tube boundary are not counted either way.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .balls import BallQuery, BallVariant, b1_member, gamma_member, monotone_member, slope_member
from .constants import FlowConstants, almost_identity_epsilon, build_flowbox, chart_dim
from .entropy import estimate_from_mass_tables
from .measures import EmpiricalMeasure, mass_sweep, rates_from_masses
from .reparam import (
    PiecewiseLinearReparam,
    ReparamClass,
    alpha_bound,
    boost_to_monotone,
    classify,
    linearize_blocks,
)
from .systems import (
    Direction,
    FlowSystem,
    min_regular_speed,
    sample_flow,
    sample_near,
    sample_regular,
)


@dataclass
class CheckResult:
    name: str
    trials: int
    violations: int
    details: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        status = "ok" if self.ok else "FAIL"
        return f"{self.name}: {status} ({self.violations}/{self.trials} violations)"


def _default_dt(sys: FlowSystem) -> float:
    return 0.002 if sys.name == "lorenz" else 0.01


def draw_pair(sys, rng, eps, s_min=None, on_orbit_frac=0.6):
    """Member-rich random pair: y near x on-orbit or transversally."""
    s_min = min_regular_speed(sys) if s_min is None else s_min
    x = sample_regular(sys, rng, 1, s_min)[0]
    sp = float(sys.speed(x))
    if rng.random() < on_orbit_frac:
        u = rng.uniform(-0.5, 0.5) * eps
        if abs(u) > 1e-9:
            d = Direction.FORWARD if u > 0 else Direction.BACKWARD
            y = sample_flow(sys, x, abs(u) / 8.0, 8, d, check_escape=False)[-1]
        else:
            y = x.copy()
        y = sample_near(sys, y, 0.3 * eps * sp * rng.random(), rng)
    else:
        y = sample_near(sys, x, 1.5 * eps * sp * rng.random(), rng)
    return x, y


# ---------------------------------------------------------------------------
# Flow-level checks


def check_flow_property(
    sys: FlowSystem, seed: int = 0, n_trials: int = 10, t_max: float = 10.0, dt: float = 1e-3
) -> CheckResult:
    """Composing two integration legs matches one long leg to 1e-6."""
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_trials)
    res = CheckResult("flow_property", n_trials, 0)
    for x in xs:
        s = dt * rng.integers(1, int(t_max / dt))
        t = dt * rng.integers(1, int(t_max / dt))
        long = sample_flow(sys, x, dt, int(round((s + t) / dt)))
        leg1 = sample_flow(sys, x, dt, int(round(s / dt)))
        leg2 = sample_flow(sys, leg1[-1], dt, int(round(t / dt)))
        err = float(sys.distance(long[-1], leg2[-1]))
        if err > 1e-6:
            res.violations += 1
            res.details.append(f"split error {err:.2e} at s={s:.3f}, t={t:.3f}")
    return res


def check_speed_growth(
    sys: FlowSystem, L: float, seed: int = 0, n_trials: int = 50, t_max: float = 1.0
) -> CheckResult:
    """Speeds along orbits obey the two-sided exp(L|t|) envelope (5% slack)."""
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_trials)
    res = CheckResult("speed_growth", 0, 0)
    Lm = L * 1.05 + 1e-9
    dt = 0.01 if sys.name != "lorenz" else 0.002
    n = int(round(t_max / dt))
    for x in xs:
        s0 = float(sys.speed(x))
        for direction in (Direction.FORWARD, Direction.BACKWARD):
            states = sample_flow(sys, x, dt, n, direction, check_escape=False)
            # The Jacobian bound holds on the domain only; truncate the
            # envelope check at the first exit.
            inside = sys.geometry.contains(states)
            stop = int(inside.argmin()) if not inside.all() else len(states)
            if stop < 2:
                continue
            sp = sys.speed(states[:stop])
            t = dt * np.arange(stop)
            res.trials += 1
            lo, hi = s0 * np.exp(-Lm * t), s0 * np.exp(Lm * t)
            if np.any(sp < lo - 1e-12) or np.any(sp > hi + 1e-12):
                res.violations += 1
                res.details.append(f"speed left envelope near {x}")
    return res


def check_time_localization(
    sys: FlowSystem, T0: float, seed: int = 0, n_trials: int = 100
) -> CheckResult:
    """Orbit returns within the rescaled radius only at small time offsets:
    d(x, flow_t(x)) <= eps*speed(x) with |t| <= T0 forces |t| <= 3 eps (5% slack)."""
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_trials)
    res = CheckResult("time_localization", 0, 0)
    dt = T0 / 60.0
    n = int(round(T0 / dt))
    for x in xs:
        eps = rng.uniform(0.05, 1.0) * T0 / 3.0
        tube = eps * float(sys.speed(x))
        for direction in (Direction.FORWARD, Direction.BACKWARD):
            states = sample_flow(sys, x, dt, n, direction, check_escape=False)
            d = sys.distance(states, x)
            t = dt * np.arange(n + 1)
            inside = d <= tube
            res.trials += 1
            if np.any(t[inside] > 3.0 * eps * 1.05):
                res.violations += 1
                res.details.append(
                    f"offset {t[inside].max():.3f} inside radius {eps:.3f}"
                )
    return res


def check_forward_separation(
    sys: FlowSystem,
    gamma_2T: float,
    T: float,
    T0: float,
    seed: int = 0,
    n_trials: int = 100,
) -> CheckResult:
    """Nearby points stay separated from the shifted orbit: with gamma :=
    gamma_2T / 2, pairs d(x,y) <= gamma*speed(x) keep d(flow_t(x), y) >=
    gamma*speed(x)*(1-0.05) for |t| in [T, T0]."""
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_trials)
    gamma = gamma_2T / 2.0
    res = CheckResult("forward_separation", 0, 0)
    dt = T / 20.0
    n = int(round(T0 / dt))
    i_lo = int(np.ceil(T / dt - 1e-9))
    for x in xs:
        sp = float(sys.speed(x))
        y = sample_near(sys, x, gamma * sp, rng)
        if float(sys.distance(x, y)) > gamma * sp:
            continue
        for direction in (Direction.FORWARD, Direction.BACKWARD):
            states = sample_flow(sys, x, dt, n, direction, check_escape=False)
            d = sys.distance(states[i_lo:], y)
            res.trials += 1
            if np.any(d < gamma * sp * 0.95):
                res.violations += 1
                res.details.append(f"separation dipped to {d.min():.3e}")
    return res


def check_flowbox_bounds(
    sys: FlowSystem, T0: float, seed: int = 0, n_points: int = 50
) -> CheckResult:
    """Chart derivative singular values within [0.3, 3.3] at sampled points."""
    rng = np.random.default_rng(seed)
    xs = sample_regular(sys, rng, n_points)
    res = CheckResult("flowbox_bounds", 0, 0)
    k = chart_dim(sys) - 1
    for x in xs:
        chart = build_flowbox(sys, x, T0)
        sp = chart.speed
        for _ in range(3):
            v = rng.uniform(-1, 1, size=k)
            v *= 0.8 * T0 * sp / max(np.linalg.norm(v), 1e-12)
            t = rng.uniform(-0.8 * T0, 0.8 * T0)
            sv = chart.derivative_singular_values(v, t)
            res.trials += 1
            if not np.all(np.isfinite(sv)) or sv[0] > 3.3 or sv[-1] < 0.3:
                res.violations += 1
                res.details.append(f"singular values {np.round(sv, 3)} at t={t:.3f}")
    return res


# ---------------------------------------------------------------------------
# Reparametrization checks


def _random_pl(rng, n_knots=10, span=3.0, monotone=None) -> PiecewiseLinearReparam:
    s = np.sort(rng.uniform(0.0, span, size=n_knots - 1))
    s = np.unique(np.concatenate([[0.0], s]))
    if monotone:
        steps = rng.uniform(0.05, 1.5, size=len(s) - 1)
        v = np.concatenate([[0.0], np.cumsum(steps * np.diff(s))])
    else:
        v = np.concatenate([[0.0], np.cumsum(rng.normal(1.0, 1.0, size=len(s) - 1) * np.diff(s))])
    return PiecewiseLinearReparam(tuple(zip(s.tolist(), v.tolist())))


def check_alpha_equivalence(seed: int = 0, n_maps: int = 10_000) -> CheckResult:
    """Segmentwise slope bounds match the pairwise difference-quotient
    definition: passes imply every random quotient within alpha + 1e-12,
    failures exhibit a violating pair at the bad segment's endpoints."""
    rng = np.random.default_rng(seed)
    res = CheckResult("alpha_equivalence", n_maps, 0)
    for _ in range(n_maps):
        h = _random_pl(rng, n_knots=int(rng.integers(3, 12)), monotone=rng.random() < 0.5)
        alpha = float(rng.uniform(0.05, 0.95))
        seg_pass = alpha_bound(h) <= alpha + 1e-12
        if seg_pass:
            s = rng.uniform(0.0, h.times[-1], size=32)
            t = rng.uniform(0.0, h.times[-1], size=32)
            keep = np.abs(s - t) > 1e-9
            quot = (np.asarray(h(s[keep])) - np.asarray(h(t[keep]))) / (
                s[keep] - t[keep]
            )
            if np.any(np.abs(quot - 1.0) > alpha + 1e-9):
                res.violations += 1
                res.details.append("segmentwise pass but pairwise violation")
        else:
            idx = int(np.argmax(np.abs(h.slopes - 1.0)))
            s0, s1 = h.times[idx], h.times[idx + 1]
            quot = (h(s1) - h(s0)) / (s1 - s0)
            if abs(quot - 1.0) <= alpha + 1e-12:
                res.violations += 1
                res.details.append("segmentwise fail without witness pair")
    return res


def check_linearize_agreement(seed: int = 0, n_trials: int = 200) -> CheckResult:
    """Block linearization agrees with the input at block multiples exactly."""
    rng = np.random.default_rng(seed)
    res = CheckResult("linearize_agreement", n_trials, 0)
    for _ in range(n_trials):
        h = _random_pl(rng, n_knots=int(rng.integers(3, 12)), monotone=True)
        b = float(rng.uniform(0.2, 1.0))
        t_max = float(h.times[-1])
        out = linearize_blocks(h, b, t_max)
        ks = np.arange(0, int(np.floor(t_max / b)) + 1) * b
        if not np.allclose(np.asarray(out(ks)), np.asarray(h(ks)), rtol=0, atol=0):
            res.violations += 1
            res.details.append(f"anchor mismatch at block {b:.3f}")
    return res


def check_boost_from_witnesses(
    sys: FlowSystem,
    delta: float,
    T: float,
    seed: int = 0,
    n_witnesses: int = 50,
    horizon: float | None = None,
) -> CheckResult:
    """Anchors sampled from matching witnesses at radius <= delta boost to
    increasing homeomorphisms (strictly increasing block heights)."""
    rng = np.random.default_rng(seed)
    dt = _default_dt(sys)
    horizon = 4.0 * T if horizon is None else horizon
    res = CheckResult("boost_witnesses", 0, 0)
    attempts = 0
    while res.trials < n_witnesses and attempts < 20 * n_witnesses:
        attempts += 1
        x, y = draw_pair(sys, rng, delta)
        q = BallQuery(
            variant=BallVariant.B3,
            center=x,
            radius=delta,
            horizon=horizon,
            dt=dt,
            reparam_class=ReparamClass.REP,
        )
        try:
            r = monotone_member(sys, q, y)
        except Exception:
            continue
        if not r.member:
            continue
        res.trials += 1
        anchors = [(k * T, float(r.witness(k * T))) for k in range(int(horizon / T) + 1)]
        try:
            hhat = boost_to_monotone(anchors, T)
        except Exception as exc:
            res.violations += 1
            res.details.append(f"boost failed: {exc}")
            continue
        if ReparamClass.REP not in classify(hhat):
            res.violations += 1
            res.details.append("boosted map not increasing")
    return res


# ---------------------------------------------------------------------------
# Ball checks


def check_inclusions(
    sys: FlowSystem, seed: int = 0, n_queries: int = 200, horizon: float = 2.0
) -> CheckResult:
    """Identity-time membership implies warped membership (both sides)."""
    rng = np.random.default_rng(seed)
    dt = _default_dt(sys)
    res = CheckResult("b1_inclusions", 0, 0)
    for _ in range(n_queries):
        eps = float(rng.choice([0.05, 0.1, 0.2]))
        t = float(rng.uniform(4 * dt, horizon))
        x, y = draw_pair(sys, rng, eps)
        q1 = BallQuery(BallVariant.B1, x, eps, t, dt)
        try:
            r1 = b1_member(sys, q1, y)
        except Exception:
            continue
        if not r1.member:
            continue
        res.trials += 1
        for variant in (BallVariant.B2, BallVariant.B3):
            q = BallQuery(variant, x, eps, t, dt, ReparamClass.REP)
            r = monotone_member(sys, q, y)
            if not r.member:
                res.violations += 1
                res.details.append(f"{variant.value} misses a b1 member (eps={eps})")
    return res


def check_membership_monotonicity(
    sys: FlowSystem, seed: int = 0, n_queries: int = 100
) -> CheckResult:
    """Members stay members when the radius grows or the horizon shrinks."""
    rng = np.random.default_rng(seed)
    dt = _default_dt(sys)
    res = CheckResult("membership_monotonicity", 0, 0)
    for _ in range(n_queries):
        eps = float(rng.choice([0.05, 0.1]))
        t = float(rng.uniform(10 * dt, 2.0))
        x, y = draw_pair(sys, rng, eps)
        q = BallQuery(BallVariant.B3, x, eps, t, dt, ReparamClass.REP)
        try:
            r = monotone_member(sys, q, y)
        except Exception:
            continue
        res.trials += 1
        if not r.member:
            continue
        q_big = BallQuery(BallVariant.B3, x, 2 * eps, t, dt, ReparamClass.REP)
        q_short = BallQuery(
            BallVariant.B3, x, eps, max(dt, t / 2), dt, ReparamClass.REP
        )
        if not monotone_member(sys, q_big, y).member:
            res.violations += 1
            res.details.append("lost membership at doubled radius")
        if not monotone_member(sys, q_short, y).member:
            res.violations += 1
            res.details.append("lost membership at halved horizon")
    return res


def _calibrated_eps(sys, fc: FlowConstants, lam: float, b: float, dt: float) -> float:
    b_eff = min(b, 0.8 * fc.T0)
    gamma_b = fc.gamma_at(b_eff)
    return almost_identity_epsilon(fc.L, fc.T0, fc.c, gamma_b, lam, b_eff, dt)


def check_lemma42_inclusion(
    sys: FlowSystem,
    fc: FlowConstants,
    lam: float = 0.2,
    seed: int = 0,
    n_trials: int = 50,
    t: float | None = None,
) -> CheckResult:
    """Below the calibrated radius, warping one side can be traded for a
    (1-lam) horizon cut on the other: B3 members at t are B2 members at
    (1-lam)t, and symmetrically.  Near-boundary members (margin below
    the grid-noise band) are skipped per the documented margin policy."""
    rng = np.random.default_rng(seed)
    dt = _default_dt(sys)
    eps = _calibrated_eps(sys, fc, lam, 0.5, dt)
    t = max(1.0, 2.0 * fc.T0) if t is None else t
    kappa = (fc.L * dt + 2e-2) * 2.0
    res = CheckResult("lemma42_inclusion", 0, 0)
    attempts = 0
    while res.trials < n_trials and attempts < 40 * n_trials:
        attempts += 1
        x, y = draw_pair(sys, rng, eps)
        t_cut = (1.0 - lam) * t
        try:
            r3 = monotone_member(
                sys, BallQuery(BallVariant.B3, x, eps, t, dt, ReparamClass.REP), y
            )
            r2 = monotone_member(
                sys, BallQuery(BallVariant.B2, x, eps, t, dt, ReparamClass.REP), y
            )
        except Exception:
            continue
        checked = False
        if r3.member and r3.margin > kappa:
            checked = True
            r2c = monotone_member(
                sys, BallQuery(BallVariant.B2, x, eps, t_cut, dt, ReparamClass.REP), y
            )
            if not r2c.member:
                res.violations += 1
                res.details.append("B3 member lost B2 membership at cut horizon")
        if r2.member and r2.margin > kappa:
            checked = True
            r3c = monotone_member(
                sys, BallQuery(BallVariant.B3, x, eps, t_cut, dt, ReparamClass.REP), y
            )
            if not r3c.member:
                res.violations += 1
                res.details.append("B2 member lost B3 membership at cut horizon")
        if checked:
            res.trials += 1
    return res


def check_almost_identity(
    sys: FlowSystem,
    fc: FlowConstants,
    lam: float = 0.3,
    b: float = 0.5,
    seed: int = 0,
    n_trials: int = 50,
    t_max: float = 2.0,
) -> CheckResult:
    """Witness warps below the calibrated radius are almost the identity:
    |h(s) - s| <= lam * s on [b, t]."""
    rng = np.random.default_rng(seed)
    dt = _default_dt(sys)
    eps = _calibrated_eps(sys, fc, lam, b, dt)
    res = CheckResult("almost_identity", 0, 0)
    attempts = 0
    while res.trials < n_trials and attempts < 60 * n_trials:
        attempts += 1
        t = float(rng.uniform(max(b, 4 * dt) * 1.1, t_max))
        x, y = draw_pair(sys, rng, eps)
        q = BallQuery(BallVariant.B3, x, eps, t, dt, ReparamClass.REP)
        try:
            r = monotone_member(sys, q, y)
        except Exception:
            continue
        if not r.member:
            continue
        res.trials += 1
        s = np.arange(int(np.ceil(b / dt)), q.n_steps + 1) * dt
        h = np.asarray(r.witness(s))
        bad = np.abs(h - s) > lam * s + 1e-9
        if bad.any():
            res.violations += 1
            res.details.append(
                f"|h-s| reached {np.abs(h - s).max():.4f} vs allowance {lam * s.min():.4f}"
            )
    return res


def check_gamma_class_agreement(
    sys: FlowSystem,
    fc: FlowConstants,
    alpha: float = 0.3,
    seed: int = 0,
    n_trials: int = 50,
    horizon: float = 1.5,
) -> CheckResult:
    """Below the calibrated radius, the free-increasing and the
    almost-identity ball variants agree (margin-guarded verdicts)."""
    rng = np.random.default_rng(seed)
    dt = _default_dt(sys)
    eps = _calibrated_eps(sys, fc, alpha, 0.5, dt)
    kappa = (fc.L * dt + 2e-2) * 2.0
    res = CheckResult("gamma_class_agreement", 0, 0)
    attempts = 0
    while res.trials < n_trials and attempts < 40 * n_trials:
        attempts += 1
        x, y = draw_pair(sys, rng, eps)
        q_rep = BallQuery(
            BallVariant.GAMMA_FORWARD, x, eps, horizon, dt, ReparamClass.REP
        )
        q_alpha = BallQuery(
            BallVariant.GAMMA_FORWARD,
            x,
            eps,
            horizon,
            dt,
            ReparamClass.REP_ALPHA_STAR,
            alpha=alpha,
            h_resolution=4,
        )
        try:
            r_rep = gamma_member(sys, q_rep, y)
            r_alpha = gamma_member(sys, q_alpha, y)
        except Exception:
            continue
        solid_rep = r_rep.member and r_rep.margin > kappa
        solid_alpha = r_alpha.member and r_alpha.margin > kappa
        clear_miss_rep = (not r_rep.member) or r_rep.margin < -kappa
        clear_miss_alpha = (not r_alpha.member) or r_alpha.margin < -kappa
        if solid_rep or solid_alpha or (clear_miss_rep and clear_miss_alpha):
            res.trials += 1
            if solid_rep and clear_miss_alpha:
                res.violations += 1
                res.details.append("increasing-warp member missed by slope warp")
            if solid_alpha and not r_rep.member:
                res.violations += 1
                res.details.append("slope-warp member missed by increasing warp")
    return res


# ---------------------------------------------------------------------------
# Measure/estimator checks


def check_mass_monotonicity(
    sys: FlowSystem,
    measure: EmpiricalMeasure,
    seed: int = 0,
    n_centers: int = 3,
    eps_pair=(0.1, 0.2),
    t_list=(1.0, 2.0, 3.0),
    variant: BallVariant = BallVariant.B1,
) -> CheckResult:
    """Ball masses shrink with the horizon and grow with the radius."""
    rng = np.random.default_rng(seed)
    centers = measure.draw_centers(sys, rng, n_centers)
    dt = _default_dt(sys)
    res = CheckResult("mass_monotonicity", 0, 0)
    for center in centers:
        masses = {}
        for eps in eps_pair:
            q = BallQuery(variant, center, eps, max(t_list), dt, ReparamClass.REP)
            masses[eps] = [bm.estimate for bm in mass_sweep(sys, measure, q, np.asarray(t_list))]
        res.trials += 1
        small, big = masses[min(eps_pair)], masses[max(eps_pair)]
        if np.any(np.diff(small) > 1e-12) or np.any(np.diff(big) > 1e-12):
            res.violations += 1
            res.details.append("mass increased with horizon")
        if np.any(np.asarray(big) < np.asarray(small) - 1e-12):
            res.violations += 1
            res.details.append("mass decreased with radius")
    return res


def check_gamma_mass_inclusion(
    sys: FlowSystem,
    measure: EmpiricalMeasure,
    seed: int = 0,
    n_centers: int = 3,
    eps: float = 0.1,
    horizons=(1.0, 2.0),
) -> CheckResult:
    """Two-sided ball mass never exceeds the forward ball mass."""
    rng = np.random.default_rng(seed)
    centers = measure.draw_centers(sys, rng, n_centers)
    dt = _default_dt(sys)
    res = CheckResult("gamma_mass_inclusion", 0, 0)
    for center in centers:
        qf = BallQuery(BallVariant.GAMMA_FORWARD, center, eps, max(horizons), dt)
        qt = BallQuery(BallVariant.GAMMA_TWO_SIDED, center, eps, max(horizons), dt)
        mf = mass_sweep(sys, measure, qf, np.asarray(horizons))
        mt = mass_sweep(sys, measure, qt, np.asarray(horizons))
        res.trials += 1
        if any(b.estimate > a.estimate + 1e-12 for a, b in zip(mf, mt)):
            res.violations += 1
            res.details.append("two-sided mass exceeded forward mass")
    return res


def check_censoring(n_atoms: int = 1000) -> CheckResult:
    """Reported decay rates never exceed the finite-sample floor."""
    t = np.array([1.0, 2.0, 4.0])
    masses = np.array([[0.5, 1.0 / n_atoms, 0.0]])
    rates, censored = rates_from_masses(masses[0], t, n_atoms)
    res = CheckResult("censoring", len(t), 0)
    if np.any(rates > np.log(n_atoms) / t + 1e-12):
        res.violations += 1
    if not censored[-1] or censored[0]:
        res.violations += 1
    return res


def check_synthetic_identity(rates=(0.0, 0.3, 0.7, 1.5), tol: float = 1e-6) -> CheckResult:
    """Injecting exact exponential masses recovers the exponent."""
    t_list = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    eps_list = np.array([0.2, 0.1])
    res = CheckResult("synthetic_identity", len(rates), 0)
    for h0 in rates:
        masses = np.exp(-h0 * t_list)[None, None, :].repeat(2, axis=1)
        est = estimate_from_mass_tables(eps_list, t_list, masses, n_atoms=10**9)
        if abs(est.extrapolated - h0) > tol:
            res.violations += 1
            res.details.append(f"recovered {est.extrapolated!r} for {h0}")
    return res


# ---------------------------------------------------------------------------
# Battery


def standard_battery(
    sys: FlowSystem, fc: FlowConstants, seed: int = 0, light: bool = True
) -> list[CheckResult]:
    """The check-lemmas battery; ``light`` shrinks trial counts for CLI use."""
    n = 30 if light else 200
    results = [
        check_flow_property(sys, seed, n_trials=5 if light else 20),
        check_speed_growth(sys, fc.L, seed, n_trials=20 if light else 50),
        check_time_localization(sys, fc.T0, seed, n_trials=30 if light else 100),
    ]
    T = 0.5 * fc.T0
    # The forward-separation check consumes the doubled-gamma form.
    from .constants import estimate_separation

    gamma_2T = estimate_separation(sys, T, fc.T0, n_samples=100, seed=seed)
    results.append(check_forward_separation(sys, gamma_2T, T, fc.T0, seed, n_trials=n))
    results.append(check_flowbox_bounds(sys, fc.T0, seed, n_points=20 if light else 50))
    results.append(check_inclusions(sys, seed, n_queries=n))
    results.append(check_membership_monotonicity(sys, seed, n_queries=n // 2))
    results.append(check_lemma42_inclusion(sys, fc, seed=seed, n_trials=15 if light else 50))
    results.append(check_almost_identity(sys, fc, seed=seed, n_trials=15 if light else 50))
    results.append(
        check_gamma_class_agreement(sys, fc, seed=seed, n_trials=10 if light else 50)
    )
    if fc.delta_of:
        T_d, delta = min(fc.delta_of.items())
        results.append(
            check_boost_from_witnesses(sys, delta, T_d, seed, n_witnesses=10 if light else 50)
        )
    from .measures import iid_measure

    mu = iid_measure(sys, 500 if light else 2000, seed=seed)
    results.append(check_mass_monotonicity(sys, mu, seed))
    results.append(check_gamma_mass_inclusion(sys, mu, seed))
    results.append(check_alpha_equivalence(seed, n_maps=500 if light else 10_000))
    results.append(check_linearize_agreement(seed, n_trials=50 if light else 200))
    results.append(check_synthetic_identity())
    results.append(check_censoring())
    return results
