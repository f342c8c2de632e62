"""Command-line front end.

One self-describing JSON config drives every subcommand; any key can be
overridden with ``--set dotted.path=value``.  All outputs are UTF-8 with
'.' decimal separators and are byte-identical across reruns of the same
config and seed (no wall-clock anywhere).

Exit codes: 0 success (and, for check-lemmas, zero violations), 1 config
problems, 2 pipeline or estimation failures (including lemma violations).
"""
from __future__ import annotations

import argparse
import json
import os
import sys as _sys

import numpy as np

from .balls import BallQuery, BallVariant, b1_member, gamma_member, monotone_member, slope_member
from .checks import standard_battery
from .constants import (
    EstimationError,
    constants_from_json,
    constants_to_json,
    estimate_constants,
)
from .entropy import ExpansivenessMode, brin_katok_estimate, expansiveness_test
from .measures import AllCensoredError, decay_curve, iid_measure, orbit_measure, write_decay_csv
from .reparam import ReparamClass, reparam_to_json
from .systems import UnknownSystemError, make_builtin

_CLASS_OF = {
    "any_c00": ReparamClass.ANY_C00,
    "rep": ReparamClass.REP,
    "rep_alpha": ReparamClass.REP_ALPHA,
    "rep_alpha_star": ReparamClass.REP_ALPHA_STAR,
}
_VARIANT_OF = {v.value: v for v in BallVariant}


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "system": {"name": None, "params": {}},
    "seed": 0,
    "dt": 0.01,
    "out_dir": ".",
    "cache_dir": None,
    "constants": {"path": None, "n_samples": 300, "n_pairs": 1000, "with_delta": True},
    "measure": {
        "kind": "iid",
        "density": "uniform",
        "x0": None,
        "burn_in": 50.0,
        "n_atoms": 2000,
        "spacing": 0.6180339887498949,
    },
    "entropy": {
        "eps_list": [0.2, 0.1, 0.05],
        "t_list": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        "n_centers": 5,
        "variant": 1,
    },
    "expansive": {
        "eps": 0.05,
        "horizons": [2.0, 4.0, 6.0],
        "n_centers": 5,
        "mode": "forward",
    },
    "decay": {"eps_list": [0.2, 0.1], "t_list": [1.0, 2.0, 4.0], "variant": 1},
    "check_lemmas": {"light": True},
}


def _deep_update(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_update(out[k], v)
        else:
            out[k] = v
    return out


def _apply_override(cfg: dict, dotted: str) -> None:
    if "=" not in dotted:
        raise ConfigError(f"override must look like key.path=value: {dotted!r}")
    path, raw = dotted.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    keys = path.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {path!r} crosses a non-object")
    node[keys[-1]] = value


def load_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))  # deep copy
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = _deep_update(cfg, json.load(fh))
    if args.system:
        cfg["system"]["name"] = args.system
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out:
        cfg["out_dir"] = args.out
    for ov in args.set or []:
        _apply_override(cfg, ov)
    if not cfg["system"]["name"]:
        raise ConfigError("config needs system.name (or pass --system)")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer (no wall-clock seeding)")
    return cfg


def _dump_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _get_system(cfg):
    return make_builtin(cfg["system"]["name"], cfg["system"].get("params") or {})


def _get_constants(sysm, cfg):
    spec = cfg["constants"]
    if spec.get("path"):
        with open(spec["path"], encoding="utf-8") as fh:
            return constants_from_json(json.load(fh))
    return estimate_constants(
        sysm,
        seed=cfg["seed"],
        n_samples=spec["n_samples"],
        n_pairs=spec["n_pairs"],
        with_delta=spec["with_delta"],
    )


def _get_measure(sysm, cfg):
    m = cfg["measure"]
    if m["kind"] == "iid":
        return iid_measure(sysm, int(m["n_atoms"]), seed=cfg["seed"], density=m["density"])
    if m["kind"] == "orbit":
        x0 = m.get("x0")
        if x0 is None:
            rng = np.random.default_rng(cfg["seed"])
            x0 = sysm.geometry.sample(rng, 1)[0]
        return orbit_measure(
            sysm,
            np.asarray(x0, dtype=float),
            burn_in=float(m["burn_in"]),
            n_atoms=int(m["n_atoms"]),
            spacing=float(m["spacing"]),
            seed=cfg["seed"],
            cache_dir=cfg.get("cache_dir"),
        )
    raise ConfigError(f"unknown measure kind: {m['kind']!r}")


def _centers(sysm, measure, cfg, k):
    rng = np.random.default_rng(cfg["seed"] + 1)
    return measure.draw_centers(sysm, rng, k)


def cmd_constants(cfg) -> int:
    sysm = _get_system(cfg)
    fc = estimate_constants(
        sysm,
        seed=cfg["seed"],
        n_samples=cfg["constants"]["n_samples"],
        n_pairs=cfg["constants"]["n_pairs"],
        with_delta=cfg["constants"]["with_delta"],
    )
    out = os.path.join(cfg["out_dir"], f"constants_{sysm.name}.json")
    _dump_json(out, constants_to_json(sysm, fc))
    print(out)
    return 0


def cmd_entropy(cfg) -> int:
    sysm = _get_system(cfg)
    measure = _get_measure(sysm, cfg)
    e = cfg["entropy"]
    if not e["eps_list"] or not e["t_list"]:
        raise ConfigError("entropy grids must be nonempty")
    centers = _centers(sysm, measure, cfg, int(e["n_centers"]))
    est = brin_katok_estimate(
        sysm,
        measure,
        centers,
        e["eps_list"],
        e["t_list"],
        variant=int(e["variant"]),
        dt=float(cfg["dt"]),
    )
    base = os.path.join(cfg["out_dir"], f"entropy_{sysm.name}")
    _dump_json(
        base + ".json",
        {
            "system": sysm.name,
            "extrapolated": est.extrapolated,
            "stderr": est.extrapolated_stderr,
            "per_epsilon": {repr(k): list(v) for k, v in sorted(est.per_epsilon.items())},
            "diagnostics": {
                "censoring": {repr(k): v for k, v in sorted(est.diagnostics["censoring"].items())},
                "n_centers": est.diagnostics["n_centers"],
                "plateau_eps": est.diagnostics["plateau_eps"],
                "variant": est.diagnostics.get("variant"),
            },
            "seed": cfg["seed"],
        },
    )
    with open(base + ".csv", "w", encoding="utf-8") as fh:
        fh.write("eps,slope,stderr\n")
        for eps in sorted(est.per_epsilon):
            s, se = est.per_epsilon[eps]
            fh.write(f"{eps!r},{s!r},{se!r}\n")
    print(base + ".json")
    print(base + ".csv")
    return 0


def cmd_expansive(cfg) -> int:
    sysm = _get_system(cfg)
    measure = _get_measure(sysm, cfg)
    e = cfg["expansive"]
    centers = _centers(sysm, measure, cfg, int(e["n_centers"]))
    mode = (
        ExpansivenessMode.TWO_SIDED
        if e["mode"] == "two_sided"
        else ExpansivenessMode.FORWARD
    )
    verdict = expansiveness_test(
        sysm,
        measure,
        float(e["eps"]),
        centers,
        e["horizons"],
        mode=mode,
        dt=float(cfg["dt"]),
    )
    out = os.path.join(cfg["out_dir"], f"expansive_{sysm.name}.json")
    _dump_json(
        out,
        {
            "system": sysm.name,
            "scale": verdict.scale,
            "mode": verdict.mode.value,
            "verdict": verdict.verdict.value,
            "horizons": list(verdict.horizons),
            "sup_mass": [
                {
                    "horizon": bm.horizon,
                    "estimate": bm.estimate,
                    "ci_low": bm.ci_low,
                    "ci_high": bm.ci_high,
                    "n_tested": bm.n_tested,
                }
                for bm in verdict.sup_mass
            ],
            "seed": cfg["seed"],
        },
    )
    print(out)
    return 0


def cmd_decay(cfg) -> int:
    sysm = _get_system(cfg)
    measure = _get_measure(sysm, cfg)
    d = cfg["decay"]
    center = _centers(sysm, measure, cfg, 1)[0]
    curve = decay_curve(
        sysm,
        measure,
        center,
        d["eps_list"],
        d["t_list"],
        variant=BallVariant.B1 if int(d["variant"]) == 1 else
        (BallVariant.B2 if int(d["variant"]) == 2 else BallVariant.B3),
        dt=float(cfg["dt"]),
    )
    out = os.path.join(cfg["out_dir"], f"decay_{sysm.name}.csv")
    write_decay_csv(out, curve)
    print(out)
    return 0


def cmd_check_lemmas(cfg) -> int:
    sysm = _get_system(cfg)
    fc = _get_constants(sysm, cfg)
    results = standard_battery(
        sysm, fc, seed=cfg["seed"], light=bool(cfg["check_lemmas"]["light"])
    )
    out = os.path.join(cfg["out_dir"], f"check_lemmas_{sysm.name}.json")
    _dump_json(
        out,
        {
            "system": sysm.name,
            "seed": cfg["seed"],
            "checks": [
                {
                    "name": r.name,
                    "trials": r.trials,
                    "violations": r.violations,
                    "details": r.details[:5],
                }
                for r in results
            ],
        },
    )
    total = 0
    for r in results:
        print(r.line())
        total += r.violations
    print(out)
    return 0 if total == 0 else 2


def _query_from_obj(obj, dt_default) -> BallQuery:
    return BallQuery(
        variant=_VARIANT_OF[obj["variant"]],
        center=np.asarray(obj["center"], dtype=float),
        radius=float(obj["radius"]),
        horizon=float(obj["horizon"]),
        dt=float(obj.get("dt", dt_default)),
        reparam_class=_CLASS_OF[obj.get("class", "rep")],
        alpha=obj.get("alpha"),
        h_resolution=int(obj.get("h_resolution", 2)),
    )


def run_match_line(sysm, obj, dt_default) -> dict:
    q = _query_from_obj(obj, dt_default)
    out = []
    for cand in obj["candidates"]:
        y = np.asarray(cand, dtype=float)
        if q.variant is BallVariant.B1:
            r = b1_member(sysm, q, y)
        elif q.variant in (BallVariant.GAMMA_FORWARD, BallVariant.GAMMA_TWO_SIDED):
            r = gamma_member(sysm, q, y)
        elif q.uses_slope_class:
            r = slope_member(sysm, q, y)
        else:
            r = monotone_member(sysm, q, y)
        entry = {"member": r.member, "margin": None if np.isnan(r.margin) else r.margin}
        if r.witness is not None:
            entry["witness"] = reparam_to_json(r.witness)
        out.append(entry)
    return {"results": out}


def cmd_match(cfg, queries_path, results_path) -> int:
    sysm = _get_system(cfg)
    with open(queries_path, encoding="utf-8") as fin, open(
        results_path, "w", encoding="utf-8"
    ) as fout:
        for line in fin:
            if not line.strip():
                continue
            obj = json.loads(line)
            fout.write(json.dumps(run_match_line(sysm, obj, cfg["dt"]), sort_keys=True))
            fout.write("\n")
    print(results_path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rsflow",
        description="rescaled-ball matching and entropy toolkit for flows",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--system", help="builtin system name")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--set", action="append", help="dotted config override key.path=value"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("constants", "entropy", "expansive", "check-lemmas", "decay"):
        sub.add_parser(name)
    p_match = sub.add_parser("match")
    p_match.add_argument("--queries", required=True, help="JSON-lines query file")
    p_match.add_argument("--results", required=True, help="JSON-lines output file")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 1

    os.makedirs(cfg["out_dir"], exist_ok=True)
    try:
        if args.command == "constants":
            return cmd_constants(cfg)
        if args.command == "entropy":
            return cmd_entropy(cfg)
        if args.command == "expansive":
            return cmd_expansive(cfg)
        if args.command == "decay":
            return cmd_decay(cfg)
        if args.command == "check-lemmas":
            return cmd_check_lemmas(cfg)
        if args.command == "match":
            return cmd_match(cfg, args.queries, args.results)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 1
    except (
        UnknownSystemError,
        EstimationError,
        AllCensoredError,
        ValueError,
        RuntimeError,
    ) as exc:
        print(f"pipeline error: {exc}", file=_sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
