"""Batch experiment runner: ``qmod run <config.json>`` and ``qmod audit-group <group.json>``.

Each run validates the whole config, computes every row in memory and only
then writes ``<stem>.csv`` (deterministic body) and ``<stem>.json`` (summary
with timings).  Exit codes: 0 success, 1 numeric failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import distortion, example_family, measures, modulus
from .errors import ConvergenceError, DomainError, ValidationError
from .geometry import make_neighborhood, metric_comparison_constant, normal_radius
from .mobius import load_group, trivial_group, verify_group_action

REPORT_SCHEMA = "qmod-report/1"
COMMANDS = ("verify-fubini", "ring-modulus", "ring-inequality", "lower-bound", "divergence", "fmo",
            "example7-distortion", "example7-equicontinuity", "calderon", "group-audit")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_field = {"type": "object", "required": ["kind"],
          "properties": {"kind": {"enum": ["constant", "indicator", "log_fmo", "log_power",
                                           "inverse_distance", "example_bound"]}}}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["command"],
    "additionalProperties": False,
    "properties": {
        "command": {"type": "string"},
        "n": {"type": "integer", "minimum": 2, "maximum": 6},
        "group": {"type": "string"},
        "center": {"type": "array", "items": _num},
        "radius": _pos,
        "seed": {"type": "integer", "minimum": 0},
        "budget": _posint,
        "field": _field,
        "fields": {"type": "array", "items": _field, "minItems": 1},
        "r0": _pos,
        "r0_list": {"type": "array", "items": _pos, "minItems": 1},
        "r1": _pos,
        "r2": _pos,
        "ratio": {"type": "number", "exclusiveMinimum": 1},
        "directions": _posint,
        "cells": {"type": "integer", "minimum": 2},
        "tol": _pos,
        "rel_tol": _pos,
        "discretization_tol": {"type": "number", "minimum": 0},
        "map": {"type": "object", "required": ["kind"],
                "properties": {"kind": {"enum": ["identity", "example"]}, "m": {"type": "integer", "minimum": 2}}},
        "etas": {"type": "array", "items": {"enum": ["eta0", "uniform", "triangular"]}, "minItems": 1},
        "eps0": _pos,
        "eps": {"type": "array", "items": _pos, "minItems": 1},
        "halvings": _posint,
        "profile": {"type": "object", "required": ["kind"],
                    "properties": {"kind": {"enum": ["field", "q1", "exp_inverse"]}}},
        "threshold": _pos,
        "m": {"type": "integer", "minimum": 2},
        "m_list": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "deltas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "samples": _posint,
        "phi": {"type": "object", "required": ["kind"],
                "properties": {"kind": {"enum": ["power", "power_log"]}, "p": _num, "q": _num}},
        "T_max": {"type": "number", "minimum": 4},
        "output": {"type": "string"},
    },
}

REQUIRED = {
    "verify-fubini": ["n"],
    "ring-modulus": ["n"],
    "ring-inequality": ["n", "r1", "r2"],
    "lower-bound": ["n", "field", "eps", "eps0"],
    "divergence": ["n", "eps0"],
    "fmo": ["n", "field", "eps"],
    "example7-distortion": ["n"],
    "example7-equicontinuity": ["n", "deltas"],
    "calderon": ["n", "phi"],
    "group-audit": ["group"],
}


class UsageError(Exception):
    pass


@dataclass
class RunResult:
    header: list
    rows: list
    outputs: dict = field(default_factory=dict)
    empirical_constants: dict = field(default_factory=dict)
    pass_flags: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    base_dir: Path
    seed: int = measures.DEFAULT_SEED

    @classmethod
    def from_dict(cls, d, base_dir=Path(".")):
        if not isinstance(d, dict) or "command" not in d:
            raise ValidationError("config must be an object with a 'command'")
        if d["command"] not in COMMANDS:
            raise UsageError(f"unknown command {d['command']!r}; choose from {', '.join(COMMANDS)}")
        try:
            jsonschema.validate(d, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ValidationError(f"config schema violation: {exc.message}") from exc
        missing = [k for k in REQUIRED[d["command"]] if k not in d]
        if missing:
            raise ValidationError(f"command {d['command']!r} requires {', '.join(missing)}")
        return cls(d["command"], dict(d), Path(base_dir), int(d.get("seed", measures.DEFAULT_SEED)))

    def get(self, key, default=None):
        return self.params.get(key, default)

    def group(self):
        path = self.get("group")
        n = self.get("n")
        if path is None:
            return trivial_group(n)
        p = Path(path)
        if not p.is_absolute():
            p = self.base_dir / p
        if not p.is_file():
            raise ValidationError(f"group file not found: {p}")
        try:
            g = load_group(p)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"group file is not valid JSON: {exc}") from exc
        if n is not None and g.n != n:
            raise ValidationError(f"group dimension {g.n} does not match n = {n}")
        return g

    def neighborhood(self, needed_radius):
        g = self.group()
        n = g.n
        center = np.asarray(self.get("center", [0.0] * n), dtype=float)
        if center.shape != (n,):
            raise ValidationError(f"center must have {n} coordinates")
        rmax = normal_radius(g, center)
        radius = self.get("radius", rmax)
        if needed_radius > radius + 1e-12 or radius > rmax + 1e-12:
            raise DomainError(f"radius {max(needed_radius, radius)} exceeds the normal radius {rmax}")
        return make_neighborhood(g, center, radius)


# --------------------------------------------------------------------------
# commands


def _field(cfg, spec, nbhd):
    if spec["kind"] == "example_bound":
        r0p = float(np.tanh(spec.get("r0", nbhd.radius) / 2.0))
        n = nbhd.n

        def prof(t):
            with np.errstate(divide="ignore"):
                return np.log(math.e * r0p / np.tanh(np.asarray(t, dtype=float) / 2.0)) ** (n - 1)

        return measures.radial_field(nbhd.center.rep, prof, "example_bound")
    return measures.field_from_spec(spec, nbhd.center.rep, nbhd.n)


def _default_battery(n, r0):
    return [{"kind": "constant", "c": 1.0},
            {"kind": "indicator", "a": r0 / 4.0, "b": r0 / 2.0},
            {"kind": "log_fmo", "C": 2.0 * math.e * r0, "power": 1}]


def cmd_verify_fubini(cfg):
    n = cfg.get("n")
    r0s = cfg.get("r0_list", [cfg.get("r0", 0.25)] if "r0" in cfg.params else [0.25, 0.5])
    nbhd = cfg.neighborhood(max(r0s))
    budget = cfg.get("budget", measures.DEFAULT_BUDGET)
    rows, ratios, inside, errs = [], [], [], []
    for r0 in r0s:
        specs = cfg.get("fields") or _default_battery(n, r0)
        for k, spec in enumerate(specs):
            Q = _field(cfg, spec, nbhd)
            res = measures.fubini_sandwich(nbhd, r0, Q, budget=budget, seed=cfg.seed + k)
            lo, hi = res.bracket
            rel = res.volume.rel_err
            rows.append([Q.label, r0, res.volume.value, res.volume.stderr, res.shell_euclidean,
                         res.shell_hyperbolic, res.ratio, lo, hi, int(res.inside), rel])
            ratios.append(res.ratio)
            inside.append(res.inside)
            errs.append(rel)
    header = ["field", "r0", "volume", "stderr", "shell_euclidean", "shell_hyperbolic", "ratio",
              "bracket_lower", "bracket_upper", "inside", "mc_rel_err"]
    return RunResult(header, rows, {"count": len(rows)},
                     {"C1_hat": float(np.nanmax(ratios)), "C2_hat": float(np.nanmin(ratios))},
                     {"all_inside": bool(all(inside)), "mc_error_below_1pct": bool(max(errs) < 0.01)})


def cmd_ring_modulus(cfg):
    n = cfg.get("n")
    if "ratio" in cfg.params:
        ratio = cfg.get("ratio")
    elif "r1" in cfg.params and "r2" in cfg.params:
        if not cfg.get("r1") < cfg.get("r2"):
            raise DomainError("ring radii must satisfy r1 < r2")
        ratio = cfg.get("r2") / cfg.get("r1")
    else:
        ratio = math.e
    fam, box = modulus.ring_family_and_box(n, ratio, count=cfg.get("directions"), cells=cfg.get("cells"))
    t = time.perf_counter()
    res = modulus.modulus_solve(box, fam, n, tol=cfg.get("tol", 1e-6))
    elapsed = time.perf_counter() - t
    exact = modulus.ring_modulus_exact(1.0, ratio, n)
    rel = abs(res.value - exact) / exact
    rel_tol = cfg.get("rel_tol", 0.05 if n == 2 else 0.08)
    c = res.certificate
    row = [n, ratio, len(fam), box.shape[0], exact, res.value, rel, c.dual_bound, c.max_violation, c.iterations]
    header = ["n", "ratio", "directions", "cells", "analytic", "solver", "rel_err", "dual_bound",
              "max_violation", "iterations"]
    return RunResult(header, [row], {"analytic": exact, "solver": res.value, "certificate": c.to_dict(),
                                     "solve_seconds": elapsed},
                     {}, {"within_tolerance": bool(rel <= rel_tol), "certificate_gap_ok": bool(c.gap <= cfg.get("tol", 1e-6))})


def _eta_battery(names, e0, r1, r2):
    w = r2 - r1
    mid = 0.5 * (r1 + r2)
    table = {
        "eta0": e0,
        "uniform": lambda r: np.full(np.shape(r), 1.0 / w),
        "triangular": lambda r: np.maximum(0.0, 2.0 / w * (1.0 - np.abs(2.0 * (np.asarray(r) - mid) / w))),
    }
    return {k: table[k] for k in names}


def cmd_ring_inequality(cfg):
    n = cfg.get("n")
    r1, r2 = cfg.get("r1"), cfg.get("r2")
    if not r1 < r2:
        raise DomainError("need r1 < r2")
    nbhd = cfg.neighborhood(r2)
    spec = cfg.get("map", {"kind": "identity"})
    if spec["kind"] == "example":
        ex = example_family.ExampleFamilyConfig(n=n, m=spec.get("m", 2), r0=nbhd.radius, group=nbhd.group)
        sampler = lambda y: nbhd.to_ball(example_family.gm_family_eval(ex, y)[0])
        qspec = cfg.get("field", {"kind": "example_bound"})
    else:
        sampler = nbhd.to_ball
        qspec = cfg.get("field", {"kind": "constant", "c": 1.0})
    Q = _field(cfg, qspec, nbhd)
    e0 = modulus.eta0_weight(modulus.q_profile_of(nbhd, Q), r1, r2, n)
    etas = _eta_battery(cfg.get("etas", ["eta0", "uniform", "triangular"]), e0, r1, r2)
    battery = [measures.constant_field(1.0, nbhd.center.rep), Q]
    consts = measures.fubini_constants(nbhd, r2, battery, budget=cfg.get("budget", 100_000), seed=cfg.seed)
    first = next(iter(etas.values()))
    rep = modulus.ring_inequality_check(nbhd, sampler, Q, r1, r2, first, cells=cfg.get("cells"),
                                        count=cfg.get("directions"), tol=cfg.get("tol", 1e-6),
                                        discretization_tol=cfg.get("discretization_tol", 0.05),
                                        etas=etas, constants=consts)
    rows, ok = [], []
    for name, eta in etas.items():
        rhs = modulus.weighted_annulus_integral(nbhd, Q, eta, r1, r2)
        passed = rep.lhs <= rhs * (1.0 + rep.discretization_tol)
        s = rep.sandwich["rows"][name]
        rows.append([name, rep.lhs, rhs, rhs - rep.lhs, int(passed), s["left"], s["middle"], s["right"],
                     int(s["ordered"])])
        ok.append((passed, s["ordered"]))
    header = ["eta", "lhs_modulus", "rhs_integral", "margin", "passed", "sandwich_left", "sandwich_middle",
              "sandwich_right", "sandwich_ordered"]
    return RunResult(header, rows, {"I": e0.I, "certificate": rep.certificate.to_dict()},
                     {"M1_hat": consts.M1, "M2_hat": consts.M2, "fubini_lower": consts.lower,
                      "fubini_upper": consts.upper},
                     {"inequality": bool(all(a for a, _ in ok)), "sandwich_ordered": bool(all(b for _, b in ok))})


def cmd_lower_bound(cfg):
    eps0 = cfg.get("eps0")
    nbhd = cfg.neighborhood(eps0)
    Q = _field(cfg, cfg.get("field"), nbhd)
    rows, ok = [], True
    for e in cfg.get("eps"):
        lb = modulus.lower_bound_integral(nbhd, Q, e, eps0)
        rows.append([e, lb.value, lb.equivalent_form, lb.residual])
        ok = ok and lb.residual < 1e-6
    return RunResult(["eps", "value", "equivalent_form", "residual"], rows, {}, {}, {"forms_agree": bool(ok)})


def _eps_schedule(cfg):
    if "eps" in cfg.params:
        return cfg.get("eps")
    eps0 = cfg.get("eps0")
    return [eps0 / 2.0 ** k for k in range(1, cfg.get("halvings", 30) + 1)]


def cmd_divergence(cfg):
    n = cfg.get("n")
    eps0 = cfg.get("eps0")
    prof = cfg.get("profile", {"kind": "q1"})
    consts = {}
    if prof["kind"] == "field":
        nbhd = cfg.neighborhood(eps0)
        Q = _field(cfg, prof.get("field", cfg.get("field", {"kind": "constant"})), nbhd)
        qp = None
    elif prof["kind"] == "q1":
        r0 = prof.get("r0", max(eps0, 1.0))
        ex = example_family.ExampleFamilyConfig(n=n, m=2, r0=r0, group=cfg.group())
        c1_hat, _ = metric_comparison_constant(r0, rng=np.random.default_rng(cfg.seed), n=n)
        C = math.e * ex.r0_prime / c1_hat
        consts = {"c1_star": 1.0 / c1_hat, "C": C}
        nbhd = ex.neighborhood()
        Q = example_family.charted_bound_field(ex, C)
        qp = None
    else:
        nbhd = cfg.neighborhood(eps0)
        Q = measures.constant_field(1.0, nbhd.center.rep)
        qp = lambda r: math.exp(min((n - 1) / r, 700.0))
    eps = _eps_schedule(cfg)
    dp = modulus.divergence_profile(nbhd, Q, eps0, eps, threshold=cfg.get("threshold", 0.5), q_profile=qp)
    inc = np.concatenate([[np.nan], dp.increments_per_halving])
    rows = [[e, v, d] for e, v, d in zip(dp.eps, dp.integrals, inc)]
    tail = dp.increments_per_halving[-3:]
    return RunResult(["eps", "integral", "increment_per_halving"], rows,
                     {"verdict": dp.verdict, "loglog_slope": dp.loglog_slope}, consts,
                     {"divergent": dp.verdict == "divergent",
                      "increment_per_halving_ge_half": bool(len(tail) and np.all(tail >= 0.5))})


def cmd_fmo(cfg):
    eps = cfg.get("eps")
    nbhd = cfg.neighborhood(max(eps))
    Q = _field(cfg, cfg.get("field"), nbhd)
    prof = measures.fmo_profile(nbhd, Q, eps, budget=cfg.get("budget", measures.DEFAULT_BUDGET), seed=cfg.seed)
    return RunResult(["eps", "mean_oscillation", "stderr"], [list(r) for r in prof.rows()],
                     {"slope": prof.slope}, {}, {"bounded": bool(prof.bounded)})


def cmd_example_distortion(cfg):
    n = cfg.get("n")
    ms = cfg.get("m_list", [cfg.get("m", 2)])
    rows, ok, consts = [], True, {}
    for m in ms:
        ex = example_family.ExampleFamilyConfig(n=n, m=m, r0=cfg.get("r0", 1.0), group=cfg.group())
        rep = example_family.example_distortion_check(ex, cfg.get("samples", 100_000), seed=cfg.seed)
        rows.append([m, rep.max_excess, rep.inner_min_q, rep.glue_mismatch, int(rep.q_le_q1),
                     rep.q_profile_max_ratio, rep.fd_max_error, int(rep.monotone_profile)])
        ok = ok and rep.passed and rep.q_le_q1 and rep.q_profile_ok
        consts = {"c1_star": rep.c1_star, "C": rep.C, "C1": rep.C1}
    header = ["m", "max_excess", "inner_min_q", "glue_mismatch", "q_le_q1", "q_profile_max_ratio",
              "fd_max_error", "monotone_profile"]
    return RunResult(header, rows, {}, consts, {"distortion_bound": bool(ok)})


def cmd_example_equicontinuity(cfg):
    n = cfg.get("n")
    ex = example_family.ExampleFamilyConfig(n=n, m=2, r0=cfg.get("r0", 1.0), group=cfg.group())
    tab = example_family.equicontinuity_profile(ex, cfg.get("m_list", list(range(2, 51))), cfg.get("deltas"))
    return RunResult(["delta", "displacement", "bound"], [list(r) for r in tab.rows()],
                     {"restricted_radius": tab.restricted_radius, "image_radius": tab.image_radius,
                      "omitted_continuum": tab.omitted_continuum},
                     {}, {"monotone": tab.monotone, "within_bound": tab.within_bound})


def cmd_calderon(cfg):
    spec = cfg.get("phi")
    p = spec.get("p", 3.0)
    q = spec.get("q", 0.0)
    if spec["kind"] == "power":
        phi = lambda t: t ** p
    else:
        phi = lambda t: t ** p * math.log(math.e + t) ** q
    res = distortion.calderon_check(phi, cfg.get("n"), T_max=cfg.get("T_max", 2.0 ** 60), tol=cfg.get("tol", 1e-3))
    rows = [[t, v, d] for t, v, d in zip(res.T, res.partial_integrals, res.increments)]
    return RunResult(["T", "partial_integral", "increment"], rows,
                     {"verdict": res.verdict, "tail_exponent": res.tail_exponent}, {},
                     {"converges": res.verdict == "converges"})


def _audit(group, samples, seed):
    rng = np.random.default_rng(seed)
    n = group.n
    u = rng.normal(size=(samples, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    x = u * 0.9 * rng.uniform(size=(samples, 1)) ** (1.0 / n)
    x[0] = 0.0
    r = normal_radius(group, np.zeros(n))
    return verify_group_action(group, x, r), r


def cmd_group_audit(cfg):
    g = cfg.group()
    rep, r = _audit(g, cfg.get("samples", 64), cfg.seed)
    rows = [[i, float(np.linalg.norm(x)), float(d), int(c), int(f)] for i, (x, d, c, f) in
            enumerate(zip(rep.samples, rep.min_displacement, rep.near_counts, rep.fixed_point_free))]
    return RunResult(["sample", "norm", "min_displacement", "near_count", "fixed_point_free"], rows,
                     {"elements": len(g.elements), "depth": g.depth}, {"normal_radius_at_origin": r},
                     {"fixed_point_free": rep.all_fixed_point_free})


HANDLERS = {
    "verify-fubini": cmd_verify_fubini,
    "ring-modulus": cmd_ring_modulus,
    "ring-inequality": cmd_ring_inequality,
    "lower-bound": cmd_lower_bound,
    "divergence": cmd_divergence,
    "fmo": cmd_fmo,
    "example7-distortion": cmd_example_distortion,
    "example7-equicontinuity": cmd_example_equicontinuity,
    "calderon": cmd_calderon,
    "group-audit": cmd_group_audit,
}


# --------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    return str(v)


def render_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _atomic_write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_experiment(cfg, out_dir, stem, threads=1):
    """Run one config and write ``<stem>.csv`` and ``<stem>.json`` into ``out_dir``."""
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    res = HANDLERS[cfg.command](cfg)
    runtime = time.perf_counter() - t0
    body = render_csv(res.header, res.rows)
    summary = {
        "schema": REPORT_SCHEMA,
        "command": cfg.command,
        "inputs": cfg.params,
        "outputs": res.outputs,
        "empirical_constants": res.empirical_constants,
        "pass_flags": res.pass_flags,
        "seed": cfg.seed,
        "runtime": {"seconds": runtime, "started": started, "threads": threads},
    }
    out_dir = Path(out_dir)
    csv_path, json_path = out_dir / f"{stem}.csv", out_dir / f"{stem}.json"
    text = json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"
    _atomic_write(csv_path, body)
    _atomic_write(json_path, text)
    return csv_path, json_path, summary


def _parser():
    p = argparse.ArgumentParser(prog="qmod", description="Quotient-space modulus experiments.")
    sub = p.add_subparsers(dest="action", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (default: config 'output' or ./qmod-out)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--threads", type=int, default=1, help="recorded only; runs are single-process")
    a = sub.add_parser("audit-group", help="check a group file for fixed points and print a JSON report")
    a.add_argument("group")
    a.add_argument("--samples", type=int, default=64)
    a.add_argument("--seed", type=int, default=measures.DEFAULT_SEED)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.action == "audit-group":
            path = Path(args.group)
            if not path.is_file():
                raise ValidationError(f"group file not found: {path}")
            g = load_group(path)
            rep, r = _audit(g, args.samples, args.seed)
            out = {"elements": len(g.elements), "depth": g.depth, "normal_radius_at_origin": r,
                   **rep.to_dict()}
            out.pop("min_displacement")
            out.pop("near_counts")
            print(json.dumps(_jsonable(out), indent=2, sort_keys=True))
            return 0 if rep.all_fixed_point_free else 1
        path = Path(args.config)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        if args.seed is not None and isinstance(raw, dict):
            raw["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(raw, path.parent)
        out = args.out or cfg.get("output") or "qmod-out"
        csv_path, json_path, summary = run_experiment(cfg, out, path.stem, args.threads)
        print(f"{csv_path}\n{json_path}")
        print(json.dumps(_jsonable(summary["pass_flags"]), sort_keys=True))
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, DomainError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        print(json.dumps(_jsonable(exc.diagnostics), sort_keys=True), file=sys.stderr)
        return 1
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
