"""Command-line front end.

    tubenv check-barrier --config run.json
    tubenv envelope      --config run.json --sample 1000
    tubenv certify       --config run.json --kind separation --point "1.2,0;0.4,0"
    tubenv verify-suite  --config run.json

Exit codes: 0 all checks pass, 1 input error, 2 a mathematical check failed.
Outputs go to ``--out`` (default: ``$TUBENV_OUT_DIR`` or the working directory).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tubenv import tolerances
from tubenv.barrier import build_barrier
from tubenv.domain import SpecialDomain, fence_contains, make_special_domain, make_truncated_tube, special_domain_contains
from tubenv.envelope import (
    SpecialDomainEnvelope,
    envelope_halfspaces,
    envelope_linear,
    envelope_rational,
    envelope_shell,
    envelope_special,
    hyperplane_certificate,
    levi_check,
    LeviVerdict,
    odbar_convexity_certificate,
    sample_level_set,
    sample_tube,
)
from tubenv.errors import PreconditionError, SingularPointError
from tubenv.hull import (
    WitnessStatus,
    closed_form_hull,
    hull_contains,
    rational_equals_polynomial_witness,
    sample_boundary_fence,
    separation_certificate,
    variety_witness,
)
from tubenv.morse import block_identities_check, pluriharmonic_residual_symbolic
from tubenv.numgeom import Ball, ConvexDomain, DegeneratePointError, DomainConfigError, domain_from_config
from tubenv.polyalg import ComplexPoint, ComplexPoly, DimensionError, RealPoly, has_mixed_terms

EXIT_OK, EXIT_INPUT, EXIT_MATH = 0, 1, 2
OUT_ENV = "TUBENV_OUT_DIR"


class ConfigError(ValueError):
    pass


class MathFailure(Exception):
    """A check failed; carries the record to write before exiting with 2."""


@dataclass
class RunConfig:
    n: int
    seed: int
    sample_count: int
    X: ConvexDomain | None
    Y: ConvexDomain | None
    alpha: RealPoly | None
    shell: dict | None
    envelope: dict
    point: ComplexPoint | None
    tolerances: dict


def _domain(cfg, name, n):
    try:
        D = domain_from_config(cfg)
    except DomainConfigError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    if D.dim != n:
        raise ConfigError(f"{name} lives in R^{D.dim} but n = {n}")
    return D


def parse_point(text: str, n: int) -> ComplexPoint:
    """``"x1,..,xn;y1,..,yn"``."""
    try:
        xs, ys = text.split(";")
        x = [float(v) for v in xs.split(",")]
        y = [float(v) for v in ys.split(",")]
    except ValueError:
        raise ConfigError(f"point {text!r} is not of the form 'x1,..,xn;y1,..,yn'") from None
    if len(x) != n or len(y) != n:
        raise ConfigError(f"point needs {n} x and {n} y coordinates")
    return ComplexPoint.of(x, y)


def _point_from(obj, n):
    if obj is None:
        return None
    if isinstance(obj, str):
        return parse_point(obj, n)
    try:
        return parse_point(",".join(map(str, obj["x"])) + ";" + ",".join(map(str, obj["y"])), n)
    except (KeyError, TypeError):
        raise ConfigError("point must be 'x;y' text or {x: [...], y: [...]}") from None


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    n = raw.get("n")
    if not isinstance(n, int) or n < 2:
        raise ConfigError("config needs an integer n >= 2")
    seed = raw.get("seed", 0)
    count = raw.get("sample_count", 1000)
    if not isinstance(seed, int) or not isinstance(count, int) or count < 1:
        raise ConfigError("seed and sample_count must be integers (sample_count >= 1)")
    shell = raw.get("shell")
    if shell is not None:
        try:
            shell = {k: float(shell[k]) for k in ("r1", "r2", "r3")}
        except (KeyError, TypeError, ValueError):
            raise ConfigError("shell needs numeric r1, r2, r3") from None
    X = _domain(raw["X"], "X", n) if "X" in raw else None
    Y = _domain(raw["Y"], "Y", n) if "Y" in raw else None
    if shell is not None:
        zero = np.zeros(n)
        try:
            X = X or Ball(zero, shell["r2"])
            Y = Y or Ball(zero, shell["r3"])
        except DomainConfigError as exc:
            raise ConfigError(f"shell: {exc}") from None
    alpha = None
    bcfg = raw.get("barrier")
    if bcfg is not None:
        if not isinstance(bcfg, dict) or "alpha" not in bcfg:
            raise ConfigError("barrier needs an 'alpha' polynomial literal")
        if "Y" in bcfg:
            Y = _domain(bcfg["Y"], "barrier.Y", n)
        try:
            alpha = RealPoly.from_literal(n, bcfg["alpha"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"barrier.alpha: {exc}") from None
    elif shell is not None:
        alpha = RealPoly.constant(n, shell["r1"] ** 2)
    env = raw.get("envelope", {})
    if not isinstance(env, dict):
        raise ConfigError("envelope must be an object")
    tol_cfg = raw.get("tolerances", {})
    try:
        tol = tolerances.parse_overrides([f"{k}={v}" for k, v in tol_cfg.items()])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(n, seed, count, X, Y, alpha, shell, env, _point_from(raw.get("point"), n), tol)


# ---------------------------------------------------------------------------
# output

def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path: Path, record: dict):
    path.write_text(json.dumps(record, sort_keys=True, indent=2, default=_jsonable) + "\n")


def write_cloud(path: Path, points: np.ndarray, labels, n: int):
    header = [f"x{j + 1}" for j in range(n)] + [f"y{j + 1}" for j in range(n)] + ["label"]
    lines = [",".join(header)]
    for row, lab in zip(points, labels):
        lines.append(",".join(f"{v:.17g}" for v in row) + "," + lab)
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# builders

def _need_barrier(cfg: RunConfig):
    if cfg.alpha is None:
        raise ConfigError("config needs a barrier (or a shell)")
    if cfg.Y is None:
        raise ConfigError("config needs Y (top level or barrier.Y)")


def build_special(cfg: RunConfig, require: bool = True) -> SpecialDomain:
    _need_barrier(cfg)
    if cfg.X is None:
        raise ConfigError("config needs X")
    b = build_barrier(cfg.alpha, cfg.Y, X=cfg.X)
    return make_special_domain(cfg.X, b, seed=cfg.seed, require=require)


def _shell_or_params(cfg: RunConfig, params: dict, keys):
    src = dict(cfg.shell or {})
    src.update({k: params[k] for k in keys if k in params})
    missing = [k for k in keys if k not in src]
    if missing:
        raise ConfigError(f"missing parameters {missing} (give a shell or envelope params)")
    return [float(src[k]) for k in keys]


def _halfspace_inputs(cfg: RunConfig, params: dict):
    n = cfg.n
    if "F" in params:
        F_list = [ComplexPoly.from_literal(n, lit) for lit in params["F"]]
        probe = _point_from(params.get("probe"), n)
        if probe is None:
            raise ConfigError("halfspaces needs a probe point inside the hull")
    else:
        r1, _, r3 = _shell_or_params(cfg, params, ("r1", "r2", "r3"))
        F_list = [ComplexPoly.sum_of_squares(n) - (r1 * r1 - r3 * r3)]
        probe = ComplexPoint.of(np.zeros(n), np.zeros(n))
    if cfg.X is None or cfg.Y is None:
        raise ConfigError("halfspaces needs X and Y")
    return F_list, probe


def build_envelope(cfg: RunConfig):
    """``(envelope, domain membership or None, hull membership or None)``."""
    params = cfg.envelope.get("params", {})
    kind = cfg.envelope.get("kind") or ("shell" if cfg.shell and cfg.alpha is None else "special")
    n = cfg.n
    if kind == "special":
        S = build_special(cfg)
        env = envelope_special(S)
        return env, S.contains, (lambda z: hull_contains(env.hull, z))
    if kind == "shell":
        r1, r2, r3 = _shell_or_params(cfg, params, ("r1", "r2", "r3"))
        env = envelope_shell(r1, r2, r3, n)
        b = build_barrier(RealPoly.constant(n, r1 * r1), env.Y, X=env.X)
        S = make_special_domain(env.X, b, seed=cfg.seed)
        H = closed_form_hull(S)
        return env, S.contains, (lambda z: hull_contains(H, z))
    if kind == "linear":
        try:
            delta = [float(v) for v in params["delta"]]
            r2, r3 = float(params["r2"]), float(params["r3"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("linear needs params delta, r2, r3 (and optional eps)") from None
        if len(delta) != n:
            raise ConfigError(f"delta needs {n} entries")
        env = envelope_linear(delta, r2, r3, float(params.get("eps", 0.0)))
        alpha = RealPoly(n, {tuple(int(j == k) for j in range(n)): d for k, d in enumerate(delta)})
        S = make_special_domain(env.X, build_barrier(alpha, env.Y, X=env.X), seed=cfg.seed)
        H = closed_form_hull(S)
        return env, S.contains, (lambda z: hull_contains(H, z))
    if kind == "halfspaces":
        F_list, probe = _halfspace_inputs(cfg, params)
        env = envelope_halfspaces(cfg.X, cfg.Y, F_list, probe)
        tube = make_truncated_tube(cfg.X, cfg.Y, _domain(params["hole"], "hole", n)) if "hole" in params else None
        return env, (tube.contains if tube else None), None
    if kind == "rational":
        if cfg.X is None or cfg.Y is None:
            raise ConfigError("rational needs X and Y")
        if "hull_delta" in params and "psi" in params:
            hull_delta = RealPoly.from_literal(2 * n, params["hull_delta"])
            psi = ComplexPoly.from_literal(n, params["psi"])
            K_x = _domain(params["K_x"], "K_x", n) if "K_x" in params else None
        else:
            r1, _, r3 = _shell_or_params(cfg, params, ("r1", "r2", "r3"))
            hull_delta = (RealPoly.sum_of_squares(2 * n, range(n))
                          - RealPoly.sum_of_squares(2 * n, range(n, 2 * n)) - (r1 * r1 - r3 * r3))
            psi = ComplexPoly.sum_of_squares(n)
            K_x = Ball(np.zeros(n), r1)
        if K_x is None:
            raise ConfigError("rational needs K_x")
        env = envelope_rational(cfg.X, cfg.Y, K_x, hull_delta, psi, seed=cfg.seed)
        tube = make_truncated_tube(cfg.X, cfg.Y, K_x)
        return env, tube.contains, None
    raise ConfigError(f"unknown envelope kind {kind!r}")


# ---------------------------------------------------------------------------
# commands

def cmd_check_barrier(cfg: RunConfig, out: Path, args) -> int:
    _need_barrier(cfg)
    b = build_barrier(cfg.alpha, cfg.Y, X=cfg.X)
    rec = {"command": "check-barrier", **b.verdict.to_record(), "alpha": b.alpha.to_literal(),
           "f": b.f.to_literal()}
    write_json(out / "barrier_verdict.json", rec)
    return EXIT_OK if b.usable else EXIT_MATH


def label_points(W, n, env, domain_fn, hull_fn):
    split = (W[:, :n], W[:, n:])
    in_env = np.asarray(env.contains(split))
    in_dom = np.asarray(domain_fn(split)) if domain_fn else np.zeros(len(W), bool)
    in_hull = np.asarray(hull_fn(split)) if hull_fn else ~in_env
    labels = np.where(in_dom, "in_domain", np.where(in_env, "in_envelope", np.where(in_hull, "in_hull", "outside")))
    return labels, int(np.sum(in_dom & ~in_env))


def cmd_envelope(cfg: RunConfig, out: Path, args) -> int:
    env, domain_fn, hull_fn = build_envelope(cfg)
    rec = {"command": "envelope", "envelope": env.to_record()}
    code = EXIT_OK
    if getattr(env, "flagged", False):
        failed = sorted(k for k, v in env.hypotheses.items() if not v.get("passed"))
        rec["failed_checks"] = failed
        code = EXIT_MATH
    if args.sample:
        rng = np.random.default_rng(cfg.seed)
        W = sample_tube(env.X, env.Y, args.sample, rng)
        labels, violations = label_points(W, cfg.n, env, domain_fn, hull_fn)
        names, counts = np.unique(labels, return_counts=True)
        rec["samples"] = {"count": int(args.sample), "labels": dict(zip(names.tolist(), counts.tolist())),
                          "domain_outside_envelope": violations, "file": "cloud.csv"}
        write_cloud(out / "cloud.csv", W, labels, cfg.n)
        if violations:
            code = EXIT_MATH
    write_json(out / "envelope.json", rec)
    return code


def _special_hull(cfg: RunConfig):
    if cfg.alpha is None and cfg.shell is None:
        raise ConfigError("this certificate needs a barrier or shell config")
    return closed_form_hull(build_special(cfg))


def cmd_certify(cfg: RunConfig, out: Path, args) -> int:
    z = parse_point(args.point, cfg.n) if args.point else cfg.point
    if z is None:
        raise ConfigError("certify needs --point or a 'point' in the config")
    kind = args.kind
    path = out / f"certificate_{kind}.json"
    try:
        if kind == "separation":
            cert = separation_certificate(_special_hull(cfg), z, seed=cfg.seed)
            ok = cert.valid
        elif kind == "variety":
            cert = variety_witness(_special_hull(cfg), z, seed=cfg.seed)
            ok = cert.status is WitnessStatus.VALID
        elif kind == "maxprinciple":
            r1, _, r3 = _shell_or_params(cfg, cfg.envelope.get("params", {}), ("r1", "r2", "r3"))
            cert = rational_equals_polynomial_witness(r1, r3, cfg.n, z, seed=cfg.seed)
            ok = cert.valid
        elif kind == "odbar":
            F_list, probe = _halfspace_inputs(cfg, cfg.envelope.get("params", {}))
            env = envelope_halfspaces(cfg.X, cfg.Y, F_list, probe)
            cert = odbar_convexity_certificate([F for F, _ in env.constraints], [s for _, s in env.constraints],
                                               z, cfg.X, cfg.Y, seed=cfg.seed)
            ok = cert.valid
        elif kind == "hyperplane":
            if cfg.X is None or cfg.Y is None:
                raise ConfigError("hyperplane needs X and Y")
            cert = hyperplane_certificate(cfg.X, cfg.Y, z, seed=cfg.seed)
            ok = cert.valid
        else:
            raise ConfigError(f"unknown certificate kind {kind!r}")
    except (PreconditionError, SingularPointError, DegeneratePointError) as exc:
        write_json(path, {"command": "certify", "kind": kind, "valid": False, "error": str(exc)})
        print(f"certify: {exc}", file=sys.stderr)
        return EXIT_MATH
    rec = {"command": "certify", "valid": bool(ok), **cert.to_record()}
    write_json(path, rec)
    return EXIT_OK if ok else EXIT_MATH


def run_suites(cfg: RunConfig, count: int) -> dict:
    """The invariant batteries for a special-domain config; each entry has ``passed``."""
    S = build_special(cfg, require=False)
    b = S.barrier
    n = cfg.n
    suites = {"convex_initial": S.initial_check.to_record(),
              "barrier": {"passed": b.usable, **b.verdict.to_record()}}
    dependent = ("hull_in_fence", "domain_hull_disjoint", "envelope_contains_domain", "levi_flat",
                 "certificate_soundness")
    try:
        H = closed_form_hull(S) if b.usable else None
    except PreconditionError as exc:
        H, reason = None, str(exc)
    else:
        reason = "barrier refuted"
    if H is None:
        for name in dependent:
            suites[name] = {"passed": False, "skipped": True, "reason": reason}
    else:
        rng = np.random.default_rng(cfg.seed)
        W = sample_tube(S.X, S.Y, count, rng)
        split = (W[:, :n], W[:, n:])
        in_hull = np.asarray(hull_contains(H, split))
        in_fence = np.asarray(fence_contains(S.fence, split))
        in_dom = np.asarray(special_domain_contains(S, split))
        delta = np.asarray(H.delta(W))
        env = SpecialDomainEnvelope(S.X, S.Y, H)
        in_env = np.asarray(env.contains(split))
        v1 = int(np.sum(in_hull & ~in_fence))
        v2 = int(np.sum(in_dom & ~(delta > 0)))
        v3 = int(np.sum(in_dom & ~in_env))
        suites["hull_in_fence"] = {"passed": v1 == 0, "violations": v1, "samples": count}
        suites["domain_hull_disjoint"] = {"passed": v2 == 0, "violations": v2, "samples": count}
        suites["envelope_contains_domain"] = {"passed": v3 == 0, "violations": v3, "samples": count}
        pts = sample_level_set(H.delta, S.X, S.Y, 100, cfg.seed)
        if len(pts):
            lev = levi_check(H.delta, pts).to_record()
            suites["levi_flat"] = {"passed": lev["verdict"] == LeviVerdict.FLAT.value, **lev}
        else:
            suites["levi_flat"] = {"passed": True, "samples": 0, "note": "hull boundary misses the open tube"}
        sep = W[delta > 1e-6][:200]
        kbd = sample_boundary_fence(H, 2000, cfg.seed)
        bad = sum(not separation_certificate(H, (w[:n], w[n:]), samples=kbd).valid for w in sep)
        suites["certificate_soundness"] = {"passed": bad == 0, "violations": bad, "certificates": len(sep)}
    pluri = pluriharmonic_residual_symbolic(b.F_alpha) and pluriharmonic_residual_symbolic(
        ComplexPoly.sum_of_squares(n) - b.F_alpha)
    suites["pluriharmonicity"] = {"passed": bool(pluri), "symbolic_zero": bool(pluri)}
    if has_mixed_terms(b.f, n):
        suites["block_identities"] = {"passed": True, "skipped": True, "reason": "augmenting function mixes x and y"}
    else:
        rng = np.random.default_rng(cfg.seed + 1)
        rep = block_identities_check(b, sample_tube(S.X, S.Y, 50, rng), "mu")
        worst = max((r.det_rel_error or 0.0) for r in rep.rows)
        suites["block_identities"] = {"passed": rep.passed, "points": len(rep.rows),
                                      "max_d_plus_a": max(r.max_d_plus_a for r in rep.rows),
                                      "max_det_rel_error": worst}
    return suites


def cmd_verify_suite(cfg: RunConfig, out: Path, args) -> int:
    count = args.sample or cfg.sample_count
    suites = run_suites(cfg, count)
    passed = all(s["passed"] for s in suites.values())
    write_json(out / "suite_summary.json", {"command": "verify-suite", "passed": passed, "seed": cfg.seed,
                                            "samples": count, "suites": suites})
    return EXIT_OK if passed else EXIT_MATH


COMMANDS = {
    "check-barrier": cmd_check_barrier,
    "envelope": cmd_envelope,
    "certify": cmd_certify,
    "verify-suite": cmd_verify_suite,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tubenv", description="Hulls and envelopes for special domains and truncated tubes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--sample", type=int, default=0, help="number of sampled points")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
        p.add_argument("--tolerance-overrides", nargs="*", default=[], metavar="KEY=VAL")
        if name == "certify":
            p.add_argument("--point", default=None, help="'x1,..,xn;y1,..,yn'")
            p.add_argument("--kind", required=True,
                           choices=["separation", "variety", "maxprinciple", "odbar", "hyperplane"])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.sample < 0:
            raise ConfigError("--sample must be nonnegative")
        overrides = {**cfg.tolerances, **tolerances.parse_overrides(args.tolerance_overrides)}
        out = Path(args.out or os.environ.get(OUT_ENV) or ".")
        out.mkdir(parents=True, exist_ok=True)
        with tolerances.overridden(**overrides):
            return COMMANDS[args.command](cfg, out, args)
    except (PreconditionError, SingularPointError, DegeneratePointError) as exc:
        check = getattr(exc, "check", None)
        print(f"{args.command}: check failed: {exc}" if check else f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_MATH
    except (ConfigError, DomainConfigError, DimensionError, KeyError, TypeError, ValueError) as exc:
        print(f"{args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
