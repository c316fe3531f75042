"""Command-line front end.

    planeaffine analyze --config metric.ini --json
    planeaffine verify-field --nu 0 --mu "x^2" --X0 t --X1 0 --X2 0 --X3 0

Exit codes: 0 success, 1 usage or configuration error, 2 indeterminate
analysis, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import __version__
from .catalog import AffineBasis, algebra_summary, format_discrepancy_log, generator_catalog
from .classifier import CaseLabel, CaseReport, classify
from .curvmatrix import RANK_RTOL, CurvatureStructureError, hint_wording
from .exprcore import (
    DEFAULT_DOMAIN,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    ZERO_RTOL,
    ExprError,
    IndeterminateError,
    ParseError,
    SampleSet,
    parse,
)
from .geodesic import DEFAULT_STEP, DomainExit, affine_map_check, integrate_geodesic
from .geometry import MetricFamily, VectorField
from .symmetry import RESIDUAL_TOL, ConventionError, SymmetryVerdict, classify_field

NOT_COMPUTED = "not computed"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INDETERMINATE = 2
EXIT_INVARIANT = 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    nu: str
    mu: str
    params: dict[str, float] = field(default_factory=dict)
    domain: dict[str, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_DOMAIN))
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED

    def metric(self) -> MetricFamily:
        try:
            return MetricFamily.from_strings(self.nu, self.mu, self.params)
        except (ParseError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def echo(self) -> dict[str, Any]:
        return {
            "nu": self.nu,
            "mu": self.mu,
            "params": {k: self.params[k] for k in sorted(self.params)},
            "domain": {k: list(self.domain[k]) for k in sorted(self.domain)},
            "samples": self.samples,
            "seed": self.seed,
            "tolerances": {"zero_test": ZERO_RTOL, "rank": RANK_RTOL, "residual": RESIDUAL_TOL},
        }


def _interval(text: str, key: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.replace(":", ",").split(",") if p.strip()]
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"domain {key} must be two numbers 'lo, hi', got {text!r}") from None
    if not lo < hi:
        raise ConfigError(f"domain {key} is empty: [{lo}, {hi}]")
    return lo, hi


def _real(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{what} must be a real number, got {text!r}") from None


def _integer(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{what} must be an integer, got {text!r}") from None


def load_config(args: argparse.Namespace) -> AnalysisConfig:
    """Config file first, then command-line overrides."""
    nu = mu = None
    params: dict[str, float] = {}
    domain = dict(DEFAULT_DOMAIN)
    samples, seed = DEFAULT_SAMPLES, DEFAULT_SEED
    if args.config:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            with open(args.config, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        known = {"metric", "params", "domain", "options"}
        extra = set(cp.sections()) - known
        if extra:
            raise ConfigError(f"unknown config section(s) {sorted(extra)}")
        if cp.has_section("metric"):
            nu = cp.get("metric", "nu", fallback=None)
            mu = cp.get("metric", "mu", fallback=None)
        if cp.has_section("params"):
            params = {k: _real(v, f"parameter {k}") for k, v in cp.items("params")}
        if cp.has_section("domain"):
            for k, v in cp.items("domain"):
                if k not in DEFAULT_DOMAIN:
                    raise ConfigError(f"unknown domain coordinate {k!r}")
                domain[k] = _interval(v, k)
        if cp.has_section("options"):
            for k, v in cp.items("options"):
                if k == "samples":
                    samples = _integer(v, "samples")
                elif k == "seed":
                    seed = _integer(v, "seed")
                else:
                    raise ConfigError(f"unknown option {k!r}")
    if args.nu is not None:
        nu = args.nu
    if args.mu is not None:
        mu = args.mu
    for item in args.param or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        params[name.strip()] = _real(val, f"parameter {name}")
    if args.x_domain is not None:
        domain["x"] = _interval(args.x_domain, "x")
    if args.samples is not None:
        samples = args.samples
    if args.seed is not None:
        seed = args.seed
    if nu is None or mu is None:
        raise ConfigError("both profiles nu and mu are required ([metric] section or --nu/--mu)")
    if samples < 4:
        raise ConfigError("samples must be at least 4")
    for label, text in (("nu", nu), ("mu", mu)):
        try:
            parse(text)
        except ParseError as exc:
            raise ConfigError(f"{label}: {exc}") from None
    return AnalysisConfig(nu, mu, params, domain, samples, seed)


# --- report assembly ------------------------------------------------------------


def _num(v: float) -> float | str:
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def _components(X: VectorField | None) -> list[str] | str:
    return [str(c) for c in X] if X is not None else NOT_COMPUTED


def case_section(report: CaseReport) -> dict[str, Any]:
    return {
        "curvature": {
            "alphas": [str(a) for a in report.alphas],
            "alphas_zero": list(report.alphas_zero),
        },
        "rank": report.rank,
        "kernel": {
            "dim": report.kernel.dim,
            "basis": [[_num(x) for x in v] for v in report.kernel.vectors],
            "tags": list(report.kernel.tags),
        },
        "constant_fields": [
            {"direction": c.direction, "tag": c.tag, "components": _components(c.field)}
            for c in report.constant_fields
        ],
        "case": {
            "label": str(report.label),
            "constants": {k: _num(report.constants[k]) for k in sorted(report.constants)},
        },
        "holonomy_hint": hint_wording(report.holonomy),
    }


def verdict_section(v: SymmetryVerdict | None) -> dict[str, Any] | str:
    if v is None:
        return NOT_COMPUTED
    return {
        "classification": str(v.classification),
        "killing_residual": _num(v.killing_residual),
        "homothetic_residual": _num(v.homothetic_residual),
        "homothetic_constant": _num(v.homothetic_constant),
        "affine_residual": _num(v.affine_residual),
    }


def basis_section(basis: AffineBasis | None) -> dict[str, Any]:
    if basis is None:
        return {"generators": NOT_COMPUTED, "algebra_summary": NOT_COMPUTED, "discrepancies": NOT_COMPUTED}
    gens = []
    for g in basis.generators:
        gens.append(
            {
                "constant": g.constant,
                "form": g.form,
                "status": g.status,
                "method": g.method or NOT_COMPUTED,
                "printed": _components(g.printed),
                "components": _components(g.field),
                "verdict": verdict_section(g.verdict),
            }
        )
    s = algebra_summary(basis)
    return {
        "generators": gens,
        "algebra_summary": {
            "dim_total": s.dim_total,
            "dim_killing": s.dim_killing,
            "dim_homothetic_extra": s.dim_homothetic_extra,
            "dim_proper_affine_extra": s.dim_proper_affine_extra,
        },
        "discrepancies": [
            {
                "case": d.case,
                "form": d.form,
                "constant": d.constant,
                "original": _components(d.original),
                "corrected": _components(d.corrected),
                "residual": _num(d.residual),
                "method": d.method,
            }
            for d in basis.discrepancies
        ],
    }


def run_classify(cfg: AnalysisConfig) -> CaseReport:
    return classify(cfg.metric(), cfg.domain, cfg.samples, cfg.seed)


def run_basis(cfg: AnalysisConfig, report: CaseReport) -> AffineBasis | None:
    if report.label is CaseLabel.Flat:
        return None
    return generator_catalog(report, cfg.domain, cfg.samples, cfg.seed)


def cmd_analyze(cfg: AnalysisConfig) -> tuple[dict[str, Any], AffineBasis | None]:
    report = run_classify(cfg)
    basis = run_basis(cfg, report)
    out = {"config": cfg.echo()}
    out.update(case_section(report))
    out.update(basis_section(basis))
    return out, basis


def cmd_classify(cfg: AnalysisConfig) -> dict[str, Any]:
    out = {"config": cfg.echo()}
    out.update(case_section(run_classify(cfg)))
    return out


def cmd_basis(cfg: AnalysisConfig) -> tuple[dict[str, Any], AffineBasis | None]:
    report = run_classify(cfg)
    basis = run_basis(cfg, report)
    out = {"config": cfg.echo(), "case": case_section(report)["case"]}
    out.update(basis_section(basis))
    return out, basis


def _field_from_args(args) -> VectorField:
    comps = [args.X0, args.X1, args.X2, args.X3]
    if any(c is None for c in comps):
        raise ConfigError("a vector field needs all of --X0 --X1 --X2 --X3")
    try:
        return VectorField(tuple(parse(c) for c in comps))
    except ParseError as exc:
        raise ConfigError(f"vector field: {exc}") from None


def cmd_verify_field(cfg: AnalysisConfig, X: VectorField) -> dict[str, Any]:
    m = cfg.metric()
    unbound = X.free_symbols - {"t", "x", "y", "z"} - set(cfg.params)
    if unbound:
        raise ConfigError(f"vector field uses unbound symbol(s) {sorted(unbound)}")
    S = SampleSet.draw(cfg.domain, m.bindings, cfg.samples, cfg.seed)
    v = classify_field(m, X, sample_set=S)
    return {"config": cfg.echo(), "field": _components(X), "verdict": verdict_section(v)}


def _vector4(text: str, what: str) -> list[float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 4:
        raise ConfigError(f"{what} needs four comma-separated numbers")
    return [_real(p, what) for p in parts]


def cmd_geodesic_check(cfg: AnalysisConfig, X: VectorField, args) -> dict[str, Any]:
    m = cfg.metric()
    x0 = _vector4(args.x0, "--x0")
    v0 = _vector4(args.v0, "--v0")
    xdom = cfg.domain["x"]
    try:
        traj = integrate_geodesic(m, x0, v0, (0.0, args.tau_end), args.step, xdom)
    except DomainExit as exc:
        raise ConfigError(str(exc)) from None
    if traj.truncated:
        raise IndeterminateError("the geodesic leaves the x domain before the end of its span")
    rep = affine_map_check(m, X, traj, args.s, args.step, xdom)
    return {
        "config": cfg.echo(),
        "field": _components(X),
        "geodesic": {
            "x0": x0,
            "v0": v0,
            "tau_end": args.tau_end,
            "step": args.step,
            "s": args.s,
            "norm_drift": _num(traj.norm_drift()),
        },
        "check": {k: (_num(v) if isinstance(v, float) else v) for k, v in rep.as_dict().items()},
    }


# --- text rendering -------------------------------------------------------------


def render_text(obj: Any, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _flat_list(v):
                lines.append(f"{pad}{k}:")
                lines.append(render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for item in obj:
            if isinstance(item, (dict, list)) and not _flat_list(item):
                lines.append(f"{pad}-")
                lines.append(render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    else:
        lines.append(f"{pad}{_scalar(obj)}")
    return "\n".join(lines)


def _flat_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(i, (dict, list)) for i in v)


def _scalar(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(i) for i in v) + "]"
    if isinstance(v, dict):
        return "{}"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI file with [metric] [params] [domain] [options]")
    common.add_argument("--nu", help="profile nu(x), overrides the config")
    common.add_argument("--mu", help="profile mu(x), overrides the config")
    common.add_argument("--param", action="append", metavar="NAME=VALUE", help="bind a profile constant")
    common.add_argument("--x-domain", metavar="LO,HI", help="x interval for sampling")
    common.add_argument("--samples", type=int, help=f"sample points (default {DEFAULT_SAMPLES})")
    common.add_argument("--seed", type=int, help=f"sampling seed (default {DEFAULT_SEED})")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    fieldopts = argparse.ArgumentParser(add_help=False)
    for a in range(4):
        fieldopts.add_argument(f"--X{a}", metavar="EXPR", help=f"component X^{a}")

    p = argparse.ArgumentParser(prog="planeaffine", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("analyze", "basis"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--discrepancy-log", metavar="PATH", help="write repaired generators here")
    sub.add_parser("classify", parents=[common])
    sub.add_parser("verify-field", parents=[common, fieldopts])
    g = sub.add_parser("geodesic-check", parents=[common, fieldopts])
    g.add_argument("--x0", required=True, metavar="T,X,Y,Z", help="initial position")
    g.add_argument("--v0", required=True, metavar="VT,VX,VY,VZ", help="initial velocity")
    g.add_argument("--s", type=float, default=0.5, help="flow parameter (default 0.5)")
    g.add_argument("--tau-end", type=float, default=1.0, help="geodesic span [0, tau_end]")
    g.add_argument("--step", type=float, default=DEFAULT_STEP, help="RK4 step")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = load_config(args)
        basis = None
        if args.command == "analyze":
            out, basis = cmd_analyze(cfg)
        elif args.command == "classify":
            out = cmd_classify(cfg)
        elif args.command == "basis":
            out, basis = cmd_basis(cfg)
        elif args.command == "verify-field":
            out = cmd_verify_field(cfg, _field_from_args(args))
        else:
            if args.step <= 0 or args.tau_end <= 0:
                raise ConfigError("--step and --tau-end must be positive")
            out = cmd_geodesic_check(cfg, _field_from_args(args), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IndeterminateError, DomainExit) as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except (ConventionError, CurvatureStructureError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ExprError as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE

    log_path = getattr(args, "discrepancy_log", None)
    if log_path:
        text = format_discrepancy_log(basis.discrepancies) if basis is not None else ""
        try:
            with open(log_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"config error: cannot write discrepancy log: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    sys.stdout.write(dumps(out) if args.json else render_text(out) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
