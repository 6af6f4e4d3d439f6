"""Command-line experiment runner.

Subcommands: bounds, simulate, sharpness, oracle, net.  Each reads an
optional JSON config (``--config``) whose keys may be overridden by flags,
writes CSV/JSON/SVG outputs into ``--out`` (or the primary table to stdout
when ``--out`` is omitted) and exits with

    0  success
    1  a checked inequality or invariant failed
    2  configuration error
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import bounds as bd
from . import montecarlo as mc
from . import oracle as orc
from . import priors as pr
from . import sphere_nets as sn

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2

DEFAULT_REPLICATES = 100_000
DEFAULT_T_GRID = tuple(round(0.0125 * k, 10) for k in range(1, 18))

SHARPNESS_COLUMNS = (
    "n", "sigma", "r", "a", "t", "point", "ci_lo", "ci_hi", "replicates", "seed",
    "lower", "lower_valid", "lower_ok",
)

_CHECK = {
    "type": "object",
    "required": ["passed", "value", "tol"],
    "properties": {
        "passed": {"type": "boolean"},
        "value": {"type": "number"},
        "tol": {"type": "number"},
    },
}

REPORT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["spaces", "all_ok"],
    "properties": {
        "all_ok": {"type": "boolean"},
        "spaces": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "semantics", "n", "d", "checks", "expected", "verdict_ok"],
                "properties": {
                    "name": {"type": "string"},
                    "semantics": {"enum": ["hull", "rectangular"]},
                    "n": {"type": "integer", "minimum": 1},
                    "d": {"type": "integer", "minimum": 1},
                    "checks": {
                        "type": "object",
                        "required": ["independence", "theta", "domination", "moment"],
                        "properties": {
                            "independence": _CHECK,
                            "theta": _CHECK,
                            "domination": _CHECK,
                            "moment": {
                                "type": "object",
                                "required": ["passed", "lhs", "rhs"],
                                "properties": {
                                    "passed": {"type": "boolean"},
                                    "lhs": {"type": "number"},
                                    "rhs": {"type": "number"},
                                },
                            },
                        },
                    },
                    "expected": {"type": "object", "additionalProperties": {"type": "boolean"}},
                    "verdict_ok": {"type": "boolean"},
                },
            },
        },
    },
}


class ConfigError(ValueError):
    pass


# --- config handling ----------------------------------------------------------


def parse_grid(text: str) -> list[float]:
    """'0.1,0.2,0.3' or 'start:stop:count' (inclusive linspace)."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    return config


def _merge(args: argparse.Namespace, keys: tuple[str, ...]) -> dict:
    config = _load_config(args.config)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def _require(config: dict, key: str, cast: Callable = float) -> Any:
    if config.get(key) is None:
        raise ConfigError(f"missing required setting {key!r}")
    try:
        return cast(config[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {config[key]!r}") from exc


def _grid(config: dict, key: str, default=None) -> list[float]:
    raw = config.get(key, default)
    if raw is None:
        raise ConfigError(f"missing required setting {key!r}")
    grid = parse_grid(raw) if isinstance(raw, str) else [float(v) for v in raw]
    if not grid:
        raise ConfigError(f"{key} is empty")
    if grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{key} must be positive and strictly ascending")
    return grid


def _seed(config: dict) -> int:
    if config.get("seed") is None:
        raise ConfigError("this command is stochastic and needs a seed")
    seed = _require(config, "seed", int)
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    return seed


def _versions() -> dict:
    out = {"python": platform.python_version(), "sublinconc": __version__}
    for pkg in ("numpy", "scipy", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


class _Output:
    """Collects files for one run; prints the primary table when no directory is given."""

    def __init__(self, args: argparse.Namespace, command: str):
        self.dir = Path(args.out) if args.out else None
        self.command = command
        self.files: list[str] = []
        self.started = getattr(args, "started", time.perf_counter())
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str, primary: bool = False):
        if self.dir is None:
            if primary:
                sys.stdout.write(text)
            return
        (self.dir / name).write_text(text)
        self.files.append(name)

    def manifest(self, config: dict, seed: int | None, status: str):
        if self.dir is None:
            return
        record = {
            "command": self.command,
            "config": config,
            "seed": seed,
            "versions": _versions(),
            "wall_time_s": time.perf_counter() - self.started,
            "outputs": list(self.files),
            "status": status,
        }
        (self.dir / "manifest.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _status(ok: bool) -> tuple[int, str]:
    return (EXIT_OK, "ok") if ok else (EXIT_VIOLATION, "violation")


# --- subcommands --------------------------------------------------------------


def cmd_bounds(args: argparse.Namespace) -> int:
    config = _merge(args, ("n", "d", "M", "sigma_sq", "t_grid"))
    n = _require(config, "n", int)
    d = _require(config, "d", int)
    M = _require(config, "M")
    sigma_sq = _require(config, "sigma_sq")
    t_grid = _grid(config, "t_grid")
    try:
        rows = bd.sweep_rows(n, d, M, sigma_sq, t_grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    ok = True
    for name in bd.BOUND_FUNCTIONS:
        col = [r["clamped"] for r in rows if r["bound_name"] == name]
        ok &= all(b <= a for a, b in zip(col, col[1:]))
    raw = {(r["bound_name"], r["t"]): r["raw"] for r in rows}
    ok &= all(raw[("dimfree", t)] <= raw[("bernstein", t)] for t in t_grid)

    out = _Output(args, "bounds")
    out.write("bounds.csv", bd.rows_to_csv(rows), primary=True)
    code, status = _status(ok)
    out.manifest(config, None, status)
    return code


def _family(config: dict, n: int) -> pr.PriorFamily:
    record = config.get("family")
    if not isinstance(record, dict):
        raise ConfigError("missing family record")
    try:
        return pr.family_from_dict(record, n)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad family record: {exc}") from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _merge(args, ("n", "t_grid", "replicates", "seed", "workers", "random_corners"))
    seed = _seed(config)
    n = _require(config, "n", int)
    family = _family(config, n)
    t_grid = _grid(config, "t_grid", list(DEFAULT_T_GRID))
    replicates = int(config.get("replicates", DEFAULT_REPLICATES))
    workers = int(config.get("workers", 1))
    corners = int(config.get("random_corners", 0))
    try:
        rows = mc.sandwich_sweep(family, n, t_grid, replicates, seed, workers, corners,
                                 config.get("direction"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    from .plotting import sandwich_svg

    out = _Output(args, "simulate")
    out.write("sandwich.csv", mc.sandwich_to_csv(rows), primary=True)
    out.write("sandwich.svg", sandwich_svg(rows, f"n = {n}, {replicates} replicates"))
    code, status = _status(all(r.upper_ok and r.lower_ok for r in rows))
    out.manifest(config, seed, status)
    return code


def sharpness_rows(sigma: float, a: float, n_grid, replicates: int, seed: int,
                   t_factor: float = 1.0, workers: int = 1) -> list[dict]:
    """MC tail under the prior mu = a versus the lower bound, at t = t_factor * sigma / (4 sqrt n)."""
    r = bd.construction_radius(sigma)
    rows = []
    for n in n_grid:
        family = pr.UniformShift(a, r, n)
        prior = pr.PriorPoint(np.full(n, a), label="aligned")
        t = t_factor * sigma / (4.0 * math.sqrt(n))
        est = mc.estimate_tail(family, [prior], n, t, replicates, seed, workers)
        lb = bd.sharpness_lower_bound(n, sigma, t)
        rows.append({
            "n": n, "sigma": float(sigma), "r": r, "a": float(a), "t": t,
            "point": est.point, "ci_lo": est.ci_lo, "ci_hi": est.ci_hi,
            "replicates": replicates, "seed": seed, "lower": lb.value,
            "lower_valid": int(lb.valid), "lower_ok": int((not lb.valid) or est.ci_hi >= lb.value),
        })
    return rows


def cmd_sharpness(args: argparse.Namespace) -> int:
    config = _merge(args, ("sigma", "a", "n_grid", "replicates", "seed", "workers", "t_factor"))
    seed = _seed(config)
    sigma = _require(config, "sigma")
    a = float(config.get("a", 1.0))
    if sigma <= 0 or a < 0:
        raise ConfigError("need sigma > 0 and a >= 0")
    n_grid = [int(v) for v in _grid(config, "n_grid", [100, 400, 1600])]
    replicates = int(config.get("replicates", DEFAULT_REPLICATES))
    try:
        rows = sharpness_rows(sigma, a, n_grid, replicates, seed,
                              float(config.get("t_factor", 1.0)), int(config.get("workers", 1)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    from .plotting import sharpness_svg

    out = _Output(args, "sharpness")
    out.write("sharpness.csv", bd.rows_to_csv(rows, SHARPNESS_COLUMNS), primary=True)
    out.write("sharpness.svg", sharpness_svg([r["n"] for r in rows], [r["ci_hi"] for r in rows],
                                             [r["point"] for r in rows], [r["lower"] for r in rows]))
    code, status = _status(all(r["lower_ok"] for r in rows))
    out.manifest(config, seed, status)
    return code


def oracle_report(names) -> dict:
    """Run the four exact checks on each space and compare with its expected verdicts."""
    entries = []
    for name in names:
        space = orc.load_space(name)
        ind = orc.check_independence(space)
        theta = max((orc.theta_exact(space, i) for i in range(1, space.n + 1)),
                    key=lambda rep: rep.max_discrepancy)
        dom = orc.verify_conditional_domination(space)
        mom = orc.verify_moment_inequality(space)
        checks = {
            "independence": {"passed": ind.passed, "value": ind.max_discrepancy, "tol": ind.tol},
            "theta": {"passed": theta.passed, "value": theta.max_discrepancy, "tol": theta.tol},
            "domination": {"passed": dom.passed, "value": max(dom.max_violation, 0.0), "tol": dom.tol},
            "moment": {"passed": mom.passed, "lhs": mom.upper_second_moment, "rhs": mom.rhs},
        }
        expected = {k: bool(v) for k, v in space.meta.get("expect", {}).items()}
        verdict_ok = all(checks[k]["passed"] == v for k, v in expected.items() if k in checks)
        entries.append({
            "name": space.name or str(name),
            "semantics": "rectangular" if space.rectangular else "hull",
            "n": space.n, "d": space.d, "checks": checks,
            "expected": expected, "verdict_ok": verdict_ok,
        })
    return {"spaces": entries, "all_ok": all(e["verdict_ok"] for e in entries)}


def cmd_oracle(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.space is not None:
        config["spaces"] = args.space
    names = config.get("spaces", list(orc.SHIPPED_SPACES))
    if not isinstance(names, list) or not names:
        raise ConfigError("space list is empty")
    try:
        report = oracle_report(names)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot load space: {exc}") from exc
    out = _Output(args, "oracle")
    out.write("oracle_report.json", json.dumps(report, indent=2) + "\n", primary=True)
    code, status = _status(report["all_ok"])
    out.manifest(config, None, status)
    return code


def cmd_net(args: argparse.Namespace) -> int:
    config = _merge(args, ("d", "seed", "samples"))
    seed = _seed(config)
    d = _require(config, "d", int)
    if not 1 <= d <= sn.MAX_NET_DIM:
        raise ConfigError(f"net dimension must be in [1, {sn.MAX_NET_DIM}], got {d}")
    samples = int(config.get("samples", 100_000))
    net = sn.build_half_net(d, seed=seed, verify_samples=samples)
    radius = sn.covering_radius(net, samples, seed + 1)
    summary = {
        "d": d, "size": net.size, "budget": net.budget,
        "within_budget": net.size <= net.budget,
        "verified_radius": radius, "target_radius": net.target_radius,
        "radius_ok": radius <= net.target_radius, "verify_samples": samples, "seed": seed,
    }
    header = ",".join(f"x{j + 1}" for j in range(d)) + "\n"
    out = _Output(args, "net")
    out.write("net.csv", header + net.to_text().replace(" ", ","), primary=True)
    out.write("net_summary.json", json.dumps(summary, indent=2) + "\n")
    code, status = _status(summary["within_budget"] and summary["radius_ok"])
    out.manifest(config, seed, status)
    return code


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sublinconc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--out", help="output directory (default: primary table to stdout)")

    p = sub.add_parser("bounds", help="evaluate the three upper bounds over a t grid")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--M", type=float)
    p.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    p.add_argument("--t-grid", dest="t_grid", help="'a,b,c' or 'start:stop:count'")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo tails against the bounds")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--t-grid", dest="t_grid")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--random-corners", dest="random_corners", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sharpness", help="Monte Carlo tails against the sub-Gaussian lower bound")
    common(p)
    p.add_argument("--sigma", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--n-grid", dest="n_grid")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--t-factor", dest="t_factor", type=float)
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("oracle", help="exact checks on finite sublinear-expectation spaces")
    common(p)
    p.add_argument("--space", action="append", help="shipped space name or JSON path (repeatable)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("net", help="build and verify a 1/2-net of the unit sphere")
    common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_net)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.started = time.perf_counter()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
