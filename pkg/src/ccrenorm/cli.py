"""Command-line driver producing diff-able CSV reports with JSON sidecars.

Every subcommand wraps one operation or experiment: validate the run
configuration (exit 1 on rejection, before anything is written), compute,
then write <out>.csv and <out>.meta.json. Solver or precision failures
mid-run still write the rows certified so far and exit 2.

Numbers are rendered in scientific notation at bits/4 significant digits,
so identical configurations produce byte-identical CSV files. The sidecar
echoes the full configuration and can be re-fed through --config to
reproduce a run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .errors import CCRenormError, DomainError
from .experiments import (
    DEFAULT_WIDTH_DEPTH,
    default_depth,
    estimate_convergence,
    estimate_delta,
    hyperbolicity_probe,
)
from .maps import build_family
from .partitions import conjugacy_ratio_test
from .precision import ALLOWED_BITS, real, working_precision
from .rotation import (
    INF,
    ContinuedFraction,
    cf_window,
    irrational_parameter,
    rotation_number,
    superstable_parameter,
)

DEFAULT_ALPHA_GRID = ("2.8", "2.9", "3.0", "3.1", "3.2")


# -- configuration ----------------------------------------------------------------


@dataclass
class RunConfig:
    """One validated run; field names match the JSON config schema exactly."""

    command: str
    bits: int = 128
    alpha: str = "3"
    epsilon: str = "0"
    theta: str | None = None
    cf: tuple | None = None
    target: str | None = None
    depth: int | None = None
    tol: str | None = None
    workers: int = 1
    out: str = "report"
    alpha_grid: tuple | None = None

    def jsonable(self) -> dict:
        d = asdict(self)
        d["cf"] = list(self.cf) if self.cf is not None else None
        d["alpha_grid"] = list(self.alpha_grid) if self.alpha_grid is not None else None
        return d


class ConfigError(Exception):
    pass


def _parse_cf(text) -> tuple:
    if isinstance(text, (list, tuple)):
        tokens = [str(t).strip() for t in text]
    else:
        tokens = [t.strip() for t in str(text).split(",") if t.strip()]
    if not tokens:
        raise ConfigError("empty CF entry list")
    entries = []
    for k, tok in enumerate(tokens):
        if tok.lower() in ("inf", "infinity"):
            if k != len(tokens) - 1:
                raise ConfigError("'inf' may only terminate a CF")
            entries.append(INF)
            continue
        try:
            r = int(tok)
        except ValueError:
            raise ConfigError(f"bad CF entry {tok!r}") from None
        if r < 1:
            raise ConfigError(f"CF entries must be >= 1, got {r}")
        entries.append(r)
    return tuple(entries)


def _parse_target(text: str) -> Fraction:
    try:
        fr = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad rational target {text!r}") from None
    if fr < 0:
        raise ConfigError(f"target must be >= 0, got {fr}")
    return fr


def _parse_real(text, name: str) -> mpfr:
    try:
        with working_precision(256):
            return real(str(text))
    except (ValueError, TypeError):
        raise ConfigError(f"bad real for {name}: {text!r}") from None


def validate(config: RunConfig) -> RunConfig:
    if config.bits not in ALLOWED_BITS:
        raise ConfigError(f"bits must be one of {ALLOWED_BITS}, got {config.bits}")
    if config.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {config.workers}")
    if not config.out:
        raise ConfigError("out path must be nonempty")
    a = _parse_real(config.alpha, "alpha")
    if not a > 1:
        raise ConfigError(f"alpha must exceed 1, got {config.alpha}")
    e = _parse_real(config.epsilon, "epsilon")
    if not abs(e) < 1:
        raise ConfigError(f"epsilon must satisfy |epsilon| < 1, got {config.epsilon}")
    if config.theta is not None:
        _parse_real(config.theta, "theta")
    if config.tol is not None:
        t = _parse_real(config.tol, "tol")
        if not t > 0:
            raise ConfigError(f"tol must be positive, got {config.tol}")
    if config.cf is not None:
        config.cf = _parse_cf(config.cf)
    if config.target is not None:
        _parse_target(config.target)
    if config.alpha_grid is not None:
        grid = tuple(str(x) for x in config.alpha_grid)
        for g in grid:
            if not _parse_real(g, "alpha_grid") > 1:
                raise ConfigError(f"alpha grid values must exceed 1, got {g}")
        config.alpha_grid = grid
    if config.depth is None:
        config.depth = default_depth(config.bits) if config.command in (
            "delta", "probe") else 10
    floor = {"delta": 4, "probe": 4, "rho": 1, "tower": 0}.get(config.command, 1)
    if config.depth < floor:
        raise ConfigError(f"depth must be >= {floor} for {config.command}, got {config.depth}")
    needs = {
        "rho": config.theta is not None,
        "superstable": config.target is not None or config.cf is not None,
        "window": config.cf is not None or config.target is not None,
        "tower": config.theta is not None or config.cf is not None,
        "delta": config.cf is not None,
        "converge": config.cf is not None,
        "rigidity": config.cf is not None,
        "probe": config.cf is not None,
    }[config.command]
    if not needs:
        raise ConfigError(f"missing required parameter(s) for {config.command}; "
                          "see --help for the flags each subcommand needs")
    if config.command in ("delta", "probe", "converge", "rigidity"):
        if any(r is INF for r in config.cf):
            raise ConfigError(f"{config.command} needs an infinite CF; drop the 'inf'")
    return config


# -- formatting -------------------------------------------------------------------


def format_real(x, sig: int) -> str:
    """Deterministic scientific rendering with sig significant digits."""
    if x is None:
        return ""
    m = mpfr(x)
    if gmpy2.is_nan(m):
        return "nan"
    if gmpy2.is_infinite(m):
        return "inf" if m > 0 else "-inf"
    digits, exp, _ = gmpy2.digits(m, 10, sig)
    neg = digits.startswith("-")
    d = digits.lstrip("-")
    if d.strip("0") == "":
        return "0." + "0" * (sig - 1) + "e+00"
    mantissa = d[0] + "." + d[1:]
    return ("-" if neg else "") + mantissa + f"e{exp - 1:+03d}"


def _cf_text(entries) -> str:
    return "[" + ",".join("inf" if r is INF or r == INF else str(r) for r in entries) + "]"


def _family(config: RunConfig):
    return build_family(config.alpha, config.epsilon, config.bits)


def _periodic_cf(period: tuple, length: int) -> ContinuedFraction:
    reps = -(-length // len(period)) + 1
    return ContinuedFraction(period * reps)


# -- subcommand bodies --------------------------------------------------------------
# each returns (columns, rows, meta) and may raise CCRenormError mid-run;
# rows built incrementally are recovered by the caller from the carrier list


def _cmd_rho(config, sink):
    fam = _family(config)
    theta = _parse_real(config.theta, "theta")
    rho = rotation_number(fam.lift(theta), config.depth)
    sig = config.bits // 4
    sink.append({
        "theta": format_real(theta, sig),
        "rho": format_real(rho.value, sig),
        "cf": _cf_text(rho.cf.entries),
        "certified_depth": str(rho.certified_depth),
        "exact": str(rho.exact) if rho.exact is not None else "",
    })
    return {"certified_depth": rho.certified_depth}


def _cmd_superstable(config, sink):
    fam = _family(config)
    sig = config.bits // 4
    tol = config.tol
    if config.target is not None:
        targets = [(0, _parse_target(config.target))]
    else:
        period = config.cf
        cf = _periodic_cf(period, config.depth * len(period))
        targets = []
        for n in range(1, config.depth + 1):
            p, q = cf.convergent(n * len(period))
            targets.append((n, Fraction(p, q)))
    for n, fr in targets:
        ss = superstable_parameter(fam, fr, tol=tol)
        sink.append({
            "n": str(n),
            "target": f"{fr.numerator}/{fr.denominator}",
            "theta": format_real(ss.theta, sig),
            "residual": format_real(ss.residual, sig),
        })
    return {}


def _cmd_window(config, sink):
    fam = _family(config)
    sig = config.bits // 4
    if config.cf is not None:
        if INF in config.cf:
            prefixes = [config.cf]  # terminated CF: one plateau
        else:
            entries = _periodic_cf(config.cf, config.depth).finite[:config.depth]
            prefixes = [entries[:n] for n in range(1, config.depth + 1)]
    else:
        fr = _parse_target(config.target)
        cf = ContinuedFraction.from_rational(fr)
        prefixes = [cf.entries]
    for prefix in prefixes:
        w = cf_window(fam, prefix, tol=config.tol)
        sink.append({
            "n": str(len([r for r in prefix if r is not INF])),
            "prefix": _cf_text(prefix),
            "lo": format_real(w.lo, sig),
            "hi": format_real(w.hi, sig),
            "width": format_real(w.width, sig),
        })
    return {}


def _cmd_tower(config, sink):
    fam = _family(config)
    sig = config.bits // 4
    if config.theta is not None:
        theta = _parse_real(config.theta, "theta")
    else:
        cf = _periodic_cf(config.cf, config.depth + 3)
        theta = irrational_parameter(fam, cf, config.depth + 3)
    from .renorm import height, pair_from_map, renormalize
    # built level by level so rows certified before a mid-run failure survive
    pair = pair_from_map(fam.lift(theta), 0)
    for step in range(config.depth + 1):
        chi = height(pair)
        sink.append({
            "level": str(pair.level),
            "q": str(pair.q[0]),
            "q_prev": str(pair.q[1]),
            "p": str(pair.p[0]),
            "p_prev": str(pair.p[1]),
            "height": "inf" if not chi.is_finite else str(int(chi)),
            "eta0": format_real(pair.eta0, sig),
            "commutation": format_real(pair.commutation_residual(), sig),
            "alpha_estimate": format_real(pair.exponent_estimate(), sig),
        })
        if step < config.depth:
            pair = renormalize(pair)
    return {"theta": format_real(theta, sig)}


def _delta_rows(report, sig, sink):
    thetas = report.thetas
    for n in range(1, len(thetas) + 1):
        gap = report.gaps[n - 2] if n >= 2 else None
        dgap = report.delta_gap[n - 3] if n >= 3 else None
        width = report.widths[n - 1] if n <= len(report.widths) else None
        dwidth = (report.delta_width[n - 2]
                  if 2 <= n <= len(report.delta_width) + 1 else None)
        sink.append({
            "n": str(n),
            "theta_n": format_real(thetas[n - 1], sig),
            "gap_n": format_real(gap, sig),
            "delta_gap_n": format_real(dgap, sig),
            "width_n": format_real(width, sig),
            "delta_width_n": format_real(dwidth, sig),
        })


def _cmd_delta(config, sink):
    fam = _family(config)
    sig = config.bits // 4
    report = estimate_delta(fam, config.cf, config.depth, window_tol=config.tol)
    _delta_rows(report, sig, sink)
    return {
        "delta": format_real(report.delta, sig),
        "uncertainty": format_real(report.uncertainty, sig),
        "certified_depth": report.certified_depth,
    }


def _second_member(config):
    """The two family members compared by converge/rigidity: epsilon 0 and
    the configured epsilon (0.3 when the configured value is itself 0)."""
    eps = config.epsilon if _parse_real(config.epsilon, "epsilon") != 0 else "0.3"
    fam0 = build_family(config.alpha, 0, config.bits)
    fam1 = build_family(config.alpha, eps, config.bits)
    return fam0, fam1


def _cmd_converge(config, sink):
    fam0, fam1 = _second_member(config)
    sig = config.bits // 4
    cf = _periodic_cf(config.cf, config.depth + 3)
    f = fam0.lift(irrational_parameter(fam0, cf, config.depth + 3))
    g = fam1.lift(irrational_parameter(fam1, cf, config.depth + 3))
    report = estimate_convergence(f, g, config.depth)
    for n in report.levels:
        sink.append({
            "n": str(n),
            "distance": format_real(report.distances[n], sig),
            "noise_floor": format_real(report.noise_floor[n], sig),
            "in_fit": "1" if n in report.fit_levels else "0",
        })
    return {
        "lambda_s": format_real(report.lambda_s, sig),
        "r_squared": format_real(report.r_squared, sig),
    }


def _cmd_rigidity(config, sink):
    fam0, fam1 = _second_member(config)
    sig = config.bits // 4
    cf = _periodic_cf(config.cf, config.depth + 3)
    f = fam0.lift(irrational_parameter(fam0, cf, config.depth + 3))
    g = fam1.lift(irrational_parameter(fam1, cf, config.depth + 3))
    report = conjugacy_ratio_test(f, g, config.depth)
    for k, n in enumerate(report.levels):
        sink.append({
            "n": str(n),
            "d": format_real(report.d[k], sig),
            "noise_floor": format_real(report.noise_floor[k], sig),
            "in_fit": "1" if n in report.fit_levels else "0",
        })
    return {
        "lambda_fit": format_real(report.lambda_fit, sig),
        "beta": format_real(report.beta, sig),
        "r_squared": format_real(report.r_squared, sig),
    }


def _probe_cell(payload: tuple) -> dict:
    alpha, epsilon, period, depth, bits = payload
    fam = build_family(alpha, epsilon, bits)
    sig = bits // 4
    delta, lambda_s = hyperbolicity_probe(fam, period, depth)
    passes = delta > 1 and (lambda_s is None or lambda_s < 1)
    return {
        "alpha": alpha,
        "delta": format_real(delta, sig),
        "lambda_s": format_real(lambda_s, sig),
        "passes": "1" if passes else "0",
    }


def _cmd_probe(config, sink):
    grid = config.alpha_grid if config.alpha_grid else (config.alpha,)
    payloads = [(a, config.epsilon, tuple(config.cf), config.depth, config.bits)
                for a in grid]
    if config.workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_probe_cell, payloads))
    else:
        rows = [_probe_cell(p) for p in payloads]
    rows.sort(key=lambda r: float(r["alpha"]))
    sink.extend(rows)
    return {}


COMMANDS = {
    "rho": (_cmd_rho, ["theta", "rho", "cf", "certified_depth", "exact"]),
    "superstable": (_cmd_superstable, ["n", "target", "theta", "residual"]),
    "window": (_cmd_window, ["n", "prefix", "lo", "hi", "width"]),
    "tower": (_cmd_tower, ["level", "q", "q_prev", "p", "p_prev", "height",
                           "eta0", "commutation", "alpha_estimate"]),
    "delta": (_cmd_delta, ["n", "theta_n", "gap_n", "delta_gap_n",
                           "width_n", "delta_width_n"]),
    "converge": (_cmd_converge, ["n", "distance", "noise_floor", "in_fit"]),
    "rigidity": (_cmd_rigidity, ["n", "d", "noise_floor", "in_fit"]),
    "probe": (_cmd_probe, ["alpha", "delta", "lambda_s", "passes"]),
}


# -- orchestration ------------------------------------------------------------------


def _write_outputs(config: RunConfig, columns, rows, meta) -> None:
    with open(config.out + ".csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n",
                                restval="")
        writer.writeheader()
        writer.writerows(rows)
    with open(config.out + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(config: RunConfig) -> int:
    body, columns = COMMANDS[config.command]
    rows: list = []
    started = time.time()
    status, error, extra = "ok", None, {}
    try:
        extra = body(config, rows) or {}
        code = 0
    except CCRenormError as exc:
        status, error = "partial", f"{type(exc).__name__}: {exc}"
        partial = getattr(exc, "partial", None)
        if partial is not None and not rows and hasattr(partial, "thetas"):
            _delta_rows(partial, config.bits // 4, rows)
        code = 2
    meta = {
        "command": config.command,
        "config": config.jsonable(),
        "status": status,
        "error": error,
        "rows": len(rows),
        "wall_time_s": round(time.time() - started, 3),
        **extra,
    }
    _write_outputs(config, columns, rows, meta)
    return code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccrenorm",
        description="Renormalization laboratory for critical circle maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "rho": "rotation number and continued fraction of one family member",
        "superstable": "superstable parameter table for a target or CF period",
        "window": "CF-prefix parameter windows / mode-locking plateaus",
        "tower": "renormalization tower diagnostics for one map",
        "delta": "parameter-scaling universality report",
        "converge": "tower-distance convergence between epsilon members",
        "rigidity": "adjacent-atom ratio rigidity test between epsilon members",
        "probe": "hyperbolicity probe over an alpha grid",
    }
    for name, blurb in descriptions.items():
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--alpha", type=str, default=None,
                         help="critical exponent (> 1), default 3")
        cmd.add_argument("--epsilon", type=str, default=None,
                         help="family shape parameter, |epsilon| < 1, default 0")
        cmd.add_argument("--theta", type=str, default=None,
                         help="explicit parameter value")
        cmd.add_argument("--cf", type=str, default=None,
                         help="comma-separated CF entries, e.g. '1,1,1'")
        cmd.add_argument("--target", type=str, default=None,
                         help="rational target P/Q")
        cmd.add_argument("--depth", type=int, default=None,
                         help="levels to compute (command-specific default)")
        cmd.add_argument("--bits", type=int, default=None, choices=ALLOWED_BITS,
                         help="working precision, default 128")
        cmd.add_argument("--tol", type=str, default=None,
                         help="override the command's derived tolerance")
        cmd.add_argument("--workers", type=int, default=None,
                         help="parallel workers for grid commands, default 1")
        cmd.add_argument("--out", type=str, default=None,
                         help="output stem; writes <out>.csv and <out>.meta.json")
        cmd.add_argument("--config", type=str, default=None,
                         help="JSON config file (flags override its fields)")
        if name == "probe":
            cmd.add_argument("--alpha-grid", type=str, default=None,
                             help="comma-separated alpha values, "
                                  "default " + ",".join(DEFAULT_ALPHA_GRID))
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_fields: dict = {}
    if args.config is not None:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]  # accept a meta.json sidecar
        file_fields = loaded
    config = RunConfig(command=args.command)
    known = set(config.__dataclass_fields__)
    for key, value in file_fields.items():
        if key == "command":
            continue
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}")
        setattr(config, key, tuple(value) if isinstance(value, list) else value)
    for key in ("bits", "alpha", "epsilon", "theta", "cf", "target", "depth",
                "tol", "workers", "out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    grid = getattr(args, "alpha_grid", None)
    if grid is not None:
        config.alpha_grid = tuple(t.strip() for t in grid.split(",") if t.strip())
    if args.command == "probe" and config.alpha_grid is None and \
            getattr(args, "alpha", None) is None and "alpha" not in file_fields:
        config.alpha_grid = DEFAULT_ALPHA_GRID
    return config


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = validate(_merge_config(args))
    except (ConfigError, DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    code = run(config)
    if code != 0:
        print(f"run ended early; partial results in {config.out}.csv", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
