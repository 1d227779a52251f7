"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 numeric failure,
3 I/O error.  Every flag may also be given in a ``--config`` file of flat
``key = value`` lines (keys are flag names without the leading dashes);
command-line flags win over the file, the file wins over defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone

import numpy as np

from . import __version__, ar1, erw, mc
from .errors import DomainError, NumericError, ReplicateError
from .erw import fmt
from .normal import mills_bounds, std_normal_isf, std_normal_tail

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument value parsers ----------------------------------------------------

def parse_grid(text: str) -> tuple[float, ...]:
    """``lo:hi:step``, inclusive of ``hi`` when ``step`` divides the range within 1e-9."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise DomainError(f"grid must be lo:hi:step, got {text!r}") from None
    if not step > 0 or hi < lo:
        raise DomainError("grid needs step > 0 and hi >= lo")
    m = (hi - lo) / step
    count = round(m) if abs(m - round(m)) <= 1e-9 else math.floor(m)
    return tuple(round(lo + i * step, 12) for i in range(count + 1))


def parse_steps(text: str) -> erw.StepDistribution:
    kind, _, rest = text.partition(":")
    if kind == "constant":
        return erw.StepDistribution.constant_one()
    if kind == "uniform":
        return erw.StepDistribution.uniform_on()
    if kind == "two-point":
        try:
            z1, z2, w = (float(v) for v in rest.split(","))
        except ValueError:
            raise DomainError("two-point steps are given as two-point:z1,z2,w") from None
        return erw.StepDistribution.two_point(z1, z2, w)
    raise DomainError(f"unknown step distribution {text!r}")


def parse_noise(text: str) -> ar1.NoiseDistribution:
    kind, _, rest = text.partition(":")
    try:
        scale = float(rest)
    except ValueError:
        raise DomainError(f"noise is two-point:a or uniform:H, got {text!r}") from None
    if kind == "two-point":
        return ar1.NoiseDistribution.two_point(scale)
    if kind == "uniform":
        return ar1.NoiseDistribution.uniform(scale)
    raise DomainError(f"unknown noise {text!r}")


def parse_seed(text) -> int:
    seed = int(text)
    if not 0 <= seed < 1 << 64:
        raise DomainError("seed must be an unsigned 64-bit integer")
    return seed


def _positive_int(text) -> int:
    value = int(text)
    if value < 1:
        raise DomainError(f"expected a positive integer, got {text}")
    return value


# -- parser construction ---------------------------------------------------------

# name -> (converter, default); None default marks a required option
_ERW_OPTS = {
    "p": (float, None), "n": (_positive_int, None), "q": (float, 0.5),
    "steps": (parse_steps, "constant"), "seed": (parse_seed, None),
    "reps": (_positive_int, None), "workers": (_positive_int, None),
    "normalizer": (str, "det"),
}
_AR1_OPTS = {
    "theta": (float, None), "noise": (parse_noise, None), "n": (_positive_int, None),
    "seed": (parse_seed, None), "reps": (_positive_int, None), "workers": (_positive_int, None),
}
_EXPERIMENT = {"out": (str, None), "manifest": (str, None), "no-manifest": (bool, False)}

COMMANDS = {
    ("coeffs",): {"p": (float, None), "n": (_positive_int, None), "out": (str, None)},
    ("erw", "tail-ratio"): {**_ERW_OPTS, "grid": (parse_grid, None), "strict": (bool, False), **_EXPERIMENT},
    ("erw", "ks"): {**_ERW_OPTS, **_EXPERIMENT},
    ("erw", "simulate"): {**_ERW_OPTS, "reps": (_positive_int, 1), "out": (str, None)},
    ("ar1", "tail-ratio"): {**_AR1_OPTS, "grid": (parse_grid, None), "stat": (str, "studentized"),
                            "strict": (bool, False), **_EXPERIMENT},
    ("ar1", "coverage"): {**_AR1_OPTS, "kappa": (float, None), "regime": (str, "quantile"), **_EXPERIMENT},
    ("ar1", "fit"): {"theta": (float, None), "noise": (parse_noise, None), "n": (_positive_int, None),
                     "seed": (parse_seed, None), "kappa": (float, 0.05), "regime": (str, "quantile"),
                     "out": (str, None), "path-out": (str, None)},
    ("normal", "check"): {"grid": (parse_grid, "0:10:0.01")},
}


def _add_options(parser: argparse.ArgumentParser, spec: dict) -> None:
    for name, (conv, _) in spec.items():
        if conv is bool:
            parser.add_argument(f"--{name}", action="store_const", const=True, default=None)
        else:
            parser.add_argument(f"--{name}", default=None)
    parser.add_argument("--config", default=None, help="file of key = value lines")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdlab", description="Moderate-deviation Monte Carlo laboratory")
    parser.add_argument("--version", action="version", version=f"mdlab {__version__}")
    top = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    groups: dict[str, argparse._SubParsersAction] = {}
    for path, spec in COMMANDS.items():
        if len(path) == 1:
            _add_options(top.add_parser(path[0]), spec)
            continue
        if path[0] not in groups:
            groups[path[0]] = top.add_parser(path[0]).add_subparsers(
                dest="sub", required=True, parser_class=_Parser)
        _add_options(groups[path[0]].add_parser(path[1]), spec)
    return parser


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DomainError(f"{path}:{lineno}: expected key = value")
            values[key.strip()] = value.strip()
    return values


def resolve_options(args: argparse.Namespace, spec: dict) -> dict:
    """Apply flag > config file > default precedence and convert every value."""
    file_values = read_config_file(args.config) if args.config else {}
    unknown = set(file_values) - set(spec)
    if unknown:
        raise DomainError(f"unknown config keys: {', '.join(sorted(unknown))}")
    opts = {}
    for name, (conv, default) in spec.items():
        raw = getattr(args, name.replace("-", "_"))
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            if name == "workers":
                opts[name] = mc.default_workers()
                continue
            if default is None and name not in ("out", "manifest", "path-out"):
                raise DomainError(f"missing required option --{name}")
            raw = default
        if conv is bool:
            opts[name] = raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes")
        elif raw is None:
            opts[name] = None
        else:
            try:
                opts[name] = conv(raw)
            except ValueError as exc:
                raise DomainError(f"--{name}: {exc}") from None
    return opts


# -- output helpers -------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write_manifest(opts: dict, argv: list[str], config: mc.McConfig, started: float,
                    wall: float) -> None:
    path = opts.get("manifest")
    if path is None and opts.get("out") and not opts.get("no-manifest"):
        path = opts["out"] + ".manifest.json"
    if path is None or opts.get("no-manifest"):
        return
    manifest = {
        "argv": argv,
        "config": config.describe(),
        "code_version": __version__,
        "numpy_version": np.__version__,
        "started_at": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_time_s": wall,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_json(manifest))


def _erw_params(opts: dict) -> erw.ErwParams:
    return erw.ErwParams(p=opts["p"], n=opts["n"], steps=opts["steps"], q=opts["q"])


def _ar1_params(opts: dict) -> ar1.Ar1Params:
    return ar1.Ar1Params(theta=opts["theta"], noise=opts["noise"], n=opts["n"])


# -- subcommands ------------------------------------------------------------------

def cmd_coeffs(opts: dict, argv) -> int:
    _emit(erw.coefficients(opts["p"], opts["n"]).to_csv(), opts["out"])
    return EXIT_OK


def _tail_ratio(config: mc.McConfig, opts: dict, argv) -> int:
    started = time.time()
    estimates = mc.tail_ratio_sweep(config)
    _emit(mc.tail_ratio_csv(estimates), opts["out"])
    _write_manifest(opts, argv, config, started, time.time() - started)
    flagged = [e.x for e in estimates if e.flagged]
    if flagged:
        print(f"warning: normal tail underflow at x = {sorted(set(flagged))}", file=sys.stderr)
        if opts["strict"]:
            return EXIT_NUMERIC
    return EXIT_OK


def cmd_erw_tail_ratio(opts: dict, argv) -> int:
    config = mc.McConfig(model=_erw_params(opts), replications=opts["reps"],
                         master_seed=opts["seed"], workers=opts["workers"], grid=opts["grid"],
                         statistic_mode=opts["normalizer"])
    return _tail_ratio(config, opts, argv)


def cmd_ar1_tail_ratio(opts: dict, argv) -> int:
    config = mc.McConfig(model=_ar1_params(opts), replications=opts["reps"],
                         master_seed=opts["seed"], workers=opts["workers"], grid=opts["grid"],
                         statistic_mode=opts["stat"])
    return _tail_ratio(config, opts, argv)


def cmd_erw_ks(opts: dict, argv) -> int:
    config = mc.McConfig(model=_erw_params(opts), replications=opts["reps"],
                         master_seed=opts["seed"], workers=opts["workers"],
                         statistic_mode=opts["normalizer"])
    started = time.time()
    est = mc.berry_esseen_distance(config)
    _emit(_json(asdict(est)), opts["out"])
    _write_manifest(opts, argv, config, started, time.time() - started)
    return EXIT_OK


def cmd_erw_simulate(opts: dict, argv) -> int:
    params = _erw_params(opts)
    if not params.p > 0:
        raise DomainError("simulation summaries need p > 0")
    table = erw.coefficients(params.p, params.n)
    lines = ["rep,t_n,s_n,m_n,qv,det_normalizer,self_normalizer,stat_det,stat_self"]
    for i in range(opts["reps"]):
        path = erw.simulate_path_fast(params, mc.replicate_stream(opts["seed"], i))
        st = erw.martingale_stats(path, table)
        row = [str(i), str(int(path.sign_sums[-1]))]
        row += [fmt(v) for v in (path.weighted_sums[-1], st.m_n, st.qv, st.det_normalizer,
                                 st.self_normalizer,
                                 erw.normalized_statistic(st, erw.DETERMINISTIC),
                                 erw.normalized_statistic(st, erw.SELF_NORMALIZED))]
        lines.append(",".join(row))
    _emit("\n".join(lines) + "\n", opts["out"])
    return EXIT_OK


def cmd_ar1_coverage(opts: dict, argv) -> int:
    if opts["regime"] not in ar1.REGIMES:
        raise DomainError(f"unknown regime {opts['regime']!r}")
    config = mc.McConfig(model=_ar1_params(opts), replications=opts["reps"],
                         master_seed=opts["seed"], workers=opts["workers"])
    started = time.time()
    est = mc.coverage_experiment(config, opts["kappa"], opts["regime"])
    _emit(_json(asdict(est)), opts["out"])
    _write_manifest(opts, argv, config, started, time.time() - started)
    return EXIT_OK


def cmd_ar1_fit(opts: dict, argv) -> int:
    params = _ar1_params(opts)
    path = ar1.simulate(params, mc.replicate_stream(opts["seed"], 0))
    summary = ar1.fit_summary(path, params.theta, params.noise.sigma, opts["kappa"], opts["regime"])
    _emit(ar1.fit_summary_json(summary), opts["out"])
    if opts["path-out"]:
        _emit(path.to_csv(), opts["path-out"])
    return EXIT_OK


def cmd_normal_check(opts: dict, argv) -> int:
    failures = 0
    worst_rt = 0.0
    for x in opts["grid"]:
        tail = std_normal_tail(x)
        bounds = mills_bounds(x)
        if not bounds.contains(tail):
            failures += 1
            print(f"mills violation at x={fmt(x)}: {fmt(bounds.lower)} <= {fmt(tail)} <= {fmt(bounds.upper)}")
        if 1e-12 <= tail <= 0.5:
            rt = abs(std_normal_tail(std_normal_isf(tail)) - tail) / tail
            worst_rt = max(worst_rt, rt)
            if rt > 1e-9:
                failures += 1
                print(f"round-trip violation at x={fmt(x)}: relative error {rt:.3e}")
    print(f"grid points: {len(opts['grid'])}")
    print(f"mills sandwich and quantile round-trip: {'ok' if failures == 0 else 'FAILED'}")
    print(f"worst round-trip relative error: {worst_rt:.3e}")
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


HANDLERS = {
    ("coeffs",): cmd_coeffs,
    ("erw", "tail-ratio"): cmd_erw_tail_ratio,
    ("erw", "ks"): cmd_erw_ks,
    ("erw", "simulate"): cmd_erw_simulate,
    ("ar1", "tail-ratio"): cmd_ar1_tail_ratio,
    ("ar1", "coverage"): cmd_ar1_coverage,
    ("ar1", "fit"): cmd_ar1_fit,
    ("normal", "check"): cmd_normal_check,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        key = (args.cmd,) if getattr(args, "sub", None) is None else (args.cmd, args.sub)
        opts = resolve_options(args, COMMANDS[key])
        return HANDLERS[key](opts, argv)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ReplicateError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
