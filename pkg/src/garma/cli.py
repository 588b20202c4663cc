"""Command-line interface.

Subcommands mirror the library: acf, var, density, cdf, sample, intensity,
spectrum-test.  Series move through CSV (one series per row, no header, the
case-sensitive token NA for missing values, 17 significant digits) or
through JSON, which also carries any warnings raised during the run.

Exit codes: 0 success, 1 usage error, 2 computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__
from .arma import ArmaSpec, acf_vector, variance_matrix
from .conditioning import build_pattern
from .distribution import dgarma, pgarma, rgarma
from .errors import GarmaError, GarmaWarning
from .mvn import DEFAULT_CDF_SEED
from .spectral import ALTERNATIVE_TEXT, intensity, spectrum_test
from .svgplots import emit_plot

__all__ = ["main"]


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt_value(v) -> str:
    if np.isnan(v):
        return "NA"
    return format(float(v), ".17g")


def _write_csv(rows, stream):
    for row in np.atleast_2d(np.asarray(rows, dtype=float)):
        stream.write(",".join(_fmt_value(v) for v in row))
        stream.write("\n")


def _parse_float_token(token, where):
    token = token.strip()
    if token == "NA":
        return float("nan")
    try:
        value = float(token)
    except ValueError:
        raise UsageError(f"{where}: cannot parse {token!r} as a number") from None
    if np.isnan(value):
        raise UsageError(f"{where}: use the token NA for missing values, not {token!r}")
    return value


def _read_csv(path, where):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise UsageError(f"{where}: cannot read {path}: {exc}") from None
    if not lines:
        raise UsageError(f"{where}: {path} contains no data rows")
    rows = [
        [_parse_float_token(tok, where) for tok in line.split(",")]
        for line in lines
    ]
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise UsageError(f"{where}: rows in {path} have unequal lengths {sorted(lengths)}")
    return np.asarray(rows, dtype=float)


def _parse_list(text, flag):
    return [ _parse_float_token(tok, flag) for tok in text.split(",") if tok.strip() != "" ]


def _parse_condvals(text, flag="--condvals"):
    if text.startswith("@"):
        rows = _read_csv(text[1:], flag)
        if rows.shape[0] != 1:
            raise UsageError(f"{flag}: {text[1:]} must contain exactly one row")
        return rows[0]
    return np.asarray(_parse_list(text, flag), dtype=float)


def _parse_cond(text, m):
    """--cond entries are 1-based indices, either bare (condition on the value
    already in each data row) or index:value (pin that value into every row).

    Returns (flags, overrides) where overrides maps column -> value."""
    flags = np.zeros(m, dtype=bool)
    overrides = {}
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            idx_text, value_text = token.split(":", 1)
        else:
            idx_text, value_text = token, None
        try:
            idx = int(idx_text)
        except ValueError:
            raise UsageError(f"--cond: bad index {idx_text!r}") from None
        if not 1 <= idx <= m:
            raise UsageError(f"--cond: index {idx} outside 1..{m}")
        flags[idx - 1] = True
        if value_text is not None:
            value = _parse_float_token(value_text, "--cond")
            if np.isnan(value):
                raise UsageError("--cond: conditioning values must be numbers, not NA")
            overrides[idx - 1] = value
    return flags, overrides


def _spec_from_args(args) -> ArmaSpec:
    ar = _parse_list(args.ar, "--ar") if args.ar else ()
    ma = _parse_list(args.ma, "--ma") if args.ma else ()
    if any(np.isnan(v) for v in ar) or any(np.isnan(v) for v in ma):
        raise UsageError("--ar/--ma coefficients must be numbers, not NA")
    return ArmaSpec(ar=ar, ma=ma, mean=args.mean, error_var=args.errorvar)


def _effective_seed(args, needed_reason=None):
    if args.seed is not None:
        return args.seed
    if args.nondeterministic:
        return None
    if needed_reason:
        raise UsageError(
            f"--seed is required {needed_reason} "
            "(pass --nondeterministic to opt out of reproducibility)"
        )
    return None


def _add_model_flags(sub):
    sub.add_argument("--ar", default="", metavar="C1,C2,...",
                     help="autoregressive coefficients")
    sub.add_argument("--ma", default="", metavar="C1,C2,...",
                     help="moving-average coefficients")
    sub.add_argument("--mean", type=float, default=0.0, help="stationary mean")
    sub.add_argument("--errorvar", type=float, default=1.0,
                     help="innovation variance (> 0)")


def _add_io_flags(sub, plot=False):
    sub.add_argument("--output", metavar="PATH", help="write results here instead of stdout")
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="output format (default csv)")
    if plot:
        sub.add_argument("--plot", metavar="PATH.svg", help="also write an SVG plot")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="garma",
                     description="Stationary Gaussian ARMA distributions and spectral tests")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")

    acf = subs.add_parser("acf", help="autocovariance or autocorrelation at lags 0..n-1")
    acf.add_argument("--n", type=int, required=True, help="number of lags (>= 1)")
    acf.add_argument("--corr", action="store_true", help="return correlations")
    _add_model_flags(acf)
    _add_io_flags(acf)

    var = subs.add_parser("var", help="(conditional) variance or correlation matrix")
    var.add_argument("--n", type=int, required=True, help="number of observations (>= 1)")
    var.add_argument("--corr", action="store_true", help="return correlations")
    var.add_argument("--condvals", metavar="V1,NA,V3,... or @FILE.csv",
                     help="conditioning pattern: numbers condition, NA stays free")
    _add_model_flags(var)
    _add_io_flags(var)

    density = subs.add_parser("density", help="density of each series row")
    density.add_argument("--input", required=True, metavar="FILE.csv",
                         help="series rows; NA marginalises a position")
    density.add_argument("--cond", metavar="I or I:V,...",
                         help="1-based positions to condition on (optionally pinned to V)")
    density.add_argument("--log", action="store_true", help="return log-densities")
    _add_model_flags(density)
    _add_io_flags(density)

    cdf = subs.add_parser("cdf", help="P(free positions <= row values)")
    cdf.add_argument("--input", required=True, metavar="FILE.csv")
    cdf.add_argument("--cond", metavar="I or I:V,...",
                     help="1-based positions to condition on (optionally pinned to V)")
    cdf.add_argument("--log", action="store_true", help="return log-probabilities")
    cdf.add_argument("--tol", type=float, default=1e-5,
                     help="standard-error target for the monte carlo CDF (default 1e-5)")
    cdf.add_argument("--seed", type=int, help="seed (required when 3+ free positions remain)")
    cdf.add_argument("--nondeterministic", action="store_true",
                     help="allow running without --seed")
    _add_model_flags(cdf)
    _add_io_flags(cdf)

    smp = subs.add_parser("sample", help="draw series rows from the model")
    smp.add_argument("--n", type=int, required=True, help="number of series to draw")
    smp.add_argument("--m", type=int, required=True, help="length of each series")
    smp.add_argument("--condvals", metavar="V1,NA,V3,... or @FILE.csv",
                     help="pin positions with numbers; NA positions are drawn")
    smp.add_argument("--seed", type=int, help="seed (required unless --nondeterministic)")
    smp.add_argument("--nondeterministic", action="store_true",
                     help="allow running without --seed")
    _add_model_flags(smp)
    _add_io_flags(smp, plot=True)

    inten = subs.add_parser("intensity", help="Fourier intensity of each series row")
    inten.add_argument("--input", required=True, metavar="FILE.csv")
    inten.add_argument("--centred", action=argparse.BooleanOptionalAction, default=True,
                       help="subtract the mean first (default on)")
    inten.add_argument("--scaled", action=argparse.BooleanOptionalAction, default=True,
                       help="scale to unit average square (default on)")
    inten.add_argument("--nyquist", action=argparse.BooleanOptionalAction, default=True,
                       help="truncate real input beyond the folding frequency (default on)")
    _add_io_flags(inten, plot=True)

    stest = subs.add_parser("spectrum-test",
                            help="permutation test for a periodic signal")
    stest.add_argument("--input", required=True, metavar="FILE.csv",
                       help="a single series row")
    stest.add_argument("--sims", type=int, default=1_000_000,
                       help="number of permutations (default 1000000)")
    stest.add_argument("--seed", type=int, help="seed (required unless --nondeterministic)")
    stest.add_argument("--nondeterministic", action="store_true",
                       help="allow running without --seed")
    stest.add_argument("--workers", type=int, default=1,
                       help="worker threads; does not change the result")
    stest.add_argument("--progress", action=argparse.BooleanOptionalAction, default=True,
                       help="progress line on stderr (default on)")
    _add_io_flags(stest, plot=True)

    return parser


def _cmd_acf(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    spec = _spec_from_args(args)
    acv = acf_vector(args.n, spec, corr=args.corr)
    return {
        "csv": acv.values[None, :],
        "json": {
            "labels": acv.labels,
            "values": list(acv.values),
            "correlation": bool(acv.is_correlation),
        },
        "plot": None,
    }


def _cmd_var(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    spec = _spec_from_args(args)
    cond = None
    if args.condvals:
        vals = _parse_condvals(args.condvals)
        if len(vals) != args.n:
            raise UsageError(f"--condvals has length {len(vals)}, --n is {args.n}")
        cond = build_pattern(condvals=vals)
    vm = variance_matrix(args.n, spec, cond=cond, corr=args.corr)
    return {
        "csv": vm.entries,
        "json": {
            "index_labels": list(vm.index_labels),
            "entries": [list(row) for row in vm.entries],
            "correlation": bool(args.corr),
        },
        "plot": None,
    }


def _apply_cond(args, rows):
    if not args.cond:
        return rows, None
    flags, overrides = _parse_cond(args.cond, rows.shape[1])
    if overrides:
        rows = rows.copy()
        for col, value in overrides.items():
            rows[:, col] = value
    return rows, flags


def _cmd_density(args):
    spec = _spec_from_args(args)
    rows = _read_csv(args.input, "--input")
    rows, flags = _apply_cond(args, rows)
    values = dgarma(rows, spec, cond=flags, log=args.log)
    return {
        "csv": np.asarray(values)[None, :],
        "json": {
            "labels": [f"Series[{i + 1}]" for i in range(len(values))],
            "values": list(np.asarray(values)),
            "log": bool(args.log),
        },
        "plot": None,
    }


def _cmd_cdf(args):
    spec = _spec_from_args(args)
    if args.tol <= 0:
        raise UsageError("--tol must be > 0")
    rows = _read_csv(args.input, "--input")
    rows, flags = _apply_cond(args, rows)
    missing = np.isnan(rows[0])
    flag_arr = flags if flags is not None else np.zeros(rows.shape[1], dtype=bool)
    free_count = int((~missing & ~flag_arr).sum())
    if free_count >= 3:
        seed = _effective_seed(args, "for cdf with 3 or more free positions")
    else:
        seed = args.seed if args.seed is not None else DEFAULT_CDF_SEED
    values = pgarma(rows, spec, cond=flags, log=args.log, tol=args.tol, seed=seed)
    return {
        "csv": np.asarray(values)[None, :],
        "json": {
            "labels": [f"Series[{i + 1}]" for i in range(len(values))],
            "values": list(np.asarray(values)),
            "log": bool(args.log),
            "tol": args.tol,
            "seed": seed,
        },
        "plot": None,
    }


def _cmd_sample(args):
    spec = _spec_from_args(args)
    if args.n < 1 or args.m < 1:
        raise UsageError("--n and --m must be >= 1")
    condvals = _parse_condvals(args.condvals) if args.condvals else None
    if condvals is not None and len(condvals) != args.m:
        raise UsageError(f"--condvals has length {len(condvals)}, --m is {args.m}")
    seed = _effective_seed(args, "for sample")
    draws = rgarma(args.n, args.m, spec, condvals=condvals, seed=seed)
    return {
        "csv": draws,
        "json": {"rows": [list(row) for row in draws], "seed": seed},
        "plot": draws,
    }


def _cmd_intensity(args):
    rows = _read_csv(args.input, "--input")
    if np.isnan(rows).any():
        raise UsageError("--input: intensity input must not contain NA values")
    iv = intensity(rows if rows.shape[0] > 1 else rows[0],
                   centred=args.centred, scaled=args.scaled, nyquist=args.nyquist)
    return {
        "csv": np.atleast_2d(iv.values),
        "json": {
            "labels": iv.labels,
            "frequencies": list(iv.frequencies),
            "values": [list(row) for row in np.atleast_2d(iv.values)],
            "centred": iv.centred,
            "scaled": iv.scaled,
            "nyquist_truncated": iv.nyquist_truncated,
            "dof": iv.dof,
        },
        "plot": iv,
    }


def _cmd_spectrum_test(args):
    rows = _read_csv(args.input, "--input")
    if rows.shape[0] != 1:
        raise UsageError("--input: spectrum-test expects exactly one series row")
    if np.isnan(rows).any():
        raise UsageError("--input: spectrum-test input must not contain NA values")
    if args.sims < 1:
        raise UsageError("--sims must be >= 1")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    seed = _effective_seed(args, "for spectrum-test")
    result = spectrum_test(rows[0], sims=args.sims, seed=seed,
                           progress=args.progress, workers=args.workers)
    return {
        "csv": np.asarray([[result.statistic, result.p_value]]),
        "json": {
            "statistic": result.statistic,
            "p_value": result.p_value,
            "n": result.series_len,
            "sims": result.sims,
            "seed": result.seed,
            "alternative": ALTERNATIVE_TEXT,
        },
        "plot": result,
    }


_HANDLERS = {
    "acf": _cmd_acf,
    "var": _cmd_var,
    "density": _cmd_density,
    "cdf": _cmd_cdf,
    "sample": _cmd_sample,
    "intensity": _cmd_intensity,
    "spectrum-test": _cmd_spectrum_test,
}


def _jsonable(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if np.isnan(v) or np.isinf(v) else v
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


def _emit(payload, args, caught):
    stream = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        if args.format == "json":
            doc = _jsonable(payload["json"])
            doc["warnings"] = [str(w.message) for w in caught]
            json.dump(doc, stream, indent=2)
            stream.write("\n")
        else:
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            _write_csv(payload["csv"], stream)
    finally:
        if args.output:
            stream.close()
    plot_path = getattr(args, "plot", None)
    if plot_path:
        if payload["plot"] is None:
            raise UsageError(f"--plot is not supported for {args.command}")
        emit_plot(payload["plot"], plot_path)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required (try --help)")
        handler = _HANDLERS[args.command]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GarmaWarning)
            payload = handler(args)
        _emit(payload, args, caught)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except GarmaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # defensive: unexpected failures are still reported
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
