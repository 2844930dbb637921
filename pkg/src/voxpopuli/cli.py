"""Command-line front end.

Subcommands: ``analyze``, ``fit``, ``plotdata``, ``simulate``, ``combine`` and
``percentiles``.  Exit status is 0 on success, 2 on input or parameter
errors, and 3 when ``--strict`` is given and some fit did not converge.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from typing import Optional, Sequence

from . import __version__
from . import distributions as dist
from . import report
from .combination import DEFAULT_TRIMS, table_mean
from .dataset import (
    DEFAULT_BIN_WIDTH,
    EntrySet,
    HistogramSpec,
    histogram,
    ingest,
    is_percentile_table,
    percentile_table,
    read_percentile_table,
    write_entries,
    write_percentile_table,
)
from .distributions import AstParams, ModelKind, NormalParams, TwoPieceNormalParams
from .errors import VoxPopuliError
from .estimation import (
    FitOptions,
    fit_mle,
    fit_normal_moments,
    fit_normal_percentiles,
    model_select,
)

log = logging.getLogger("voxpopuli")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3

SEED_ENV = "VOXPOPULI_SEED"
MODEL_CHOICES = [k.value for k in ModelKind] + ["ladder"]
# classical normal fits accepted by plotdata alongside the ML kinds
CLASSICAL = {"galton": fit_normal_percentiles, "pearson": fit_normal_moments}


class UsageError(VoxPopuliError):
    pass


def _trims(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad trim list {text!r}") from None


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _options(args) -> FitOptions:
    return FitOptions(restarts=args.restarts, max_iterations=args.max_iterations, seed=_resolve_seed(args.seed))


def _load(args) -> EntrySet:
    units = None if args.units is None else args.units
    if args.input == "-":
        return ingest(io.StringIO(sys.stdin.read()), units=units, outcome=args.outcome)
    return ingest(args.input, units=units, outcome=args.outcome)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _echo(args, *names: str) -> dict:
    return {name: getattr(args, name) for name in names}


def _strict_status(strict: bool, fits) -> int:
    failed = [f.kind.value for f in fits if not f.converged]
    if failed and strict:
        log.error("non-converged fit(s): %s", ", ".join(failed))
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_analyze(args) -> int:
    data = _load(args)
    opts = _options(args)
    rep, sel = report.analysis_report(
        data,
        opts,
        args.trims,
        {
            "units": args.units,
            "outcome": args.outcome,
            "trims": list(args.trims),
            "restarts": opts.restarts,
            "max_iterations": opts.max_iterations,
        },
    )
    _emit(report.dumps(rep) + "\n", args.out)
    return _strict_status(args.strict, sel.ranked)


def cmd_fit(args) -> int:
    data = _load(args)
    opts = _options(args)
    if args.model == "ladder":
        sel = model_select(data, opts)
        fits = list(sel.ranked)
        body = report.selection_dict(sel)
    else:
        fits = [fit_mle(ModelKind(args.model), data, opts)]
        body = {"models": [report.fit_dict(fits[0], 1)]}
    if args.format == "csv":
        rows = body["models"] + [dict(r, rank="") for r in body.get("classical_fits", {}).values()]
        text = _fits_csv(rows)
    else:
        doc = {
            "schema": report.FIT_SCHEMA,
            "tool": {"name": "voxpopuli", "version": __version__},
            "seed": opts.seed,
            "source": report.source_dict(data),
            **body,
        }
        text = report.dumps(doc) + "\n"
    _emit(text, args.out)
    return _strict_status(args.strict, fits)


_PARAM_COLUMNS = ("alpha", "nu1", "nu2", "mu", "sigma", "sigma1", "sigma2")


def _fits_csv(rows: list[dict]) -> str:
    head = ["rank", "kind", "method", *_PARAM_COLUMNS, "log_likelihood", "k", "aic", "converged", "ag_skewness"]
    lines = [",".join(head)]
    for r in rows:
        vals = []
        for col in head:
            v = r["params"].get(col, "") if col in _PARAM_COLUMNS else r.get(col, "")
            vals.append(report._fmt_float(v) if isinstance(v, float) else str(v).lower() if isinstance(v, bool) else str(v))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def cmd_plotdata(args) -> int:
    data = _load(args)
    opts = _options(args)
    kinds = [k.strip() for k in args.fit.split(",") if k.strip()]
    for k in kinds:
        if k not in CLASSICAL and k not in MODEL_CHOICES[:-1]:
            raise UsageError(f"unknown fit kind {k!r}; choose from {', '.join(list(CLASSICAL) + MODEL_CHOICES[:-1])}")
    fits = {}
    for k in kinds:
        fits[k] = CLASSICAL[k](data) if k in CLASSICAL else fit_mle(ModelKind(k), data, opts)
    meta = {"tool": f"voxpopuli {__version__}", "source": data.source, "n": data.n, "seed": opts.seed}
    spec = HistogramSpec(args.bin_width)
    written = []

    def put(suffix: str, text: str) -> None:
        path = f"{args.out}_{suffix}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)

    put("histogram", report.histogram_csv(histogram(data, spec), meta))
    if data.n >= 20:
        put("ogive", report.ogive_csv(data, meta))
    if fits:
        grid = report.curve_grid([f.params for f in fits.values()], data)
        for k, f in fits.items():
            fmeta = dict(meta, model=k, method=f.method, params=report.dumps(report.params_dict(f.params), indent=0).replace("\n", ""))
            put(f"pdf_{k}", report.curve_csv(f.params, grid, fmeta))
    for path in written:
        log.info("wrote %s", path)
    return _strict_status(args.strict, fits.values())


def _sim_params(args) -> dist.Params:
    kind = ModelKind(args.model)
    need = {
        ModelKind.NORMAL: ("mu", "sigma"),
        ModelKind.STUDENT_T: ("nu", "mu", "sigma"),
        ModelKind.TWO_PIECE_NORMAL: ("mu", "sigma1", "sigma2"),
        ModelKind.TWO_PIECE_T: ("alpha", "nu", "mu", "sigma"),
        ModelKind.AST: ("alpha", "nu1", "nu2", "mu", "sigma"),
    }[kind]
    missing = [f"--{n}" for n in need if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--model {kind.value} needs {', '.join(missing)}")
    a = args
    if kind is ModelKind.NORMAL:
        return NormalParams(a.mu, a.sigma)
    if kind is ModelKind.STUDENT_T:
        return AstParams.student_t(a.nu, a.mu, a.sigma)
    if kind is ModelKind.TWO_PIECE_NORMAL:
        return TwoPieceNormalParams(a.mu, a.sigma1, a.sigma2)
    if kind is ModelKind.TWO_PIECE_T:
        return AstParams.two_piece_t(a.alpha, a.nu, a.mu, a.sigma)
    return AstParams(a.alpha, a.nu1, a.nu2, a.mu, a.sigma)


def cmd_simulate(args) -> int:
    params = _sim_params(args)
    seed = _resolve_seed(args.seed)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    data = EntrySet(dist.sample(params, args.n, seed), outcome=args.outcome, source="simulate")
    comments = [
        f"tool: voxpopuli {__version__}",
        f"model: {args.model}",
        f"params: {report.dumps(report.params_dict(params), indent=0)}".replace("\n", ""),
        f"seed: {seed}",
    ]
    buf = io.StringIO()
    write_entries(data, buf, comments)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_combine(args) -> int:
    if args.input != "-" and is_percentile_table(args.input):
        table = read_percentile_table(args.input)
        value = table_mean(table)
        doc = {
            "schema": report.COMBINATION_SCHEMA,
            "tool": {"name": "voxpopuli", "version": __version__},
            "source": {"path": args.input, "rows": len(table), "outcome": args.outcome},
            "percentile_table_mean": value,
            "errors": {} if args.outcome is None else {"percentile_table_mean": value - args.outcome},
        }
    else:
        data = _load(args)
        doc = report.combination_report(data, args.trims, args.outcome)
    _emit(report.dumps(doc) + "\n", args.out)
    return EXIT_OK


def cmd_percentiles(args) -> int:
    data = _load(args)
    buf = io.StringIO()
    write_percentile_table(percentile_table(data), buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxpopuli", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fitting: bool = True) -> None:
        p.add_argument("input", help="entry CSV ('-' for stdin)")
        p.add_argument("--outcome", type=float, help="known outcome in pounds")
        p.add_argument("--units", choices=["lb", "cwt"], help="force the entry file layout")
        p.add_argument("--out", help="output path (default stdout)")
        if fitting:
            p.add_argument("--seed", type=int, help=f"start-point seed (default ${SEED_ENV} or 0)")
            p.add_argument("--restarts", type=int, default=FitOptions.restarts)
            p.add_argument("--max-iterations", type=int, default=FitOptions.max_iterations)
            p.add_argument("--strict", action="store_true", help="exit 3 if any fit fails to converge")

    p = sub.add_parser("analyze", help="full JSON analysis report")
    common(p)
    p.add_argument("--trims", type=_trims, default=DEFAULT_TRIMS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="fit one model or the whole ladder")
    common(p)
    p.add_argument("--model", choices=MODEL_CHOICES, default="ladder")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("plotdata", help="histogram, ogive and fitted-density CSV series")
    common(p)
    p.set_defaults(out="voxpopuli")
    p.add_argument("--fit", default="galton,pearson,ast", help="comma list of kinds (ML kinds, galton, pearson)")
    p.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH)
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("simulate", help="write a synthetic entry file")
    p.add_argument("--model", choices=MODEL_CHOICES[:-1], required=True)
    for name in ("alpha", "nu", "nu1", "nu2", "mu", "sigma", "sigma1", "sigma2"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--outcome", type=float, help="outcome comment to embed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("combine", help="combined point forecasts and their errors")
    common(p, fitting=False)
    p.add_argument("--trims", type=_trims, default=DEFAULT_TRIMS)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("percentiles", help="5%%-step percentile table CSV")
    common(p, fitting=False)
    p.set_defaults(func=cmd_percentiles)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (VoxPopuliError, OSError) as exc:
        print(f"voxpopuli: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
