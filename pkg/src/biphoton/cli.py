"""Command-line front end: simulate / correlate / tomo / metrics / pipeline.

Thin client over the package API (the same code the HTTP service wraps).
Global flags on every subcommand: --config (file path or preset name),
--seed, --out, --format {csv,json,text}, plus repeatable --set key=value
overrides. Precedence: --seed and --set beat the config file, which beats
defaults.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    PRESET_NAMES,
    RunConfig,
    config_hash,
    load_config_file,
    load_preset,
    parse_config_text,
    resolve_config,
)
from .coincidence import histogram_csv_lines, series_csv_lines
from .errors import DataError, NumericError, UsageError
from .metrics import table_from_tomography
from .pipeline import (
    correlate_events,
    run_pipeline,
    simulate_run,
    tomography_input_from_json,
)
from .tomography import reconstruct

_FORMATS = ("csv", "json", "text")


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad usage; we reserve 2 for data errors."""

    def error(self, message):
        raise UsageError(message)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file path or preset name (%s)" % ", ".join(PRESET_NAMES))
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--out", help="output file or directory (command-dependent)")
    parser.add_argument("--format", choices=_FORMATS, default="text", help="stdout rendering")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def _load_config_values(name_or_path: str) -> dict:
    if Path(name_or_path).exists():
        return load_config_file(name_or_path)
    if name_or_path in PRESET_NAMES:
        return load_preset(name_or_path)
    raise DataError(f"config file not found: {name_or_path} (and not a preset name)")


def _resolve(args) -> RunConfig:
    file_values = _load_config_values(args.config) if args.config else {}
    overrides = parse_config_text("\n".join(args.overrides), source="--set")
    if args.seed is not None:
        overrides["seed"] = args.seed
    return resolve_config(file_values, overrides)


def _emit(args, payload: dict, text_lines: list[str], csv_lines: list[str] | None = None) -> None:
    """Render to stdout or --out per --format; JSON is canonical for files."""
    if args.format == "json":
        rendered = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    elif args.format == "csv":
        if csv_lines is None:
            raise UsageError("this command has no CSV rendering; use --format json or text")
        rendered = "\n".join(csv_lines) + "\n"
    else:
        rendered = "\n".join(text_lines) + "\n"
    if args.out:
        Path(args.out).write_text(rendered)
    else:
        sys.stdout.write(rendered)


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    if not args.out:
        raise UsageError("simulate requires --out DIRECTORY")
    if args.setting == "all12":
        labels, include_auto = None, True
    elif args.setting == "auto":
        labels, include_auto = [], True
    else:
        labels, include_auto = [args.setting], False
    manifest = simulate_run(cfg, args.out, labels=labels, include_auto=include_auto)
    if args.format == "json":
        sys.stdout.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    else:
        for rec in manifest["files"]:
            sys.stdout.write(f"{rec['path']}: {rec['records']} records (seed {rec['seed']})\n")
        sys.stdout.write(f"config hash {manifest['config_hash']}\n")
    return 0


def cmd_correlate(args) -> int:
    expected_hash = None
    max_delay = args.max_delay
    if args.config:
        cfg = _resolve(args)
        expected_hash = config_hash(cfg)
        if max_delay is None:
            max_delay = cfg.max_delay
    report = correlate_events(args.events, max_delay or 10, expected_hash=expected_hash)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"
        )
        for label, res in sorted(report.correlations.items()):
            (out / f"c_vs_delay_{label}.csv").write_text("\n".join(series_csv_lines(res)) + "\n")
            (out / f"histogram_{label}_co.csv").write_text(
                "\n".join(histogram_csv_lines(res.hist_co)) + "\n"
            )
            (out / f"histogram_{label}_cross.csv").write_text(
                "\n".join(histogram_csv_lines(res.hist_cross)) + "\n"
            )

    if args.format == "json":
        sys.stdout.write(json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n")
    elif args.format == "csv":
        lines = ["setting,C,sigma,n_co,n_cross"]
        for label, res in sorted(report.correlations.items()):
            lines.append(f"{label},{res.c0!r},{res.c0_sigma!r},{res.n_co},{res.n_cross}")
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        for label, res in sorted(report.correlations.items()):
            sys.stdout.write(
                f"{label:<8} C(0) = {res.c0:+.4f} +- {res.c0_sigma:.4f}"
                f"  (co {res.n_co}, cross {res.n_cross})\n"
            )
        if report.auto_peak is not None:
            sys.stdout.write(
                f"autocorrelation g2(0) = {report.auto_peak.g0:.4f} +- {report.auto_peak.sigma:.4f}\n"
            )
    return 0


def cmd_tomo(args) -> int:
    try:
        data = json.loads(Path(args.input).read_text())
    except FileNotFoundError:
        raise DataError(f"input file not found: {args.input}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.input}: not valid JSON: {exc}") from None
    tomo_input = tomography_input_from_json(data)
    result = reconstruct(tomo_input, n_resamples=args.resamples or None, seed=args.bootstrap_seed)
    if args.resamples:
        from .metrics import bootstrap_metric_sigmas

        result.metric_sigmas = bootstrap_metric_sigmas(tomo_input, args.resamples, args.bootstrap_seed)
    payload = result.to_json_dict()
    if isinstance(data, dict) and data.get("config_hash"):
        payload["config_hash"] = data["config_hash"]

    text = [f"consistency residual: {result.consistency_residual:.6f}", "T matrix:"]
    for row in result.t_matrix:
        text.append("  " + "  ".join(f"{v:+.4f}" for v in row))
    text.append("rho_physical (real part):")
    for row in result.rho_physical.matrix.real:
        text.append("  " + "  ".join(f"{v:+.4f}" for v in row))
    _emit(args, payload, text)
    return 0


def cmd_metrics(args) -> int:
    try:
        data = json.loads(Path(args.input).read_text())
    except FileNotFoundError:
        raise DataError(f"input file not found: {args.input}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.input}: not valid JSON: {exc}") from None
    from .tomography import TomographyResult

    result = TomographyResult.from_json_dict(data)
    table = table_from_tomography(result)
    _emit(args, table.to_json_dict(), table.text_lines(), table.csv_lines())
    return 0


def cmd_pipeline(args) -> int:
    cfg = _resolve(args)
    result = run_pipeline(cfg, out_dir=args.out)
    summary = result.summary_dict()
    if args.format == "json":
        sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    else:
        head = result.headline()
        auto = summary["autocorrelation"]
        sys.stdout.write(
            "zero-delay C: rect {rect:+.4f}  diag {diag:+.4f}  circ {circ:+.4f}\n".format(**head)
        )
        sys.stdout.write(f"autocorrelation g2(0) = {auto['g2_zero']:.4f} +- {auto['sigma']:.4f}\n")
        sys.stdout.write(f"consistency residual = {summary['consistency_residual']:.4f}\n")
        sys.stdout.write("\n".join(result.table.text_lines()) + "\n")
        if args.out:
            sys.stdout.write(f"run directory: {args.out}\n")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="biphoton", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate event streams for analysis settings")
    _common_flags(p)
    p.add_argument("--setting", default="all12",
                   help="one setting label (e.g. H_rect), 'auto', or 'all12' (default)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correlate", help="coincidence histograms and C values from events")
    _common_flags(p)
    p.add_argument("events", help="event file or simulate output directory")
    p.add_argument("--max-delay", type=int, default=None, help="histogram span in cycles")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("tomo", help="reconstruct the density matrix from C values")
    _common_flags(p)
    p.add_argument("input", help="correlation report JSON or twelve-entry JSON")
    p.add_argument("--resamples", type=int, default=0, help="bootstrap resamples (0 = skip)")
    p.add_argument("--bootstrap-seed", type=int, default=0)
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("metrics", help="entanglement test table from a tomography result")
    _common_flags(p)
    p.add_argument("input", help="tomography result JSON")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("pipeline", help="simulate, correlate, reconstruct, and test in one run")
    _common_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("serve", help="run the HTTP service")
    _common_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
