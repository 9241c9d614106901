"""Command-line entry point: ``eigenfibre {verify,sample-fibre,estimate}``.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, complex_to_json, load_config
from .errors import ConfigError, FibreNotFound
from .runner import Runner, assemble, dumps, failure, record

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("eigenfibre")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 already; keep the message terse
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eigenfibre", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "verify": "run the configured checks and write a JSON report",
        "sample-fibre": "sample points of the configured fibre and export them",
        "estimate": "fit (lambda, mu) and compare with the catalog prediction",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="YAML or JSON run configuration")
        p.add_argument("--out", help="output path (report, or fibre export for sample-fibre)")
        p.add_argument("--seed", type=_seed, help="override the config seed")
        p.add_argument("--json", action="store_true", help="print the report to standard output")
        p.add_argument("--timing", action="store_true", help="record wall time per check (not reproducible)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


# ---------------------------------------------------------------------------
# exports


def fibre_csv(cfg: RunConfig, points) -> str:
    spec = cfg.manifold
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", *spec.column_names(), "residual"])
    for i, fp in enumerate(points):
        writer.writerow([i, *(repr(v) for v in spec.flatten(fp.ambient)), repr(float(fp.residual))])
    return buf.getvalue()


def fibre_json(cfg: RunConfig, points) -> str:
    spec = cfg.manifold
    doc = {
        "manifold": spec.to_dict(),
        "target": complex_to_json(cfg.target),
        "seed": cfg.seed,
        "columns": spec.column_names(),
        "points": [
            {
                "index": i,
                "ambient": spec.flatten(fp.ambient),
                "residual": float(fp.residual),
                "duplicate_of": fp.duplicate_of,
            }
            for i, fp in enumerate(points)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)


# ---------------------------------------------------------------------------
# commands


def _emit_report(report: dict, cfg: RunConfig, args) -> None:
    text = dumps(report)
    path = args.out or cfg.export.get("report")
    if path:
        _write(path, text)
    if args.json or not path:
        sys.stdout.write(text)


def cmd_verify(cfg: RunConfig, args) -> int:
    report = Runner(cfg, timing=args.timing).verify_report()
    _emit_report(report, cfg, args)
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def cmd_estimate(cfg: RunConfig, args) -> int:
    report = Runner(cfg, timing=args.timing).estimate_report()
    _emit_report(report, cfg, args)
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def cmd_sample_fibre(cfg: RunConfig, args) -> int:
    targets = dict(cfg.export)
    targets.pop("report", None)
    if args.out:
        key = "json" if args.out.lower().endswith(".json") else "csv"
        targets = {key: args.out}
    if not targets:
        raise ConfigError("sample-fibre needs an export path: set export.csv / export.json or pass --out")
    runner = Runner(cfg)
    tol = cfg.tolerances["fibre"]
    stat = "max fibre residual"
    try:
        points = runner.fibre_points()
    except FibreNotFound as exc:
        report = assemble("sample-fibre", cfg, [failure("sample-fibre", stat, tol, f"FibreNotFound: {exc}")])
    else:
        if "csv" in targets:
            _write(targets["csv"], fibre_csv(cfg, points))
        if "json" in targets:
            _write(targets["json"], fibre_json(cfg, points))
        dups = sum(fp.duplicate_of is not None for fp in points)
        note = f"{dups} duplicate points kept" if dups else None
        worst = max(fp.residual for fp in points)
        report = assemble("sample-fibre", cfg, [record("sample-fibre", stat, len(points), worst, tol, note=note)])
        report["exports"] = targets
    if args.json:
        sys.stdout.write(dumps(report))
    elif cfg.export.get("report") and not args.out:
        _write(cfg.export["report"], dumps(report))
    return EXIT_PASS if report["passed"] else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "sample-fibre": cmd_sample_fibre, "estimate": cmd_estimate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        where = f"{args.config}: " if args.config else ""
        print(f"eigenfibre: config error: {where}{exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
