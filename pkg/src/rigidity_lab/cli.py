"""Command line entry point: ``verify``, ``sweep`` and ``list-suites``.

Exit codes: 0 all hard invariants pass, 1 an invariant failed, 2 bad
configuration, 3 solver error.
"""
from __future__ import annotations

import argparse
import sys

from .config import FORMATS, SWEEP_PARAMS, ConfigError, parse_config, parse_values
from .suites import emit_report, list_suites, run_suite, sweep_family

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _print_record(rec, out=sys.stdout):
    print(f"[{rec.suite}] {rec.theorem}", file=out)
    print(f"  config {rec.config_hash[:12]}", file=out)
    for o in rec.outcomes:
        tag = "" if o.hard else " (soft)"
        note = f"  [{o.note}]" if o.note else ""
        print(f"  {o.verdict:5s} {o.name}{tag}{note}", file=out)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rigidity-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run the suite named in a config file")
    v.add_argument("config")
    v.add_argument("--format", default=None, help="json or csv (default: config value, else json)")
    v.add_argument("--out", default=None, help="output directory (default: config value, else ./reports)")
    s = sub.add_parser("sweep", help="run a suite over a list of parameter values")
    s.add_argument("config")
    s.add_argument("--param", default=None, help=f"one of {', '.join(SWEEP_PARAMS)}")
    s.add_argument("--values", default=None, help="comma-separated values, e.g. 0.01,0.1,1")
    s.add_argument("--format", default=None)
    s.add_argument("--out", default=None)
    sub.add_parser("list-suites", help="print the suite ids and what they check")
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "list-suites":
        for sid, theorem in list_suites():
            print(f"{sid:20s} {theorem}")
        return EXIT_OK
    try:
        cfg = parse_config(args.config)
        fmt_ = args.format or cfg.format
        if fmt_ not in FORMATS:
            raise ConfigError(f"unsupported format {fmt_!r}; supported: {', '.join(FORMATS)}")
        out = args.out or cfg.out or "reports"
        if args.command == "verify" and cfg.suite != "sweep":
            result = run_suite(cfg)
            _print_record(result)
        else:
            param = getattr(args, "param", None)
            values = getattr(args, "values", None)
            values = parse_values(values) if values is not None else None
            result = sweep_family(cfg, param, values)
            for v, rec in zip(result.values, result.records):
                status = "error" if rec is None else ("pass" if rec.passed else "fail")
                print(f"{result.param}={v}: {status}")
            for name, t in sorted(result.trends.items()):
                if name != "flat":
                    extra = "".join(f" {k}={t[k]:.3g}" for k in ("exponent",) if k in t)
                    print(f"  {name}: {t['monotone']}{extra}")
        files = emit_report(result, fmt_, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in files:
        print(f"wrote {path}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
