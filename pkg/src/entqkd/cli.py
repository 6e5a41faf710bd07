"""Command-line entry point: ``entqkd eval|sweep|validate|presets``.

Exit codes: 0 success, 1 invalid input or failed validation, 2 error
correction did not converge, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import sys

from . import __version__
from .coincidence import total_coincidence_rates
from .config import ConfigError, build_config, config_hash, normalize, preset_names, preset_text, read_flat
from .montecarlo import compare, flagged, simulate, write_comparison_csv
from .sweep import QUANTITIES, evaluate_cell, load_sweep, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_common(p, sweep=False):
    p.add_argument("--config", required=True, help="config file or preset name")
    if sweep:
        p.add_argument("--sweep", required=True, help="sweep file or preset name")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, help="simulated seconds (default: config timing.duration)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entqkd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate all quantities for one config")
    _add_common(p)
    p.add_argument("--mode", choices=("analytic", "montecarlo"), default="analytic")

    p = sub.add_parser("sweep", help="evaluate quantities over a parameter grid")
    _add_common(p, sweep=True)
    p.add_argument("--mode", choices=("analytic", "montecarlo"), default="analytic")

    p = sub.add_parser("validate", help="compare a Monte-Carlo run with the analytic rates")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=3.0, help="|z| above which a quantity fails")

    p = sub.add_parser("presets", help="list bundled presets, or print one")
    p.add_argument("name", nargs="?")
    return parser


def _eval(args) -> int:
    flat = read_flat(args.config)
    cfg = build_config(flat)
    names = list(QUANTITIES)
    values, flags = evaluate_cell(cfg, names, args.mode, args.seed, args.duration)
    rows = list(zip(names, values))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(f"# version = {__version__}\n# config_hash = {config_hash(normalize(flat))}\n# mode = {args.mode}\n")
            if args.mode == "montecarlo":
                fh.write(f"# seed = {args.seed}\n")
            w = csv.writer(fh)
            w.writerow(["quantity", "value"])
            w.writerows((n, repr(v)) for n, v in rows)
    else:
        for n, v in rows:
            print(f"{n:22s} {v:.8g}")
    if flags:
        print("flags: " + ", ".join(flags), file=sys.stderr)
    return EXIT_NONCONVERGED if "nonconverged" in flags else EXIT_OK


def _sweep(args) -> int:
    spec = load_sweep(args.sweep)
    res = run_sweep(args.config, spec, args.mode, args.seed, args.duration, args.out)
    if not args.out:
        w = csv.writer(sys.stdout)
        w.writerow([*res.axes, *res.outputs, "flags"])
        for key, q, flags in res.rows:
            w.writerow([*map(repr, key), *map(repr, q), ";".join(flags)])
    bad = res.flagged
    if bad:
        print(f"{len(bad)} of {len(res.rows)} cells flagged", file=sys.stderr)
    return EXIT_NONCONVERGED if any("nonconverged" in r[2] for r in bad) else EXIT_OK


def _validate(args) -> int:
    cfg = build_config(read_flat(args.config))
    setting = (cfg.theta_a, cfg.theta_a)
    tally = simulate(cfg, setting, args.duration, args.seed)
    rows = compare(tally, total_coincidence_rates(cfg, setting))
    if args.out:
        write_comparison_csv(rows, args.out, {"version": __version__, "seed": args.seed, "duration": repr(tally.duration)})
    else:
        for r in rows.values():
            print(f"{r.quantity:12s} {r.observed:14.6g} {r.expected:14.6g} {r.z:+8.2f}")
    bad = flagged(rows, args.threshold)
    if bad:
        print(f"outside {args.threshold:g} sigma: {', '.join(bad)}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def _presets(args) -> int:
    if args.name is None:
        print("\n".join(preset_names()))
    else:
        print(preset_text(args.name), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"eval": _eval, "sweep": _sweep, "validate": _validate, "presets": _presets}[args.verb]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
