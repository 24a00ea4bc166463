"""``morrey <command> --config FILE`` command-line driver.

stdout carries only the report path; diagnostics go to stderr.  Exit codes:
0 success, 2 configuration error, 3 computation error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ComputeError, ConfigError
from .report import COMMANDS, DEFAULT_OUT, emit_profile_csv, load_config, run

EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO = 2, 3, 4

log = logging.getLogger("morrey_lab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser():
    ap = _Parser(prog="morrey", description="Morrey-space numerical experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", help=f"report path (default: config 'out' or {DEFAULT_OUT})")
    ap.add_argument("--seed", type=int, help="quadrature seed")
    ap.add_argument("--k-min", type=int, dest="k_min")
    ap.add_argument("--k-max", type=int, dest="k_max")
    ap.add_argument("--lattice", type=float, help="lattice spacing relative to the radius")
    ap.add_argument("--mc-samples", type=int, dest="mc_samples")
    ap.add_argument("--csv", metavar="DIR", help="also write one CSV per profile into DIR")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def apply_overrides(config, args):
    config = dict(config)
    if config.get("command", args.command) != args.command:
        raise ConfigError(f"config command {config['command']!r} does not match {args.command!r}")
    config["command"] = args.command
    if args.out:
        config["out"] = args.out
    if args.seed is not None:
        config["seed"] = args.seed
    search = dict(config.get("search", {}))
    for key, val in (("k_min", args.k_min), ("k_max", args.k_max), ("lattice_spacing", args.lattice)):
        if val is not None:
            search[key] = val
    if search:
        config["search"] = search
    if args.mc_samples is not None:
        config["quadrature"] = {**config.get("quadrature", {}), "mc_samples": args.mc_samples}
    return config


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="morrey: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        config = apply_overrides(load_config(args.config), args)
        report = run(config)
        out = config.get("out", DEFAULT_OUT)
        if args.csv:
            for path in emit_profile_csv(report, args.csv):
                log.info("wrote %s", path)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except ComputeError as exc:
        log.error("computation failed: %s: %s", type(exc).__name__, exc)
        return EXIT_COMPUTE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        # remaining ValueErrors are precondition violations caused by the config
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
