"""``gdc`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from ._version import __version__
from .config import load_config
from .errors import GdcError, InfeasibleError, ResourceError
from .experiments import COMMANDS

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_RESOURCE = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdc", description="Dimming-aware space-time index modulation sweeps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--seed", type=lambda s: int(s, 0), help="override the sweep seed")
    p.add_argument("--out", help="output directory (default: [output] directory)")
    p.add_argument("--method", choices=("mber", "mfd1", "mfd2"),
                   help="restrict to a single N_S selection method")
    p.add_argument("--cpep-scale", type=int, choices=(2, 4), dest="cpep_scale")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        methods = (args.method,) if args.method else None
        cfg = cfg.with_overrides(seed=args.seed, cpep_scale=args.cpep_scale, methods=methods)
        out = args.out or cfg.output.directory
        fn = COMMANDS[args.command]
        if args.command in ("uidr", "illum"):
            paths = fn(cfg, out, method=cfg.sweep.methods[0])
        else:
            paths = fn(cfg, out)
    except InfeasibleError as exc:
        print(f"gdc: infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResourceError as exc:
        print(f"gdc: resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except GdcError as exc:
        print(f"gdc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
