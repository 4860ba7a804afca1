"""``sim <scenario> --config PATH [--key value ...] --out PATH [--threads N]``

Exit status: 0 on success, 1 on usage or configuration errors, 2 when
results are not converged in the Fock cutoff, 3 on any other numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import CONFIG_KEYS, SCENARIOS, load_config
from .errors import ConvergenceError, SimulationError
from .experiments import run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONVERGENCE = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sim", description=__doc__.splitlines()[0])
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", "--out_path", dest="out_path", help="CSV output path (default: stdout)")
    for key in CONFIG_KEYS:
        if key in ("scenario", "out_path"):
            continue
        ap.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in CONFIG_KEYS if k != "scenario"}
    overrides["scenario"] = args.scenario
    try:
        cfg = load_config(args.config, overrides)
    except (OSError, ValueError) as exc:
        print(f"sim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        table = run(cfg)
    except ConvergenceError as exc:
        print(f"sim: not converged: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (SimulationError, ArithmeticError, ValueError) as exc:
        print(f"sim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.out_path:
        table.write(cfg.out_path)
    else:
        sys.stdout.write(table.to_csv())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
