"""Command line: ``underspread {derive,sweep,oracle}``.

Any config key may also be given as ``--key=value`` (dashes or underscores),
or through the environment as ``UB_KEY``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

from .config import ENV_PREFIX, KEYS, ConfigError, load_config
from .exceptions import UnderspreadError, ValidationError
from .experiment import derive_parameters, run_bound_sweep, run_oracle_suite, write_parameters

log = logging.getLogger("underspread")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ORACLE = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=os.environ.get(ENV_PREFIX + "CONFIG"), help="key = value config file")
    common.add_argument("--seed", help="master seed (unsigned 64-bit)")
    common.add_argument("--trials", help="Monte Carlo paths per sweep point")
    common.add_argument("--workers", help="worker processes")
    common.add_argument("--convention", choices=["cyclic", "paper-table"])
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="underspread",
        description="Noncoherent capacity lower bounds for underspread fading channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("derive", parents=[common], help="write parameters.csv and parameters.txt")
    sub.add_parser("sweep", parents=[common], help="estimate bounds over a range of subcarrier counts")
    p = sub.add_parser("oracle", parents=[common], help="run the independent checks; exit 2 on failure")
    p.add_argument("--traces", type=int, default=100, help="random traces for the tracker check")
    p.add_argument("--corrupt-recursion", action="store_true", help=argparse.SUPPRESS)
    return parser


def parse_overrides(extra) -> dict:
    """Turn leftover ``--key=value`` / ``--key value`` tokens into config overrides."""
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key, eq, value = tok[2:].partition("=")
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError("unknown option", field=key)
        if not eq:
            value = next(it, None)
            if value is None:
                raise ConfigError("missing value", field=key)
        out[key] = value
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        overrides = parse_overrides(extra)
        for key in ("seed", "trials", "workers", "convention", "out"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        if getattr(args, "corrupt_recursion", False):
            overrides["recursion_scale"] = "1.01"
        cfg = load_config(args.config, overrides)
        out = Path(cfg.out)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            derived = derive_parameters(cfg)
        for w in caught:
            log.warning("%s", w.message)
        out.mkdir(parents=True, exist_ok=True)
        (out / "effective.conf").write_text(cfg.to_text())
        if args.command == "derive":
            write_parameters(derived, out)
            sys.stdout.write((out / "parameters.txt").read_text())
            return EXIT_OK
        if args.command == "sweep":
            write_parameters(derived, out)
            runs = run_bound_sweep(derived, out)
            for pt, r, dt in runs:
                log.info("N=%d L2B=%.6g fraction=%.6g (%.2fs)", r.params.n_subcarriers, r.L2B, r.fraction_of_csi, dt)
            print(f"wrote {len(runs)} sweep points to {out / 'sweep.csv'}")
            return EXIT_OK
        checks = run_oracle_suite(derived, out, traces=args.traces)
        failed = [c for c in checks if not c.passed]
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: measured {c.measured:.3g} (tolerance {c.tolerance:.3g})")
        if failed:
            print("failing checks: " + ", ".join(c.name for c in failed), file=sys.stderr)
            return EXIT_ORACLE
        return EXIT_OK
    except (ValidationError, UnderspreadError) as exc:
        where = f" [{args.config}]" if args.config else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
