"""``simulate`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, ESTIMATORS, MODES, load_config
from .harness import TrialFailure, aggregate, run_sweep, write_outputs

log = logging.getLogger("risvi")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Monte Carlo NMSE sweeps for RIS cascaded channel estimators.",
    )
    p.add_argument("--config", help="INI-style scenario file; built-in defaults otherwise")
    p.add_argument("--mode", choices=MODES, help="sweep T at delta2=0, or delta2 at fixed T")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--t-list", help="comma-separated numbers of RIS subblocks")
    p.add_argument("--delta2-list", help="comma-separated angle-error variances (rad^2)")
    p.add_argument("--estimators", help=f"comma-separated subset of {','.join(ESTIMATORS)}")
    p.add_argument("--fast-path", type=_on_off, metavar="on|off",
                   help="build y_k directly instead of simulating every pilot slot")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--timing", type=_on_off, metavar="on|off",
                   help="fill the wall_ms column (makes output non-reproducible)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _overrides(args) -> dict:
    out = {}
    for attr, key in (("mode", "mode"), ("trials", "trials"), ("seed", "seed"),
                      ("delta2_list", "delta2_list"), ("estimators", "estimators"),
                      ("fast_path", "fast_path"), ("workers", "workers"),
                      ("timing", "record_timing")):
        value = getattr(args, attr)
        if value is not None:
            out[key] = value
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.t_list is not None:
            key = "t_list" if cfg.mode == "blocks" else "angle_t_list"
            cfg = load_config(args.config, {**_overrides(args), key: args.t_list})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("mode=%s points=%d trials=%d", cfg.mode, len(cfg.sweep_points()), cfg.trials)
    try:
        results = run_sweep(cfg)
    except TrialFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    try:
        paths = write_outputs(cfg, results, args.out)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for row in aggregate(results, cfg.estimators):
        print(f"{row['mode']:6s} T={row['T']:<3d} delta2={row['delta2']:<8s} "
              f"{row['estimator']:10s} mean={float(row['mean_nmse']):.4e} "
              f"median={float(row['median_nmse']):.4e}")
    for name, path in paths.items():
        log.info("wrote %s: %s", name, path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
