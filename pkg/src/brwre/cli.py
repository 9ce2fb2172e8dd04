"""Command-line entry point: ``brwre <subcommand> --config run.json [...]``.

Exit codes: 0 success, 2 invalid config, 3 hypothesis guard failed,
4 every replicate hit the particle cap.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from .edgeworth import HypothesisError
from .env import ConfigError, check_conditions, load_spec
from .harness import (
    AllCapped,
    ExperimentConfig,
    Report,
    render,
    run_clt,
    run_edgeworth_validation,
    run_llt,
    run_martingale_suite,
)
from .martingales import track
from .popsim import CapPolicy, simulate

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_CAPPED = 0, 2, 3, 4

COMMANDS = ("conditions", "simulate", "martingales", "edgeworth", "clt", "llt")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brwre", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON environment/experiment document")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--replicates", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _conditions(cfg: ExperimentConfig) -> tuple[Report, int]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = check_conditions(cfg.spec, cfg.lambda_, cfg.eta, cfg.delta)
    d = rep.to_dict()
    rows = [{"check": k, "passed": v} for k, v in d["checks"].items()]
    return Report("conditions", ("check", "passed"), rows, d), EXIT_OK if rep.ok else EXIT_GUARD


def _simulate(cfg: ExperimentConfig, fmt: str) -> tuple[str, int]:
    traj = simulate(cfg.spec, cfg.n_max, cfg.seed, CapPolicy(cfg.cap))
    if traj.cap_hit:
        raise AllCapped(f"population exceeded the cap of {cfg.cap} particles")
    tr = track(traj)
    rows = [{"n": k, "Z": int(traj.counts[k]), "W": float(tr.W[k]), "N1": float(tr.N1[k]),
             "N2": float(tr.N2[k])} for k in range(traj.n + 1)]
    meta = {"seed": cfg.seed, "state_indices": [int(i) for i in traj.realization.state_indices],
            "extinct_at": traj.extinct_at}
    return render(Report("simulate", ("n", "Z", "W", "N1", "N2"), rows, meta), fmt), EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_spec(args.config)
        cfg = ExperimentConfig.from_spec(spec, seed=args.seed, replicates=args.replicates,
                                         threads=args.threads)
    except (OSError, ConfigError, json.JSONDecodeError) as exc:
        print(f"config invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = EXIT_OK
    try:
        if args.command == "conditions":
            report, code = _conditions(cfg)
            text = render(report, args.format)
        elif args.command == "simulate":
            text, code = _simulate(cfg, args.format)
        else:
            runner = {"martingales": run_martingale_suite, "edgeworth": run_edgeworth_validation,
                      "clt": run_clt, "llt": run_llt}[args.command]
            text = render(runner(cfg), args.format)
    except HypothesisError as exc:
        print(f"hypothesis guard failed: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except AllCapped as exc:
        print(f"all replicates capped: {exc}", file=sys.stderr)
        return EXIT_CAPPED
    except ConfigError as exc:
        print(f"config invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write(text, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
