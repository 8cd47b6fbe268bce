"""Command-line front end.

Exit codes: 0 success, 1 failed acceptance criteria (verify-all only),
2 configuration error, 3 truncation error, 4 empty interaction window.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config, parse_dims
from .dynamics import EmptyWindowError
from .fock import TruncationError
from .io import make_report, write_json
from .runner import run_dynamics, run_readout, run_teleport
from .verification import DEFAULT_SEED, run_all

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_TRUNCATION, EXIT_EMPTY_WINDOW = 0, 1, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carlteleport", description="CARL teleportation simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("dynamics", "three-mode population dynamics"),
                            ("teleport", "teleportation through the twin-state resource"),
                            ("readout", "atom-counting readout of the channel output"),
                            ("verify-all", "run the acceptance suite")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=name != "verify-all", help="YAML scenario file")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--dims", type=str, help="mode dimensions a1,a2,a3 (overrides the config)")
    return parser


def _verify_all(args) -> int:
    seed = DEFAULT_SEED
    if args.config is not None:
        seed = load_config(args.config).seed
    if args.seed is not None:
        seed = args.seed
    results = run_all(seed)
    for r in results:
        print(r.line())
    passed = all(r.passed for r in results)
    report = make_report("verification", config={"seed": seed}, criteria=[r.to_dict() for r in results],
                         passed=passed)
    out = args.out or Path("verification")
    write_json(out / "verification.json", report)
    (out / "verification.txt").write_text("".join(r.line() + "\n" for r in results))
    return EXIT_OK if passed else EXIT_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify-all":
            return _verify_all(args)
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(seed=args.seed, dims=parse_dims(args.dims) if args.dims else None,
                                 output=str(args.out) if args.out else None)
        runner = {"dynamics": run_dynamics, "teleport": run_teleport, "readout": run_readout}[args.command]
        paths, _ = runner(cfg)
        for path in paths:
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except EmptyWindowError as exc:
        print(f"empty interaction window: {exc}", file=sys.stderr)
        return EXIT_EMPTY_WINDOW


if __name__ == "__main__":
    sys.exit(main())
