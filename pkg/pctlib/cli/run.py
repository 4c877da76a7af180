import argparse
import json
import pathlib

from pctlib.checker import Stats, check
from pctlib.models import reachable, to_explicit
from pctlib.oracle import oracle_check

from .utils import add_common_arguments, check_options, load_model, read_formula


def config_run_parser(parser: argparse.ArgumentParser) -> None:
    add_common_arguments(parser)
    parser.add_argument(
        "--algo", choices=["rg", "rpg", "oracle"], help="checking algorithm"
    )
    parser.add_argument("--threads", type=int, help="number of workers")
    parser.add_argument("--stats", type=pathlib.Path, help="write statistics (JSON)")
    parser.add_argument(
        "--witness", action="store_true", help="print a path to a forward violation"
    )
    parser.add_argument(
        "--no-early-stop", action="store_true", help="always explore completely"
    )
    parser.add_argument("--timeout", type=float, help="time limit in seconds")
    parser.add_argument("--config", type=pathlib.Path, help="options file (YAML)")
    parser.set_defaults(parser=parser, handler=_run_handler)


def _run_handler(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    model = load_model(args)
    formula = read_formula(args)
    if args.algo == "oracle":
        explicit = to_explicit(model)
        holds = oracle_check(explicit, formula)
        reason = "oracle"
        stats = Stats(states=len(reachable(explicit)))
        witness = None
    else:
        options = check_options(args, algo=args.algo, workers=args.threads)
        verdict = check(model, formula, options)
        holds, reason, stats = verdict.holds, verdict.reason, verdict.stats
        witness = verdict.trace
    print(f"{'HOLDS' if holds else 'VIOLATED'} ({reason})")
    if witness is not None:
        for step, state in enumerate(witness):
            print(f"  {step}: {' '.join(str(v) for v in state)}")
    if args.stats is not None:
        with open(args.stats, "w") as f:
            json.dump(stats.to_dict(), f, indent=2)
    return 0 if holds else 1
