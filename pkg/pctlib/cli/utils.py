import argparse
import logging
import pathlib
from typing import List, Optional

from pctlib.errors import ValidationError
from pctlib.formula import Formula, parse_formula
from pctlib.models import ModelInterface, generate, load_explicit, load_gts
from pctlib.options import CheckOptions, Order, Variant, load_options

LOG_FORMAT = "[%(asctime)s][%(module)s][%(processName)s]: %(message)s"


def thread_list(arg: str) -> List[int]:
    try:
        counts = [int(item) for item in arg.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformatted thread list '{arg}'")
    if not counts or min(counts) < 1:
        raise argparse.ArgumentTypeError(f"thread counts must be positive: '{arg}'")
    return counts


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", type=pathlib.Path, help="explicit .ksg model")
    source.add_argument("--gts", type=pathlib.Path, help="guarded transition system")
    source.add_argument(
        "--gen", type=str, help="built-in model (token-ring:<n>, philosophers:<n>)"
    )
    formula = parser.add_mutually_exclusive_group(required=True)
    formula.add_argument("--formula", type=str, help="formula text")
    formula.add_argument(
        "--formula-file", type=pathlib.Path, help="file holding the formula"
    )
    parser.add_argument("--table-bits", type=int, help="log2 of the state table size")
    parser.add_argument(
        "--order",
        choices=[order.value for order in Order],
        help="order in which workers take items from their own stack",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log debug messages"
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="only log warnings and errors"
    )


def configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def load_model(args: argparse.Namespace) -> ModelInterface:
    if args.model is not None:
        return load_explicit(args.model)
    if args.gts is not None:
        return load_gts(args.gts)
    return generate(args.gen)


def read_formula(args: argparse.Namespace) -> Formula:
    if args.formula is not None:
        return parse_formula(args.formula)
    with open(args.formula_file, encoding="utf-8") as f:
        for line in f:
            text = line.strip()
            if text and not text.startswith("#"):
                return parse_formula(text)
    raise ValidationError(f"no formula found in '{args.formula_file}'")


def check_options(
    args: argparse.Namespace, algo: Optional[str] = None, workers: Optional[int] = None
) -> CheckOptions:
    """
    Start from the ``--config`` file if one is given, then apply the flags
    that were set on the command line.
    """
    config = getattr(args, "config", None)
    options = load_options(config) if config is not None else CheckOptions()
    if algo is not None:
        options.variant = Variant(algo)
    if workers is not None:
        options.workers = workers
    if args.table_bits is not None:
        options.table_bits = args.table_bits
    if getattr(args, "order", None) is not None:
        options.order = Order(args.order)
    if getattr(args, "no_early_stop", False):
        options.early_stop = False
    if getattr(args, "witness", False):
        options.witness = True
    if getattr(args, "timeout", None) is not None:
        options.timeout = args.timeout
    options.validate()
    return options
