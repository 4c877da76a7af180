import argparse
import logging
import pathlib
import sys

import pandas

from pctlib.checker import check
from pctlib.errors import ConsistencyError

from .utils import (
    add_common_arguments,
    check_options,
    load_model,
    read_formula,
    thread_list,
)

logger = logging.getLogger(__name__)


def config_bench_parser(parser: argparse.ArgumentParser) -> None:
    add_common_arguments(parser)
    parser.add_argument("--algo", choices=["rg", "rpg"], default="rg")
    parser.add_argument(
        "--threads-list",
        type=thread_list,
        default=[1],
        help="comma-separated worker counts, e.g. 1,2,4,8",
    )
    parser.add_argument("--repeat", type=int, default=3, help="runs per worker count")
    parser.add_argument(
        "-o", "--output", type=pathlib.Path, help="CSV report (default: stdout)"
    )
    parser.set_defaults(parser=parser, handler=_bench_handler)


def _bench_handler(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    if args.repeat < 1:
        parser.error("--repeat must be at least 1")
    model = load_model(args)
    formula = read_formula(args)
    rows = []
    for threads in args.threads_list:
        options = check_options(args, algo=args.algo, workers=threads)
        for repeat in range(args.repeat):
            verdict = check(model, formula, options)
            stats = verdict.stats.to_dict()
            forward = stats.pop("phase_times_forward")
            backward = stats.pop("phase_times_backward")
            logger.info(
                "threads=%d repeat=%d: %.3fs", threads, repeat, forward + backward
            )
            rows.append(
                {
                    "threads": threads,
                    "repeat": repeat,
                    "holds": verdict.holds,
                    "reason": verdict.reason,
                    "forward_time": forward,
                    "backward_time": backward,
                    "total_time": forward + backward,
                    **stats,
                }
            )
    report = bench_report(rows)
    if report["holds"].nunique() > 1:
        raise ConsistencyError("verdict differs across runs")
    report.to_csv(args.output if args.output is not None else sys.stdout, index=False)
    return 0


def bench_report(rows) -> pandas.DataFrame:
    """
    Tabulate bench rows and add a ``speedup`` column: the median total time at
    the baseline worker count (1 if measured, else the smallest) divided by
    the median total time at each row's worker count.
    """
    frame = pandas.DataFrame(rows)
    medians = frame.groupby("threads")["total_time"].median()
    baseline = medians.loc[1] if 1 in medians.index else medians.iloc[0]
    frame["speedup"] = baseline / frame["threads"].map(medians)
    columns = ["threads", "repeat", "holds", "reason", "forward_time",
               "backward_time", "total_time", "speedup"]
    rest = [c for c in frame.columns if c not in columns]
    return frame[columns + rest]
