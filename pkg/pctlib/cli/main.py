import argparse
import sys
from typing import List, Optional

from pctlib.errors import ConsistencyError, ResourceError, ValidationError

from .bench import config_bench_parser
from .run import config_run_parser
from .utils import configure_logging


def main(argv: Optional[List[str]] = None):
    parser = argparse.ArgumentParser(prog="pctlcli")
    subparsers = parser.add_subparsers(dest="command", required=True)

    config_run_parser(
        subparsers.add_parser(
            "run",
            help="check a formula on a model",
        )
    )

    config_bench_parser(
        subparsers.add_parser(
            "bench",
            help="time a check over several worker counts (CSV report)",
        )
    )

    args = parser.parse_args(argv)
    configure_logging(args)
    try:
        code = args.handler(args.parser, args)
    except KeyboardInterrupt:
        sys.exit(130)
    except (ValidationError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        code = 2
    except ResourceError as err:
        print(f"error: {err.reason}: {err}", file=sys.stderr)
        code = 3
    except ConsistencyError as err:
        print(f"error: {err.reason}: {err}", file=sys.stderr)
        code = 4
    sys.exit(code)
