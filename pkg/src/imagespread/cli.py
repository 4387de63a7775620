"""Command line entry point.

Exit codes: 0 success, 1 fatal (bad config, missing input), 2 partial (some
engine, platform or archive failed but outputs were written).
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys

from .errors import ConfigParseError, ConfigValidationError, ImageSpreadError, MissingInput
from .fetch import Mode
from .pipeline import CACHE_ENV, STAGES, make_context, run_all, run_stage

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("imagespread")


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="study TOML file")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.REPLAY.value,
                   help="replay (default) serves recorded responses only; live and record use the network")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-pages", type=int, help="result pages per engine (default from config)")
    p.add_argument("--threshold", type=int, help="match threshold, Hamming distance out of 64")
    p.add_argument("--since", type=_date, help="date lower bound, overrides the config")
    p.add_argument("--cache-dir", help=f"response cache (default ${CACHE_ENV} or <config dir>/cache)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imagespread", description="Trace the spread of an image through search engines, social media and web archives.")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="run every stage, then the report"))
    for stage in STAGES:
        _common(sub.add_parser(stage, help=f"run only the {stage} stage"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s [%(name)s] %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        ctx = make_context(
            args.config,
            args.out,
            args.mode,
            max_pages=args.max_pages,
            threshold=args.threshold,
            since=args.since,
            cache_dir=args.cache_dir,
        )
        if args.command == "run":
            results = run_all(ctx)
        else:
            results = [run_stage(ctx, args.command)]
    except (ConfigParseError, ConfigValidationError) as exc:
        log.error("config error: %s", exc)
        return EXIT_FATAL
    except MissingInput as exc:
        log.error("%s (run the earlier stages first)", exc)
        return EXIT_FATAL
    except ImageSpreadError as exc:
        log.error("%s", exc)
        return EXIT_FATAL
    failed = [r for r in results if r.partial]
    for r in failed:
        log.warning("stage %s finished with %d error(s)", r.stage, len(r.errors))
    return EXIT_PARTIAL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
