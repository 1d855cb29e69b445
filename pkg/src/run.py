import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional
from pydantic import ValidationError
from .commands import CommandContext, CommandRouter, GalleryRouter, HarnessRouter, MeasuresRouter, RateRouter, VerifyRouter
from .errors import CondSanovError, ConfigError
from .settings import ArithmeticMode, CliConfig, Settings, settings
from .storage import config_hash, read_json

# Configure logging
LOGGER = logging.getLogger("src")

FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Flags that change where output goes or how loud it is, never what it contains
_UNHASHED = {"out", "log_level", "workers", "timings", "handler", "config"}


def configure_logging(level: str = settings.LOG_LEVEL, log_file: Optional[Path] = settings.LOG_FILE):
    """Configure logging with proper format and handlers; stdout stays reserved for reports."""
    LOGGER.setLevel(level.upper())
    LOGGER.handlers.clear()

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(FORMAT))
    LOGGER.addHandler(console_handler)

    # File handler
    if log_file is not None:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter(FORMAT))
        LOGGER.addHandler(file_handler)

    LOGGER.debug("Logger is configured successfully!")


def build_router() -> CommandRouter:
    router = CommandRouter()
    router.include_router(MeasuresRouter)
    router.include_router(RateRouter)
    router.include_router(HarnessRouter)
    router.include_router(GalleryRouter)
    router.include_router(VerifyRouter)
    return router


class _ArgumentParserError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Reports bad arguments through the structured error path instead of exiting."""

    def error(self, message):
        raise _ArgumentParserError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario config (JSON)")
    common.add_argument("--out", type=Path, help="report path; stdout when absent")
    common.add_argument("--mode", choices=[m.value for m in ArithmeticMode], default=settings.ARITHMETIC_MODE.value)
    common.add_argument("--seed", type=int, default=settings.SEED)
    common.add_argument("--cap-enum", type=int, default=settings.ENUMERATION_CAP)
    common.add_argument("--cap-tables", type=int, default=settings.TABLE_CAP)
    common.add_argument("--log-level", default=settings.LOG_LEVEL)
    common.add_argument("--workers", type=int, default=settings.WORKERS)
    common.add_argument("--timings", action="store_true", help="fill the wall_ms column")

    parser = _Parser(
        prog="condsanov",
        description="Conditional kernels, rate functions and finite-n envelopes on finite alphabets",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    build_router().mount(subparsers, parents=[common])
    return parser


def _context(args: argparse.Namespace) -> CommandContext:
    try:
        cfg = Settings(
            ARITHMETIC_MODE=args.mode,
            SEED=args.seed,
            ENUMERATION_CAP=args.cap_enum,
            TABLE_CAP=args.cap_tables,
            LOG_LEVEL=args.log_level,
            WORKERS=args.workers,
            RECORD_TIMINGS=args.timings,
        )
        config = CliConfig(
            subcommand=args.subcommand,
            inputs=[args.config] if args.config is not None else [],
            out=args.out,
            arithmetic_mode=cfg.ARITHMETIC_MODE,
            seed=cfg.SEED,
            cap_enum=cfg.ENUMERATION_CAP,
            cap_tables=cfg.TABLE_CAP,
        )
    except ValidationError as e:
        raise ConfigError("; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()))
    raw = read_json(args.config) if args.config is not None else None
    effective = {k: v for k, v in sorted(vars(args).items()) if k not in _UNHASHED}
    effective["config"] = raw
    return CommandContext(settings=cfg, config=config, digest=config_hash(effective), raw_config=raw)


def _report(exc: CondSanovError) -> int:
    sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
    return exc.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentParserError as e:
        return _report(ConfigError(f"invalid arguments: {e}"))
    except CondSanovError as e:
        return _report(e)
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    try:
        configure_logging(args.log_level)
    except ValueError:
        return _report(ConfigError(f"unknown log level {args.log_level!r}"))

    # Global exception handler
    try:
        ctx = _context(args)
        return args.handler(args, ctx)
    except CondSanovError as e:
        LOGGER.error("%s failed: %s", args.subcommand, e.detail)
        return _report(e)
    except KeyboardInterrupt:
        LOGGER.info("Stopped by user")
        return 130
    except Exception as e:
        LOGGER.error(f"Global error handler caught: {e}", exc_info=True)
        sys.stderr.write(json.dumps({"error": e.__class__.__name__, "detail": str(e), "exit_code": 1}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
