import argparse
import logging
from src.api.verify import run_suites
from src.errors import InvariantViolation
from src.storage import write_json
from .router import CommandContext, CommandRouter

logger = logging.getLogger(__name__)

router = CommandRouter()


@router.command("verify", help="Run every invariant suite on seeded instances and print a summary")
def verify_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    summaries = run_suites(ctx.config.seed, ctx.config.arithmetic_mode, ctx.settings)
    failed = sorted(name for name, s in summaries.items() if not s.passed)
    payload = {
        "seed": ctx.config.seed,
        "suites": {name: s.to_dict() for name, s in summaries.items()},
        "checks": sum(s.checks for s in summaries.values()),
        "passed": not failed,
    }
    write_json(payload, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode)
    if failed:
        raise InvariantViolation(f"invariant suites failed: {', '.join(failed)}")
    return 0
