import argparse
import logging
from typing import Dict, List
from src.api.harness import sanov_convergence, scan_condition_A2, scan_condition_B2
from src.errors import ArgumentError, InvariantViolation, ResourceError
from src.models.scenario import ConvergenceReport, ScenarioConfig
from src.storage import load_scenario, write_csv
from .router import CommandContext, CommandRouter, argument

logger = logging.getLogger(__name__)

router = CommandRouter()

SANOV_COLUMNS = ["n", "psi_n", "a_n", "envelope_lo", "envelope_hi", "target_lo", "target_hi", "contained", "wall_ms"]
SCAN_COLUMNS = ["condition", "epsilon", "n", "value", "admissible_balls", "skipped_undefined", "epsilon_proxy", "proxy", "target", "margin", "label"]


def _scenario(ctx: CommandContext) -> ScenarioConfig:
    if not ctx.config.inputs:
        raise ArgumentError(f"{ctx.config.subcommand} needs --config <scenario.json>")
    return load_scenario(ctx.config.inputs[0], ctx.config.arithmetic_mode)


def _row(report: ConvergenceReport) -> Dict:
    return {
        "n": report.n,
        "psi_n": list(report.psi_n.counts),
        "a_n": report.a_n,
        "envelope_lo": report.envelope_lo,
        "envelope_hi": report.envelope_hi,
        "target_lo": report.target_lo,
        "target_hi": report.target_hi,
        "contained": report.contained,
        "wall_ms": report.wall_ms,
    }


@router.command("sanov", help="a_n = (1/n) log eta_n(psi_n, A) against its finite-n envelope")
def sanov_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    config = _scenario(ctx)
    try:
        reports = sanov_convergence(
            config, ctx.config.cap_enum, workers=ctx.settings.WORKERS, record_timings=ctx.settings.RECORD_TIMINGS
        )
    except ResourceError as e:
        completed: List[ConvergenceReport] = e.partial or []
        logger.error("Stopped after %d completed levels: %s", len(completed), e.detail)
        write_csv([_row(r) for r in completed], ctx.config.out, ctx.digest, ctx.config.arithmetic_mode, SANOV_COLUMNS)
        raise
    write_csv([_row(r) for r in reports], ctx.config.out, ctx.digest, ctx.config.arithmetic_mode, SANOV_COLUMNS)
    broken = [r.n for r in reports if not r.contained]
    if broken:
        raise InvariantViolation(f"a_n leaves the finite-n envelope at n={broken}")
    return 0


@router.command(
    "scan",
    help="Finite-n proxies of the (A2) and (B2) conditions",
    arguments=[argument("--condition", choices=["a2", "b2"], required=True)],
)
def scan_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    config = _scenario(ctx)
    scan = scan_condition_A2 if args.condition == "a2" else scan_condition_B2
    report = scan(config, mode=ctx.config.arithmetic_mode, cap=ctx.config.cap_enum)
    rows = []
    for eps_row in report.rows:
        for n, value in eps_row.per_n:
            rows.append(
                {
                    "condition": report.condition,
                    "epsilon": eps_row.epsilon,
                    "n": n,
                    "value": value,
                    "admissible_balls": eps_row.admissible_balls,
                    "skipped_undefined": eps_row.skipped_undefined,
                    "epsilon_proxy": eps_row.proxy,
                    "proxy": report.proxy,
                    "target": report.target,
                    "margin": report.margin,
                    "label": report.label,
                }
            )
    write_csv(rows, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode, SCAN_COLUMNS)
    return 0
