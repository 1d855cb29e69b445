import argparse
import logging
from typing import List
from src.api.gallery import counterexample_table, epsilon_table, gaussian_table, hypotheses_table, quench_table
from src.errors import ArgumentError
from src.models.gallery import GaussianPairFamily, IntervalSet, MixtureFamily
from src.storage import write_csv
from .router import CommandContext, CommandRouter, argument, int_list

logger = logging.getLogger(__name__)

router = CommandRouter()

DEFAULT_N = [1, 10, 100, 1000]
DEFAULT_M = [50, 500, 5000]


def interval_events(value: str) -> List[IntervalSet]:
    """'1:inf,-inf:-1' -> one open-interval event per comma-separated lo:hi pair."""
    events = []
    for part in value.split(","):
        try:
            lo, hi = (float(x) for x in part.split(":"))
            events.append(IntervalSet.of((lo, hi)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected lo:hi pairs, got {part!r}")
    return events


@router.command(
    "gallery",
    help="Closed-form tables of the continuous example families",
    arguments=[
        argument("kind", choices=["gaussian", "mixture"]),
        argument("--r", type=float, default=1.0),
        argument("--lambda", dest="lam", type=float, default=1.0),
        argument("--y", type=float, default=0.0),
        argument("--family", choices=["exponential", "gaussian", "gaussian_atom", "geometric"], default="exponential"),
        argument("--demo", choices=["counterexample", "quench", "epsilon", "hypotheses"], default="counterexample"),
        argument("--n-list", type=int_list, default=None),
        argument("--m-list", type=int_list, default=None),
        argument("--events", type=interval_events, default=None, help="open intervals lo:hi, comma-separated"),
    ],
)
def gallery_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    n_values = args.n_list or DEFAULT_N
    if any(n < 1 for n in n_values):
        raise ArgumentError(f"--n-list entries must be positive: {n_values}")
    if args.kind == "gaussian":
        try:
            family = GaussianPairFamily(r=args.r)
        except ValueError as e:
            raise ArgumentError(f"--r: {e}")
        rows = gaussian_table(family, args.lam, args.y, n_values)
    else:
        family = MixtureFamily.preset(args.family)
        if args.demo == "counterexample":
            if args.family != "exponential":
                raise ArgumentError("the counterexample demo runs on the exponential family only")
            rows = counterexample_table(n_values, args.m_list or DEFAULT_M)
        elif args.demo == "quench":
            rows = quench_table(family, n_values)
        elif args.demo == "epsilon":
            rows = epsilon_table(n_values)
        else:
            events = args.events or [IntervalSet.of((1.0, float("inf"))), IntervalSet.of((0.5, 2.0))]
            rows = hypotheses_table(family, n_values, events)
    logger.info("gallery %s: %d rows", args.kind, len(rows))
    write_csv(rows, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode)
    return 0
