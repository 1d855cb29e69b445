import argparse
import logging
import math
import numpy as np
from src.api.empirical import composition_array, log_multinomial_rows, multinomial_prob
from src.api.finite_measures import conditional_theta
from src.api.kernels import kernel_law
from src.errors import ArgumentError
from src.models.empirical import EmpiricalMeasure
from src.models.measures import Alphabet, Dist, JointDist
from src.settings import ArithmeticMode
from src.storage import load_model, write_csv
from .router import CommandContext, CommandRouter, argument, int_list, json_argument

logger = logging.getLogger(__name__)

router = CommandRouter()


def _exact(ctx: CommandContext) -> bool:
    return ctx.config.arithmetic_mode == ArithmeticMode.EXACT


def load_joint(data, ctx: CommandContext, what: str = "lambda") -> JointDist:
    if isinstance(data, dict):
        data = {**data, "exact": _exact(ctx)}
    return load_model(JointDist, data, what)


def load_dist(data, ctx: CommandContext, what: str) -> Dist:
    if isinstance(data, dict):
        data = {**data, "exact": _exact(ctx)}
    return load_model(Dist, data, what)


@router.command(
    "enumerate",
    help="List P_emp^n over an alphabet, optionally with i.i.d. probabilities",
    arguments=[
        argument("--n", type=int, required=True),
        argument("--lambda", dest="lam", type=json_argument, help="joint law on R x S (JSON or file)"),
        argument("--dist", type=json_argument, help="law on a single alphabet (JSON or file)"),
        argument("--labels", help="comma-separated symbols, counts only"),
    ],
)
def enumerate_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    given = [x for x in (args.lam, args.dist, args.labels) if x is not None]
    if len(given) != 1:
        raise ArgumentError("enumerate needs exactly one of --lambda, --dist, --labels")
    if args.n < 1:
        raise ArgumentError(f"--n must be positive, got {args.n}")
    cap = ctx.config.cap_enum
    exact = _exact(ctx)
    if args.labels is not None:
        alphabet = Alphabet(labels=tuple(s.strip() for s in args.labels.split(",") if s.strip()))
        rows = [{"index": i, "counts": list(c)} for i, c in enumerate(composition_array(args.n, alphabet.size, cap))]
        write_csv(rows, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode, ["index", "counts"])
        return 0
    if args.lam is not None:
        law = load_joint(args.lam, ctx)
        weights = [w for row in law.weights for w in row]
        size = law.M
    else:
        law = load_dist(args.dist, ctx, "dist")
        weights = list(law.weights)
        size = law.size
    counts = composition_array(args.n, size, cap)
    logs = log_multinomial_rows(counts, np.asarray([float(w) for w in weights]))
    rows = []
    for i, (c, lp) in enumerate(zip(counts, logs)):
        prob = multinomial_prob(c, weights, ArithmeticMode.EXACT) if exact else math.exp(lp)
        rows.append({"index": i, "counts": list(c), "probability": prob, "log_probability": float(lp)})
    logger.info("enumerate: %d elements at n=%d", len(rows), args.n)
    write_csv(rows, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode, ["index", "counts", "probability", "log_probability"])
    return 0


@router.command(
    "kernel",
    help="The law of the R-empirical measure given an S-empirical measure zeta",
    arguments=[
        argument("--n", type=int, required=True),
        argument("--zeta", type=int_list, required=True, help="counts of n*zeta, comma-separated"),
        argument("--lambda", dest="lam", type=json_argument, required=True),
    ],
)
def kernel_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    lam = load_joint(args.lam, ctx)
    if len(args.zeta) != lam.cols.size:
        raise ArgumentError(f"--zeta has {len(args.zeta)} counts for {lam.cols.size} column symbols")
    try:
        zeta = EmpiricalMeasure(alphabet=lam.cols, n=args.n, counts=tuple(args.zeta))
    except ValueError as e:
        raise ArgumentError(f"--zeta: {e}")
    law = kernel_law(args.n, zeta, conditional_theta(lam), ctx.config.arithmetic_mode, ctx.config.cap_tables)
    probs = law.probs if law.exact else np.exp(law.log_probs)
    rows = [
        {"phi": list(c), "probability": p, "log_probability": float(lp)}
        for c, p, lp in zip(law.counts, probs, law.log_probs)
    ]
    write_csv(rows, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode, ["phi", "probability", "log_probability"])
    return 0
