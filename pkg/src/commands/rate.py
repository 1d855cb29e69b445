import argparse
import logging
import math
from pydantic import TypeAdapter
from src.api.rate import i_projection, inf_over_s_margin, inf_rate_over_set, rate_I, sanov_minimizer
from src.api.rounding import certificate_for, check_rounding, match_s_margin
from src.errors import ArgumentError, InfeasibleError
from src.models.empirical import EmpiricalMeasure
from src.models.rate import SetDescriptor
from src.storage import load_model, write_json
from .measures import load_dist, load_joint
from .router import CommandContext, CommandRouter, argument, int_list, json_argument

logger = logging.getLogger(__name__)

router = CommandRouter()

_descriptor = TypeAdapter(SetDescriptor)


@router.command(
    "rate",
    help="I(phi) for one phi, or inf I over a set of P(R)",
    arguments=[
        argument("--lambda", dest="lam", type=json_argument, required=True),
        argument("--psi", type=json_argument, required=True),
        argument("--phi", type=json_argument),
        argument("--set", dest="descriptor", type=json_argument, help="set descriptor (JSON or file)"),
        argument("--require-feasible", action="store_true"),
    ],
)
def rate_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    if (args.phi is None) == (args.descriptor is None):
        raise ArgumentError("rate needs exactly one of --phi, --set")
    lam = load_joint(args.lam, ctx)
    psi = load_dist(args.psi, ctx, "psi")
    base, _ = inf_over_s_margin(lam, psi)
    payload = {"inf_over_s_margin": base, "phi_star": sanov_minimizer(lam, psi).to_json()}
    if args.phi is not None:
        phi = load_dist(args.phi, ctx, "phi")
        projection = i_projection(lam, phi, psi, tol=ctx.settings.IPF_TOL, max_iter=ctx.settings.IPF_MAX_ITER)
        value = rate_I(lam, psi, phi, tol=ctx.settings.IPF_TOL, max_iter=ctx.settings.IPF_MAX_ITER)
        payload.update({"phi": phi.to_json(), "rate": value, "J": projection.to_dict()})
    else:
        try:
            descriptor = _descriptor.validate_python(args.descriptor)
        except ValueError as e:
            raise ArgumentError(f"--set: {e}")
        value, argmin = inf_rate_over_set(lam, psi, descriptor, ctx.settings.GRID_RESOLUTION, ctx.settings.WORKERS)
        payload.update({"set": args.descriptor, "inf_rate": value, "argmin": argmin.to_json() if argmin else None})
    write_json(payload, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode)
    if args.require_feasible and math.isinf(value):
        raise InfeasibleError("the requested rate is +inf: no coupling absolutely continuous w.r.t. lambda exists")
    return 0


@router.command(
    "round",
    help="Round a coupling xi onto P_emp^n(R x S) with S-marginal exactly zeta",
    arguments=[
        argument("--xi", type=json_argument, required=True),
        argument("--zeta", type=int_list, required=True, help="counts of n*zeta, comma-separated"),
        argument("--lambda", dest="lam", type=json_argument, required=True),
        argument("--delta", type=float, help="also report the (kappa, N) certificate for this delta"),
    ],
)
def round_command(args: argparse.Namespace, ctx: CommandContext) -> int:
    lam = load_joint(args.lam, ctx)
    xi = load_joint(args.xi, ctx, "xi")
    if len(args.zeta) != lam.cols.size:
        raise ArgumentError(f"--zeta has {len(args.zeta)} counts for {lam.cols.size} column symbols")
    zeta = load_model(
        EmpiricalMeasure, {"alphabet": lam.cols, "n": sum(args.zeta), "counts": tuple(args.zeta)}, "zeta"
    )
    nu = match_s_margin(xi, zeta, lam)
    payload = check_rounding(nu, xi, zeta, lam).to_dict()
    if args.delta is not None:
        cert = certificate_for(xi, args.delta)
        payload["certificate"] = {"delta": cert.delta, "kappa": cert.kappa, "N": cert.N, "M": cert.M}
    write_json(payload, ctx.config.out, ctx.digest, ctx.config.arithmetic_mode)
    return 0
