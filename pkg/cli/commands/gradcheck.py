"""``reln gradcheck``: finite-difference check of a random model's gradients."""

import argparse
import logging

from cli.arguments import algebra_name, non_negative_int, positive_float, positive_int
from lie.algebra import algebra_from_flag
from lie.rng import DATA_STREAM, make_rng
from network.model import DEFAULT_LAYERS, init_params, parse_layers
from training.gradcheck import DEFAULT_STEP, grad_check
from utils.formatting import format_gradcheck

logger = logging.getLogger(__name__)

PASS_THRESHOLD = 1e-4


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("gradcheck", help="compare analytic gradients with finite differences")
    parser.add_argument("--algebra", type=algebra_name, default="sp4")
    parser.add_argument("--layers", default=DEFAULT_LAYERS)
    parser.add_argument("--in-channels", type=positive_int, default=2)
    parser.add_argument("--channels", type=positive_int, default=4)
    parser.add_argument("--head-hidden", type=positive_int, default=8)
    parser.add_argument("--batch", type=positive_int, default=4)
    parser.add_argument("--set-size", type=positive_int, default=3, help="set axis length when the stack pools")
    parser.add_argument("--scale", type=positive_float, default=0.5, help="input coordinate scale")
    parser.add_argument("--h", type=positive_float, default=DEFAULT_STEP)
    parser.add_argument("--seed", type=non_negative_int, default=0)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    basis = algebra_from_flag(args.algebra)
    specs = parse_layers(args.layers, args.in_channels, args.channels)
    model = init_params(specs, args.seed, basis, args.head_hidden)
    rng = make_rng(args.seed, DATA_STREAM)
    lead = (args.batch, args.set_size) if model.has_pool else (args.batch,)
    x = rng.normal(0.0, args.scale, size=(*lead, basis.K, args.in_channels))
    target = rng.normal(size=(args.batch, 1))

    report = grad_check(model, x, target, args.h, rng)
    print(format_gradcheck(report.per_layer(), report.max_rel_err))
    if report.max_rel_err > PASS_THRESHOLD:
        logger.warning(f"max relative error {report.max_rel_err:.3e} exceeds {PASS_THRESHOLD:g}")
        return 1
    return 0
