"""``reln audit``: run the property suite; exit 1 if any property fails."""

import argparse
import logging

from cli.arguments import algebra_name, non_negative_int, positive_float, positive_int
from cli.services.audit import run_audit
from config import settings
from lie.algebra import algebra_from_flag
from utils.formatting import format_audit_report

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("audit", help="check invariance and equivariance properties")
    parser.add_argument("--algebra", type=algebra_name, required=True, help="so3, sl2, sl3, sp4, so13 or glN")
    parser.add_argument("--trials", type=positive_int, default=100)
    parser.add_argument("--sigma", type=positive_float, default=settings.group_sigma, help="group sampling scale")
    parser.add_argument("--seed", type=non_negative_int, default=0)
    parser.add_argument("--inject-fault", action="store_true", help="replace the invariant form by a random one")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    basis = algebra_from_flag(args.algebra)
    results = run_audit(basis, args.trials, args.sigma, args.seed, args.inject_fault)
    print(format_audit_report(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed: {', '.join(failed)}")
        return 1
    return 0
