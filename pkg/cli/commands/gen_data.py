"""``reln gen-data``: write an RLND dataset."""

import argparse
import logging
from pathlib import Path

from cli.arguments import int_at_least, non_negative_int, positive_float, positive_int
from config import settings
from models import NoiseParams
from tasks.covseq import gen_covseq_dataset
from tasks.sp4 import gen_sp4_dataset
from tasks.storage import write_dataset

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("gen-data", help="generate a dataset file")
    parser.add_argument(
        "--task",
        choices=("sp4", "covseq"),
        required=True,
        help="sp4 (scalar target, trainable) or covseq (3-vector target, generator only: train needs a scalar target)",
    )
    parser.add_argument("--n", type=positive_int, required=True, help="number of samples")
    parser.add_argument("--seed", type=non_negative_int, required=True)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--sigma", type=positive_float, default=settings.sp4_sigma, help="sp4 sampling scale")
    parser.add_argument("--steps", type=int_at_least(2), default=200, help="covseq steps per sequence")
    parser.add_argument("--dt", type=positive_float, default=0.05, help="covseq time step (s)")
    parser.add_argument("--sigma-min", type=positive_float, default=0.2)
    parser.add_argument("--sigma-max", type=positive_float, default=1.0)
    parser.add_argument("--lambda", dest="lam", type=positive_float, default=0.8)
    parser.add_argument("--v-mid", type=positive_float, default=None, help="default: mean speed of each sequence")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.task == "sp4":
        ds = gen_sp4_dataset(args.n, args.sigma, args.seed)
    else:
        params = NoiseParams(sigma_min=args.sigma_min, sigma_max=args.sigma_max, lam=args.lam, v_mid=args.v_mid)
        ds = gen_covseq_dataset(args.n, args.steps, args.dt, params, args.seed)
    checksum = write_dataset(ds, args.out)
    print(f"wrote {ds.N} samples to {args.out} (crc32 {checksum:08x})")
    return 0
