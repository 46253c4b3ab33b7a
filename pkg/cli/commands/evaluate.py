"""``reln eval``: MSE, conjugated MSE and invariance error of a saved model."""

import argparse
import logging
from pathlib import Path

from cli.arguments import non_negative_float, non_negative_int, positive_int
from config import settings
from network.serialization import load_model
from tasks.storage import read_dataset
from training.metrics import evaluate
from utils.formatting import format_eval_report

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="evaluate a model on a dataset")
    parser.add_argument("--model", type=Path, required=True)
    parser.add_argument("--data", type=Path, required=True)
    parser.add_argument("--conj", type=positive_int, default=settings.eval_conj, help="number of conjugations M")
    parser.add_argument("--group-sigma", type=non_negative_float, default=settings.group_sigma)
    parser.add_argument("--seed", type=non_negative_int, default=0)
    parser.add_argument("--chunk-size", type=positive_int, default=settings.chunk_size)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    ds = read_dataset(args.data)
    report = evaluate(model, ds, args.conj, args.group_sigma, args.seed, args.chunk_size, args.threads)
    print(format_eval_report(report))
    return 0
