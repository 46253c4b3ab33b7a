"""``reln train``: fit a ReLN (or the matched MLP baseline) to an RLND dataset."""

import argparse
import logging
from pathlib import Path

from cli.arguments import non_negative_float, non_negative_int, positive_float, positive_int
from config import settings
from models import TrainConfig
from network.model import DEFAULT_LAYERS, parse_layers
from tasks.storage import read_dataset
from training.trainer import train_loop
from utils.formatting import format_eval_report

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="train a model")
    parser.add_argument("--data", type=Path, required=True, help="training RLND file")
    parser.add_argument("--test", type=Path, default=None, help="held-out RLND file for per-epoch evaluation")
    parser.add_argument("--out", type=Path, default=None, help="best RLNM model, written when training ends")
    parser.add_argument("--metrics", type=Path, default=None, help="tab-separated per-epoch metrics log")
    parser.add_argument("--checkpoint", type=Path, default=None, help="last-epoch model with optimizer state")
    parser.add_argument("--resume", type=Path, default=None, help="checkpoint to continue from")
    parser.add_argument("--layers", default=DEFAULT_LAYERS, help="comma list, e.g. linear,relu,bracket,linear")
    parser.add_argument("--channels", type=positive_int, default=settings.channels)
    parser.add_argument("--form", choices=("modified_gl", "modified_general", "killing_oracle", "trace"), default="modified_gl")
    parser.add_argument("--head-hidden", type=positive_int, default=settings.head_hidden)
    parser.add_argument("--baseline", action="store_true", help="train the parameter-matched MLP instead")
    parser.add_argument("--lr", type=positive_float, default=1e-3)
    parser.add_argument("--beta1", type=positive_float, default=0.9)
    parser.add_argument("--beta2", type=positive_float, default=0.999)
    parser.add_argument("--eps", type=positive_float, default=1e-8)
    parser.add_argument("--batch-size", type=positive_int, default=100)
    parser.add_argument("--epochs", type=non_negative_int, default=10)
    parser.add_argument("--seed", type=non_negative_int, default=0)
    parser.add_argument("--conj", type=positive_int, default=settings.epoch_conj, help="conjugations per evaluation")
    parser.add_argument("--group-sigma", type=non_negative_float, default=settings.group_sigma)
    parser.add_argument("--augment", type=non_negative_int, default=0, help="conjugated copies per sample per epoch")
    parser.add_argument("--val-fraction", type=non_negative_float, default=settings.val_fraction)
    parser.add_argument("--chunk-size", type=positive_int, default=settings.chunk_size)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    channels = read_dataset(args.data).channels
    cfg = TrainConfig(
        train_path=args.data,
        test_path=args.test,
        out_path=args.out,
        metrics_path=args.metrics,
        checkpoint_path=args.checkpoint,
        resume_path=args.resume,
        layers=parse_layers(args.layers, channels, args.channels),
        form=args.form,
        head_hidden=args.head_hidden,
        baseline=args.baseline,
        lr=args.lr,
        beta1=args.beta1,
        beta2=args.beta2,
        eps=args.eps,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        eval_conj=args.conj,
        group_sigma=args.group_sigma,
        augment=args.augment,
        val_fraction=args.val_fraction,
        threads=args.threads,
        chunk_size=args.chunk_size,
    )
    result = train_loop(cfg)
    print(f"trained {result.model.kind} model with {result.model.n_params} parameters for {len(result.history)} epochs")
    print(format_eval_report(result.report))
    return 0
