"""``reln info``: describe an algebra or the header of an RLND/RLNM file."""

import argparse
import logging
from pathlib import Path

from cli.arguments import algebra_name
from errors import BadMagicError
from lie.algebra import algebra_from_flag
from lie.forms import center_decomposition, form_for_model, killing_oracle, nondegeneracy_rank
from network.serialization import MODEL_MAGIC, load_checkpoint
from tasks.storage import DATASET_MAGIC, decode_dataset
from utils.formatting import format_config, format_model_header

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("info", help="describe an algebra or a data/model file")
    target = parser.add_mutually_exclusive_group(required=True)
    target.add_argument("--algebra", type=algebra_name, help="so3, sl2, sl3, sp4, so13 or glN")
    target.add_argument("--file", type=Path)
    parser.set_defaults(handler=run)


def describe_algebra(text: str) -> str:
    basis = algebra_from_flag(text)
    return format_config(
        f"Algebra {basis.label}",
        {
            "n": basis.n,
            "K": basis.K,
            "center_dim": int(center_decomposition(basis).center_coords.shape[0]),
            "killing_rank": nondegeneracy_rank(killing_oracle(basis)),
            "modified_form_rank": nondegeneracy_rank(form_for_model(basis, "modified_gl")),
        },
    )


def describe_file(path: Path) -> str:
    payload = Path(path).read_bytes()
    if payload[:4] == DATASET_MAGIC:
        ds = decode_dataset(payload)
        return format_config(
            "RLND dataset",
            {
                "algebra": ds.algebra,
                "n": ds.n,
                "K": ds.K,
                "inputs_per_sample": ds.inputs_per_sample,
                "channels": ds.channels,
                "target_dim": ds.target_dim,
                "N": ds.N,
                "seed": ds.seed,
                "target_mean": ds.target_mean,
                "target_std": ds.target_std,
            },
        )
    if payload[:4] == MODEL_MAGIC:
        checkpoint = load_checkpoint(payload)
        return format_model_header(checkpoint.model.descriptor(checkpoint.state))
    raise BadMagicError(f"{path} is neither an RLND dataset nor an RLNM model")


def run(args: argparse.Namespace) -> int:
    print(describe_algebra(args.algebra) if args.algebra else describe_file(args.file))
    return 0
