"""argparse value types; a bad value becomes a usage error (exit code 2)."""

import argparse
from collections.abc import Callable

from errors import AlgebraError
from lie.algebra import algebra_from_flag


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def int_at_least(minimum: int) -> Callable[[str], int]:
    def parse(text: str) -> int:
        value = int(text)
        if value < minimum:
            raise argparse.ArgumentTypeError(f"expected an integer >= {minimum}, got {text}")
        return value

    parse.__name__ = f"int_at_least_{minimum}"
    return parse


def algebra_name(text: str) -> str:
    """An algebra spelling ``algebra_from_flag`` accepts; the text itself is kept."""
    try:
        algebra_from_flag(text)
    except AlgebraError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    return text
