"""Assertion helpers shared by the test modules."""

import numpy as np


def relative_deviation(actual, expected) -> float:
    """``||actual - expected|| / (1 + ||expected||)``."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    return float(np.linalg.norm(actual - expected) / (1.0 + np.linalg.norm(expected)))


def assert_close(actual, expected, rtol: float = 1e-9) -> None:
    deviation = relative_deviation(actual, expected)
    assert deviation <= rtol, f"relative deviation {deviation:.3e} exceeds {rtol:.1e}"
