import logging
from typing import Any, Dict, Sequence, Union

import numpy as np
import yaml


def load_document(filepath: str) -> Dict[str, Any]:
    """
    Load a JSON or YAML configuration document.

    Args:
        filepath: Path to the document

    Returns:
        The parsed mapping
    """
    with open(filepath, "r") as f:
        return yaml.safe_load(f)


def make_rng(seed: Union[int, Sequence[int]]) -> np.random.Generator:
    return np.random.default_rng(seed)


def decode_complex(value: Union[Sequence[float], float, int]) -> complex:
    """Read a complex number written as [re, im] (a bare real is accepted)."""
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if len(value) != 2:
        raise ValueError(f"complex numbers are [re, im] pairs, got {value!r}")
    return complex(float(value[0]), float(value[1]))


def decode_matrix(value: Any, complex_entries: bool = False) -> np.ndarray:
    a = np.asarray(value, dtype=float)
    if complex_entries:
        if a.shape[-1] != 2:
            raise ValueError("complex matrix entries must be [re, im] pairs")
        return a[..., 0] + 1j * a[..., 1]
    return a


def relative_error(actual, expected) -> float:
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    scale = max(1.0, float(np.max(np.abs(expected))) if expected.size else 1.0)
    return float(np.max(np.abs(actual - expected))) / scale


def log_check(name: str, residual: float, threshold: float) -> bool:
    passed = bool(residual <= threshold)
    if passed:
        logging.debug("check %s passed: %.3e <= %.1e", name, residual, threshold)
    else:
        logging.warning("check %s failed: %.3e > %.1e", name, residual, threshold)
    return passed
