"""
Custom assertion functions for testing.

Provides specialized assertion functions for testing
trees, distributions and model directories.
"""

from pathlib import Path
from typing import Sequence, Union

import numpy as np

from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.sentence import Sentence, validate_heads
from udpx.modules.model.parser import ALPHABETS_FILE, CONFIG_FILE, MODEL_FILE
from udpx.numkernel.checkpoint import CHECKPOINT_HEADER


def assert_valid_tree(sentence: Sentence, message: str = None) -> None:
    """Assert that a sentence is headed, labeled and has exactly one root child."""
    if not sentence.is_labeled():
        raise AssertionError(message or f"Sentence is not fully annotated: {sentence.forms}")
    validate_heads(sentence.heads)
    roots = sum(1 for head in sentence.heads if head == 0)
    if roots != 1:
        raise AssertionError(message or f"Expected one child of ROOT, found {roots}")


def assert_distribution_normalized(dist: ParseDistribution, tolerance: float = 1e-6) -> None:
    """Assert that arc rows and label fibers sum to one."""
    if not dist.is_normalized(tolerance):
        raise AssertionError(
            f"Distribution not normalized: arc row sums {dist.arc_probs.sum(axis=1)}"
        )


def assert_model_dir(path: Union[str, Path]) -> None:
    """Assert that a directory holds a loadable model layout."""
    path = Path(path)
    for name in (MODEL_FILE, ALPHABETS_FILE, CONFIG_FILE):
        if not (path / name).exists():
            raise AssertionError(f"Model directory {path} lacks {name}")
    with open(path / MODEL_FILE, "rb") as f:
        if f.read(len(CHECKPOINT_HEADER)) != CHECKPOINT_HEADER:
            raise AssertionError(f"{path / MODEL_FILE} has no checkpoint header")


def assert_arrays_close(actual, expected, atol: float = 1e-8, message: str = None) -> None:
    """Assert that two arrays agree entrywise."""
    actual, expected = np.asarray(actual), np.asarray(expected)
    if actual.shape != expected.shape or not np.allclose(actual, expected, atol=atol):
        raise AssertionError(message or f"Arrays differ:\n{actual}\nvs\n{expected}")


def assert_same_heads(a: Sequence[Sentence], b: Sequence[Sentence]) -> None:
    """Assert that two sentence lists carry identical heads and labels."""
    assert len(a) == len(b)
    for left, right in zip(a, b):
        assert left.heads == right.heads
        assert left.deprels == right.deprels
