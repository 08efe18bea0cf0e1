"""
Treebank test fixtures.

Provides synthetic-grammar treebanks and unlabeled pools.
"""

from typing import List

import pytest

from udpx.domain.models.sentence import Sentence, Token, Treebank
from udpx.modules.data.vocab import build_alphabets
from tests.utils.synthetic import synthetic_treebank, unlabeled


@pytest.fixture
def train_treebank() -> Treebank:
    """Small synthetic training treebank."""
    return synthetic_treebank(24, seed=1, split="train")


@pytest.fixture
def dev_treebank() -> Treebank:
    """Small synthetic dev treebank."""
    return synthetic_treebank(8, seed=2, split="dev")


@pytest.fixture
def target_text() -> List[Sentence]:
    """Unlabeled sentences from the same grammar."""
    return unlabeled(synthetic_treebank(12, seed=3))


@pytest.fixture
def alphabets(train_treebank, target_text):
    """Alphabets over the synthetic data."""
    return build_alphabets(train_treebank, target_text)


@pytest.fixture
def two_token_sentence() -> Sentence:
    """'He ran' with its gold tree."""
    return Sentence(
        tokens=(
            Token("He", "PRON", head=2, deprel="nsubj"),
            Token("ran", "VERB", head=0, deprel="root"),
        )
    )
