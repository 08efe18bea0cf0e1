"""
Sentence domain model.

Tokens, sentences and treebanks as plain immutable values, independent of the
file formats they are read from. Position 0 of every sentence is the virtual
ROOT and is not stored among the tokens.
"""

from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from udpx.core.exceptions import TrainingError, TreeError

SPLITS = ("train", "dev", "test")

PUNCT_TAG = "PUNCT"


@dataclass(frozen=True)
class Token:
    """One word with its POS tag and, when annotated, its head and relation."""

    form: str
    upos: str
    head: Optional[int] = None
    deprel: Optional[str] = None
    is_punct: bool = False


def validate_heads(heads: Sequence[int]) -> None:
    """
    Check that heads (1-based dependents, 0 = ROOT) form a tree rooted at 0.

    Raises:
        TreeError: a head is out of range, points at itself, or lies on a cycle
    """
    length = len(heads)
    for i, head in enumerate(heads, start=1):
        if not 0 <= head <= length:
            raise TreeError(f"token {i}: head {head} outside [0, {length}]")
        if head == i:
            raise TreeError(f"token {i}: token is its own head")

    # every chain of heads must reach 0 within length steps
    reaches_root = [False] * (length + 1)
    reaches_root[0] = True
    for start in range(1, length + 1):
        path = []
        node = start
        while not reaches_root[node]:
            if node in path:
                raise TreeError(f"cycle through tokens {sorted(path[path.index(node):])}")
            path.append(node)
            node = heads[node - 1]
        for visited in path:
            reaches_root[visited] = True


@dataclass(frozen=True)
class Sentence:
    """
    An ordered list of tokens.

    Either every token carries a head or none does; headed sentences always
    form a tree. lm_vectors optionally holds one precomputed contextual vector
    per token (shape: tokens x dim).
    """

    tokens: Tuple[Token, ...]
    comments: Tuple[str, ...] = ()
    lm_vectors: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if not isinstance(self.comments, tuple):
            object.__setattr__(self, "comments", tuple(self.comments))
        if not self.tokens:
            raise TreeError("sentence must contain at least one token")

        headed = [token.head is not None for token in self.tokens]
        if any(headed) and not all(headed):
            raise TreeError("either all tokens carry a head or none does")
        if all(headed):
            validate_heads(self.heads)

        if self.lm_vectors is not None and self.lm_vectors.shape[0] != len(self.tokens):
            raise TreeError(
                f"{self.lm_vectors.shape[0]} contextual vectors for {len(self.tokens)} tokens"
            )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> List[str]:
        return [token.form for token in self.tokens]

    @property
    def upos(self) -> List[str]:
        return [token.upos for token in self.tokens]

    @property
    def heads(self) -> List[Optional[int]]:
        return [token.head for token in self.tokens]

    @property
    def deprels(self) -> List[Optional[str]]:
        return [token.deprel for token in self.tokens]

    @property
    def punct_mask(self) -> List[bool]:
        return [token.is_punct for token in self.tokens]

    def is_headed(self) -> bool:
        return self.tokens[0].head is not None

    def is_labeled(self) -> bool:
        return self.is_headed() and all(token.deprel is not None for token in self.tokens)

    def with_annotation(self, heads: Sequence[int], deprels: Sequence[str]) -> "Sentence":
        """Copy with new heads and labels (validated as a tree)."""
        if len(heads) != len(self) or len(deprels) != len(self):
            raise TreeError(
                f"annotation for {len(heads)} heads / {len(deprels)} labels "
                f"on a sentence of {len(self)} tokens"
            )
        tokens = tuple(
            replace(token, head=int(head), deprel=deprel)
            for token, head, deprel in zip(self.tokens, heads, deprels)
        )
        return replace(self, tokens=tokens)

    def without_annotation(self) -> "Sentence":
        """Copy with heads and labels removed."""
        tokens = tuple(replace(token, head=None, deprel=None) for token in self.tokens)
        return replace(self, tokens=tokens)

    def with_lm_vectors(self, vectors: Optional[np.ndarray]) -> "Sentence":
        return replace(self, lm_vectors=vectors)


@dataclass
class Treebank:
    """Sentences of one split."""

    sentences: List[Sentence] = field(default_factory=list)
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"Invalid split '{self.split}'. Must be one of: {', '.join(SPLITS)}")
        self.sentences = list(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, index: int) -> Sentence:
        return self.sentences[index]

    @property
    def token_count(self) -> int:
        return sum(len(sentence) for sentence in self.sentences)

    def ensure_non_empty(self, operation: str) -> None:
        """Training operations refuse empty treebanks."""
        if not self.sentences:
            raise TrainingError(f"{operation}: the {self.split} treebank is empty")

    def ensure_headed(self, operation: str) -> None:
        for index, sentence in enumerate(self.sentences):
            if not sentence.is_labeled():
                raise TreeError(f"{operation}: sentence {index} has no heads or labels")
