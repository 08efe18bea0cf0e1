"""
Padded index batches.

Sentences become rectangular integer arrays the encoder can consume in one
pass. In parse layout position 0 holds ROOT and tokens follow at 1..l; in
plain layout (language-model objectives) tokens start at 0.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from udpx.core.exceptions import DataFormatError
from udpx.domain.models.alphabets import PAD, ROOT, Alphabets
from udpx.domain.models.sentence import Sentence


@dataclass
class Batch:
    """Index arrays for B sentences padded to T positions."""

    words: np.ndarray  # (B, T)
    chars: np.ndarray  # (B, T, C)
    char_lengths: np.ndarray  # (B, T)
    pos: np.ndarray  # (B, T)
    mask: np.ndarray  # (B, T) real positions, ROOT included
    lengths: np.ndarray  # (B,) tokens per sentence, ROOT excluded
    has_root: bool
    heads: Optional[np.ndarray] = None  # (B, T), 0 at ROOT and padding
    labels: Optional[np.ndarray] = None  # (B, T) label classes, 0 at ROOT and padding
    lm_vectors: Optional[np.ndarray] = None  # (B, T, d)

    @property
    def size(self) -> int:
        return self.words.shape[0]

    @property
    def width(self) -> int:
        return self.words.shape[1]

    @property
    def offset(self) -> int:
        """Position of the first token."""
        return 1 if self.has_root else 0

    @property
    def token_mask(self) -> np.ndarray:
        """Positions holding real tokens (ROOT and padding excluded)."""
        mask = self.mask.copy()
        if self.has_root:
            mask[:, 0] = False
        return mask


def index_batch(
    sentences: Sequence[Sentence],
    alphabets: Alphabets,
    with_root: bool = True,
    min_char_width: int = 1,
    orders: Optional[Sequence[np.ndarray]] = None,
    with_gold: bool = False,
) -> Batch:
    """
    Index sentences into a Batch.

    Args:
        sentences: Sentences of the batch
        alphabets: Symbol maps
        with_root: Put ROOT at position 0
        min_char_width: Minimum character axis width (the convolution window)
        orders: Per sentence, the original token index at each output slot
        with_gold: Fill heads and label classes (sentences must be labeled)

    Raises:
        DataFormatError: contextual vectors given for some sentences only
    """
    if not sentences:
        raise DataFormatError("cannot index an empty batch")
    offset = 1 if with_root else 0
    batch_size = len(sentences)
    width = max(len(sentence) for sentence in sentences) + offset
    char_width = max(
        [min_char_width, 1] + [len(form) for sentence in sentences for form in sentence.forms]
    )

    words = np.full((batch_size, width), PAD, dtype=np.int64)
    chars = np.full((batch_size, width, char_width), PAD, dtype=np.int64)
    char_lengths = np.zeros((batch_size, width), dtype=np.int64)
    pos = np.full((batch_size, width), PAD, dtype=np.int64)
    mask = np.zeros((batch_size, width), dtype=bool)
    lengths = np.array([len(sentence) for sentence in sentences], dtype=np.int64)
    heads = np.zeros((batch_size, width), dtype=np.int64) if with_gold else None
    labels = np.zeros((batch_size, width), dtype=np.int64) if with_gold else None

    has_vectors = [sentence.lm_vectors is not None for sentence in sentences]
    if any(has_vectors) and not all(has_vectors):
        raise DataFormatError("contextual vectors are missing for part of the batch")
    lm_vectors = None
    if all(has_vectors):
        dim = sentences[0].lm_vectors.shape[1]
        lm_vectors = np.zeros((batch_size, width, dim), dtype=np.float64)

    for b, sentence in enumerate(sentences):
        order = orders[b] if orders is not None else np.arange(len(sentence))
        if with_root:
            words[b, 0] = ROOT
            chars[b, 0, 0] = ROOT
            char_lengths[b, 0] = 1
            pos[b, 0] = ROOT
            mask[b, 0] = True
        for slot, original in enumerate(order):
            token = sentence.tokens[original]
            t = slot + offset
            words[b, t] = alphabets.word_index(token.form)
            indices = alphabets.char_indices(token.form)
            chars[b, t, : len(indices)] = indices
            char_lengths[b, t] = len(indices)
            pos[b, t] = alphabets.pos_index(token.upos)
            mask[b, t] = True
            if lm_vectors is not None:
                lm_vectors[b, t] = sentence.lm_vectors[original]
            if with_gold:
                heads[b, t] = token.head
                labels[b, t] = alphabets.label_class(token.deprel)

    return Batch(
        words=words,
        chars=chars,
        char_lengths=char_lengths,
        pos=pos,
        mask=mask,
        lengths=lengths,
        has_root=with_root,
        heads=heads,
        labels=labels,
        lm_vectors=lm_vectors,
    )


def batches(items: Sequence, size: int, rng: Optional[np.random.Generator] = None) -> List[List]:
    """Split items into consecutive chunks, shuffled first when rng is given."""
    indices = np.arange(len(items))
    if rng is not None:
        rng.shuffle(indices)
    starts = range(0, len(items), size)
    return [[items[i] for i in indices[start : start + size]] for start in starts]
