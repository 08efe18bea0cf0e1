"""
Attachment-score evaluation domain service.

UAS/LAS over aligned treebanks, the left-neighbour chain baseline and
paired bootstrap significance testing.
"""

from typing import List, Sequence, Tuple, Union

import numpy as np

from udpx.core.exceptions import DataFormatError
from udpx.domain.models.reports import EvaluationReport, SignificanceReport
from udpx.domain.models.sentence import Sentence, Treebank

BASELINE_LABEL = "dep"
SAMPLE_SIZE = 50
TRIALS = 1000

Sentences = Union[Treebank, Sequence[Sentence]]


def _align(pred: Sentences, gold: Sentences) -> List[Tuple[Sentence, Sentence]]:
    pred, gold = list(pred), list(gold)
    if len(pred) != len(gold):
        raise DataFormatError(f"{len(pred)} predicted sentences for {len(gold)} gold sentences")
    for index, (p, g) in enumerate(zip(pred, gold)):
        if len(p) != len(g):
            raise DataFormatError(
                f"sentence {index}: {len(p)} predicted tokens for {len(g)} gold tokens"
            )
        if not p.is_headed():
            raise DataFormatError(f"sentence {index}: prediction carries no heads")
        if not g.is_headed():
            raise DataFormatError(f"sentence {index}: gold carries no heads")
    return list(zip(pred, gold))


def sentence_counts(
    pred: Sentence, gold: Sentence, exclude_punct: bool = False
) -> Tuple[int, int, int, int]:
    """(correct heads, correct head and label, counted, excluded) for one sentence."""
    heads = labeled = counted = excluded = 0
    for p, g in zip(pred.tokens, gold.tokens):
        if exclude_punct and g.is_punct:
            excluded += 1
            continue
        counted += 1
        if p.head == g.head:
            heads += 1
            if p.deprel == g.deprel:
                labeled += 1
    return heads, labeled, counted, excluded


def uas_las(pred: Sentences, gold: Sentences, exclude_punct: bool = False) -> EvaluationReport:
    """
    Attachment scores as fractions.

    Punctuation (by the gold token's flag) leaves both numerator and
    denominator when exclude_punct is set. With nothing counted both
    scores are 0.

    Raises:
        DataFormatError: sentence count or a sentence length differs
    """
    totals = np.zeros(4, dtype=np.int64)
    for p, g in _align(pred, gold):
        totals += sentence_counts(p, g, exclude_punct)
    heads, labeled, counted, excluded = (int(x) for x in totals)
    return EvaluationReport(
        uas=heads / counted if counted else 0.0,
        las=labeled / counted if counted else 0.0,
        counted_tokens=counted,
        excluded_tokens=excluded,
    )


def right_arc_baseline(sentences: Sentences) -> Treebank:
    """Each word headed by the word before it, the first by ROOT."""
    return Treebank(
        [
            sentence.with_annotation(list(range(len(sentence))), [BASELINE_LABEL] * len(sentence))
            for sentence in sentences
        ],
        split="test",
    )


def per_sentence_counts(
    pred: Sentences, gold: Sentences, exclude_punct: bool = False
) -> np.ndarray:
    """(n_sentences, 3) array of correct heads, correct labeled, counted tokens."""
    rows = [sentence_counts(p, g, exclude_punct)[:3] for p, g in _align(pred, gold)]
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def bootstrap_significance(
    sys_a: np.ndarray,
    sys_b: np.ndarray,
    rng: np.random.Generator,
    sample_size: int = SAMPLE_SIZE,
    trials: int = TRIALS,
) -> SignificanceReport:
    """
    Paired bootstrap over sentences.

    sys_a and sys_b are per_sentence_counts of two systems on the same test
    set. Each trial draws sample_size sentences without replacement and
    scores both systems on them; p is the fraction of trials in which A's
    score is not above B's.

    Raises:
        DataFormatError: systems scored on different sets, or the set is
            smaller than sample_size
    """
    sys_a, sys_b = np.asarray(sys_a), np.asarray(sys_b)
    if sys_a.shape != sys_b.shape or not np.array_equal(sys_a[:, 2], sys_b[:, 2]):
        raise DataFormatError("both systems must be scored on the identical test set")
    n = sys_a.shape[0]
    if n < sample_size:
        raise DataFormatError(f"test set has {n} sentences, bootstrap samples {sample_size}")

    not_better = np.zeros(2, dtype=np.int64)
    for _ in range(trials):
        sample = rng.choice(n, size=sample_size, replace=False)
        a = sys_a[sample].sum(axis=0)
        b = sys_b[sample].sum(axis=0)
        counted = max(int(a[2]), 1)
        not_better += (a[:2] / counted) <= (b[:2] / counted)
    return SignificanceReport(
        p_uas=float(not_better[0] / trials),
        p_las=float(not_better[1] / trials),
        sample_size=sample_size,
        trials=trials,
    )
