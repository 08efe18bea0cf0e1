"""
Alphabet construction.
"""

from collections import Counter
from typing import Dict, Iterable, List, Sequence

from udpx.core.exceptions import AlphabetError
from udpx.core.logger import get_logger
from udpx.domain.models.alphabets import RESERVED_SYMBOLS, UNKNOWN_POS, Alphabet, Alphabets
from udpx.domain.models.sentence import Sentence, Treebank

logger = get_logger("vocab")


def _first_occurrence(symbols: Iterable[str]) -> List[str]:
    seen: Dict[str, None] = {}
    for symbol in symbols:
        if symbol not in seen:
            seen[symbol] = None
    return list(seen)


def build_alphabets(
    labeled: Treebank,
    unlabeled: Sequence[Sentence] = (),
    max_vocab: int = 100_000,
    lowercase_fallback: bool = True,
) -> Alphabets:
    """
    Build word, character, POS and label alphabets.

    Words are the max_vocab most frequent forms over labeled and unlabeled
    text, ties broken by first occurrence. Characters and POS tags cover
    everything seen; labels cover exactly the relations of the labeled data.

    Raises:
        AlphabetError: labeled is empty
    """
    if len(labeled) == 0:
        raise AlphabetError("cannot build alphabets from an empty labeled treebank")

    sentences = list(labeled) + list(unlabeled)
    forms = [form for sentence in sentences for form in sentence.forms]

    counts = Counter(forms)
    first_seen = {form: i for i, form in reversed(list(enumerate(forms)))}
    ranked = sorted(
        (form for form in counts if form not in RESERVED_SYMBOLS),
        key=lambda form: (-counts[form], first_seen[form]),
    )

    alphabets = Alphabets(
        words=Alphabet("words", ranked[:max_vocab]),
        chars=Alphabet("chars", _first_occurrence(char for form in forms for char in form)),
        pos=Alphabet(
            "pos",
            _first_occurrence(
                tag for sentence in sentences for tag in sentence.upos if tag != UNKNOWN_POS
            ),
        ),
        labels=Alphabet(
            "labels",
            _first_occurrence(
                deprel
                for sentence in labeled
                for deprel in sentence.deprels
                if deprel is not None
            ),
        ),
        lowercase_fallback=lowercase_fallback,
    )

    logger.info(
        f"Alphabets: {alphabets.words.size} words (of {len(counts)} types), "
        f"{alphabets.chars.size} chars, {alphabets.pos.size} POS tags, "
        f"{alphabets.labels.size} labels"
    )
    return alphabets
