"""
Unlabeled corpus reading.

One pretokenized sentence per line. A token is either a bare form or
"form/TAG" where TAG is one of the known POS tags (the universal tags by
default, plus any configured punctuation tags). Anything else, "AC/DC" or
"1/2" included, is a bare form and gets the unknown-POS placeholder.
"""

from pathlib import Path
from typing import Collection, Iterable, List, Optional, Sequence, TextIO, Union

from udpx.core.config import UNIVERSAL_POS_TAGS
from udpx.core.logger import get_logger
from udpx.domain.models.alphabets import UNKNOWN_POS
from udpx.domain.models.sentence import Sentence, Token
from udpx.modules.data.conllu import is_punct_tag, read_text_lines

logger = get_logger("corpus")


def split_token(raw: str, tags: Optional[Collection[str]] = None) -> Token:
    """'form' or 'form/TAG' to a Token without head."""
    tags = UNIVERSAL_POS_TAGS if tags is None else tags
    form, slash, tag = raw.rpartition("/")
    if slash and form and tag in tags:
        return Token(form=form, upos=tag)
    return Token(form=raw, upos=UNKNOWN_POS)


def load_unlabeled(
    text: Union[str, TextIO, Iterable[str]],
    min_words: int = 10,
    punct_tags: Sequence[str] = (),
    pos_tags: Optional[Collection[str]] = None,
) -> List[Sentence]:
    """
    Sentences with strictly more than min_words tokens, in file order.

    Blank lines are skipped.
    """
    tags = set(UNIVERSAL_POS_TAGS if pos_tags is None else pos_tags) | set(punct_tags)
    lines = text.splitlines() if isinstance(text, str) else (line.rstrip("\r\n") for line in text)
    sentences: List[Sentence] = []
    seen = 0
    for line in lines:
        raw_tokens = line.split()
        if not raw_tokens:
            continue
        seen += 1
        if len(raw_tokens) <= min_words:
            continue
        tokens = []
        for raw in raw_tokens:
            token = split_token(raw, tags)
            if is_punct_tag(token.upos, punct_tags):
                token = Token(form=token.form, upos=token.upos, is_punct=True)
            tokens.append(token)
        sentences.append(Sentence(tokens=tuple(tokens)))

    logger.debug(f"Kept {len(sentences)} of {seen} sentences longer than {min_words} tokens")
    return sentences


def read_unlabeled(
    path: Union[str, Path],
    min_words: int = 10,
    punct_tags: Sequence[str] = (),
    pos_tags: Optional[Collection[str]] = None,
) -> List[Sentence]:
    """Read an unlabeled corpus file (UTF-8, errors name the line)."""
    return load_unlabeled(
        read_text_lines(path), min_words=min_words, punct_tags=punct_tags, pos_tags=pos_tags
    )


def sentences_as_text(sentences: Sequence[Sentence]) -> List[Sentence]:
    """Copies of sentences without heads or labels (LM pool material)."""
    return [s.without_annotation() if s.is_headed() else s for s in sentences]
