"""
Synthetic dependency grammar for tests.

Sentences follow [DET] [ADJ] NOUN VERB [DET] [ADJ] NOUN [.] with a fixed
head rule: determiners and adjectives attach to the next noun, the subject
noun and the object noun to the verb, the verb and any final full stop as
follows (verb to ROOT, stop to the verb). The vocabulary has 20 forms.
"""

from typing import List, Optional, Sequence

import numpy as np

from udpx.domain.models.sentence import Sentence, Token, Treebank

NOUNS = [f"n{i}" for i in range(8)]
VERBS = [f"v{i}" for i in range(4)]
DETS = [f"d{i}" for i in range(3)]
ADJS = [f"a{i}" for i in range(4)]
STOP = "."

VOCABULARY = NOUNS + VERBS + DETS + ADJS + [STOP]


def _noun_phrase(rng: np.random.Generator, prefix: str) -> List[tuple]:
    words = []
    if rng.random() < 0.5:
        words.append((prefix + str(rng.choice(DETS)), "DET", "det"))
    if rng.random() < 0.5:
        words.append((prefix + str(rng.choice(ADJS)), "ADJ", "amod"))
    words.append((prefix + str(rng.choice(NOUNS)), "NOUN", None))
    return words


def synthetic_sentence(rng: np.random.Generator, prefix: str = "") -> Sentence:
    """One sentence of 3 to 8 tokens with its gold tree."""
    subject = _noun_phrase(rng, prefix)
    obj = _noun_phrase(rng, prefix)
    verb_position = len(subject) + 1
    tokens = []

    def attach(phrase, offset, relation):
        noun_position = offset + len(phrase)
        for form, upos, deprel in phrase:
            if upos == "NOUN":
                tokens.append(Token(form, upos, head=verb_position, deprel=relation))
            else:
                tokens.append(Token(form, upos, head=noun_position, deprel=deprel))

    attach(subject, 0, "nsubj")
    tokens.append(Token(prefix + str(rng.choice(VERBS)), "VERB", head=0, deprel="root"))
    attach(obj, verb_position, "obj")
    if rng.random() < 0.5:
        tokens.append(Token(STOP, "PUNCT", head=verb_position, deprel="punct", is_punct=True))
    return Sentence(tokens=tuple(tokens))


def synthetic_treebank(
    count: int, seed: int = 0, split: str = "train", prefix: str = ""
) -> Treebank:
    """count sentences drawn from the grammar; prefix renames content forms."""
    rng = np.random.default_rng(seed)
    return Treebank([synthetic_sentence(rng, prefix) for _ in range(count)], split=split)


def unlabeled(sentences: Sequence[Sentence]) -> List[Sentence]:
    return [sentence.without_annotation() for sentence in sentences]


def chain_sentence(length: int, deprel: Optional[str] = "dep") -> Sentence:
    """Every token headed by its left neighbour, the first by ROOT."""
    return Sentence(
        tokens=tuple(
            Token(f"w{i}", "X", head=i, deprel=deprel if i else "root") for i in range(length)
        )
    )
