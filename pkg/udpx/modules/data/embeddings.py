"""
Pretrained word vectors and precomputed contextual vectors.

Word vector files hold "form v1 ... vd" per line with an optional
"count dim" header line. Contextual vector files hold one block per
sentence, one line of floats per token, blocks separated by blank lines.
"""

from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from udpx.core.exceptions import DataFormatError
from udpx.core.logger import get_logger
from udpx.domain.models.alphabets import N_RESERVED, Alphabets
from udpx.domain.models.sentence import Sentence
from udpx.modules.data.conllu import read_text_lines

INIT_RANGE = 0.1

logger = get_logger("embeddings")


def _is_header(fields: List[str]) -> bool:
    return len(fields) == 2 and all(field.isdigit() for field in fields)


def parse_embeddings(lines: Sequence[str], source: str = "") -> Tuple[List[str], np.ndarray]:
    """
    Forms and their vectors, in file order.

    Raises:
        DataFormatError: inconsistent dimension or non-numeric value
    """
    forms: List[str] = []
    rows: List[List[float]] = []
    dim = None
    for line_number, line in enumerate(lines, start=1):
        fields = line.rstrip().split(" ")
        if not line.strip():
            continue
        if line_number == 1 and _is_header(fields):
            dim = int(fields[1])
            continue
        form, values = fields[0], fields[1:]
        if dim is None:
            dim = len(values)
        if len(values) != dim or dim == 0:
            raise DataFormatError(
                f"expected {dim} values for '{form}', found {len(values)}", line_number, source
            )
        try:
            rows.append([float(value) for value in values])
        except ValueError:
            raise DataFormatError(
                f"non-numeric value in vector for '{form}'", line_number, source
            ) from None
        forms.append(form)

    matrix = np.asarray(rows, dtype=np.float64).reshape(len(rows), dim or 0)
    return forms, matrix


def read_embeddings(path: Union[str, Path]) -> Tuple[List[str], np.ndarray]:
    """Read a word vector file."""
    forms, matrix = parse_embeddings(read_text_lines(path), source=str(path))
    logger.info(f"Read {len(forms)} pretrained vectors of dim {matrix.shape[1]} from {path}")
    return forms, matrix


def init_word_table(
    alphabets: Alphabets,
    dim: int,
    rng: np.random.Generator,
    pretrained: Tuple[List[str], np.ndarray] = None,
) -> np.ndarray:
    """
    Word embedding table: pretrained rows where available, uniform(-0.1, 0.1) elsewhere.

    A word alphabet entry takes the vector of its exact form, else of its
    lowercase form.
    """
    table = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(len(alphabets.words), dim))
    if pretrained is None:
        return table

    forms, vectors = pretrained
    if vectors.shape[1] != dim:
        raise DataFormatError(
            f"pretrained vectors have dim {vectors.shape[1]}, word_dim is {dim}"
        )
    row_of = {}
    for row, form in enumerate(forms):
        row_of.setdefault(form, row)

    hits = 0
    for index, symbol in enumerate(alphabets.words.symbols, start=N_RESERVED):
        row = row_of.get(symbol, row_of.get(symbol.lower()))
        if row is not None:
            table[index] = vectors[row]
            hits += 1
    logger.info(f"Pretrained vectors cover {hits}/{alphabets.words.size} words")
    return table


def parse_contextual_vectors(lines: Sequence[str], source: str = "") -> List[np.ndarray]:
    """One (tokens x dim) array per blank-line-separated block."""
    blocks: List[np.ndarray] = []
    current: List[List[float]] = []
    dim = None
    for line_number, line in enumerate(list(lines) + [""], start=1):
        if not line.strip():
            if current:
                blocks.append(np.asarray(current, dtype=np.float64))
                current = []
            continue
        try:
            values = [float(value) for value in line.split()]
        except ValueError:
            raise DataFormatError("non-numeric contextual vector", line_number, source) from None
        if dim is None:
            dim = len(values)
        if len(values) != dim:
            raise DataFormatError(
                f"expected {dim} values, found {len(values)}", line_number, source
            )
        current.append(values)
    return blocks


def read_contextual_vectors(path: Union[str, Path]) -> List[np.ndarray]:
    """Read a contextual vector file."""
    return parse_contextual_vectors(read_text_lines(path), source=str(path))


def attach_contextual_vectors(
    sentences: Sequence[Sentence], vectors: Sequence[np.ndarray], source: str = ""
) -> List[Sentence]:
    """
    Pair each sentence with its block of vectors.

    Raises:
        DataFormatError: block count or block length does not match the corpus
    """
    if len(vectors) != len(sentences):
        raise DataFormatError(
            f"{len(vectors)} contextual vector blocks for {len(sentences)} sentences", source=source
        )
    attached = []
    for index, (sentence, block) in enumerate(zip(sentences, vectors)):
        if block.shape[0] != len(sentence):
            raise DataFormatError(
                f"sentence {index}: {block.shape[0]} contextual vectors for {len(sentence)} tokens",
                source=source,
            )
        attached.append(sentence.with_lm_vectors(block))
    return attached
