"""
CoNLL-U reading and writing.

Only ID, FORM, UPOS, HEAD and DEPREL are used; the remaining columns are
written back as '_'. Multiword-token ranges ("1-2") and empty nodes ("1.1")
carry no head and are skipped on input.
"""

from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from udpx.core.exceptions import DataFormatError, TreeError
from udpx.core.logger import get_logger
from udpx.domain.models.sentence import PUNCT_TAG, Sentence, Token, Treebank

N_COLUMNS = 10
EMPTY = "_"

logger = get_logger("conllu")


def is_punct_tag(upos: str, punct_tags: Sequence[str] = ()) -> bool:
    return upos == PUNCT_TAG or upos in punct_tags


def _lines(text: Union[str, TextIO, Iterable[str]]) -> Iterable[str]:
    if isinstance(text, str):
        return text.splitlines()
    return (line.rstrip("\r\n") for line in text)


def parse_conllu(
    text: Union[str, TextIO, Iterable[str]],
    split: str = "train",
    punct_tags: Sequence[str] = (),
    source: Optional[str] = None,
) -> Treebank:
    """
    Parse CoNLL-U text into a Treebank.

    Args:
        text: Whole document, an open text stream, or an iterable of lines
        split: Split name recorded on the treebank
        punct_tags: Extra UPOS values treated as punctuation
        source: File name used in error messages

    Raises:
        DataFormatError: wrong column count, non-integer or out-of-range HEAD,
            unexpected ID, or a block whose heads do not form a tree
    """
    sentences: List[Sentence] = []
    rows: List[Tuple[int, List[str]]] = []
    comments: List[str] = []

    def flush() -> None:
        if rows:
            sentences.append(_build_sentence(rows, comments, punct_tags, source))
        rows.clear()
        comments.clear()

    line_number = 0
    for line_number, line in enumerate(_lines(text), start=1):
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            comments.append(line)
            continue

        columns = line.split("\t")
        if len(columns) != N_COLUMNS:
            raise DataFormatError(
                f"expected {N_COLUMNS} tab-separated columns, found {len(columns)}",
                line_number,
                source,
            )
        token_id = columns[0]
        if "-" in token_id or "." in token_id:
            continue
        rows.append((line_number, columns))
    flush()

    logger.debug(f"Parsed {len(sentences)} sentences from {source or 'text'} ({line_number} lines)")
    return Treebank(sentences=sentences, split=split)


def _build_sentence(
    rows: List[Tuple[int, List[str]]],
    comments: List[str],
    punct_tags: Sequence[str],
    source: Optional[str],
) -> Sentence:
    length = len(rows)
    tokens = []
    for position, (line_number, columns) in enumerate(rows, start=1):
        token_id, form, _, upos, _, _, head_text, deprel, _, _ = columns
        try:
            parsed_id = int(token_id)
        except ValueError:
            raise DataFormatError(f"non-integer ID '{token_id}'", line_number, source) from None
        if parsed_id != position:
            raise DataFormatError(f"expected ID {position}, found {parsed_id}", line_number, source)

        head: Optional[int] = None
        if head_text != EMPTY:
            try:
                head = int(head_text)
            except ValueError:
                raise DataFormatError(
                    f"non-integer HEAD '{head_text}'", line_number, source
                ) from None
            if not 0 <= head <= length:
                raise DataFormatError(
                    f"HEAD {head} outside [0, {length}]", line_number, source
                )

        tokens.append(
            Token(
                form=form,
                upos=upos,
                head=head,
                deprel=None if deprel == EMPTY else deprel,
                is_punct=is_punct_tag(upos, punct_tags),
            )
        )

    try:
        return Sentence(tokens=tuple(tokens), comments=tuple(comments))
    except TreeError as e:
        raise DataFormatError(f"invalid tree: {e}", rows[0][0], source) from e


def serialize_conllu(treebank: Union[Treebank, Sequence[Sentence]]) -> str:
    """
    Render sentences as CoNLL-U.

    Raises:
        TreeError: a sentence lacks heads or labels
    """
    blocks = []
    for index, sentence in enumerate(treebank):
        if not sentence.is_labeled():
            raise TreeError(f"sentence {index} has no heads or labels to write")
        lines = list(sentence.comments)
        for position, token in enumerate(sentence.tokens, start=1):
            lines.append(
                "\t".join(
                    [
                        str(position),
                        token.form,
                        EMPTY,
                        token.upos,
                        EMPTY,
                        EMPTY,
                        str(token.head),
                        token.deprel,
                        EMPTY,
                        EMPTY,
                    ]
                )
            )
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


def read_text_lines(path: Union[str, Path]) -> List[str]:
    """
    Read a UTF-8 file as lines.

    Raises:
        FileNotFoundError: path does not exist
        DataFormatError: undecodable bytes, naming the line
    """
    path = Path(path)
    lines = []
    with open(path, "rb") as f:
        for line_number, raw in enumerate(f, start=1):
            try:
                lines.append(raw.decode("utf-8").rstrip("\r\n"))
            except UnicodeDecodeError as e:
                raise DataFormatError(f"invalid UTF-8: {e.reason}", line_number, str(path)) from e
    return lines


def read_conllu(
    path: Union[str, Path], split: str = "train", punct_tags: Sequence[str] = ()
) -> Treebank:
    """Read a CoNLL-U file."""
    return parse_conllu(read_text_lines(path), split=split, punct_tags=punct_tags, source=str(path))


def write_conllu(path: Union[str, Path], treebank: Union[Treebank, Sequence[Sentence]]) -> Path:
    """Write sentences as CoNLL-U (UTF-8)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_conllu(treebank), encoding="utf-8")
    return path
