"""
Alphabets domain model.

Bidirectional symbol/index maps for words, characters, POS tags and
dependency labels. Every map starts with the same four reserved entries, so
PAD, UNK, MASK and ROOT have identical indices everywhere and survive
save/load unchanged.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from udpx.core.exceptions import AlphabetError

PAD, UNK, MASK, ROOT = 0, 1, 2, 3
RESERVED_SYMBOLS = ("<pad>", "<unk>", "<mask>", "<root>")
N_RESERVED = len(RESERVED_SYMBOLS)

# POS placeholder for untagged unlabeled text; always looked up as UNK
UNKNOWN_POS = "_"


class Alphabet:
    """Symbol/index bijection with reserved leading entries."""

    def __init__(self, name: str, symbols: Iterable[str] = ()):
        self.name = name
        self._symbols: List[str] = list(RESERVED_SYMBOLS)
        self._index: Dict[str, int] = {symbol: i for i, symbol in enumerate(RESERVED_SYMBOLS)}
        for symbol in symbols:
            self.add(symbol)

    def add(self, symbol: str) -> int:
        """Index of symbol, appending it if new."""
        index = self._index.get(symbol)
        if index is None:
            index = len(self._symbols)
            self._symbols.append(symbol)
            self._index[symbol] = index
        return index

    def get(self, symbol: str) -> Optional[int]:
        return self._index.get(symbol)

    def index(self, symbol: str) -> int:
        """Index of symbol, UNK when absent."""
        return self._index.get(symbol, UNK)

    def symbol(self, index: int) -> str:
        if not 0 <= index < len(self._symbols):
            raise AlphabetError(f"{self.name}: index {index} outside [0, {len(self._symbols)})")
        return self._symbols[index]

    @property
    def symbols(self) -> List[str]:
        """Non-reserved symbols in index order."""
        return self._symbols[N_RESERVED:]

    @property
    def size(self) -> int:
        """Non-reserved entry count."""
        return len(self._symbols) - N_RESERVED

    def __len__(self) -> int:
        return len(self._symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and self._symbols == other._symbols

    def __repr__(self) -> str:
        return f"Alphabet({self.name!r}, size={self.size})"


@dataclass
class Alphabets:
    """The four alphabets a model is built over."""

    words: Alphabet
    chars: Alphabet
    pos: Alphabet
    labels: Alphabet
    lowercase_fallback: bool = True

    def word_index(self, form: str) -> int:
        """Exact form, then its lowercase form, then UNK."""
        index = self.words.get(form)
        if index is None and self.lowercase_fallback:
            index = self.words.get(form.lower())
        return UNK if index is None else index

    def char_indices(self, form: str) -> List[int]:
        return [self.chars.index(char) for char in form]

    def pos_index(self, tag: str) -> int:
        if tag == UNKNOWN_POS:
            return UNK
        return self.pos.index(tag)

    def label_class(self, deprel: str) -> int:
        """
        Position of deprel among the scored labels (reserved entries excluded).

        Raises:
            AlphabetError: deprel unknown
        """
        index = self.labels.get(deprel)
        if index is None or index < N_RESERVED:
            raise AlphabetError(f"dependency label '{deprel}' is not in the label alphabet")
        return index - N_RESERVED

    def label_symbol(self, label_class: int) -> str:
        return self.labels.symbol(label_class + N_RESERVED)

    @property
    def n_labels(self) -> int:
        return self.labels.size

    def to_dict(self) -> Dict[str, object]:
        return {
            "reserved": list(RESERVED_SYMBOLS),
            "words": self.words.symbols,
            "chars": self.chars.symbols,
            "pos": self.pos.symbols,
            "labels": self.labels.symbols,
            "lowercase_fallback": self.lowercase_fallback,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "Alphabets":
        if list(data.get("reserved", [])) != list(RESERVED_SYMBOLS):
            reserved = data.get("reserved")
            raise AlphabetError(f"reserved entries {reserved} do not match this version")
        return cls(
            words=Alphabet("words", data["words"]),
            chars=Alphabet("chars", data["chars"]),
            pos=Alphabet("pos", data["pos"]),
            labels=Alphabet("labels", data["labels"]),
            lowercase_fallback=bool(data.get("lowercase_fallback", True)),
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Alphabets":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise AlphabetError(f"{path}: invalid alphabet file: {e}") from e
        return cls.from_dict(data)

    def fingerprint(self) -> str:
        """Stable digest of the index assignments."""
        payload = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
