"""
Parse corpus use case.

Loads one or more trained models, parses a CoNLL-U or raw-text corpus with
their (averaged) distributions and writes CoNLL-U.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from udpx.core.base import ProcessingResult
from udpx.core.config import Config
from udpx.core.decorators import time_operation
from udpx.core.logger import get_logger
from udpx.domain.models.ensemble import Ensemble
from udpx.domain.models.sentence import Sentence
from udpx.domain.services.ensemble_service import EnsembleService
from udpx.modules.data.conllu import read_conllu, read_text_lines, write_conllu
from udpx.modules.data.corpus import load_unlabeled
from udpx.modules.data.embeddings import attach_contextual_vectors, read_contextual_vectors
from udpx.modules.model.parser import Parser

CONLLU_SUFFIXES = (".conllu", ".conll")


def looks_like_conllu(path: Path) -> bool:
    """CoNLL-U by suffix, else by a first content line with ten tab-separated columns."""
    if path.suffix.lower() in CONLLU_SUFFIXES:
        return True
    for line in read_text_lines(path):
        if line.strip() and not line.startswith("#"):
            return len(line.split("\t")) == 10
        if line.startswith("#"):
            return True
    return False


def read_input(path: Path, config: Config) -> List[Sentence]:
    """Sentences of a CoNLL-U file, or one sentence per non-blank raw-text line."""
    if looks_like_conllu(path):
        return list(read_conllu(path, split="test", punct_tags=config.data.punct_tags))
    return load_unlabeled(
        read_text_lines(path),
        min_words=0,
        punct_tags=config.data.punct_tags,
        pos_tags=config.data.pos_tags,
    )


class ParseCorpusUseCase:
    """
    Use case for parsing a corpus.

    Orchestrates:
    - Model loading (one model or an ensemble)
    - Input reading
    - Ensemble decoding and CoNLL-U output
    """

    def __init__(self, config: Optional[Config] = None, logger=None):
        """
        Initialize use case.

        Args:
            config: Configuration used for input reading
            logger: Optional logger
        """
        self.config = config or Config()
        self.logger = logger or get_logger("ParseCorpusUseCase")

    def load_ensemble(self, model_dirs: Sequence[Path]) -> Ensemble:
        """Uniform ensemble of the given model directories."""
        return Ensemble(
            members=[Parser.load(path) for path in model_dirs],
            names=[str(path) for path in model_dirs],
        )

    @time_operation(verbose=True)
    def execute(
        self,
        model_dirs: Sequence[Path],
        input_path: Path,
        output_path: Path,
        contextual_vectors: Optional[Path] = None,
        flags: Optional[Dict[str, Any]] = None,
    ) -> ProcessingResult:
        """
        Parse input_path into output_path.

        Returns:
            ProcessingResult with the output path and sentence count
        """
        input_path, output_path = Path(input_path), Path(output_path)
        if not input_path.exists():
            raise FileNotFoundError(f"Input file not found: {input_path}")

        ensemble = self.load_ensemble(model_dirs)
        sentences = read_input(input_path, self.config)
        if contextual_vectors is not None:
            blocks = read_contextual_vectors(contextual_vectors)
            sentences = attach_contextual_vectors(sentences, blocks, source=str(contextual_vectors))

        parsed = []
        if sentences:
            annotated = EnsembleService(ensemble, logger=self.logger).annotate(
                sentences, progress=self.config.progress
            )
            parsed = list(annotated.treebank)
        write_conllu(output_path, parsed)

        flags_path = output_path.with_name(output_path.name + ".flags.json")
        flags_path.write_text(
            json.dumps(flags or {}, indent=2, sort_keys=True, default=str), encoding="utf-8"
        )
        self.logger.info(
            f"Parsed {len(parsed)} sentences with {len(ensemble)} model(s) into {output_path}"
        )
        return ProcessingResult.success_result(
            f"Parsed {len(parsed)} sentences",
            output_path=output_path,
            metadata={"sentences": len(parsed), "models": len(ensemble)},
        )
