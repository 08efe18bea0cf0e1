"""
File system test fixtures and utilities.

Provides fixtures for temporary directories and small input files
in the formats the commands read.
"""

import shutil
import tempfile
from pathlib import Path
from typing import Generator

import pytest

from udpx.domain.models.sentence import Treebank
from tests.utils.test_helpers import write_text_file, write_treebank_file

TWO_TOKEN_CONLLU = (
    "# sent_id = 1\n"
    "1\tHe\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tran\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n"
)

EMBEDDINGS_TEXT = "3 4\nn0 0.1 0.2 0.3 0.4\nv0 0.5 0.6 0.7 0.8\nd0 -0.1 -0.2 -0.3 -0.4\n"


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for testing."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def two_token_conllu(temp_dir: Path) -> Path:
    """A one-sentence CoNLL-U file."""
    path = temp_dir / "two.conllu"
    path.write_text(TWO_TOKEN_CONLLU, encoding="utf-8")
    return path


@pytest.fixture
def synthetic_files(temp_dir: Path, train_treebank: Treebank, dev_treebank: Treebank, target_text):
    """Train/dev CoNLL-U files and a target text file from the synthetic grammar."""
    return {
        "train": write_treebank_file(temp_dir / "train.conllu", train_treebank),
        "dev": write_treebank_file(temp_dir / "dev.conllu", dev_treebank),
        "text": write_text_file(temp_dir / "target.txt", target_text),
    }


@pytest.fixture
def embeddings_file(temp_dir: Path) -> Path:
    """A word2vec-style text file with a header line."""
    path = temp_dir / "vectors.txt"
    path.write_text(EMBEDDINGS_TEXT, encoding="utf-8")
    return path
