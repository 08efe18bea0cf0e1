"""
Parser model bundle.

One ParamStore shared by the encoder, the biaffine parse head and the
language-model heads, plus persistence to a model directory.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from udpx.core.config import Config
from udpx.core.exceptions import ModelError
from udpx.core.logger import get_logger
from udpx.domain.models.alphabets import Alphabets
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.sentence import Sentence
from udpx.modules.data.batching import Batch, batches, index_batch
from udpx.modules.model.encoder import Encoder
from udpx.modules.model.lm_heads import LMHeads
from udpx.modules.model.mst import mst_decode
from udpx.modules.model.params import ParamStore
from udpx.modules.model.parse_head import HeadOutputs, ParseHead
from udpx.numkernel.checkpoint import load_checkpoint, save_checkpoint
from udpx.numkernel.value import Value, set_default_dtype

MODEL_FILE = "model.ckpt"
ALPHABETS_FILE = "alphabets.json"
CONFIG_FILE = "config.yaml"
HISTORY_FILE = "history.jsonl"
FLAGS_FILE = "flags.json"

logger = get_logger("parser")


class Parser:
    """Encoder + parse head + LM heads over one parameter store."""

    def __init__(
        self,
        config: Config,
        alphabets: Alphabets,
        seed: int = 0,
        word_table: Optional[np.ndarray] = None,
    ):
        set_default_dtype(config.dtype)
        self.config = config
        self.alphabets = alphabets
        self.params = ParamStore(np.random.default_rng(seed))
        self.encoder = Encoder(self.params, config.encoder, alphabets, word_table=word_table)
        self.head = ParseHead(
            self.params, config.parser, self.encoder.output_dim, alphabets.n_labels
        )
        self.lm = LMHeads(self.params, config.lm, self.encoder.output_dim, len(alphabets.words))

    @property
    def min_char_width(self) -> int:
        return self.config.encoder.char_window

    # -- forward --------------------------------------------------------------

    def index(self, sentences: Sequence[Sentence], with_gold: bool = False, **kwargs) -> Batch:
        """Parse-layout batch for these sentences."""
        return index_batch(
            sentences,
            self.alphabets,
            with_root=True,
            min_char_width=self.min_char_width,
            with_gold=with_gold,
            **kwargs,
        )

    def forward_parse(
        self, batch: Batch, training: bool = False, rng: Optional[np.random.Generator] = None
    ) -> Tuple[HeadOutputs, Value]:
        """Head projections and arc scores for a parse-layout batch."""
        H = self.encoder.encode(batch, mode="parse", training=training, rng=rng)
        outputs = self.head.project(H, batch.mask, training=training, rng=rng)
        return outputs, self.head.arc_scores(outputs)

    def predict_distributions(
        self, sentences: Sequence[Sentence], batch_size: Optional[int] = None
    ) -> List[ParseDistribution]:
        """Arc and label distributions per sentence, inference mode."""
        size = batch_size or self.config.train.batch_size
        result: List[ParseDistribution] = []
        for chunk in batches(list(sentences), size):
            batch = self.index(chunk)
            outputs, _ = self.forward_parse(batch)
            result.extend(self.head.distributions(outputs, batch.lengths))
        return result

    def parse(self, sentences: Sequence[Sentence]) -> List[Sentence]:
        """MST-decoded copies of the sentences."""
        return [
            mst_decode(dist, sentence, self.alphabets)
            for dist, sentence in zip(self.predict_distributions(sentences), sentences)
        ]

    # -- snapshots ------------------------------------------------------------

    def state_dict(self) -> Dict[str, np.ndarray]:
        return self.params.state_dict()

    def load_state_dict(self, arrays: Dict[str, np.ndarray]) -> None:
        self.params.load_state_dict(arrays)

    # -- persistence ----------------------------------------------------------

    def save(self, model_dir: Union[str, Path], meta: Optional[Dict] = None) -> Path:
        """Write model.ckpt, alphabets.json and config.yaml into model_dir."""
        model_dir = Path(model_dir)
        model_dir.mkdir(parents=True, exist_ok=True)
        header = {
            "config": self.config.to_dict(),
            "alphabets": self.alphabets.fingerprint(),
            **(meta or {}),
        }
        save_checkpoint(model_dir / MODEL_FILE, self.state_dict(), header)
        self.alphabets.save(model_dir / ALPHABETS_FILE)
        self.config.save_to_file(model_dir / CONFIG_FILE)
        logger.info(f"Saved model ({self.params.num_parameters()} parameters) to {model_dir}")
        return model_dir

    @classmethod
    def load(cls, model_dir: Union[str, Path]) -> "Parser":
        """
        Rebuild a parser from a model directory.

        Raises:
            FileNotFoundError: model directory or one of its files is missing
            ModelError: checkpoint does not match its alphabets or config
        """
        model_dir = Path(model_dir)
        if not model_dir.is_dir():
            raise FileNotFoundError(f"Model directory not found: {model_dir}")
        arrays, meta = load_checkpoint(model_dir / MODEL_FILE)
        alphabets = Alphabets.load(model_dir / ALPHABETS_FILE)
        if meta.get("alphabets") != alphabets.fingerprint():
            raise ModelError(f"{model_dir}: checkpoint was saved with different alphabets")
        if "config" not in meta:
            raise ModelError(f"{model_dir}: checkpoint carries no config")

        parser = cls(Config.from_dict(meta["config"]), alphabets)
        parser.load_state_dict(arrays)
        logger.debug(f"Loaded model from {model_dir}")
        return parser
