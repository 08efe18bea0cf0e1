"""
Shared sentence encoder.

Word, character-CNN and POS embeddings (plus optional precomputed contextual
vectors) feed a stack of bidirectional LSTMs. The same encoder serves the
parser (ROOT at position 0) and both language-model heads (plain layout).
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from udpx.core.config import EncoderConfig
from udpx.core.exceptions import ModelError
from udpx.domain.models.alphabets import Alphabets
from udpx.domain.models.sentence import Token
from udpx.modules.data.batching import Batch
from udpx.modules.model.params import ParamStore
from udpx.numkernel import ops
from udpx.numkernel.value import Value

MODES = ("parse", "wo", "mlm")
FORGET_BIAS = 1.0
DIRECTIONS = ("fwd", "bwd")


class Encoder:
    """
    Embeddings + char CNN + stacked BiLSTM over a ParamStore.

    Parameter names are prefixed with "encoder.".
    """

    def __init__(
        self,
        params: ParamStore,
        config: EncoderConfig,
        alphabets: Alphabets,
        word_table: Optional[np.ndarray] = None,
    ):
        self.params = params
        self.config = config
        self.alphabets = alphabets

        self.lm_dim = 0
        if config.contextual_dim:
            self.lm_dim = config.contextual_projection or config.contextual_dim
        self.input_dim = config.word_dim + config.char_filters + config.pos_dim + self.lm_dim

        if word_table is not None:
            if word_table.shape != (len(alphabets.words), config.word_dim):
                raise ModelError(
                    f"word table shape {word_table.shape} does not match "
                    f"({len(alphabets.words)}, {config.word_dim})"
                )
            params.add("encoder.word_embed", word_table)
        else:
            params.uniform("encoder.word_embed", (len(alphabets.words), config.word_dim), 0.1)
        params.uniform("encoder.char_embed", (len(alphabets.chars), config.char_dim), 0.1)
        params.uniform("encoder.pos_embed", (len(alphabets.pos), config.pos_dim), 0.1)
        params.uniform("encoder.root_embed", (self.input_dim,), 0.1)
        params.glorot(
            "encoder.char_conv.W", (config.char_window * config.char_dim, config.char_filters)
        )
        params.zeros("encoder.char_conv.b", (config.char_filters,))

        if config.contextual_dim and config.contextual_projection:
            params.glorot(
                "encoder.lm_proj.W", (config.contextual_dim, config.contextual_projection)
            )
            params.zeros("encoder.lm_proj.b", (config.contextual_projection,))

        hidden = config.lstm_hidden
        layer_input = self.input_dim
        for layer in range(config.lstm_layers):
            for direction in DIRECTIONS:
                prefix = f"encoder.lstm{layer}.{direction}"
                params.glorot(f"{prefix}.W_x", (layer_input, 4 * hidden))
                params.glorot(f"{prefix}.W_h", (hidden, 4 * hidden))
                bias = np.zeros(4 * hidden)
                bias[hidden : 2 * hidden] = FORGET_BIAS
                params.add(f"{prefix}.b", bias)
            layer_input = 2 * hidden

    @property
    def output_dim(self) -> int:
        return 2 * self.config.lstm_hidden

    # -- embeddings -----------------------------------------------------------

    def char_cnn(self, chars: np.ndarray, char_lengths: np.ndarray) -> Value:
        """
        Max-pooled ReLU convolution over character embeddings.

        chars is (..., C) with C >= window; positions past the word are PAD.
        Only windows that start inside the word, or the single first window of
        a word shorter than the filter, take part in the max.
        """
        window = self.config.char_window
        width = chars.shape[-1]
        if width < window:
            pad = np.zeros(chars.shape[:-1] + (window - width,), dtype=chars.dtype)
            chars = np.concatenate([chars, pad], axis=-1)
            width = window
        n_windows = width - window + 1

        embedded = ops.embed(self.params["encoder.char_embed"], chars)  # (..., C, dc)
        windows = ops.concat(
            [embedded[..., offset : offset + n_windows, :] for offset in range(window)], axis=-1
        )
        W, b = self.params["encoder.char_conv.W"], self.params["encoder.char_conv.b"]
        features = ops.relu(ops.linear(windows, W, b))
        valid = np.maximum(char_lengths, window) - window + 1
        invalid = np.arange(n_windows) >= valid[..., None]
        features = ops.masked_fill(features, invalid[..., None], -np.inf)
        return ops.max(features, axis=-2)

    def char_cnn_word(self, char_indices: Sequence[int]) -> Value:
        """char_cnn for a single word: a (char_filters,) Value."""
        chars = np.zeros((1, max(len(char_indices), self.config.char_window)), dtype=np.int64)
        chars[0, : len(char_indices)] = list(char_indices)
        return self.char_cnn(chars, np.array([len(char_indices)]))[0]

    def _contextual(self, vectors: Optional[np.ndarray]) -> Optional[Value]:
        if not self.config.contextual_dim:
            return None
        if vectors is None:
            raise ModelError(
                f"model expects {self.config.contextual_dim}-dim contextual vectors, none supplied"
            )
        if vectors.shape[-1] != self.config.contextual_dim:
            raise ModelError(
                f"contextual vectors have dim {vectors.shape[-1]}, "
                f"model expects {self.config.contextual_dim}"
            )
        lm = ops.as_value(vectors)
        if self.config.contextual_projection:
            lm = ops.linear(lm, self.params["encoder.lm_proj.W"], self.params["encoder.lm_proj.b"])
        return lm

    def embed_batch(
        self, batch: Batch, training: bool = False, rng: Optional[np.random.Generator] = None
    ) -> Value:
        """(B, T, input_dim) token representations, ROOT slot replaced by root_embed."""
        rate = self.config.embedding_dropout
        parts = [
            ops.embed(self.params["encoder.word_embed"], batch.words),
            self.char_cnn(batch.chars, batch.char_lengths),
            ops.embed(self.params["encoder.pos_embed"], batch.pos),
        ]
        lm = self._contextual(batch.lm_vectors)
        if lm is not None:
            parts.append(lm)
        elif batch.lm_vectors is not None and not self.config.contextual_dim:
            raise ModelError("contextual vectors supplied to a model built without them")
        parts = [ops.dropout(part, rate, rng, training) for part in parts]
        x = ops.concat(parts, axis=-1)

        if batch.has_root:
            root_slot = np.zeros((1, batch.width, 1))
            root_slot[0, 0, 0] = 1.0
            x = ops.add(
                ops.mul(x, 1.0 - root_slot), ops.mul(self.params["encoder.root_embed"], root_slot)
            )
        return x

    def embed_token(
        self, token: Token, lm_vector: Optional[np.ndarray] = None, training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Value:
        """Representation of a single token: (input_dim,)."""
        indices = self.alphabets.char_indices(token.form)
        width = max(len(indices), self.config.char_window)
        chars = np.zeros((1, 1, width), dtype=np.int64)
        chars[0, 0, : len(indices)] = indices
        batch = Batch(
            words=np.array([[self.alphabets.word_index(token.form)]]),
            chars=chars,
            char_lengths=np.array([[len(indices)]]),
            pos=np.array([[self.alphabets.pos_index(token.upos)]]),
            mask=np.ones((1, 1), dtype=bool),
            lengths=np.array([1]),
            has_root=False,
            lm_vectors=None if lm_vector is None else np.asarray(lm_vector).reshape(1, 1, -1),
        )
        return self.embed_batch(batch, training=training, rng=rng)[0, 0]

    # -- recurrence -----------------------------------------------------------

    def _lstm_direction(
        self,
        x: Value,
        mask: np.ndarray,
        prefix: str,
        reverse: bool,
        training: bool,
        rng: Optional[np.random.Generator],
    ) -> Value:
        hidden = self.config.lstm_hidden
        batch_size, width = mask.shape
        dtype = x.data.dtype

        projected = ops.linear(x, self.params[f"{prefix}.W_x"], self.params[f"{prefix}.b"])
        W_h = self.params[f"{prefix}.W_h"]

        h = ops.as_value(np.zeros((batch_size, hidden), dtype=dtype))
        c = ops.as_value(np.zeros((batch_size, hidden), dtype=dtype))
        recurrent_mask = None
        if training and self.config.recurrent_dropout > 0:
            recurrent_mask = ops.dropout_mask(
                (batch_size, hidden), self.config.recurrent_dropout, rng
            )

        outputs: List[Optional[Value]] = [None] * width
        steps = range(width - 1, -1, -1) if reverse else range(width)
        for t in steps:
            h_in = ops.mul(h, recurrent_mask) if recurrent_mask is not None else h
            gates = ops.add(projected[:, t, :], ops.matmul(h_in, W_h))
            i = ops.sigmoid(gates[:, :hidden])
            f = ops.sigmoid(gates[:, hidden : 2 * hidden])
            g = ops.tanh(gates[:, 2 * hidden : 3 * hidden])
            o = ops.sigmoid(gates[:, 3 * hidden :])
            c_new = ops.add(ops.mul(f, c), ops.mul(i, g))
            h_new = ops.mul(o, ops.tanh(c_new))

            step_mask = mask[:, t : t + 1].astype(dtype)
            if step_mask.all():
                h, c = h_new, c_new
            else:
                h = ops.add(ops.mul(h_new, step_mask), ops.mul(h, 1.0 - step_mask))
                c = ops.add(ops.mul(c_new, step_mask), ops.mul(c, 1.0 - step_mask))
            outputs[t] = h
        return ops.stack(outputs, axis=1)

    def encode(
        self,
        batch: Batch,
        mode: str = "parse",
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Value:
        """
        Top-layer forward/backward states: (B, T, 2 * lstm_hidden).

        In parse mode the batch carries ROOT at position 0; the wo and mlm
        modes use the plain layout (callers shuffle or mask the indices).

        Raises:
            ModelError: empty sentence, or batch layout does not fit mode
        """
        if mode not in MODES:
            raise ModelError(f"unknown encoder mode '{mode}'")
        if batch.has_root != (mode == "parse"):
            layout = "with" if mode == "parse" else "without"
            raise ModelError(f"{mode} mode needs a batch {layout} ROOT")
        if (batch.lengths < 1).any():
            raise ModelError("cannot encode an empty sentence")

        x = self.embed_batch(batch, training=training, rng=rng)
        for layer in range(self.config.lstm_layers):
            if layer > 0 and training and self.config.layer_dropout > 0:
                layer_mask = ops.dropout_mask(
                    (batch.size, 1, x.shape[-1]), self.config.layer_dropout, rng
                )
                x = ops.mul(x, layer_mask)
            forward = self._lstm_direction(
                x, batch.mask, f"encoder.lstm{layer}.fwd", False, training, rng
            )
            backward = self._lstm_direction(
                x, batch.mask, f"encoder.lstm{layer}.bwd", True, training, rng
            )
            x = ops.concat([forward, backward], axis=-1)
        return x

    def parameter_names(self) -> Tuple[str, ...]:
        return tuple(name for name in self.params.names if name.startswith("encoder."))
