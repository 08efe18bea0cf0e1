"""
Language-model heads: masked language modeling and word ordering.

Both read the shared encoder's top-layer states in the plain (ROOT-less)
layout. MLM predicts corrupted words over the word alphabet; word ordering
restores a shuffled sentence one original position at a time with a pointer
decoder over the shuffled tokens.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from udpx.core.config import LMConfig
from udpx.core.exceptions import ModelError, ShapeError
from udpx.domain.models.alphabets import MASK, N_RESERVED, PAD, Alphabets
from udpx.domain.models.sentence import Sentence
from udpx.modules.data.batching import Batch
from udpx.modules.model.params import ParamStore
from udpx.numkernel import ops
from udpx.numkernel.value import Value

MASK_ACTION, KEEP_ACTION, RANDOM_ACTION = "mask", "keep", "random"


# -- masked language modeling -------------------------------------------------


@dataclass
class MlmItem:
    """One corrupted sentence (plain layout word indices)."""

    corrupted: np.ndarray  # (l,)
    positions: np.ndarray  # (n,) selected token positions, ascending
    targets: np.ndarray  # (n,) original word indices at those positions
    actions: Tuple[str, ...]  # per selected position

    @property
    def selection(self) -> np.ndarray:
        mask = np.zeros(len(self.corrupted), dtype=bool)
        mask[self.positions] = True
        return mask


def selection_count(length: int, rate: float) -> int:
    """round(rate * length), halves rounded up, at least 1."""
    return max(1, int(np.floor(rate * length + 0.5)))


def mask_sentence(
    words: np.ndarray,
    vocab_size: int,
    rng: np.random.Generator,
    config: Optional[LMConfig] = None,
) -> MlmItem:
    """
    Corrupt a word index sequence for MLM.

    Positions are drawn uniformly without replacement; each becomes MASK,
    stays as it is, or is replaced by a random non-reserved word.
    """
    config = config or LMConfig()
    words = np.asarray(words, dtype=np.int64)
    length = len(words)
    if length < 1:
        raise ModelError("cannot mask an empty sentence")

    count = min(length, selection_count(length, config.mask_rate))
    positions = np.sort(rng.choice(length, size=count, replace=False))
    corrupted = words.copy()
    actions = []
    for position in positions:
        u = rng.random()
        if u < config.mask_token_prob:
            corrupted[position] = MASK
            actions.append(MASK_ACTION)
        elif u < config.mask_token_prob + config.keep_token_prob or vocab_size <= N_RESERVED:
            actions.append(KEEP_ACTION)
        else:
            corrupted[position] = rng.integers(N_RESERVED, vocab_size)
            actions.append(RANDOM_ACTION)
    return MlmItem(
        corrupted=corrupted,
        positions=positions,
        targets=words[positions].copy(),
        actions=tuple(actions),
    )


def corrupt_batch(batch: Batch, items: List[MlmItem], alphabets: Alphabets) -> Batch:
    """
    Copy of a plain-layout batch carrying the corrupted words.

    Masked positions see a single MASK character; replaced positions see the
    characters of their replacement word. Precomputed contextual vectors are
    zeroed at every masked or replaced position.
    """
    if batch.has_root:
        raise ModelError("masked language modeling needs a batch without ROOT")
    spellings = {}
    for b, item in enumerate(items):
        for position, action in zip(item.positions, item.actions):
            if action == MASK_ACTION:
                spellings[(b, int(position))] = [MASK]
            elif action == RANDOM_ACTION:
                index = int(item.corrupted[position])
                word = alphabets.words.symbol(index)
                spellings[(b, int(position))] = alphabets.char_indices(word)

    width = max([batch.chars.shape[-1]] + [len(chars) for chars in spellings.values()])
    chars = np.full(batch.chars.shape[:-1] + (width,), PAD, dtype=np.int64)
    chars[..., : batch.chars.shape[-1]] = batch.chars
    char_lengths = batch.char_lengths.copy()
    words = batch.words.copy()
    for b, item in enumerate(items):
        words[b, : len(item.corrupted)] = item.corrupted
    lm_vectors = None if batch.lm_vectors is None else batch.lm_vectors.copy()
    for (b, position), spelling in spellings.items():
        chars[b, position] = PAD
        chars[b, position, : len(spelling)] = spelling
        char_lengths[b, position] = len(spelling)
        if lm_vectors is not None:
            lm_vectors[b, position] = 0.0
    return replace(
        batch, words=words, chars=chars, char_lengths=char_lengths, lm_vectors=lm_vectors
    )


# -- word ordering ------------------------------------------------------------


def shuffle_order(length: int, rng: np.random.Generator, rate: float = 1.0) -> np.ndarray:
    """
    perm[k] = original position shown at slot k.

    rate < 1 permutes only round(rate * length) positions (at least 2) among
    themselves; the others stay in place.
    """
    if length < 2:
        return np.arange(length)
    if rate >= 1.0:
        return rng.permutation(length)
    count = min(length, max(2, int(np.floor(rate * length + 0.5))))
    chosen = np.sort(rng.choice(length, size=count, replace=False))
    perm = np.arange(length)
    perm[chosen] = rng.permutation(chosen)
    return perm


def shuffle_sentence(
    sentence: Sentence, rng: np.random.Generator, rate: float = 1.0
) -> Tuple[Sentence, np.ndarray]:
    """Shuffled copy of the sentence (annotation dropped) and its perm."""
    perm = shuffle_order(len(sentence), rng, rate)
    base = sentence.without_annotation()
    vectors = None if sentence.lm_vectors is None else sentence.lm_vectors[perm]
    shuffled = Sentence(
        tokens=tuple(base.tokens[k] for k in perm), comments=sentence.comments, lm_vectors=vectors
    )
    return shuffled, perm


def restore_order(shuffled: List, perm: np.ndarray) -> List:
    """Undo shuffle_order: original[perm[k]] = shuffled[k]."""
    restored: List = [None] * len(perm)
    for slot, original in enumerate(perm):
        restored[original] = shuffled[slot]
    return restored


class LMHeads:
    """MLM output projection and the word-ordering decoder ("lm." parameters)."""

    def __init__(self, params: ParamStore, config: LMConfig, input_dim: int, vocab_size: int):
        self.params = params
        self.config = config
        self.vocab_size = vocab_size
        dim = config.wo_dim

        params.glorot("lm.mlm.W", (input_dim, vocab_size))
        params.zeros("lm.mlm.b", (vocab_size,))

        params.glorot("lm.wo.proj.W", (input_dim, dim))
        params.zeros("lm.wo.proj.b", (dim,))
        params.glorot("lm.wo.init.W", (dim, dim))
        params.zeros("lm.wo.init.b", (dim,))
        params.glorot("lm.wo.lstm.W_x", (dim, 4 * dim))
        params.glorot("lm.wo.lstm.W_h", (dim, 4 * dim))
        bias = np.zeros(4 * dim)
        bias[dim : 2 * dim] = 1.0
        params.add("lm.wo.lstm.b", bias)
        params.glorot("lm.wo.U_s", (dim, 1))

    # -- MLM ------------------------------------------------------------------

    def mlm_loss(self, H: Value, items: List[MlmItem]) -> Value:
        """
        Mean NLL of the original words at the selected positions.

        H comes from encoding the corrupted batch (plain layout, no ROOT).
        """
        rows = np.concatenate([np.full(len(item.positions), b) for b, item in enumerate(items)])
        cols = np.concatenate([item.positions for item in items])
        targets = np.concatenate([item.targets for item in items])
        if len(rows) == 0:
            raise ModelError("no positions selected for masked language modeling")
        if H.shape[0] != len(items):
            raise ShapeError("mlm_loss", H.shape, detail=f"{len(items)} items")

        logits = ops.linear(H[rows, cols], self.params["lm.mlm.W"], self.params["lm.mlm.b"])
        logp = ops.log_softmax(logits, axis=-1)
        return ops.scale(ops.sum(logp[np.arange(len(targets)), targets]), -1.0 / len(targets))

    # -- word ordering --------------------------------------------------------

    def token_reps(self, H: Value) -> Value:
        """Encoder states mapped to the decoder width: (B, T, wo_dim)."""
        return ops.linear(H, self.params["lm.wo.proj.W"], self.params["lm.wo.proj.b"])

    def initial_state(self, x: Value, mask: np.ndarray) -> Tuple[Value, Value]:
        """h0 = tanh(MLP(mean of the real token reps)), c0 = 0."""
        weights = mask.astype(x.data.dtype) / np.maximum(mask.sum(axis=1, keepdims=True), 1)
        mean = ops.sum(ops.mul(x, weights[..., None]), axis=1)
        h = ops.tanh(ops.linear(mean, self.params["lm.wo.init.W"], self.params["lm.wo.init.b"]))
        c = ops.as_value(np.zeros(h.shape, dtype=h.data.dtype))
        return h, c

    def pointer_scores(self, h: Value, x: Value) -> Value:
        """score[b, i] = U_s . tanh(h_b + x_{b,i}) for every slot i: (B, T)."""
        if h.shape[-1] != x.shape[-1]:
            raise ShapeError("pointer_scores", h.shape, x.shape)
        batch_size, width = x.shape[0], x.shape[1]
        hidden = ops.tanh(ops.add(ops.reshape(h, (batch_size, 1, h.shape[-1])), x))
        return ops.reshape(ops.matmul(hidden, self.params["lm.wo.U_s"]), (batch_size, width))

    def _step(self, x_in: Value, h: Value, c: Value) -> Tuple[Value, Value]:
        dim = self.config.wo_dim
        gates = ops.add(
            ops.linear(x_in, self.params["lm.wo.lstm.W_x"], self.params["lm.wo.lstm.b"]),
            ops.matmul(h, self.params["lm.wo.lstm.W_h"]),
        )
        i = ops.sigmoid(gates[:, :dim])
        f = ops.sigmoid(gates[:, dim : 2 * dim])
        g = ops.tanh(gates[:, 2 * dim : 3 * dim])
        o = ops.sigmoid(gates[:, 3 * dim :])
        c_new = ops.add(ops.mul(f, c), ops.mul(i, g))
        return ops.mul(o, ops.tanh(c_new)), c_new

    def wo_loss(self, H: Value, batch: Batch, perms: List[np.ndarray]) -> Value:
        """
        Pointer-decoder NLL of the original order, summed per sentence and
        averaged over the batch.

        H encodes the shuffled batch; perms[b][k] is the original position of
        slot k. Step t targets the slot holding original word t; the decoder
        state is then fed that gold token (teacher forcing).
        """
        if batch.has_root:
            raise ModelError("word ordering needs a batch without ROOT")
        batch_size, width = batch.mask.shape
        targets = np.zeros((batch_size, width), dtype=np.int64)
        for b, perm in enumerate(perms):
            if len(perm) != batch.lengths[b]:
                raise ShapeError("wo_loss", (len(perm),), (int(batch.lengths[b]),))
            targets[b, np.asarray(perm)] = np.arange(len(perm))

        x = self.token_reps(H)
        h, c = self.initial_state(x, batch.mask)
        dtype = x.data.dtype
        rows = np.arange(batch_size)
        consumed = np.zeros((batch_size, width), dtype=bool)
        picked = []
        for t in range(width):
            active = batch.lengths > t
            blocked = ~batch.mask
            if self.config.exclude_consumed:
                blocked = blocked | (consumed & active[:, None])
            scores = ops.masked_fill(self.pointer_scores(h, x), blocked, -np.inf)
            logp = ops.log_softmax(scores, axis=-1)
            step = logp[rows, targets[:, t]]
            picked.append(ops.mul(step, active.astype(dtype)))
            consumed[rows[active], targets[active, t]] = True

            if t + 1 < width:
                h_new, c_new = self._step(x[rows, targets[:, t]], h, c)
                keep = active[:, None].astype(dtype)
                h = ops.add(ops.mul(h_new, keep), ops.mul(h, 1.0 - keep))
                c = ops.add(ops.mul(c_new, keep), ops.mul(c, 1.0 - keep))
        total = ops.sum(ops.stack(picked, axis=0))
        return ops.scale(total, -1.0 / batch_size)

    def predict_order(
        self, H: Value, length: int, exclude_consumed: Optional[bool] = None
    ) -> List[int]:
        """
        Greedy word order for one encoded shuffled sentence.

        Returns the predicted slot for original positions 0..length-1; the
        decoder is fed its own argmax choices.
        """
        if exclude_consumed is None:
            exclude_consumed = self.config.exclude_consumed
        x = self.token_reps(H[:1, :length])
        mask = np.ones((1, length), dtype=bool)
        h, c = self.initial_state(x, mask)
        consumed = np.zeros((1, length), dtype=bool)
        order = []
        for _ in range(length):
            scores = self.pointer_scores(h, x).data.copy()
            if exclude_consumed:
                scores[consumed] = -np.inf
            choice = int(np.argmax(scores[0]))
            order.append(choice)
            consumed[0, choice] = True
            h, c = self._step(x[np.array([0]), np.array([choice])], h, c)
        return order


def wo_score(h: Value, x: Value, U_s: Value) -> Value:
    """score(h, x) = U_s . tanh(h + x) for single vectors."""
    if h.shape != x.shape:
        raise ShapeError("wo_score", h.shape, x.shape)
    if U_s.shape[0] != h.shape[-1]:
        raise ShapeError("wo_score", h.shape, U_s.shape)
    return ops.sum(ops.mul(ops.tanh(ops.add(h, x)), ops.reshape(U_s, (U_s.shape[0],))))
