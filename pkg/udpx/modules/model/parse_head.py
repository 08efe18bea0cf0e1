"""
Biaffine arc and label scoring.

Arc scores come from a bilinear-plus-linear form over head and dependent MLP
projections (every head candidate is scored); label scores from a per-label
bilinear form plus a linear term over the chosen head and the dependent.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from udpx.core.config import ParserConfig
from udpx.core.exceptions import ModelError, ShapeError
from udpx.domain.models.distribution import ParseDistribution
from udpx.modules.data.batching import Batch
from udpx.modules.model.params import ParamStore
from udpx.numkernel import ops
from udpx.numkernel.value import Value


@dataclass
class HeadOutputs:
    """MLP projections of one encoded batch."""

    arc_head: Value  # (B, T, arc_dim)
    arc_dep: Value
    label_head: Value  # (B, T, label_dim)
    label_dep: Value
    mask: np.ndarray  # (B, T) real positions incl. ROOT


def arc_mask(mask: np.ndarray) -> np.ndarray:
    """(B, T, T) true where the arc head j -> dependent i is not allowed."""
    width = mask.shape[1]
    forbidden = ~mask[:, None, :]  # padded heads
    forbidden = forbidden | np.eye(width, dtype=bool)[None, :, :]
    return forbidden


class ParseHead:
    """Arc and label scorers; parameter names are prefixed with "parser."."""

    def __init__(self, params: ParamStore, config: ParserConfig, input_dim: int, n_labels: int):
        if n_labels < 1:
            raise ModelError("the label alphabet is empty")
        self.params = params
        self.config = config
        self.n_labels = n_labels
        arc_dim, label_dim = config.arc_mlp_dim, config.label_mlp_dim

        for role in ("head", "dep"):
            params.glorot(f"parser.arc_{role}.W", (input_dim, arc_dim))
            params.zeros(f"parser.arc_{role}.b", (arc_dim,))
            params.glorot(f"parser.label_{role}.W", (input_dim, label_dim))
            params.zeros(f"parser.label_{role}.b", (label_dim,))

        params.zeros("parser.arc.U1", (arc_dim, arc_dim))
        params.zeros("parser.arc.u2", (arc_dim, 1))
        params.zeros("parser.arc.u3", (arc_dim, 1))
        params.zeros("parser.arc.b", (1,))
        params.zeros("parser.label.U", (n_labels, label_dim, label_dim))
        params.zeros("parser.label.W", (2 * label_dim, n_labels))
        params.zeros("parser.label.b", (n_labels,))

    # -- projections ----------------------------------------------------------

    def _mlp(self, H: Value, name: str, training: bool, rng) -> Value:
        W, b = self.params[f"parser.{name}.W"], self.params[f"parser.{name}.b"]
        out = ops.relu(ops.linear(H, W, b))
        return ops.dropout(out, self.config.mlp_dropout, rng, training)

    def project(
        self,
        H: Value,
        mask: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> HeadOutputs:
        """Arc and label MLPs over encoder outputs (ROOT at position 0)."""
        if H.shape[1] < 2:
            raise ShapeError("parse_head", H.shape, detail="need ROOT plus at least one token")
        return HeadOutputs(
            arc_head=self._mlp(H, "arc_head", training, rng),
            arc_dep=self._mlp(H, "arc_dep", training, rng),
            label_head=self._mlp(H, "label_head", training, rng),
            label_dep=self._mlp(H, "label_dep", training, rng),
            mask=mask,
        )

    # -- scoring --------------------------------------------------------------

    def arc_scores(self, outputs: HeadOutputs) -> Value:
        """
        S[b, i, j]: score of head j for dependent i, (B, T, T).

        S = dep_i U1 head_j + head_j u2 + dep_i u3 + b; self arcs and padded
        heads are -inf. Row 0 (ROOT as dependent) is never used.
        """
        dep, head = outputs.arc_dep, outputs.arc_head
        p = self.params
        bilinear = ops.matmul(ops.matmul(dep, p["parser.arc.U1"]), ops.swapaxes(head, -1, -2))
        head_term = ops.swapaxes(ops.matmul(head, p["parser.arc.u2"]), -1, -2)  # (B, 1, T)
        dep_term = ops.matmul(dep, p["parser.arc.u3"])  # (B, T, 1)
        scores = ops.add(ops.add(ops.add(bilinear, head_term), dep_term), p["parser.arc.b"])
        return ops.masked_fill(scores, arc_mask(outputs.mask), -np.inf)

    def score_arcs(
        self,
        H: Value,
        mask: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Value:
        """Arc scores straight from encoder outputs."""
        return self.arc_scores(self.project(H, mask, training, rng))

    def _label_bilinear_weight(self) -> Value:
        """U reshaped so dep @ W gives every label's dep^T U_k at once."""
        U = self.params["parser.label.U"]
        n_labels, dim, _ = U.shape
        return ops.reshape(ops.transpose(U, (1, 0, 2)), (dim, n_labels * dim))

    def score_labels(self, outputs: HeadOutputs, heads: np.ndarray) -> Value:
        """
        Label scores for each dependent under the given heads, (B, T, n_labels).

        Raises:
            ModelError: a head index lies outside the batch width
        """
        heads = np.asarray(heads)
        batch_size, width = outputs.mask.shape
        if heads.shape != (batch_size, width):
            raise ShapeError("score_labels", heads.shape, (batch_size, width))
        if heads.size and (heads.min() < 0 or heads.max() >= width):
            raise ModelError(f"head index outside [0, {width})")

        dim = self.config.label_mlp_dim
        chosen = outputs.label_head[np.arange(batch_size)[:, None], heads]  # (B, T, dim)
        dep = outputs.label_dep
        projected = ops.reshape(
            ops.matmul(dep, self._label_bilinear_weight()), (batch_size, width, self.n_labels, dim)
        )
        aligned = ops.reshape(chosen, (batch_size, width, 1, dim))
        bilinear = ops.sum(ops.mul(projected, aligned), axis=-1)
        W, b = self.params["parser.label.W"], self.params["parser.label.b"]
        linear = ops.linear(ops.concat([chosen, dep], axis=-1), W, b)
        return ops.add(bilinear, linear)

    def all_label_probs(self, outputs: HeadOutputs) -> np.ndarray:
        """Label distributions for every (dependent, head) pair: (B, T, T, n_labels)."""
        U = self.params["parser.label.U"].data
        W = self.params["parser.label.W"].data
        b = self.params["parser.label.b"].data
        head = outputs.label_head.data
        dep = outputs.label_dep.data
        dim = self.config.label_mlp_dim

        scores = np.einsum("bia,kac,bjc->bijk", dep, U, head, optimize=True)
        scores = scores + np.einsum("bjc,ck->bjk", head, W[:dim])[:, None, :, :]
        scores = scores + np.einsum("bic,ck->bik", dep, W[dim:])[:, :, None, :]
        scores = scores + b
        scores = scores - scores.max(axis=-1, keepdims=True)
        exp = np.exp(scores)
        return exp / exp.sum(axis=-1, keepdims=True)

    def distributions(self, outputs: HeadOutputs, lengths: np.ndarray) -> List[ParseDistribution]:
        """Per-sentence arc and label probabilities (no gradient)."""
        arc_probs = ops.softmax(self.arc_scores(outputs), axis=-1).data
        label_probs = self.all_label_probs(outputs)
        result = []
        for b, length in enumerate(lengths):
            length = int(length)
            result.append(
                ParseDistribution(
                    arc_probs=arc_probs[b, 1 : length + 1, : length + 1].copy(),
                    label_probs=label_probs[b, 1 : length + 1, : length + 1].copy(),
                )
            )
        return result


# -- losses ------------------------------------------------------------------


def _gold_positions(batch: Batch) -> Tuple[np.ndarray, np.ndarray]:
    if batch.heads is None or batch.labels is None:
        raise ModelError("parse loss needs a batch indexed with gold heads and labels")
    return np.nonzero(batch.token_mask)


def parse_loss(
    arc_scores: Value,
    label_scores: Value,
    batch: Batch,
    weights: Optional[np.ndarray] = None,
) -> Value:
    """
    Negative log-likelihood of the gold heads and labels.

    Summed over the tokens of each sentence, multiplied by the optional
    per-sentence weight, and averaged over the batch. label_scores must be
    computed under the gold heads.
    """
    rows, cols = _gold_positions(batch)
    arc_logp = ops.log_softmax(arc_scores, axis=-1)
    label_logp = ops.log_softmax(label_scores, axis=-1)
    picked = ops.add(
        arc_logp[rows, cols, batch.heads[rows, cols]],
        label_logp[rows, cols, batch.labels[rows, cols]],
    )
    if weights is not None:
        picked = ops.mul(picked, np.asarray(weights, dtype=picked.data.dtype)[rows])
    return ops.scale(ops.sum(picked), -1.0 / batch.size)


def soft_parse_loss(
    arc_scores: Value,
    label_scores: Value,
    batch: Batch,
    arc_targets: np.ndarray,
    label_targets: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> Value:
    """
    Cross-entropy against teacher distributions.

    arc_targets: (B, T, T) teacher head distributions in batch layout.
    label_targets: (B, T, n_labels) teacher label distributions for the heads
    the batch was indexed with (the ones label_scores were computed under).
    """
    rows, cols = _gold_positions(batch)
    forbidden = arc_mask(batch.mask)
    arc_logp = ops.masked_fill(ops.log_softmax(arc_scores, axis=-1), forbidden, 0.0)
    label_logp = ops.log_softmax(label_scores, axis=-1)

    arc_term = ops.sum(ops.mul(arc_logp[rows, cols], arc_targets[rows, cols]), axis=-1)
    label_term = ops.sum(ops.mul(label_logp[rows, cols], label_targets[rows, cols]), axis=-1)
    picked = ops.add(arc_term, label_term)
    if weights is not None:
        picked = ops.mul(picked, np.asarray(weights, dtype=picked.data.dtype)[rows])
    return ops.scale(ops.sum(picked), -1.0 / batch.size)
