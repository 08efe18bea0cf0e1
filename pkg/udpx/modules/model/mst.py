"""
Maximum spanning tree decoding.

Chu-Liu-Edmonds over log-probability arc weights, with cycles found by
networkx. A tree always has exactly one child of ROOT: when the
unconstrained optimum has several, every root child is tried and the best
constrained tree kept.
"""

from typing import List, Sequence, Tuple

import networkx as nx
import numpy as np

from udpx.core.exceptions import TreeError
from udpx.domain.models.alphabets import Alphabets
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.sentence import Sentence, validate_heads

# probabilities below this are treated as this when taking logs
PROB_FLOOR = 1e-300


def chu_liu_edmonds(scores: np.ndarray) -> np.ndarray:
    """
    Maximum-weight arborescence rooted at node 0.

    Args:
        scores: (n, n) weights, scores[d, h] for the arc h -> d; -inf forbids
            an arc. Row 0 and the diagonal are ignored.

    Returns:
        heads of length n with heads[0] = -1
    """
    scores = np.array(scores, dtype=np.float64, copy=True)
    n = scores.shape[0]
    scores[0, :] = -np.inf
    np.fill_diagonal(scores, -np.inf)
    return _cle(scores) if n > 1 else np.array([-1])


def _cle(scores: np.ndarray) -> np.ndarray:
    n = scores.shape[0]
    heads = np.argmax(scores, axis=1)
    heads[0] = -1

    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from((int(heads[d]), d) for d in range(1, n))
    try:
        cycle_edges = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return heads

    cycle = np.array(sorted({edge[1] for edge in cycle_edges}))
    in_cycle = np.zeros(n, dtype=bool)
    in_cycle[cycle] = True
    remaining = np.flatnonzero(~in_cycle)  # always contains 0
    m = len(remaining)

    contracted = np.full((m + 1, m + 1), -np.inf)
    contracted[:m, :m] = scores[np.ix_(remaining, remaining)]

    # arcs entering the cycle: gain over the cycle arc they replace
    cycle_arc = scores[cycle, heads[cycle]]
    entering = scores[np.ix_(cycle, remaining)] - cycle_arc[:, None]
    enter_choice = np.argmax(entering, axis=0)
    contracted[m, :m] = entering[enter_choice, np.arange(m)]

    # arcs leaving the cycle: best cycle node as head
    leaving = scores[np.ix_(remaining, cycle)]
    leave_choice = np.argmax(leaving, axis=1)
    contracted[:m, m] = leaving[np.arange(m), leave_choice]
    contracted[0, :] = -np.inf

    sub_heads = _cle(contracted)

    result = heads.copy()
    for new_index in range(1, m):
        node = remaining[new_index]
        head = sub_heads[new_index]
        result[node] = cycle[leave_choice[new_index]] if head == m else remaining[head]

    entry_head = sub_heads[m]
    result[cycle[enter_choice[entry_head]]] = remaining[entry_head]
    return result


def tree_score(scores: np.ndarray, heads: Sequence[int]) -> float:
    """Sum of scores[d, heads[d]] over d >= 1."""
    return float(sum(scores[d, heads[d]] for d in range(1, len(heads))))


def single_root_mst(scores: np.ndarray) -> np.ndarray:
    """
    Best arborescence with exactly one child of node 0.

    Ties between root children go to the smaller index.
    """
    heads = chu_liu_edmonds(scores)
    if int(np.sum(heads[1:] == 0)) == 1:
        return heads

    best_heads, best_score = None, -np.inf
    for child in range(1, scores.shape[0]):
        if not np.isfinite(scores[child, 0]):
            continue
        constrained = np.array(scores, dtype=np.float64, copy=True)
        constrained[:, 0] = -np.inf
        constrained[child, 0] = scores[child, 0]
        candidate = chu_liu_edmonds(constrained)
        score = tree_score(scores, candidate)
        if best_heads is None or score > best_score:
            best_heads, best_score = candidate, score
    if best_heads is None:
        raise TreeError("no token can attach to ROOT")
    return best_heads


def arc_score_matrix(dist: ParseDistribution) -> np.ndarray:
    """(l+1, l+1) log-probability weights, scores[d, h], self arcs forbidden."""
    length = dist.length
    scores = np.full((length + 1, length + 1), -np.inf)
    scores[1:, :] = np.log(np.maximum(dist.arc_probs, PROB_FLOOR))
    np.fill_diagonal(scores, -np.inf)
    return scores


def decode_tree(dist: ParseDistribution) -> Tuple[List[int], List[int]]:
    """Heads (1-based dependents, 0 = ROOT) and label classes of the best tree."""
    heads = single_root_mst(arc_score_matrix(dist))[1:]
    labels = [int(np.argmax(dist.label_probs[i, head])) for i, head in enumerate(heads)]
    return [int(head) for head in heads], labels


def mst_decode(dist: ParseDistribution, sentence: Sentence, alphabets: Alphabets) -> Sentence:
    """Copy of sentence annotated with the decoded tree."""
    if dist.length != len(sentence):
        raise TreeError(f"distribution for {dist.length} tokens, sentence has {len(sentence)}")
    heads, labels = decode_tree(dist)
    return sentence.with_annotation(heads, [alphabets.label_symbol(k) for k in labels])


def tree_log_prob(dist: ParseDistribution, heads: Sequence[int], labels: Sequence[int]) -> float:
    """
    log P(tree) = sum over dependents of log p_arc + log p_label.

    Raises:
        TreeError: heads do not form a tree of the distribution's length
    """
    if len(heads) != dist.length or len(labels) != dist.length:
        raise TreeError(f"tree of {len(heads)} tokens for a distribution of {dist.length}")
    validate_heads(heads)
    with np.errstate(divide="ignore"):
        total = 0.0
        for i, (head, label) in enumerate(zip(heads, labels)):
            total += float(np.log(dist.arc_probs[i, head]))
            total += float(np.log(dist.label_probs[i, head, label]))
    return total


sentence_prob = tree_log_prob
