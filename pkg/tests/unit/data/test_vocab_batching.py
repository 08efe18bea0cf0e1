"""
Tests for alphabet construction and index batching.
"""

import numpy as np
import pytest

from udpx.core.exceptions import AlphabetError, DataFormatError
from udpx.domain.models.alphabets import MASK, N_RESERVED, PAD, ROOT, UNK, Alphabets
from udpx.domain.models.sentence import Sentence, Token, Treebank
from udpx.modules.data.batching import batches, index_batch
from udpx.modules.data.corpus import load_unlabeled
from udpx.modules.data.vocab import build_alphabets


def labeled(*forms: str) -> Treebank:
    tokens = [Token(forms[0], "X", head=0, deprel="root")]
    tokens += [Token(form, "X", head=1, deprel="dep") for form in forms[1:]]
    return Treebank([Sentence(tokens=tuple(tokens))])


class TestBuildAlphabets:
    """Vocabulary selection."""

    def test_max_vocab_keeps_most_frequent(self):
        alphabets = build_alphabets(labeled("a", "a", "b"), max_vocab=1)

        assert alphabets.words.symbols == ["a"]
        assert alphabets.word_index("b") == UNK

    def test_frequency_ties_broken_by_first_occurrence(self):
        alphabets = build_alphabets(labeled("c", "b", "a", "b", "a"))
        assert alphabets.words.symbols == ["b", "a", "c"]

    def test_unlabeled_text_contributes_words_not_labels(self):
        text = load_unlabeled("x y x/NOUN", min_words=0)
        alphabets = build_alphabets(labeled("a"), text)

        assert "x" in alphabets.words
        assert "NOUN" in alphabets.pos
        assert alphabets.labels.symbols == ["root"]

    def test_reserved_entries_share_indices(self, alphabets):
        for alphabet in (alphabets.words, alphabets.chars, alphabets.pos, alphabets.labels):
            assert alphabet.index("<pad>") == PAD
            assert alphabet.index("<mask>") == MASK
            assert alphabet.index("<root>") == ROOT
            assert len(alphabet) == alphabet.size + N_RESERVED

    def test_deterministic(self, train_treebank, target_text):
        first = build_alphabets(train_treebank, target_text)
        second = build_alphabets(train_treebank, target_text)
        assert first.fingerprint() == second.fingerprint()

    def test_empty_labeled_data(self):
        with pytest.raises(AlphabetError):
            build_alphabets(Treebank([]))

    def test_save_and_load(self, alphabets, temp_dir):
        loaded = Alphabets.load(alphabets.save(temp_dir / "alphabets.json"))

        assert loaded.fingerprint() == alphabets.fingerprint()
        assert loaded.words == alphabets.words

    def test_lowercase_fallback(self):
        on = build_alphabets(labeled("dog"))
        off = build_alphabets(labeled("dog"), lowercase_fallback=False)

        assert on.word_index("Dog") == on.words.index("dog")
        assert off.word_index("Dog") == UNK

    def test_label_classes_skip_reserved(self, alphabets):
        first = alphabets.labels.symbols[0]
        assert alphabets.label_class(first) == 0
        assert alphabets.label_symbol(0) == first
        with pytest.raises(AlphabetError):
            alphabets.label_class("no-such-relation")


class TestIndexBatch:
    """Padded index arrays."""

    def test_parse_layout(self, alphabets, train_treebank):
        sentences = list(train_treebank)[:3]
        batch = index_batch(sentences, alphabets, with_gold=True)
        longest = max(len(s) for s in sentences)

        assert batch.words.shape == (3, longest + 1)
        assert np.all(batch.words[:, 0] == ROOT)
        np.testing.assert_array_equal(batch.lengths, [len(s) for s in sentences])
        for b, sentence in enumerate(sentences):
            assert batch.mask[b].sum() == len(sentence) + 1
            np.testing.assert_array_equal(batch.heads[b, 1 : len(sentence) + 1], sentence.heads)
            assert np.all(batch.words[b, len(sentence) + 1 :] == PAD)
        assert not batch.token_mask[:, 0].any()

    def test_plain_layout(self, alphabets, train_treebank):
        sentence = train_treebank[0]
        batch = index_batch([sentence], alphabets, with_root=False)

        assert batch.offset == 0
        assert batch.words.shape == (1, len(sentence))
        assert batch.heads is None

    def test_orders_permute_tokens(self, alphabets, train_treebank):
        sentence = train_treebank[0]
        order = np.arange(len(sentence))[::-1]
        batch = index_batch([sentence], alphabets, with_root=False, orders=[order])

        expected = [alphabets.word_index(form) for form in reversed(sentence.forms)]
        np.testing.assert_array_equal(batch.words[0], expected)

    def test_char_axis_respects_window(self, alphabets, two_token_sentence):
        batch = index_batch([two_token_sentence], alphabets, min_char_width=7)
        assert batch.chars.shape[2] == 7

    def test_empty_batch(self, alphabets):
        with pytest.raises(DataFormatError):
            index_batch([], alphabets)

    def test_partial_contextual_vectors(self, alphabets, two_token_sentence):
        with_vectors = two_token_sentence.with_lm_vectors(np.ones((2, 3)))
        with pytest.raises(DataFormatError, match="missing"):
            index_batch([with_vectors, two_token_sentence], alphabets)


class TestBatches:
    def test_sequential_chunks(self):
        assert batches(list(range(5)), 2) == [[0, 1], [2, 3], [4]]

    def test_shuffled_chunks_cover_everything(self, rng):
        chunks = batches(list(range(10)), 3, rng)
        assert sorted(x for chunk in chunks for x in chunk) == list(range(10))
        assert [len(chunk) for chunk in chunks] == [3, 3, 3, 1]
