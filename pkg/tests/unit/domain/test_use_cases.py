"""
Tests for the training, self-training and parsing use cases.
"""

import json

import numpy as np
import pytest

from udpx.core.exceptions import TrainingError
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.reports import RoundReport
from udpx.domain.models.sentence import Treebank
from udpx.domain.use_cases.parse_corpus_use_case import (
    ParseCorpusUseCase,
    looks_like_conllu,
    read_input,
)
from udpx.domain.use_cases.self_train_use_case import (
    ROUND_MARKER,
    ROUNDS_FILE,
    SelfTrainUseCase,
    conf_schedule,
    member_seed,
)
from udpx.domain.use_cases.train_parser_use_case import (
    ParserTrainer,
    PseudoData,
    TrainParserUseCase,
    _soft_targets,
    combined_loss,
    lm_pool_for,
    select_index,
    train_parser,
)
from udpx.modules.data.batching import index_batch
from udpx.modules.data.conllu import read_conllu
from udpx.modules.data.vocab import build_alphabets
from udpx.modules.model.parser import Parser
from udpx.numkernel.value import Parameter
from tests.utils.assertions import assert_model_dir, assert_same_heads, assert_valid_tree
from tests.utils.synthetic import chain_sentence, synthetic_treebank, unlabeled
from tests.utils.test_helpers import tiny_config, write_text_file, write_treebank_file


class TestCombinedLoss:
    """Weighted sum of the objective terms."""

    def test_default_weights(self):
        assert combined_loss(1.0, 2.0, 3.0) == pytest.approx(1.85)

    def test_all_zero(self):
        assert combined_loss(0.0, 0.0, 0.0) == 0.0

    def test_pseudo_term_weighted_by_conf(self):
        assert combined_loss(1.0, pseudo=2.0, conf=0.63) == pytest.approx(2.26)

    def test_negative_part(self):
        with pytest.raises(TrainingError, match="wo loss is negative"):
            combined_loss(1.0, -0.5, 0.0)

    def test_values_keep_gradients(self):
        parse = Parameter(np.array(1.0), name="parse")
        wo = Parameter(np.array(2.0), name="wo")
        total = combined_loss(parse, wo, 3.0, gamma_wo=0.5, gamma_mlm=0.1)

        assert total.item() == pytest.approx(2.3)
        total.backward()
        assert float(parse.grad) == pytest.approx(1.0)
        assert float(wo.grad) == pytest.approx(0.5)


class TestSelection:
    def test_first_best_wins(self):
        assert select_index([80.0, 81.0, 81.0]) == 1

    def test_no_candidates(self):
        with pytest.raises(TrainingError):
            select_index([])


class TestConfSchedule:
    """Confidence weight of pseudo-labeled data per round."""

    def test_same_family_first_round(self):
        assert conf_schedule(1, 0.6, 0.03) == pytest.approx(0.63)

    def test_different_family_second_round(self):
        assert conf_schedule(2, 0.4, 0.05) == pytest.approx(0.85)

    def test_clamped_at_one(self):
        assert conf_schedule(2, 0.6, 0.03) == 1.0
        assert conf_schedule(2, 0.6, 0.03, clamp=False) == pytest.approx(1.23)

    def test_round_zero(self):
        with pytest.raises(TrainingError):
            conf_schedule(0, 0.6, 0.03)

    def test_member_seeds(self):
        seeds = {member_seed(1, r, k) for r in range(1, 4) for k in range(5)}
        assert len(seeds) == 15
        assert member_seed(1, 2, 3) == member_seed(1, 2, 3)


class TestParserTrainer:
    """Multi-task training runs."""

    @pytest.fixture
    def small_train(self):
        return synthetic_treebank(10, seed=1, split="train")

    def test_same_seed_same_history(self, test_config, small_train, dev_treebank, target_text):
        first = train_parser(test_config, small_train, dev_treebank, target_text, seed=5)
        second = train_parser(test_config, small_train, dev_treebank, target_text, seed=5)

        assert [r.to_dict() for r in first.history] == [r.to_dict() for r in second.history]
        state_a, state_b = first.parser.state_dict(), second.parser.state_dict()
        assert all(np.array_equal(state_a[name], state_b[name]) for name in state_a)

    def test_different_seeds_differ(self, test_config, small_train):
        first = train_parser(test_config, small_train, seed=1).parser.state_dict()
        second = train_parser(test_config, small_train, seed=2).parser.state_dict()
        assert not np.array_equal(first["encoder.word_embed"], second["encoder.word_embed"])

    def test_history_records_every_objective(
        self, test_config, small_train, dev_treebank, target_text
    ):
        result = train_parser(test_config, small_train, dev_treebank, target_text, seed=3)

        assert 1 <= len(result.history) <= test_config.train.max_epochs
        for record in result.history:
            assert record.phase == "multitask"
            assert record.steps == 2
            assert record.parse_loss > 0
            assert record.wo_loss > 0
            assert record.mlm_loss > 0
            assert record.dev_uas is not None
        assert result.best_dev_uas == max(r.dev_uas for r in result.history)
        assert sum(r.best for r in result.history) >= 1

    def test_language_model_weights_off(self, small_train, target_text):
        config = tiny_config(train={"gamma_wo": 0.0, "gamma_mlm": 0.0})
        result = train_parser(config, small_train, lm_text=target_text, seed=3)
        assert all(r.wo_loss == 0.0 and r.mlm_loss == 0.0 for r in result.history)

    def test_pretraining_epochs(self, small_train, target_text):
        config = tiny_config(train={"lm_pretrain_epochs": 1, "max_epochs": 1})
        result = train_parser(config, small_train, lm_text=target_text, seed=3)

        assert [r.phase for r in result.history] == ["lm", "multitask"]
        assert result.history[0].parse_loss == 0.0

    def test_without_dev_keeps_last_epoch(self, test_config, small_train):
        result = train_parser(test_config, small_train, seed=1)
        assert result.best_epoch == len(result.history) == test_config.train.max_epochs
        assert result.best_dev_uas is None

    def test_empty_training_data(self, test_config):
        with pytest.raises(TrainingError, match="train treebank is empty"):
            train_parser(test_config, Treebank([]), seed=1)

    def test_source_text_joins_language_model_pool(self, small_train, target_text):
        combined = lm_pool_for(small_train, target_text, True)
        assert len(combined) == len(small_train) + len(target_text)
        assert len(lm_pool_for(small_train, target_text, False)) == len(target_text)

    def test_pseudo_labeled_term(self, test_config, alphabets, train_treebank):
        trainer = ParserTrainer(test_config, alphabets, seed=4)
        pseudo = PseudoData(synthetic_treebank(6, seed=8), conf=0.63)
        parts = trainer.step(list(train_treebank)[:4], [], pseudo)

        assert parts["pseudo_loss"] > 0
        expected = parts["parse_loss"] + 0.63 * parts["pseudo_loss"]
        assert parts["loss"] == pytest.approx(expected)

    def test_soft_targets_layout(self):
        sentence = chain_sentence(2)
        n_labels = 3
        arcs = np.array([[0.9, 0.0, 0.1], [0.2, 0.8, 0.0]])
        labels = np.arange(2 * 3 * n_labels, dtype=float).reshape(2, 3, n_labels)
        dist = ParseDistribution(arcs, labels / labels.sum(axis=2, keepdims=True))

        batch = index_batch([sentence], build_alphabets(Treebank([sentence])), with_gold=True)
        arc_targets, label_targets = _soft_targets(batch, [dist])

        np.testing.assert_array_equal(arc_targets[0, 1:], arcs)
        assert not arc_targets[0, 0].any()
        # label rows follow the batch heads (gold chain: ROOT, then token 1)
        np.testing.assert_array_equal(label_targets[0, 1], dist.label_probs[0, 0])
        np.testing.assert_array_equal(label_targets[0, 2], dist.label_probs[1, 1])

    def test_soft_pseudo_targets_train(self, test_config, alphabets, train_treebank, dev_treebank):
        members = [Parser(test_config, alphabets, seed=1)]
        pool = list(dev_treebank)
        dists = members[0].predict_distributions(pool)
        pseudo = PseudoData(Treebank(members[0].parse(pool)), conf=0.5, distributions=dists)

        trainer = ParserTrainer(test_config, alphabets, seed=4)
        parts = trainer.step(list(train_treebank)[:4], [], pseudo)
        assert np.isfinite(parts["pseudo_loss"])
        assert parts["pseudo_loss"] > 0


class TestTrainParserUseCase:
    def test_writes_model_directory(self, test_config, train_treebank, dev_treebank, temp_dir):
        result = TrainParserUseCase(test_config).execute(
            train_treebank, temp_dir / "model", seed=1, dev=dev_treebank, flags={"seed": 1}
        )

        assert result.success
        assert result.duration_seconds is not None
        assert_model_dir(temp_dir / "model")
        history = (temp_dir / "model" / "history.jsonl").read_text().splitlines()
        assert len(history) == result.metadata["epochs"]
        assert json.loads(history[0])["epoch"] == 1
        assert json.loads((temp_dir / "model" / "flags.json").read_text()) == {"seed": 1}

    def test_retraining_replaces_history(self, test_config, train_treebank, temp_dir):
        use_case = TrainParserUseCase(test_config)
        use_case.execute(train_treebank, temp_dir / "model", seed=1)
        use_case.execute(train_treebank, temp_dir / "model", seed=1)

        history = (temp_dir / "model" / "history.jsonl").read_text().splitlines()
        assert len(history) == test_config.train.max_epochs


@pytest.fixture
def selftrain_data():
    return (
        synthetic_treebank(10, seed=1, split="train"),
        synthetic_treebank(6, seed=2, split="dev"),
        unlabeled(synthetic_treebank(8, seed=3)),
    )


def selftrain_config(**selftrain):
    settings = {"model_counts": [2, 1], "max_rounds": 1, "min_gain": -100.0}
    settings.update(selftrain)
    return tiny_config(train={"max_epochs": 1}, selftrain=settings)


class TestSelfTrainUseCase:
    """Rounds of ensemble-teacher self-training."""

    def test_single_round_trains_seed_models(self, selftrain_data, temp_dir):
        source, dev, pool = selftrain_data
        result = SelfTrainUseCase(selftrain_config()).run(source, dev, pool, temp_dir, seed=1)

        assert len(result.reports) == 1
        report = result.reports[0]
        assert report.conf is None
        assert report.members == 2
        assert report.stopped
        assert report.gain is None
        for k in range(2):
            assert_model_dir(temp_dir / "round_1" / f"member_{k}")
        assert (temp_dir / "round_1" / ROUND_MARKER).exists()
        assert len(result.ensemble) == 2

    def test_second_round_uses_teacher(self, selftrain_data, temp_dir):
        source, dev, pool = selftrain_data
        config = selftrain_config(max_rounds=2)
        result = SelfTrainUseCase(config).run(source, dev, pool, temp_dir, seed=1)

        assert [r.round for r in result.reports] == [1, 2]
        second = result.reports[1]
        assert second.conf == pytest.approx(0.63)
        assert second.members == 1
        assert second.pseudo_sentences == len(pool)
        assert second.gain == pytest.approx(
            100.0 * (second.ensemble_dev_uas - result.reports[0].ensemble_dev_uas)
        )
        for sentence in read_conllu(temp_dir / "round_2" / "pseudo.conllu"):
            assert_valid_tree(sentence)

        lines = (temp_dir / ROUNDS_FILE).read_text().splitlines()
        assert [RoundReport.from_dict(json.loads(line)).round for line in lines] == [1, 2]

    def test_stops_when_gain_is_small(self, selftrain_data, temp_dir):
        source, dev, pool = selftrain_data
        config = selftrain_config(max_rounds=4, min_gain=1000.0, model_counts=[1])
        result = SelfTrainUseCase(config).run(source, dev, pool, temp_dir, seed=1)

        assert len(result.reports) == 2
        assert result.reports[-1].stopped
        assert not (temp_dir / "round_3").exists()

    def test_empty_pool_runs_one_round(self, selftrain_data, temp_dir):
        source, dev, _ = selftrain_data
        config = selftrain_config(max_rounds=3, model_counts=[1])
        result = SelfTrainUseCase(config).run(source, dev, [], temp_dir, seed=1)
        assert len(result.reports) == 1

    def test_resume_after_finished_round(self, selftrain_data, temp_dir):
        source, dev, pool = selftrain_data
        first_config = selftrain_config(model_counts=[1])
        SelfTrainUseCase(first_config).run(source, dev, pool, temp_dir, seed=1)
        checkpoint = temp_dir / "round_1" / "member_0" / "model.ckpt"
        before = checkpoint.stat().st_mtime_ns
        (temp_dir / "round_2" / "member_0").mkdir(parents=True)

        config = selftrain_config(model_counts=[1], max_rounds=2)
        result = SelfTrainUseCase(config).run(source, dev, pool, temp_dir, seed=1)

        assert checkpoint.stat().st_mtime_ns == before
        assert [r.round for r in result.reports] == [1, 2]
        assert (temp_dir / "round_2" / ROUND_MARKER).exists()

    def test_reproducible_member_seeds(self, selftrain_data, temp_dir):
        source, dev, pool = selftrain_data
        first = SelfTrainUseCase(selftrain_config()).run(source, dev, pool, temp_dir / "a", seed=7)
        second = SelfTrainUseCase(selftrain_config()).run(source, dev, pool, temp_dir / "b", seed=7)

        assert first.reports[0].member_seeds == second.reports[0].member_seeds
        assert first.reports[0].ensemble_dev_uas == second.reports[0].ensemble_dev_uas

    def test_several_runs(self, selftrain_data, temp_dir):
        source, dev, pool = selftrain_data
        result = SelfTrainUseCase(selftrain_config(model_counts=[1])).execute(
            source, dev, pool, temp_dir, seed=1, runs=2, flags={"runs": 2}
        )

        assert (temp_dir / "run_0" / ROUNDS_FILE).exists()
        assert (temp_dir / "run_1" / ROUNDS_FILE).exists()
        best = json.loads((temp_dir / "best_run.json").read_text())
        assert best["run"] == result.metadata["best_run"]
        assert result.output_path == temp_dir / f"run_{best['run']}"

    def test_empty_dev(self, selftrain_data, temp_dir):
        source, _, pool = selftrain_data
        with pytest.raises(TrainingError):
            SelfTrainUseCase(selftrain_config()).run(
                source, Treebank([], split="dev"), pool, temp_dir, seed=1
            )


class TestParseCorpusUseCase:
    """Parsing input files with one model or an ensemble."""

    @pytest.fixture
    def model_dir(self, test_config, alphabets, temp_dir):
        return Parser(test_config, alphabets, seed=1).save(temp_dir / "model")

    def test_input_detection(self, temp_dir, two_token_conllu, dev_treebank, test_config):
        text = write_text_file(temp_dir / "input.txt", dev_treebank)
        assert looks_like_conllu(two_token_conllu)
        assert not looks_like_conllu(text)

        sentences = read_input(text, test_config)
        assert [s.forms for s in sentences] == [s.forms for s in dev_treebank]

    def test_parse_raw_text(self, model_dir, dev_treebank, temp_dir, test_config):
        text = write_text_file(temp_dir / "input.txt", dev_treebank)
        result = ParseCorpusUseCase(test_config).execute([model_dir], text, temp_dir / "out.conllu")

        assert result.metadata == {"sentences": len(dev_treebank), "models": 1}
        parsed = read_conllu(temp_dir / "out.conllu")
        assert len(parsed) == len(dev_treebank)
        assert (temp_dir / "out.conllu.flags.json").exists()

    def test_gold_trees_are_ignored(self, model_dir, dev_treebank, temp_dir, test_config):
        gold = write_treebank_file(temp_dir / "gold.conllu", dev_treebank)
        ParseCorpusUseCase(test_config).execute([model_dir], gold, temp_dir / "out.conllu")

        plain = [sentence.without_annotation() for sentence in read_conllu(gold)]
        expected = Parser.load(model_dir).parse(plain)
        assert_same_heads(list(read_conllu(temp_dir / "out.conllu")), expected)

    def test_empty_input(self, model_dir, temp_dir, test_config):
        empty = write_text_file(temp_dir / "empty.txt", [])
        use_case = ParseCorpusUseCase(test_config)
        result = use_case.execute([model_dir], empty, temp_dir / "out.conllu")

        assert result.metadata["sentences"] == 0
        assert (temp_dir / "out.conllu").read_text() == ""

    def test_missing_input(self, model_dir, temp_dir, test_config):
        with pytest.raises(FileNotFoundError):
            ParseCorpusUseCase(test_config).execute(
                [model_dir], temp_dir / "absent.txt", temp_dir / "out.conllu"
            )
