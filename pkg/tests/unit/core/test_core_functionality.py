"""
Tests for core functionality.

This module tests core components like configuration, results, logging,
error handling and decorators.
"""

import io
import json

import pytest

from udpx.core.base import EXIT_DATA_ERROR, EXIT_OK, ProcessingResult
from udpx.core.config import (
    Config,
    EncoderConfig,
    LMConfig,
    OptimizerConfig,
    SelfTrainConfig,
    TrainConfig,
    parse_flat_config,
)
from udpx.core.decorators import format_duration, log_operation, time_operation
from udpx.core.error_handler import ErrorHandler, get_error_handler
from udpx.core.exceptions import (
    ConfigError,
    DataFormatError,
    GradientError,
    ModelError,
    ShapeError,
    TrainingError,
    TreeError,
    UdpxError,
)
from udpx.core.logger import MetricsStream, get_logger
from udpx.core.progress import ProgressTracker, format_status, track_progress


def test_config_initialization():
    """Test Config initialization."""
    config = Config()

    assert isinstance(config.encoder, EncoderConfig)
    assert isinstance(config.train, TrainConfig)
    assert isinstance(config.selftrain, SelfTrainConfig)
    assert config.log_level == "INFO"
    assert config.dtype == "float64"
    assert config.verbose == False


def test_encoder_config_defaults():
    """Test EncoderConfig defaults."""
    config = EncoderConfig()

    assert config.word_dim == 100
    assert config.char_dim == 50
    assert config.pos_dim == 50
    assert config.lstm_layers == 3
    assert config.lstm_hidden == 512
    assert config.output_dim == 1024
    assert config.contextual_dim is None


def test_optimizer_and_train_defaults():
    """Test OptimizerConfig and TrainConfig defaults."""
    optimizer = OptimizerConfig()
    train = TrainConfig()

    assert optimizer.learning_rate == 0.001
    assert optimizer.beta1 == 0.9
    assert optimizer.beta2 == 0.9
    assert optimizer.clip_norm == 5.0
    assert optimizer.decay_rate == 0.999995
    assert train.gamma_wo == 0.2
    assert train.gamma_mlm == 0.15
    assert train.batch_size == 32
    assert train.patience == 20


def test_lm_config_defaults():
    """Test LMConfig defaults."""
    config = LMConfig()

    assert config.mask_rate == 0.15
    assert config.mask_token_prob == 0.8
    assert config.keep_token_prob == 0.1


class TestSelfTrainConfig:
    """Self-training schedule settings."""

    def test_defaults(self):
        config = SelfTrainConfig()

        assert config.model_counts == [5, 5, 4, 3, 2, 2, 2, 2]
        assert config.min_gain == 0.2
        assert config.max_rounds == 8
        assert config.pool_size == 15000
        assert config.pseudo_targets == "one_hot"

    def test_coefficients_follow_language_family(self):
        assert SelfTrainConfig(same_family=True).coefficients == (0.6, 0.03)
        assert SelfTrainConfig(same_family=False).coefficients == (0.4, 0.05)

    def test_explicit_coefficients_override_family(self):
        config = SelfTrainConfig(same_family=False, alpha_c=0.5)
        assert config.coefficients == (0.5, 0.05)

    def test_count_for_round_repeats_last(self):
        config = SelfTrainConfig(model_counts=[5, 4, 2])

        assert config.count_for_round(1) == 5
        assert config.count_for_round(3) == 2
        assert config.count_for_round(7) == 2
        with pytest.raises(ValueError):
            config.count_for_round(0)

    def test_counts_accept_comma_string(self):
        assert SelfTrainConfig(model_counts="5,5, 4").model_counts == [5, 5, 4]

    def test_increasing_counts_rejected(self):
        with pytest.raises(ValueError):
            SelfTrainConfig(model_counts=[2, 3])


class TestConfigValidation:
    """Invalid values surface as ConfigError."""

    @pytest.mark.parametrize(
        "data",
        [
            {"log_level": "LOUD"},
            {"dtype": "float16"},
            {"encoder": {"lstm_hidden": 0}},
            {"encoder": {"embedding_dropout": 1.0}},
            {"lm": {"mask_token_prob": 0.8, "keep_token_prob": 0.3}},
            {"train": {"gamma_wo": -0.1}},
            {"selftrain": {"pseudo_targets": "hard"}},
            {"selftrain": {"alpha_c": 0.0}},
            {"unknown_section": {}},
            {"train": {"no_such_field": 1}},
        ],
    )
    def test_invalid_values(self, data):
        with pytest.raises(ConfigError):
            Config.from_dict(data)

    def test_case_is_normalized(self):
        config = Config.from_dict({"log_level": "debug", "dtype": "FLOAT32"})
        assert config.log_level == "DEBUG"
        assert config.dtype == "float32"

    def test_assignment_is_validated(self):
        config = Config()
        with pytest.raises(ValueError):
            config.train.batch_size = 0


class TestConfigFiles:
    """Loading and saving configuration files."""

    def test_yaml_round_trip(self, temp_config_file, test_config):
        loaded = Config.load_from_file(temp_config_file)
        assert loaded.to_dict() == test_config.to_dict()

    def test_flat_file(self, flat_config_file):
        config = Config.load_from_file(flat_config_file)

        assert config.train.gamma_wo == 0.3
        assert config.train.gamma_mlm == 0.1
        assert config.selftrain.model_counts == [3, 2]
        assert config.log_level == "DEBUG"

    def test_missing_file(self, temp_dir):
        with pytest.raises(FileNotFoundError):
            Config.load_from_file(temp_dir / "absent.yaml")

    def test_flat_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_flat_config("no_such_key = 1")

    def test_flat_qualified_key(self):
        assert parse_flat_config("train.seed = 7") == {"train": {"seed": 7}}

    def test_flat_key_in_wrong_section(self):
        with pytest.raises(ConfigError, match="unknown key .encoder.seed."):
            parse_flat_config("encoder.seed = 7")

    def test_flat_line_without_pair(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_flat_config("seed = 1\nnot a pair")

    def test_flat_comments_and_blank_lines(self):
        data = parse_flat_config("\n# comment\nbatch_size = 4  # trailing\n")
        assert data == {"train": {"batch_size": 4}}

    def test_env_overrides(self, monkeypatch):
        monkeypatch.setenv("UDPX_LOG_LEVEL", "warning")
        monkeypatch.setenv("UDPX_VERBOSE", "true")
        config = Config.load_from_env()

        assert config.log_level == "WARNING"
        assert config.verbose is True


class TestProcessingResult:
    """Test ProcessingResult."""

    def test_success_result(self):
        result = ProcessingResult.success_result("done", output_path="out.conllu")

        assert result.success
        assert result.exit_code == EXIT_OK
        assert str(result.output_path) == "out.conllu"
        assert not result.has_errors()

    def test_error_result(self):
        result = ProcessingResult.error_result("bad", errors=["x"])

        assert not result.success
        assert result.exit_code == EXIT_DATA_ERROR
        assert result.has_errors()

    def test_add_error_sets_exit_code(self):
        result = ProcessingResult.success_result("ok")
        result.add_error("late failure")

        assert not result.success
        assert result.exit_code == EXIT_DATA_ERROR
        assert result.summary() == "failed | ok | 1 error(s)"

    def test_summary_includes_duration(self):
        result = ProcessingResult.success_result("Parsed 3 sentences")
        result.duration_seconds = 1.5
        assert result.summary() == "ok | Parsed 3 sentences | 1.50s"


class TestExceptions:
    """Exception messages carry their location."""

    def test_data_format_error_location(self):
        error = DataFormatError("bad head", line_number=4, source="train.conllu")

        assert str(error) == "train.conllu:line 4: bad head"
        assert error.line_number == 4
        assert isinstance(error, ValueError)

    def test_shape_error_lists_shapes(self):
        error = ShapeError("matmul", (2, 3), (4, 5), detail="inner dims")
        assert str(error) == "matmul: incompatible shapes (2, 3), (4, 5) (inner dims)"

    def test_gradient_error_names_parameter(self):
        assert "parser.arc.U1" in str(GradientError("parser.arc.U1"))

    def test_hierarchy(self):
        for error_type in (DataFormatError, TreeError, ModelError, ConfigError, TrainingError):
            assert issubclass(error_type, UdpxError)


class TestErrorHandler:
    """Exceptions map to messages and exit codes."""

    @pytest.fixture
    def handler(self):
        return ErrorHandler()

    def test_file_not_found_names_path(self, handler):
        error = FileNotFoundError(2, "No such file or directory", "/no/such/file.conllu")
        result = handler.handle_error(error, "train")

        assert result.exit_code == EXIT_DATA_ERROR
        assert "/no/such/file.conllu" in result.message

    def test_data_error(self, handler):
        result = handler.handle_error(DataFormatError("bad", line_number=3), "parse")

        assert result.message.startswith("Invalid data:")
        assert "line 3" in result.message
        assert result.exit_code == EXIT_DATA_ERROR

    def test_subclass_uses_parent_handler(self, handler):
        class StrictConfigError(ConfigError):
            pass

        result = handler.handle_error(StrictConfigError("nope"), "train")
        assert result.message.startswith("Invalid configuration")

    def test_generic_error(self, handler):
        result = handler.handle_error(RuntimeError("boom"), "eval")

        assert "RuntimeError" in result.message
        assert not result.success

    def test_return_result_false(self, handler):
        assert handler.handle_error(ModelError("x"), "parse", return_result=False) is None

    def test_register_handler(self, handler):
        handler.register_handler(
            KeyError, lambda error, context, **kw: ProcessingResult.error_result("custom")
        )
        assert handler.handle_error(KeyError("k"), "ctx").message == "custom"

    def test_global_handler_is_singleton(self):
        assert get_error_handler() is get_error_handler()


class TestMetricsStream:
    """JSON-lines metrics."""

    def test_emit_to_stream(self):
        buffer = io.StringIO()
        stream = MetricsStream(buffer)
        stream.emit({"epoch": 1, "dev_uas": 50.0})
        stream.emit({"epoch": 2, "dev_uas": 60.0})

        lines = buffer.getvalue().splitlines()
        assert [json.loads(line)["epoch"] for line in lines] == [1, 2]
        assert len(stream.records) == 2

    def test_emit_to_file_and_numpy_values(self, temp_dir):
        import numpy as np

        path = temp_dir / "metrics" / "history.jsonl"
        with MetricsStream(path) as stream:
            stream.emit({"loss": np.float64(1.5), "path": temp_dir})

        record = json.loads(path.read_text().strip())
        assert record["loss"] == 1.5
        assert record["path"] == str(temp_dir)

    def test_file_targets_append(self, temp_dir):
        path = temp_dir / "history.jsonl"
        for epoch in (1, 2):
            with MetricsStream(path) as stream:
                stream.emit({"epoch": epoch})

        assert len(path.read_text().splitlines()) == 2

    def test_get_logger_binds_component(self):
        logger = get_logger("Component")
        logger.debug("bound logger works")


class TestDecorators:
    """Timing and operation logging."""

    def test_format_duration(self):
        assert format_duration(5) == "5.0 seconds"
        assert format_duration(65) == "1m 5.0s"
        assert format_duration(3725) == "1h 2m 5.0s"

    def test_time_operation_fills_duration(self):
        @time_operation(verbose=True)
        def operation():
            return ProcessingResult.success_result("ok")

        result = operation()
        assert result.duration_seconds is not None
        assert result.duration_seconds >= 0

    def test_time_operation_reraises(self):
        @time_operation(verbose=True)
        def operation():
            raise TrainingError("no data")

        with pytest.raises(TrainingError):
            operation()

    def test_log_operation_passes_through(self):
        @log_operation(level="DEBUG", include_result=True)
        def add(a, b):
            return a + b

        assert add(2, 3) == 5
        assert add.__name__ == "add"


class TestProgress:
    """Progress tracking."""

    def test_format_status_skips_missing_values(self):
        assert format_status({"loss": 0.5, "dev_uas": None}) == "loss 0.5000"
        assert format_status({}) == ""

    def test_disabled_tracker_still_counts(self):
        with track_progress("Training", total=3, enabled=False) as tracker:
            tracker.update(1, loss=1.25, dev_uas=0.5)
            tracker.update(2)

        assert tracker.completed == 3
        assert tracker.status == "loss 1.2500  dev_uas 0.5000"
        assert tracker.progress is None

    def test_enabled_tracker_renders(self):
        with ProgressTracker("Annotating", total=2) as tracker:
            tracker.update(2)
        assert tracker.progress.tasks[0].completed == 2
