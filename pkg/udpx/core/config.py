"""
Configuration management for udpx.

This module handles configuration loading, validation, and persistence.
Each concern (data, encoder, parser head, language-model heads, optimizer,
training loop, self-training) has its own section model; the root Config
bundles them together with the global logging settings.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from udpx.core.exceptions import ConfigError

UNIVERSAL_POS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)


class _Section(BaseModel):
    """Base for config sections: unknown keys are an error."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class DataConfig(_Section):
    """Corpus reading and vocabulary settings."""

    max_vocab: int = 100_000
    min_words: int = 10
    punct_tags: List[str] = Field(default_factory=list)
    pos_tags: List[str] = Field(default_factory=lambda: list(UNIVERSAL_POS_TAGS))
    lowercase_fallback: bool = True

    @field_validator("max_vocab", "min_words")
    @classmethod
    def validate_non_negative(cls, v):
        """Validate counts."""
        if v < 0:
            raise ValueError(f"Invalid count '{v}'. Must be >= 0")
        return v


class EncoderConfig(_Section):
    """Embedding and BiLSTM encoder dimensions."""

    word_dim: int = 100
    char_dim: int = 50
    pos_dim: int = 50
    char_window: int = 3
    char_filters: int = 50
    lstm_layers: int = 3
    lstm_hidden: int = 512
    contextual_dim: Optional[int] = None
    contextual_projection: Optional[int] = None
    embedding_dropout: float = 0.33
    recurrent_dropout: float = 0.33
    layer_dropout: float = 0.33

    @field_validator(
        "word_dim", "char_dim", "pos_dim", "char_window", "char_filters",
        "lstm_layers", "lstm_hidden",
    )
    @classmethod
    def validate_positive(cls, v):
        """Validate dimensions."""
        if v < 1:
            raise ValueError(f"Invalid dimension '{v}'. Must be >= 1")
        return v

    @field_validator("embedding_dropout", "recurrent_dropout", "layer_dropout")
    @classmethod
    def validate_rate(cls, v):
        """Validate dropout rates."""
        if not 0.0 <= v < 1.0:
            raise ValueError(f"Invalid dropout rate '{v}'. Must be in [0, 1)")
        return v

    @property
    def output_dim(self) -> int:
        """Width of the concatenated forward/backward top-layer states."""
        return 2 * self.lstm_hidden


class ParserConfig(_Section):
    """Biaffine scorer dimensions."""

    arc_mlp_dim: int = 512
    label_mlp_dim: int = 128
    mlp_dropout: float = 0.33

    @field_validator("arc_mlp_dim", "label_mlp_dim")
    @classmethod
    def validate_positive(cls, v):
        """Validate dimensions."""
        if v < 1:
            raise ValueError(f"Invalid dimension '{v}'. Must be >= 1")
        return v


class LMConfig(_Section):
    """Masked language modeling and word ordering heads."""

    wo_dim: int = 512
    mask_rate: float = 0.15
    mask_token_prob: float = 0.8
    keep_token_prob: float = 0.1
    shuffle_rate: float = 1.0
    exclude_consumed: bool = False

    @field_validator("mask_rate", "shuffle_rate")
    @classmethod
    def validate_fraction(cls, v):
        """Validate fractions."""
        if not 0.0 < v <= 1.0:
            raise ValueError(f"Invalid rate '{v}'. Must be in (0, 1]")
        return v

    @model_validator(mode="after")
    def validate_replacement_split(self):
        """The mask/keep probabilities leave the remainder for random tokens."""
        if self.mask_token_prob < 0 or self.keep_token_prob < 0:
            raise ValueError("Replacement probabilities must be >= 0")
        if self.mask_token_prob + self.keep_token_prob > 1.0 + 1e-12:
            raise ValueError("mask_token_prob + keep_token_prob must be <= 1")
        return self


class OptimizerConfig(_Section):
    """Adam hyperparameters."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.9
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    decay_rate: float = 0.999995

    @field_validator("learning_rate", "epsilon", "clip_norm")
    @classmethod
    def validate_positive(cls, v):
        """Validate positive values."""
        if v <= 0:
            raise ValueError(f"Invalid value '{v}'. Must be > 0")
        return v

    @field_validator("beta1", "beta2", "decay_rate")
    @classmethod
    def validate_unit(cls, v):
        """Validate values in (0, 1]."""
        if not 0.0 < v <= 1.0:
            raise ValueError(f"Invalid value '{v}'. Must be in (0, 1]")
        return v


class TrainConfig(_Section):
    """Multi-task training loop."""

    gamma_wo: float = 0.2
    gamma_mlm: float = 0.15
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    seed: int = 1
    use_source_lm: bool = True
    lm_pretrain_epochs: int = 0

    @field_validator("gamma_wo", "gamma_mlm")
    @classmethod
    def validate_weight(cls, v):
        """Validate loss weights."""
        if v < 0:
            raise ValueError(f"Invalid loss weight '{v}'. Must be >= 0")
        return v

    @field_validator("batch_size", "max_epochs", "patience")
    @classmethod
    def validate_positive(cls, v):
        """Validate counts."""
        if v < 1:
            raise ValueError(f"Invalid count '{v}'. Must be >= 1")
        return v


SAME_FAMILY_COEFFICIENTS: Tuple[float, float] = (0.6, 0.03)
DIFFERENT_FAMILY_COEFFICIENTS: Tuple[float, float] = (0.4, 0.05)


class SelfTrainConfig(_Section):
    """Ensemble-teacher self-training rounds."""

    same_family: bool = True
    alpha_c: Optional[float] = None
    beta_c: Optional[float] = None
    model_counts: List[int] = Field(default_factory=lambda: [5, 5, 4, 3, 2, 2, 2, 2])
    min_gain: float = 0.2
    max_rounds: int = 8
    pool_size: int = 15_000
    clamp_conf: bool = True
    pseudo_targets: str = "one_hot"
    round1_target_lm: bool = False
    jobs: int = 1

    @field_validator("model_counts", mode="before")
    @classmethod
    def parse_counts(cls, v):
        """Accept '5,5,4' as well as a list."""
        if isinstance(v, str):
            v = [int(part) for part in v.replace(" ", "").split(",") if part]
        return v

    @field_validator("model_counts")
    @classmethod
    def validate_counts(cls, v):
        """Model counts are positive and non-increasing."""
        if not v:
            raise ValueError("model_counts must not be empty")
        if any(count < 1 for count in v):
            raise ValueError(f"Invalid model_counts {v}. Every count must be >= 1")
        if any(later > earlier for earlier, later in zip(v, v[1:])):
            raise ValueError(f"Invalid model_counts {v}. Counts must be non-increasing")
        return v

    @field_validator("max_rounds", "jobs")
    @classmethod
    def validate_positive(cls, v):
        """Validate counts."""
        if v < 1:
            raise ValueError(f"Invalid count '{v}'. Must be >= 1")
        return v

    @field_validator("pseudo_targets")
    @classmethod
    def validate_targets(cls, v):
        """Validate pseudo-label target mode."""
        valid = ["one_hot", "soft"]
        if v.lower() not in valid:
            raise ValueError(
                f"Invalid pseudo_targets '{v}'. Must be one of: {', '.join(valid)}"
            )
        return v.lower()

    @model_validator(mode="after")
    def validate_coefficients(self):
        """Explicit confidence coefficients must be positive."""
        for name in ("alpha_c", "beta_c"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"Invalid {name} '{value}'. Must be > 0")
        return self

    @property
    def coefficients(self) -> Tuple[float, float]:
        """Resolved (alpha_c, beta_c), falling back on the language-family defaults."""
        default = SAME_FAMILY_COEFFICIENTS if self.same_family else DIFFERENT_FAMILY_COEFFICIENTS
        alpha = self.alpha_c if self.alpha_c is not None else default[0]
        beta = self.beta_c if self.beta_c is not None else default[1]
        return alpha, beta

    def count_for_round(self, round_index: int) -> int:
        """Number of students in a 1-based round; the last count repeats."""
        if round_index < 1:
            raise ValueError(f"round index must be >= 1, got {round_index}")
        return self.model_counts[min(round_index, len(self.model_counts)) - 1]


_SECTIONS = ("data", "encoder", "parser", "lm", "optimizer", "train", "selftrain")


class Config(BaseModel):
    """
    Main configuration class for udpx.

    Nested sections per concern plus flattened global settings.
    """

    data: DataConfig = Field(default_factory=DataConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    parser: ParserConfig = Field(default_factory=ParserConfig)
    lm: LMConfig = Field(default_factory=LMConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    selftrain: SelfTrainConfig = Field(default_factory=SelfTrainConfig)

    log_level: str = "INFO"
    log_file: Optional[Path] = None
    dtype: str = "float64"
    progress: bool = False
    verbose: bool = False

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(
                f"Invalid log level '{v}'. Must be one of: {', '.join(valid_levels)}"
            )
        return v.upper()

    @field_validator("dtype")
    @classmethod
    def validate_dtype(cls, v):
        """Validate floating point width."""
        valid = ["float64", "float32"]
        if v.lower() not in valid:
            raise ValueError(f"Invalid dtype '{v}'. Must be one of: {', '.join(valid)}")
        return v.lower()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Config":
        """Build a config, turning pydantic errors into ConfigError."""
        try:
            return cls(**(data or {}))
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e

    @classmethod
    def load_from_file(cls, config_file: Union[str, Path]) -> "Config":
        """Load configuration from a YAML file or a flat 'key = value' file."""
        config_path = Path(config_file)

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        text = config_path.read_text(encoding="utf-8")
        if config_path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
        else:
            data = parse_flat_config(text)
        return cls.from_dict(data)

    @classmethod
    def load_from_env(cls) -> "Config":
        """Load configuration from environment variables."""
        return cls.from_dict(
            {
                "verbose": os.getenv("UDPX_VERBOSE", "false").lower() == "true",
                "log_level": os.getenv("UDPX_LOG_LEVEL", "INFO"),
                "dtype": os.getenv("UDPX_DTYPE", "float64"),
            }
        )

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data view of the config (paths as strings)."""
        return self.model_dump(mode="json")

    def save_to_file(self, config_file: Union[str, Path]) -> None:
        """Save configuration to YAML file."""
        config_path = Path(config_file)
        config_path.parent.mkdir(parents=True, exist_ok=True)

        with open(config_path, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, indent=2, sort_keys=True)


def _field_index() -> Dict[str, List[str]]:
    """Map bare field names to the sections that define them."""
    index: Dict[str, List[str]] = {}
    for section in _SECTIONS:
        model = Config.model_fields[section].annotation
        for name in model.model_fields:
            index.setdefault(name, []).append(section)
    for name in Config.model_fields:
        if name not in _SECTIONS:
            index.setdefault(name, []).append("")
    return index


def parse_flat_config(text: str) -> Dict[str, Any]:
    """
    Parse flat 'key = value' lines into the nested config layout.

    Keys are either 'section.field' or a field name that is unique across
    sections. Values are read as YAML scalars; comma-separated values become
    lists.
    """
    index = _field_index()
    data: Dict[str, Any] = {}

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_number}: expected 'key = value', got '{raw.strip()}'")

        key, value_text = (part.strip() for part in line.split("=", 1))
        if "." in key:
            section, field = key.split(".", 1)
            if section not in _SECTIONS or section not in index.get(field, []):
                raise ConfigError(f"line {line_number}: unknown key '{key}'")
        else:
            owners = index.get(key)
            if not owners:
                raise ConfigError(f"line {line_number}: unknown key '{key}'")
            if len(owners) > 1:
                raise ConfigError(
                    f"line {line_number}: ambiguous key '{key}', use one of "
                    + ", ".join(f"{owner}.{key}" for owner in owners)
                )
            section, field = owners[0], key

        if "," in value_text and not value_text.startswith("["):
            parts = [part.strip() for part in value_text.split(",")]
            value: Any = [yaml.safe_load(part) for part in parts if part]
        else:
            value = yaml.safe_load(value_text) if value_text else None

        if section:
            data.setdefault(section, {})[field] = value
        else:
            data[field] = value

    return data
