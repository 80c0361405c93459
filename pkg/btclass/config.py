"""
Configuration for every tunable named by the classifier modules.

A configuration is a tree of dataclasses. It is read from a YAML file whose top-level keys are the section names
(``similarity``, ``lexicon``, ``features``, ``svm``, ``gazetteer``, ``synth``, ``experiment``, ``runtime``);
missing keys keep their defaults and unknown keys are rejected. Command-line flags are applied on top with
`Config.with_overrides` using dotted keys such as ``svm.c``.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

logger = logging.getLogger(__name__)

__all__ = ["ConfigError", "Config", "load_config", "FEATURE_GROUPS", "STAGES"]

FEATURE_GROUPS = ("lexica", "amount", "date", "word_ngrams", "char_ngrams")

STAGES = {
    "word": ("word_ngrams",),
    "word+char": ("word_ngrams", "char_ngrams"),
    "word+lexica": ("word_ngrams", "lexica"),
    "word+lexica+meta": ("word_ngrams", "lexica", "amount", "date"),
    "all": FEATURE_GROUPS,
}
"""Named feature-group subsets used by the ablation experiments."""


class ConfigError(ValueError):
    """
    A configuration file or override is invalid.
    """
    pass


@dataclass
class SimilarityConfig:
    threshold: float = 0.85

    def validate(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError("similarity.threshold must be in (0, 1], got {}".format(self.threshold))


@dataclass
class LexiconConfig:
    unigram_min: int = 5
    bigram_min: int = 3

    def validate(self):
        if self.unigram_min < 1 or self.bigram_min < 1:
            raise ConfigError("lexicon thresholds must be positive")


@dataclass
class FeatureConfig:
    word_ngram_orders: List[int] = field(default_factory=lambda: [1, 4])
    char_ngram_orders: List[int] = field(default_factory=lambda: [3, 5])
    amount_edges: List[float] = field(default_factory=lambda: [20.0, 60.0, 200.0, 800.0, 1500.0, 3000.0])
    date_windows: List[int] = field(default_factory=lambda: [5, 10, 20, 25])
    groups: List[str] = field(default_factory=lambda: list(FEATURE_GROUPS))

    def validate(self):
        for key in ("word_ngram_orders", "char_ngram_orders"):
            lo, hi = getattr(self, key)
            if not 1 <= lo <= hi:
                raise ConfigError("features.{} must be an ascending pair of positive orders".format(key))
        if any(b <= a for a, b in zip(self.amount_edges, self.amount_edges[1:])) or \
                any(e < 0 for e in self.amount_edges):
            raise ConfigError("features.amount_edges must be non-negative and strictly ascending")
        if any(w < 1 for w in self.date_windows) or \
                any(b <= a for a, b in zip(self.date_windows, self.date_windows[1:])):
            raise ConfigError("features.date_windows must be positive, strictly ascending day counts")
        unknown = set(self.groups) - set(FEATURE_GROUPS)
        if unknown:
            raise ConfigError("Unknown feature groups: {}".format(", ".join(sorted(unknown))))
        if "word_ngrams" not in self.groups:
            raise ConfigError("The word_ngrams feature group cannot be disabled")


@dataclass
class SvmConfig:
    c: float = 1.0
    tolerance: float = 1e-4
    max_epochs: int = 1000
    seed: int = 0

    def validate(self):
        if self.c <= 0 or self.tolerance <= 0 or self.max_epochs < 1:
            raise ConfigError("svm.c, svm.tolerance and svm.max_epochs must be positive")


@dataclass
class GazetteerPaths:
    stopwords: Optional[str] = None
    names: Optional[str] = None

    def validate(self):
        pass


@dataclass
class SynthSettings:
    records_per_category: int = 200
    duplicate_rate: float = 0.6
    duplicate_sources: int = 1
    vocabulary_disjoint: bool = False
    seed: int = 0

    def validate(self):
        if not 0.0 <= self.duplicate_rate <= 1.0:
            raise ConfigError("synth.duplicate_rate must be in [0, 1], got {}".format(self.duplicate_rate))
        if self.records_per_category < 1 or self.duplicate_sources < 1:
            raise ConfigError("synth.records_per_category and synth.duplicate_sources must be positive")


@dataclass
class ExperimentConfig:
    splits: List[float] = field(default_factory=lambda: [0.3, 0.4, 0.6, 0.7])
    samplings: int = 5
    stages: List[str] = field(default_factory=lambda: ["word", "word+lexica", "word+lexica+meta", "all"])
    seed: int = 0

    def validate(self):
        if any(not 0.0 < s < 1.0 for s in self.splits):
            raise ConfigError("experiment.splits must be fractions in (0, 1)")
        if self.samplings < 1:
            raise ConfigError("experiment.samplings must be positive")
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise ConfigError("Unknown stages {}; choose from {}".format(unknown, sorted(STAGES)))


@dataclass
class RuntimeConfig:
    threads: Optional[int] = None

    def validate(self):
        if self.threads is not None and self.threads < 1:
            raise ConfigError("runtime.threads must be positive")


@dataclass
class Config:
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    lexicon: LexiconConfig = field(default_factory=LexiconConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    gazetteer: GazetteerPaths = field(default_factory=GazetteerPaths)
    synth: SynthSettings = field(default_factory=SynthSettings)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)

    def validate(self) -> "Config":
        for f in dataclasses.fields(self):
            try:
                getattr(self, f.name).validate()
            except ConfigError:
                raise
            except (TypeError, ValueError) as e:
                raise ConfigError("Invalid value in section {}: {}".format(f.name, e))
        return self

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        """
        :return: The configuration as plain nested dictionaries (the form echoed into reports and bundles).
        """
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "Config":
        """
        Build a configuration from nested mappings, keeping defaults for missing keys.

        :raises ConfigError: on unknown sections or keys, or invalid values.
        """
        data = data or {}
        if not isinstance(data, Mapping):
            raise ConfigError("Configuration must be a mapping of sections")
        sections = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for name, values in data.items():
            if name not in sections:
                raise ConfigError("Unknown configuration section: {}".format(name))
            section_type = sections[name].default_factory
            known = {f.name for f in dataclasses.fields(section_type)}
            values = values or {}
            unknown = set(values) - known
            if unknown:
                raise ConfigError("Unknown keys in section {}: {}".format(name, ", ".join(sorted(unknown))))
            try:
                kwargs[name] = section_type(**values)
            except TypeError as e:
                raise ConfigError("Invalid section {}: {}".format(name, e))
        return cls(**kwargs).validate()

    def with_overrides(self, overrides: Mapping[str, Any]) -> "Config":
        """
        Return a copy with dotted-key overrides applied, e.g. ``{"svm.c": 2.0}``. ``None`` values are skipped so
        unset command-line flags leave the file values alone.
        """
        data = self.as_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            section, _, name = key.partition(".")
            if section not in data or name not in data[section]:
                raise ConfigError("Unknown configuration key: {}".format(key))
            data[section][name] = value
            logger.debug("Config override %s = %r", key, value)
        return Config.from_dict(data)


def load_config(path: Union[str, Path, None] = None) -> Config:
    """
    Load a YAML configuration file, or the defaults if `path` is None.

    :raises ConfigError: if the file is not valid YAML or contains unknown keys.
    """
    if path is None:
        return Config().validate()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError("{}: invalid YAML: {}".format(path, e))
    logger.info("Loaded configuration from %s", path)
    return Config.from_dict(data)
