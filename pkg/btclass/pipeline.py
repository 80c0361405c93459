"""
Training and two-stage classification.

Training preprocesses every record, runs the near-duplicate filter in dataset order and fits the lexica, the
vectorizer and the pair SVMs on the admitted records only. Classification looks a record up in the similarity
store first; only records without a close match are vectorized and voted on by the SVMs.
"""
import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union, Any

from . import bundle as container
from .config import Config
from .corpus import CategorySet, Dataset, DatasetError, TransactionRecord
from .features import VectorizerModel, fit_vectorizer, vectorize, vectorize_many
from .lexicon import Lexicon, build_lexica
from .preprocess import GazetteerConfig, PreprocessedText, preprocess
from .similarity import Admitted, Hit, SimilarityStore, deduplicate, signature
from .svm import OvoModel, train_ovo
from .task_runtime import Scheduler
from .tasks import TaskSpace, spawn
from .warning import GazetteerMismatchWarning

logger = logging.getLogger(__name__)

__all__ = ["Stage", "Classification", "ModelBundle", "TrainReport", "train_pipeline", "classify", "classify_many",
           "save_bundle", "load_bundle", "gazetteer_for", "induce_lexicon", "CLASSIFY_BATCH"]


class Stage(str, Enum):
    SIMILARITY_HIT = "similarity"
    SVM_VOTE = "svm"


@dataclass(frozen=True)
class Classification:
    category: str
    stage: Stage
    confidence: float
    """The match similarity for the similarity stage, the share of won pairwise contests for the SVM stage."""
    tie_break: Optional[str] = None


@dataclass
class ModelBundle:
    categories: CategorySet
    store: SimilarityStore
    lexicon: Lexicon
    vectorizer: VectorizerModel
    ovo: OvoModel
    config: Config
    gazetteer: GazetteerConfig
    format_version: int = container.FORMAT_VERSION

    @property
    def gazetteer_digests(self) -> Dict[str, str]:
        return self.gazetteer.digests()


@dataclass
class TrainReport:
    records: int
    admitted: int
    admitted_per_category: Dict[str, int]
    lexicon_sizes: Dict[str, Tuple[int, int]]
    dimension: int
    pair_models: int
    config: Dict[str, Any] = field(default_factory=dict)
    lexicon_sizes_before_filter: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    """Lexicon sizes when counted over every training record, near-duplicates included."""

    @property
    def skipped(self) -> int:
        return self.records - self.admitted

    @property
    def reduction(self) -> float:
        """The fraction of training records dropped as near-duplicates."""
        return self.skipped / self.records if self.records else 0.0

    def as_dict(self) -> Dict[str, Any]:
        return {
            "records": self.records,
            "admitted": self.admitted,
            "skipped": self.skipped,
            "reduction": self.reduction,
            "admitted_per_category": self.admitted_per_category,
            "lexicon_sizes": {label: {"unigrams": u, "bigrams": b} for label, (u, b) in self.lexicon_sizes.items()},
            "lexicon_sizes_before_filter": {label: {"unigrams": u, "bigrams": b}
                                            for label, (u, b) in self.lexicon_sizes_before_filter.items()},
            "dimension": self.dimension,
            "pair_models": self.pair_models,
            "config": self.config,
        }


def gazetteer_for(config: Config) -> GazetteerConfig:
    """
    The gazetteer named by the configuration, or the packaged lists.
    """
    if config.gazetteer.stopwords is None and config.gazetteer.names is None:
        return GazetteerConfig.default()
    return GazetteerConfig.load(config.gazetteer.stopwords, config.gazetteer.names)


def _admit(train: Dataset, gazetteer: GazetteerConfig, config: Config
           ) -> Tuple[SimilarityStore, List[TransactionRecord], List[PreprocessedText], List[PreprocessedText]]:
    # The store, the admitted records and their texts, and the texts of every training record.
    if len(train) == 0:
        raise DatasetError("training requires a non-empty dataset")
    if not train.is_labeled:
        raise DatasetError("training requires labels")
    records = train.records
    texts = [preprocess(r.description, gazetteer) for r in records]
    store = SimilarityStore(config.similarity.threshold)
    decisions = deduplicate(store, ((signature(t), r.category) for r, t in zip(records, texts)))
    store.freeze()
    kept = [i for i, d in enumerate(decisions) if isinstance(d, Admitted)]
    return store, [records[i] for i in kept], [texts[i] for i in kept], texts


def induce_lexicon(train: Dataset, gazetteer: Optional[GazetteerConfig] = None,
                   config: Optional[Config] = None) -> Lexicon:
    """
    Build the lexica exactly as `train_pipeline` does (on the records left after near-duplicate filtering),
    without fitting anything else.
    """
    config = config or Config()
    _, kept_records, kept_texts, _ = _admit(train, gazetteer or gazetteer_for(config), config)
    return build_lexica(zip(kept_texts, (r.category for r in kept_records)), train.categories,
                        config.lexicon.unigram_min, config.lexicon.bigram_min)


def train_pipeline(train: Dataset, gazetteer: Optional[GazetteerConfig] = None,
                   config: Optional[Config] = None) -> Tuple[ModelBundle, TrainReport]:
    """
    Fit every model of the classifier on a labeled dataset.

    :raises DatasetError: if the dataset is empty or has unlabeled records.
    """
    config = config or Config()
    gazetteer = gazetteer or gazetteer_for(config)
    categories = train.categories
    store, kept_records, kept_texts, all_texts = _admit(train, gazetteer, config)

    lexicon = build_lexica(zip(kept_texts, (r.category for r in kept_records)), categories,
                           config.lexicon.unigram_min, config.lexicon.bigram_min)
    unfiltered = build_lexica(zip(all_texts, (r.category for r in train.records)), categories,
                              config.lexicon.unigram_min, config.lexicon.bigram_min)
    vectorizer = fit_vectorizer(list(zip(kept_records, kept_texts)), lexicon, config.features.groups,
                                config.features)
    X = vectorize_many(vectorizer, kept_records, kept_texts)
    ovo = train_ovo(X, [r.category for r in kept_records], categories, config.svm, config.runtime.threads)

    bundle = ModelBundle(categories, store, lexicon, vectorizer, ovo, config, gazetteer)
    per_category = {label: 0 for label in categories}
    for r in kept_records:
        per_category[r.category] += 1
    report = TrainReport(len(train), len(kept_records), per_category, lexicon.sizes(), vectorizer.dimension,
                         ovo.weights.shape[0], config.as_dict(), unfiltered.sizes())
    logger.info("Trained on %d of %d records (reduction %.1f%%), %d features, %d pair models",
                report.admitted, report.records, 100 * report.reduction, report.dimension, report.pair_models)
    return bundle, report


def classify(bundle: ModelBundle, record: TransactionRecord) -> Classification:
    """
    Classify one record: the category of the closest stored training record if its similarity exceeds the
    threshold, the SVM vote otherwise.
    """
    text = preprocess(record.description, bundle.gazetteer)
    match = bundle.store.first_stage(signature(text))
    if isinstance(match, Hit):
        return Classification(match.category, Stage.SIMILARITY_HIT, match.similarity)
    prediction = bundle.ovo.predict(vectorize(bundle.vectorizer, record, text))
    return Classification(prediction.category, Stage.SVM_VOTE, prediction.confidence, prediction.tie_break)


CLASSIFY_BATCH = 256

Lookup = Tuple[List[Optional[Classification]], List[int], List[PreprocessedText]]


def _lookup(bundle: ModelBundle, records: Sequence[TransactionRecord]) -> Lookup:
    # Similarity stage for a chunk: hits are final, misses keep their preprocessed text for the SVM stage.
    results: List[Optional[Classification]] = []
    misses, miss_texts = [], []
    for i, record in enumerate(records):
        text = preprocess(record.description, bundle.gazetteer)
        match = bundle.store.first_stage(signature(text))
        if isinstance(match, Hit):
            results.append(Classification(match.category, Stage.SIMILARITY_HIT, match.similarity))
        else:
            results.append(None)
            misses.append(i)
            miss_texts.append(text)
    return results, misses, miss_texts


def _vote(bundle: ModelBundle, records: Sequence[TransactionRecord], lookup: Lookup) -> List[Classification]:
    results, misses, miss_texts = lookup
    if misses:
        X = vectorize_many(bundle.vectorizer, [records[i] for i in misses], miss_texts)
        for i, prediction in zip(misses, bundle.ovo.predict_many(X)):
            results[i] = Classification(prediction.category, Stage.SVM_VOTE, prediction.confidence,
                                        prediction.tie_break)
    return results


def classify_many(bundle: ModelBundle, records: Sequence[TransactionRecord],
                  n_threads: Optional[int] = None) -> List[Classification]:
    """
    Classify records in input order.

    Records are split into chunks of `CLASSIFY_BATCH`. Every chunk gets a lookup task for the similarity stage and a
    dependent task that vectorizes its misses and lets the SVMs vote on them as one batch.

    :param n_threads: Worker threads, defaults to ``bundle.config.runtime.threads``.
    """
    records = list(records)
    if not records:
        return []
    chunks = [records[s:s + CLASSIFY_BATCH] for s in range(0, len(records), CLASSIFY_BATCH)]
    with Scheduler(n_threads if n_threads is not None else bundle.config.runtime.threads):
        L = TaskSpace("lookup")
        V = TaskSpace("vote")
        for c, chunk in enumerate(chunks):
            lookup_id = L[c]

            @spawn(lookup_id)
            def lookup():
                return _lookup(bundle, chunk)

            @spawn(V[c], [lookup_id])
            def vote():
                return _vote(bundle, chunk, lookup_id.task.result)
    voted = V.results()
    results = [classification for c in range(len(chunks)) for classification in voted[(c,)]]
    logger.debug("Classified %d records, %d by similarity", len(results),
                 sum(r.stage is Stage.SIMILARITY_HIT for r in results))
    return results


def save_bundle(bundle: ModelBundle, path: Union[str, Path]) -> None:
    meta = {
        "format_version": bundle.format_version,
        "categories": list(bundle.categories.labels),
        "gazetteer_digests": bundle.gazetteer_digests,
        "config": bundle.config.as_dict(),
    }
    container.write_container(path, [
        ("meta", container.encode_json(meta)),
        ("store", container.encode_json(bundle.store.to_dict())),
        ("lexicon", container.encode_json(bundle.lexicon.to_dict())),
        ("vectorizer", container.encode_json(bundle.vectorizer.to_dict())),
        ("ovo.weights", container.encode_array(bundle.ovo.weights)),
        ("ovo.biases", container.encode_array(bundle.ovo.biases)),
        ("ovo.train_counts", container.encode_array(bundle.ovo.train_counts)),
    ])
    logger.info("Saved model bundle to %s", path)


def load_bundle(path: Union[str, Path], gazetteer: Optional[GazetteerConfig] = None) -> ModelBundle:
    """
    Load a bundle written by `save_bundle`.

    :param gazetteer: The gazetteer to classify with, defaults to the one named in the stored configuration.
        A `GazetteerMismatchWarning` is issued if its lists differ from those used in training.
    :raises CorruptBundleError: if the file is damaged.
    :raises BundleVersionError: if it was written in another format version.
    """
    sections = container.read_container(path)
    try:
        meta = container.decode_json(sections["meta"])
        categories = CategorySet(tuple(meta["categories"]))
        config = Config.from_dict(meta["config"])
        gazetteer = gazetteer or gazetteer_for(config)
        lexicon = Lexicon.from_dict(container.decode_json(sections["lexicon"]), categories)
        bundle = ModelBundle(
            categories,
            SimilarityStore.from_dict(container.decode_json(sections["store"])),
            lexicon,
            VectorizerModel.from_dict(container.decode_json(sections["vectorizer"]), categories, lexicon),
            OvoModel(categories, container.decode_array(sections["ovo.weights"]),
                     container.decode_array(sections["ovo.biases"]),
                     container.decode_array(sections["ovo.train_counts"])),
            config, gazetteer, meta["format_version"])
    except (KeyError, ValueError, TypeError) as e:
        raise container.CorruptBundleError("{}: invalid section contents: {}".format(path, e))
    for kind, digest in meta["gazetteer_digests"].items():
        if gazetteer.digests().get(kind) != digest:
            warnings.warn("The {} list differs from the one the model in {} was trained with".format(kind, path),
                          GazetteerMismatchWarning)
            logger.warning("Gazetteer %s list does not match the bundle %s", kind, path)
    logger.info("Loaded model bundle from %s", path)
    return bundle
