"""
The feature space of the SVM stage.

A record maps to a sparse row vector made of up to five groups, always laid out in this order:

======================  ===========================================================================
``lexica``              unigram and bigram lexicon hits for every category (2k counts)
``amount``              one-hot bucket of the absolute amount, then an income indicator
``date``                one indicator per window M: the day falls in the last M days of its month
``word_ngrams``         word n-gram counts over the preprocessed content, L2-normalized
``char_ngrams``         character n-gram counts over the cleaned raw description, L2-normalized
======================  ===========================================================================

The n-gram groups are counted by scikit-learn ``CountVectorizer`` objects. Vocabularies are exactly the n-grams
seen during fitting, indexed in sorted order; unseen n-grams are ignored.
"""
import calendar
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple, Iterable, Any

import numpy as np
import regex
from scipy import sparse
from sklearn.feature_extraction.text import CountVectorizer
from sklearn.preprocessing import normalize

from .config import FEATURE_GROUPS, FeatureConfig
from .corpus import CategorySet, TransactionRecord
from .lexicon import Lexicon, lexicon_counts
from .preprocess import PreprocessedText

logger = logging.getLogger(__name__)

__all__ = ["VectorizerModel", "word_ngrams", "char_ngrams", "clean_for_char_ngrams", "amount_features",
           "date_features", "fit_vectorizer", "vectorize", "vectorize_many"]

_PUNCTUATION = regex.compile(r"[\p{P}\p{S}]")
_SPACES = regex.compile(r"\s+")

WordNgram = Tuple[str, ...]


def _word_ngram_list(text: PreprocessedText, orders: Tuple[int, int]) -> List[WordNgram]:
    words = text.lowercase_content()
    lo, hi = orders
    return [tuple(words[i:i + n]) for n in range(lo, hi + 1) for i in range(len(words) - n + 1)]


def clean_for_char_ngrams(description: str) -> str:
    """
    Lowercase, turn punctuation and symbols into spaces and collapse whitespace runs.
    """
    s = _PUNCTUATION.sub(" ", description.lower())
    return _SPACES.sub(" ", s).strip()


def _word_counter(orders: Tuple[int, int], vocabulary: Optional[Dict[WordNgram, int]] = None) -> CountVectorizer:
    # Documents are PreprocessedText objects; the analyzer yields tuples of lowercase content words.
    return CountVectorizer(analyzer=partial(_word_ngram_list, orders=tuple(orders)), lowercase=False,
                           vocabulary=vocabulary)


def _char_counter(orders: Tuple[int, int], vocabulary: Optional[Dict[str, int]] = None) -> CountVectorizer:
    return CountVectorizer(analyzer="char", ngram_range=tuple(orders), preprocessor=clean_for_char_ngrams,
                           lowercase=False, vocabulary=vocabulary)


def word_ngrams(text: PreprocessedText, orders: Tuple[int, int] = (1, 4)) -> Counter:
    """
    Count every contiguous run of lowercase content words of length ``orders[0]`` to ``orders[1]``.
    """
    return Counter(_word_counter(orders).build_analyzer()(text))


def char_ngrams(description: str, orders: Tuple[int, int] = (3, 5)) -> Counter:
    """
    Count the character n-grams of the cleaned raw description; spaces are characters too.
    """
    return Counter(_char_counter(orders).build_analyzer()(description))


def amount_features(amount: float, edges: Sequence[float]) -> Tuple[bool, int]:
    """
    :return: Whether the amount is income (zero counts as income) and the index of its bucket. Buckets are
        ``[0, e0], (e0, e1], ..., (e_last, inf)`` over the absolute amount.
    """
    bucket = int(np.searchsorted(np.asarray(edges, dtype=float), abs(amount), side="left"))
    return amount >= 0, bucket


def date_features(when: date, windows: Sequence[int]) -> List[int]:
    """
    :return: For each window M, 1 if the day is among the last M days of its month, else 0.
    """
    days_in_month = calendar.monthrange(when.year, when.month)[1]
    return [int(when.day > days_in_month - m) for m in windows]


def _fixed(counter: CountVectorizer, vocabulary: Dict) -> Optional[CountVectorizer]:
    # Fitting with a fixed vocabulary only validates it, after which transform is read-only.
    return counter.fit([]) if vocabulary else None


@dataclass(frozen=True)
class VectorizerModel:
    categories: CategorySet
    lexicon: Lexicon
    word_vocab: Dict[WordNgram, int]
    char_vocab: Dict[str, int]
    groups: Tuple[str, ...] = FEATURE_GROUPS
    word_orders: Tuple[int, int] = (1, 4)
    char_orders: Tuple[int, int] = (3, 5)
    amount_edges: Tuple[float, ...] = (20.0, 60.0, 200.0, 800.0, 1500.0, 3000.0)
    date_windows: Tuple[int, ...] = (5, 10, 20, 25)
    _slices: Dict[str, slice] = field(init=False, repr=False, compare=False)
    _word_vectorizer: Optional[CountVectorizer] = field(init=False, repr=False, compare=False)
    _char_vectorizer: Optional[CountVectorizer] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if "word_ngrams" not in self.groups:
            raise ValueError("The word_ngrams feature group is always enabled")
        # Canonical group order regardless of the order given.
        object.__setattr__(self, "groups", tuple(g for g in FEATURE_GROUPS if g in self.groups))
        sizes = {
            "lexica": 2 * len(self.categories),
            "amount": len(self.amount_edges) + 2,
            "date": len(self.date_windows),
            "word_ngrams": len(self.word_vocab),
            "char_ngrams": len(self.char_vocab),
        }
        slices, offset = {}, 0
        for g in self.groups:
            slices[g] = slice(offset, offset + sizes[g])
            offset += sizes[g]
        object.__setattr__(self, "_slices", slices)
        object.__setattr__(self, "_word_vectorizer",
                           _fixed(_word_counter(self.word_orders, self.word_vocab), self.word_vocab))
        object.__setattr__(self, "_char_vectorizer",
                           _fixed(_char_counter(self.char_orders, self.char_vocab), self.char_vocab))

    @property
    def dimension(self) -> int:
        return max((s.stop for s in self._slices.values()), default=0)

    def group_slices(self) -> Dict[str, slice]:
        """
        :return: The column range of every enabled group.
        """
        return dict(self._slices)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "groups": list(self.groups),
            "word_orders": list(self.word_orders),
            "char_orders": list(self.char_orders),
            "amount_edges": list(self.amount_edges),
            "date_windows": list(self.date_windows),
            "word_vocab": [list(g) for g in sorted(self.word_vocab, key=self.word_vocab.__getitem__)],
            "char_vocab": sorted(self.char_vocab, key=self.char_vocab.__getitem__),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], categories: CategorySet, lexicon: Lexicon) -> "VectorizerModel":
        return cls(categories, lexicon,
                   {tuple(g): i for i, g in enumerate(data["word_vocab"])},
                   {g: i for i, g in enumerate(data["char_vocab"])},
                   tuple(data["groups"]), tuple(data["word_orders"]), tuple(data["char_orders"]),
                   tuple(data["amount_edges"]), tuple(data["date_windows"]))


def _fit_vocabulary(counter: CountVectorizer, documents: Sequence) -> Dict:
    try:
        counter.fit(documents)
    except ValueError:
        # Raised for an empty vocabulary, which is legitimate when no document is long enough.
        analyze = counter.build_analyzer()
        if any(analyze(d) for d in documents):
            raise
        return {}
    return {g: int(i) for g, i in counter.vocabulary_.items()}


def fit_vectorizer(train: Sequence[Tuple[TransactionRecord, PreprocessedText]], lexicon: Lexicon,
                   groups: Optional[Iterable[str]] = None, config: Optional[FeatureConfig] = None) -> VectorizerModel:
    """
    Collect the n-gram vocabularies of a training set.

    :param train: (record, preprocessed description) pairs.
    :param lexicon: The lexica induced from the same training records.
    :param groups: The enabled feature groups, defaults to ``config.groups``.
    :param config: Orders, bucket edges and date windows, defaults to `FeatureConfig`'s defaults.
    :raises ValueError: if the training set is empty.
    """
    config = config or FeatureConfig()
    groups = tuple(groups if groups is not None else config.groups)
    if not train:
        raise ValueError("Cannot fit a vectorizer on an empty training set")
    word_orders = tuple(config.word_ngram_orders)
    char_orders = tuple(config.char_ngram_orders)
    word_vocab = _fit_vocabulary(_word_counter(word_orders), [text for _, text in train])
    char_vocab = {}
    if "char_ngrams" in groups:
        char_vocab = _fit_vocabulary(_char_counter(char_orders), [record.description for record, _ in train])
    model = VectorizerModel(
        lexicon.categories, lexicon, word_vocab, char_vocab,
        groups, word_orders, char_orders,
        tuple(float(e) for e in config.amount_edges), tuple(config.date_windows))
    logger.info("Fitted vectorizer: %d word n-grams, %d char n-grams, dimension %d (groups: %s)",
                len(model.word_vocab), len(model.char_vocab), model.dimension, ", ".join(model.groups))
    return model


def _ngram_block(counter: Optional[CountVectorizer], documents: Sequence) -> sparse.csr_matrix:
    if counter is None:
        return sparse.csr_matrix((len(documents), 0))
    return normalize(counter.transform(documents).astype(float), norm="l2")


def _amount_block(model: VectorizerModel, records: Sequence[TransactionRecord]) -> np.ndarray:
    edges = len(model.amount_edges)
    block = np.zeros((len(records), edges + 2))
    for r, record in enumerate(records):
        income, bucket = amount_features(record.amount, model.amount_edges)
        block[r, bucket] = 1.0
        block[r, edges + 1] = float(income)
    return block


def vectorize(model: VectorizerModel, record: TransactionRecord, text: PreprocessedText) -> sparse.csr_matrix:
    """
    :return: The feature vector of a record as a ``1 x model.dimension`` sparse row.
    """
    return vectorize_many(model, [record], [text])


def vectorize_many(model: VectorizerModel, records: Sequence[TransactionRecord],
                   texts: Sequence[PreprocessedText]) -> sparse.csr_matrix:
    """
    :return: One sparse row per record, ``len(records) x model.dimension``.
    """
    if len(records) != len(texts):
        raise ValueError("Got {} records but {} preprocessed texts".format(len(records), len(texts)))
    if not records:
        return sparse.csr_matrix((0, model.dimension))
    blocks = []
    for group in model.groups:
        if group == "lexica":
            block = np.vstack([lexicon_counts(t, model.lexicon).ravel() for t in texts]).astype(float)
        elif group == "amount":
            block = _amount_block(model, records)
        elif group == "date":
            block = np.array([date_features(r.date, model.date_windows) for r in records], dtype=float)
        elif group == "word_ngrams":
            block = _ngram_block(model._word_vectorizer, list(texts))
        else:
            block = _ngram_block(model._char_vectorizer, [r.description for r in records])
        if block.shape[1]:
            blocks.append(sparse.csr_matrix(block))
    if not blocks:
        return sparse.csr_matrix((len(records), model.dimension))
    return sparse.hstack(blocks, format="csr")
