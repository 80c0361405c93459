"""
Per-category lexica: the words and adjacent word pairs that occur often in the training descriptions of a category.

Only alphabetic content takes part. Every Content token is reduced to its letters and lowercased (``amazon.es``
becomes ``amazones``), tokens shorter than two letters are dropped, and placeholders and name tags are skipped, so two
words separated by a removed stopword count as adjacent.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Tuple, Any

import numpy as np
import regex

from .corpus import CategorySet, LabelError
from .preprocess import Content, PreprocessedText

logger = logging.getLogger(__name__)

__all__ = ["Lexicon", "lexical_tokens", "build_lexica", "lexicon_counts"]

_NON_LETTER = regex.compile(r"\P{L}+")

Bigram = Tuple[str, str]


def lexical_tokens(text: PreprocessedText) -> List[str]:
    """
    :return: The lowercase, letters-only words of `text` with at least two letters, in order.
    """
    words = []
    for token in text.tokens:
        if not isinstance(token, Content):
            continue
        word = _NON_LETTER.sub("", token.text).lower()
        if len(word) >= 2:
            words.append(word)
    return words


@dataclass(frozen=True)
class Lexicon:
    categories: CategorySet
    unigrams: Dict[str, FrozenSet[str]]
    bigrams: Dict[str, FrozenSet[Bigram]]
    unigram_min: int = 5
    bigram_min: int = 3

    def __post_init__(self):
        # Reverse maps from a word (pair) to the indices of the categories containing it.
        word_index: Dict[str, List[int]] = {}
        pair_index: Dict[Bigram, List[int]] = {}
        for i, label in enumerate(self.categories):
            for w in self.unigrams.get(label, ()):
                word_index.setdefault(w, []).append(i)
            for p in self.bigrams.get(label, ()):
                pair_index.setdefault(p, []).append(i)
        object.__setattr__(self, "_word_index", word_index)
        object.__setattr__(self, "_pair_index", pair_index)

    def sizes(self) -> Dict[str, Tuple[int, int]]:
        """
        :return: The number of unigrams and bigrams of every category.
        """
        return {label: (len(self.unigrams.get(label, ())), len(self.bigrams.get(label, ())))
                for label in self.categories}

    def dump(self) -> Dict[str, Dict[str, List[str]]]:
        """
        :return: Sorted word lists per category; bigrams are rendered as two space-separated words.
        """
        return {label: {"unigrams": sorted(self.unigrams.get(label, ())),
                        "bigrams": [" ".join(p) for p in sorted(self.bigrams.get(label, ()))]}
                for label in self.categories}

    def to_dict(self) -> Dict[str, Any]:
        return {"unigram_min": self.unigram_min, "bigram_min": self.bigram_min, "lexica": self.dump()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], categories: CategorySet) -> "Lexicon":
        lexica = data["lexica"]
        return cls(categories,
                   {label: frozenset(lexica[label]["unigrams"]) for label in categories},
                   {label: frozenset(tuple(b.split(" ")) for b in lexica[label]["bigrams"]) for label in categories},
                   data["unigram_min"], data["bigram_min"])


def build_lexica(train: Iterable[Tuple[PreprocessedText, str]], categories: CategorySet,
                 unigram_min: int = 5, bigram_min: int = 3) -> Lexicon:
    """
    Count words and adjacent pairs per category (with multiplicity) and keep those reaching the thresholds.

    :param train: (preprocessed description, label) pairs.
    :param categories: The label set; every label must be in it.
    """
    word_counts = {label: Counter() for label in categories}
    pair_counts = {label: Counter() for label in categories}
    for text, label in train:
        if label not in categories:
            raise LabelError(label)
        words = lexical_tokens(text)
        word_counts[label].update(words)
        pair_counts[label].update(zip(words, words[1:]))
    unigrams = {label: frozenset(w for w, n in word_counts[label].items() if n >= unigram_min)
                for label in categories}
    bigrams = {label: frozenset(p for p, n in pair_counts[label].items() if n >= bigram_min)
               for label in categories}
    lexicon = Lexicon(categories, unigrams, bigrams, unigram_min, bigram_min)
    logger.info("Built lexica: %d unigrams, %d bigrams over %d categories",
                sum(len(u) for u in unigrams.values()), sum(len(b) for b in bigrams.values()), len(categories))
    return lexicon


def lexicon_counts(text: PreprocessedText, lexicon: Lexicon) -> np.ndarray:
    """
    Count the lexicon hits of a text for every category.

    :return: An integer array of shape ``(k, 2)``: unigram hits and bigram hits per category, in category order.
    """
    counts = np.zeros((len(lexicon.categories), 2), dtype=np.int64)
    words = lexical_tokens(text)
    for w in words:
        for i in lexicon._word_index.get(w, ()):
            counts[i, 0] += 1
    for p in zip(words, words[1:]):
        for i in lexicon._pair_index.get(p, ()):
            counts[i, 1] += 1
    return counts
