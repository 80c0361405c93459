"""
Jaccard near-duplicate detection over description token sets.

During training the store drops records whose signature is a near-duplicate (similarity strictly above the
threshold) of an already stored record of the same category. At classification time it is the first stage: a record
whose signature closely matches a stored entry takes that entry's category and never reaches the SVM.
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Tuple, Union, Dict, Any

from .preprocess import PreprocessedText

logger = logging.getLogger(__name__)

__all__ = ["SetSignature", "NAME_MARKER", "signature", "jaccard", "StoreEntry", "Admitted", "Skipped", "Hit", "Miss",
           "SimilarityStore", "deduplicate"]

SetSignature = FrozenSet[str]

NAME_MARKER = "#PN#"


def signature(text: PreprocessedText) -> SetSignature:
    """
    The set of lowercase Content texts, plus `NAME_MARKER` if the text contains any proper name.
    """
    tokens = set(text.lowercase_content())
    if text.has_name:
        tokens.add(NAME_MARKER)
    return frozenset(tokens)


def jaccard(a: SetSignature, b: SetSignature) -> float:
    """
    ``|a & b| / |a | b|``. Two empty sets are identical, so their similarity is 1.0.
    """
    if not a and not b:
        return 1.0
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)


@dataclass(frozen=True)
class StoreEntry:
    signature: SetSignature
    category: str
    index: int


@dataclass(frozen=True)
class Admitted:
    index: int


@dataclass(frozen=True)
class Skipped:
    match_index: int
    similarity: float


@dataclass(frozen=True)
class Hit:
    category: str
    similarity: float
    match_index: int


@dataclass(frozen=True)
class Miss:
    pass


class SimilarityStore:
    """
    An append-only sequence of (signature, category) entries with an inverted token index.

    Any pair with similarity above the threshold (> 0) shares at least one token, or both signatures are empty,
    so the index lookup finds exactly the entries a linear scan would. Pass ``use_index=False`` to scan.

    :param threshold: The similarity a match must strictly exceed, in (0, 1].
    """
    threshold: float
    _entries: List[StoreEntry]

    def __init__(self, threshold: float = 0.85, use_index: bool = True):
        if not 0.0 < threshold <= 1.0:
            raise ValueError("threshold must be in (0, 1], got {}".format(threshold))
        self.threshold = threshold
        self.use_index = use_index
        self._entries = []
        self._postings: Dict[str, List[int]] = {}
        self._empty: List[int] = []
        self._frozen = False

    def __len__(self):
        return len(self._entries)

    @property
    def entries(self) -> Tuple[StoreEntry, ...]:
        return tuple(self._entries)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "SimilarityStore":
        """
        Make the store read-only. Queries on a frozen store are safe from any number of threads.
        """
        self._frozen = True
        return self

    def _candidates(self, sig: SetSignature) -> Iterable[int]:
        if not self.use_index:
            return range(len(self._entries))
        if not sig:
            return self._empty
        found = set()
        for token in sig:
            found.update(self._postings.get(token, ()))
        return sorted(found)

    def best_match(self, sig: SetSignature, category: Optional[str] = None) -> Optional[Tuple[StoreEntry, float]]:
        """
        Find the entry with the highest similarity strictly above the threshold, the earliest inserted on ties.

        :param category: If given, only entries of this category are considered.
        :return: The entry and its similarity, or None if nothing exceeds the threshold.
        """
        best, best_sim = None, self.threshold
        for i in self._candidates(sig):
            entry = self._entries[i]
            if category is not None and entry.category != category:
                continue
            sim = jaccard(sig, entry.signature)
            if sim > best_sim:
                best, best_sim = entry, sim
        return (best, best_sim) if best is not None else None

    def append(self, sig: SetSignature, category: str) -> int:
        if self._frozen:
            raise RuntimeError("Cannot add entries to a frozen similarity store")
        index = len(self._entries)
        self._entries.append(StoreEntry(frozenset(sig), category, index))
        if sig:
            for token in sig:
                self._postings.setdefault(token, []).append(index)
        else:
            self._empty.append(index)
        return index

    def admit_training(self, sig: SetSignature, category: str) -> Union[Admitted, Skipped]:
        """
        Store a training signature unless it is a near-duplicate of a stored entry of the same category.
        Near-duplicates of other categories are always stored.
        """
        match = self.best_match(sig, category)
        if match is not None:
            entry, sim = match
            logger.debug("Skipped near-duplicate of entry %d (similarity %.3f)", entry.index, sim)
            return Skipped(entry.index, sim)
        return Admitted(self.append(sig, category))

    def first_stage(self, sig: SetSignature) -> Union[Hit, Miss]:
        match = self.best_match(sig)
        if match is None:
            return Miss()
        entry, sim = match
        return Hit(entry.category, sim, entry.index)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "entries": [[sorted(e.signature), e.category] for e in self._entries],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimilarityStore":
        store = cls(data["threshold"])
        for tokens, category in data["entries"]:
            store.append(frozenset(tokens), category)
        return store.freeze()


def deduplicate(store: SimilarityStore, stream: Iterable[Tuple[SetSignature, str]]) -> List[Union[Admitted, Skipped]]:
    """
    Run `SimilarityStore.admit_training` over a stream of (signature, category) pairs, in order.
    """
    decisions = [store.admit_training(sig, category) for sig, category in stream]
    admitted = sum(isinstance(d, Admitted) for d in decisions)
    logger.info("Admitted %d of %d training records", admitted, len(decisions))
    return decisions
