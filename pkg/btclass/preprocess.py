"""
Description preprocessing: whitespace tokenization, punctuation stripping, stopword removal and proper-name
tagging.

Every removal site is kept as a `Placeholder` (rendered ``#``), proper names become a `NameTag` rendered
``#PN<suffix>#`` where the suffix is a stable three-letter digest of the lowercase name, and tokens that lost
characters to punctuation stripping are rendered with a leading ``#``. With the packaged lists
``Compra en supermercado Elvira Madrid 28. TARJ. :*320546`` renders as
``Compra # supermercado #PNxxx# Madrid 28. TARJ. #320546``.

A rendered surface can be preprocessed again: ``#`` and ``#PNxxx#`` tokens are recognised and kept as they are.
"""
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Tuple, Union, Dict

import regex

logger = logging.getLogger(__name__)

__all__ = ["GazetteerConfig", "Content", "Placeholder", "NameTag", "Token", "PreprocessedText", "tokenize",
           "strip_punctuation", "preprocess", "name_suffix", "load_word_list", "DATA_DIR"]

DATA_DIR = Path(__file__).parent / "data"

_PUNCTUATION = regex.compile(r"(?![.,])[\p{P}\p{S}]")
_NAME_TAG = regex.compile(r"#PN([a-z]{3})#")


def load_word_list(path: Union[str, Path]) -> FrozenSet[str]:
    """
    Read a UTF-8 word list with one entry per line. Blank lines and lines starting with ``#`` are ignored and
    entries are lowercased.
    """
    words = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            words.add(line.lower())
    return frozenset(words)


def _digest(words: Iterable[str]) -> str:
    return hashlib.sha256("\n".join(sorted(words)).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GazetteerConfig:
    stopwords: FrozenSet[str]
    proper_names: FrozenSet[str]

    def __post_init__(self):
        for kind in ("stopwords", "proper_names"):
            words = frozenset(getattr(self, kind))
            if any(not w or w != w.lower() for w in words):
                raise ValueError("{} entries must be non-empty and lowercase".format(kind))
            object.__setattr__(self, kind, words)

    @classmethod
    def load(cls, stopwords_path: Union[str, Path, None] = None,
             names_path: Union[str, Path, None] = None) -> "GazetteerConfig":
        """
        Load the stopword and name lists, falling back to the packaged Spanish lists for missing paths.
        """
        stopwords = load_word_list(stopwords_path or DATA_DIR / "stopwords_es.txt")
        names = load_word_list(names_path or DATA_DIR / "names_es.txt")
        logger.info("Loaded gazetteer: %d stopwords, %d names", len(stopwords), len(names))
        return cls(stopwords, names)

    @classmethod
    def default(cls) -> "GazetteerConfig":
        return _default_gazetteer()

    def digests(self) -> Dict[str, str]:
        """
        :return: Content hashes of both lists, stored in model bundles to detect stale gazetteers.
        """
        return {"stopwords": _digest(self.stopwords), "names": _digest(self.proper_names)}


_DEFAULT = None


def _default_gazetteer() -> GazetteerConfig:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = GazetteerConfig.load()
    return _DEFAULT


@dataclass(frozen=True)
class Content:
    text: str
    marked: bool = False
    """Set when punctuation stripping removed characters from the raw token."""

    def render(self) -> str:
        return "#" + self.text if self.marked else self.text


@dataclass(frozen=True)
class Placeholder:
    def render(self) -> str:
        return "#"


@dataclass(frozen=True)
class NameTag:
    suffix: str

    def render(self) -> str:
        return "#PN{}#".format(self.suffix)


Token = Union[Content, Placeholder, NameTag]


@dataclass(frozen=True)
class PreprocessedText:
    tokens: Tuple[Token, ...]

    @property
    def surface(self) -> str:
        return " ".join(t.render() for t in self.tokens)

    def content(self) -> List[str]:
        """
        :return: The texts of the Content tokens, in order.
        """
        return [t.text for t in self.tokens if isinstance(t, Content)]

    def lowercase_content(self) -> List[str]:
        return [t.text.lower() for t in self.tokens if isinstance(t, Content)]

    @property
    def has_name(self) -> bool:
        return any(isinstance(t, NameTag) for t in self.tokens)

    def __str__(self):
        return self.surface


def tokenize(text: str) -> List[str]:
    """
    Split on runs of whitespace.
    """
    return text.split()


def strip_punctuation(token: str) -> str:
    """
    Remove every punctuation or symbol character except ``.`` and ``,``.
    """
    return _PUNCTUATION.sub("", token)


def name_suffix(name: str) -> str:
    """
    :return: The three lowercase letters identifying a proper name; a pure function of ``name.lower()``.
    """
    digest = hashlib.blake2b(name.lower().encode("utf-8"), digest_size=3).digest()
    return "".join(chr(ord("a") + b % 26) for b in digest)


def preprocess(description: str, gazetteer: Optional[GazetteerConfig] = None) -> PreprocessedText:
    """
    Tokenize a description, strip punctuation, replace stopwords by placeholders and proper names by tags.

    Stopwords and names are matched case-insensitively on the cleaned token with surrounding ``.``/``,`` trimmed,
    so ``en.`` matches ``en``. A token left with nothing but ``.``/``,`` counts as emptied.
    """
    gazetteer = gazetteer or GazetteerConfig.default()
    tokens: List[Token] = []
    for raw in tokenize(description):
        if raw == "#":
            tokens.append(Placeholder())
            continue
        tag = _NAME_TAG.fullmatch(raw)
        if tag:
            tokens.append(NameTag(tag.group(1)))
            continue
        cleaned = strip_punctuation(raw)
        key = cleaned.strip(".,").lower()
        if not key or key in gazetteer.stopwords:
            tokens.append(Placeholder())
        elif key in gazetteer.proper_names:
            tokens.append(NameTag(name_suffix(key)))
        else:
            tokens.append(Content(cleaned, marked=cleaned != raw))
    return PreprocessedText(tuple(tokens))
