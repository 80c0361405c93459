"""
Banking-transaction datasets: record schema, CSV ingestion and train/test splits.

Files are UTF-8, semicolon separated, with the header ``id;description;amount;date;category``. The category column
may be absent (or empty per row) for unlabeled data. Amounts accept ``.`` or ``,`` as the decimal separator and an
optional ``€`` sign; dates are ISO-8601, optionally with a time of day which is dropped.
"""
import logging
import math
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union, Dict

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

__all__ = ["DatasetError", "SchemaError", "RowError", "LabelError", "TransactionRecord", "CategorySet", "Dataset",
           "DEFAULT_CATEGORIES", "load_dataset", "iter_records", "write_dataset", "split_dataset", "parse_amount",
           "parse_date", "COLUMNS"]

COLUMNS = ("id", "description", "amount", "date", "category")
_REQUIRED = COLUMNS[:4]

DEFAULT_CATEGORIES = (
    "Bank",
    "Means of transport",
    "Shopping",
    "Household expenses",
    "Taxes and charges",
    "Off-cycle income",
    "Payroll",
    "Leisure",
    "Health, sport and education",
    "Insurances",
    "Social security, grants and pensions",
    "Transfers",
    "Business and professional expenses",
    "Rentals",
    "Others",
)


class DatasetError(ValueError):
    """
    A dataset file or dataset value violates the record schema.
    """
    pass


class SchemaError(DatasetError):
    def __init__(self, column, path=None):
        super().__init__("{}missing required column '{}'".format("{}: ".format(path) if path else "", column))
        self.column = column


class RowError(DatasetError):
    def __init__(self, row: int, message: str, path=None):
        super().__init__("{}row {}: {}".format("{}: ".format(path) if path else "", row, message))
        self.row = row


class LabelError(DatasetError):
    def __init__(self, label, row: Optional[int] = None):
        where = " (row {})".format(row) if row is not None else ""
        super().__init__("unknown category label '{}'{}".format(label, where))
        self.label = label
        self.row = row


@dataclass(frozen=True)
class TransactionRecord:
    id: str
    description: str
    amount: float
    date: date
    category: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise DatasetError("record id must be non-empty")
        if not math.isfinite(self.amount):
            raise DatasetError("record {}: amount must be finite".format(self.id))


@dataclass(frozen=True)
class CategorySet:
    """
    The ordered label set. The order fixes the pair order of the one-vs-one models and the layout of every
    per-category feature, so it must be identical between training, testing and saved models.
    """
    labels: Tuple[str, ...] = DEFAULT_CATEGORIES

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("category labels must be distinct")
        if any(not label for label in self.labels):
            raise ValueError("category labels must be non-empty")
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(self.labels)})

    @classmethod
    def default(cls) -> "CategorySet":
        return cls(DEFAULT_CATEGORIES)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise LabelError(label)

    def __contains__(self, label) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)


@dataclass(frozen=True)
class Dataset:
    records: Tuple[TransactionRecord, ...]
    categories: CategorySet

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise DatasetError("duplicate record id '{}'".format(r.id))
            seen.add(r.id)
            if r.category is not None and r.category not in self.categories:
                raise LabelError(r.category)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TransactionRecord]:
        return iter(self.records)

    @property
    def is_labeled(self) -> bool:
        """True iff every record carries a category (vacuously true for an empty dataset)."""
        return all(r.category is not None for r in self.records)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices), self.categories)

    def label_counts(self) -> Dict[str, int]:
        counts = {label: 0 for label in self.categories}
        for r in self.records:
            if r.category is not None:
                counts[r.category] += 1
        return counts


def parse_amount(text: str) -> float:
    """
    Parse a signed euro amount such as ``-42,29``, ``-42.29 €`` or ``1.234,56``.

    :raises ValueError: if the text is not a finite number.
    """
    s = text.replace("€", "").replace(" ", "").replace(" ", "").strip()
    if "," in s and "." in s:
        # The right-most separator is the decimal one, the other groups thousands.
        if s.rfind(",") > s.rfind("."):
            s = s.replace(".", "").replace(",", ".")
        else:
            s = s.replace(",", "")
    else:
        s = s.replace(",", ".")
    value = float(s)
    if not math.isfinite(value):
        raise ValueError("amount is not finite: {!r}".format(text))
    return value


def parse_date(text: str) -> date:
    """
    Parse an ISO-8601 date or date-time; only the calendar date is kept.
    """
    s = text.strip()
    if len(s) == 10:
        return date.fromisoformat(s)
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    return datetime.fromisoformat(s).date()


def _read_frame(source, chunksize=None):
    return pd.read_csv(source, sep=";", dtype=str, keep_default_na=False, encoding="utf-8", chunksize=chunksize)


def _check_columns(columns, path):
    for column in _REQUIRED:
        if column not in columns:
            raise SchemaError(column, path)


def _records_from_frame(frame: pd.DataFrame, categories: CategorySet, first_row: int, path) -> Iterator[TransactionRecord]:
    has_category = "category" in frame.columns
    for offset, row in enumerate(frame.itertuples(index=False)):
        # Line numbers count the header as line 1.
        line = first_row + offset
        values = row._asdict()
        try:
            amount = parse_amount(values["amount"])
        except ValueError:
            raise RowError(line, "unparsable amount {!r}".format(values["amount"]), path)
        try:
            when = parse_date(values["date"])
        except ValueError:
            raise RowError(line, "unparsable date {!r}".format(values["date"]), path)
        label = values["category"].strip() if has_category else ""
        if label and label not in categories:
            raise LabelError(label, line)
        if not values["id"].strip():
            raise RowError(line, "empty id", path)
        yield TransactionRecord(id=values["id"].strip(), description=values["description"], amount=amount,
                                date=when, category=label or None)


def load_dataset(path: Union[str, Path], categories: CategorySet = None) -> Dataset:
    """
    Load a semicolon-separated transaction file.

    :param path: The CSV file.
    :param categories: The label set, defaults to `CategorySet.default`.
    :raises SchemaError: if a required column is missing.
    :raises RowError: if an amount or date cannot be parsed (the error carries the line number).
    :raises LabelError: if a category is not in `categories`.
    """
    categories = categories or CategorySet.default()
    try:
        frame = _read_frame(path)
    except pd.errors.EmptyDataError:
        raise SchemaError("id", path)
    _check_columns(frame.columns, path)
    dataset = Dataset(tuple(_records_from_frame(frame, categories, 2, path)), categories)
    logger.info("Loaded %d records from %s", len(dataset), path)
    return dataset


def iter_records(path: Union[str, Path], categories: CategorySet = None,
                 chunksize: int = 1024) -> Iterator[TransactionRecord]:
    """
    Stream the records of a transaction file in chunks, without holding the whole file in memory.
    Validation is the same as `load_dataset` except that id uniqueness is not checked.
    A zero-byte file yields no records.
    """
    categories = categories or CategorySet.default()
    try:
        reader = _read_frame(path, chunksize=chunksize)
    except pd.errors.EmptyDataError:
        logger.info("%s is empty", path)
        return
    first_row = 2
    with reader:
        for frame in reader:
            _check_columns(frame.columns, path)
            yield from _records_from_frame(frame, categories, first_row, path)
            first_row += len(frame)


def write_dataset(dataset: Union[Dataset, Sequence[TransactionRecord]], path: Union[str, Path]) -> None:
    """
    Write records in the CSV format read by `load_dataset`. The category column is written when any record is
    labeled.
    """
    records = list(dataset)
    labeled = any(r.category is not None for r in records)
    columns = list(COLUMNS if labeled else _REQUIRED)
    rows = [(r.id, r.description, "{:.2f}".format(r.amount), r.date.isoformat(), r.category or "")
            for r in records]
    frame = pd.DataFrame([row[:len(columns)] for row in rows], columns=columns)
    frame.to_csv(path, sep=";", index=False, encoding="utf-8", lineterminator="\n")
    logger.info("Wrote %d records to %s", len(records), path)


def split_dataset(dataset: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Partition a dataset uniformly at random into train and test parts.

    The train part has ``round(train_fraction * N)`` records (halves round up). Both parts keep the original
    record order. The same seed always gives the same partition.

    :raises ValueError: if the dataset is empty or the fraction is not in (0, 1).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1), got {}".format(train_fraction))
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    n_train = int(math.floor(train_fraction * n + 0.5))
    order = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])
    logger.debug("Split %d records into %d train / %d test (seed %d)", n, len(train_idx), len(test_idx), seed)
    return dataset.subset(train_idx.tolist()), dataset.subset(test_idx.tolist())
