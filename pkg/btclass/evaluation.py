"""
Per-class and macro-averaged precision, recall and F1, and the repeated random-split ablation experiment.

A metric whose denominator is zero is 0, and macro averages are taken over all k categories, including categories
without test records.
"""
import itertools
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union, Any

import numpy as np
import pandas as pd
from sklearn.metrics import multilabel_confusion_matrix, precision_recall_fscore_support

from .config import Config, STAGES
from .corpus import CategorySet, Dataset, split_dataset
from .pipeline import classify_many, gazetteer_for, train_pipeline
from .preprocess import GazetteerConfig

logger = logging.getLogger(__name__)

__all__ = ["ConfusionCounts", "ClassMetrics", "MetricsReport", "ExperimentRow", "ExperimentTable", "confusion",
           "metrics", "run_experiment", "write_table_tsv", "write_report_json", "TSV_COLUMNS"]

TSV_COLUMNS = ("split", "stage", "P_macro", "P_macro_std", "R_macro", "R_macro_std", "F_macro", "F_macro_std",
               "reduction")


@dataclass(frozen=True)
class ConfusionCounts:
    """
    One-vs-rest counts per category, as integer arrays in category order, together with the label sequences they
    were tallied from.
    """
    categories: CategorySet
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray
    predictions: Tuple[str, ...] = field(default=(), repr=False, compare=False)
    gold: Tuple[str, ...] = field(default=(), repr=False, compare=False)

    @property
    def total(self) -> int:
        return int(self.tp[0] + self.fp[0] + self.tn[0] + self.fn[0]) if len(self.categories) else 0

    @property
    def support(self) -> np.ndarray:
        return self.tp + self.fn

    def of(self, label: str) -> Dict[str, int]:
        i = self.categories.index(label)
        return {"tp": int(self.tp[i]), "fp": int(self.fp[i]), "tn": int(self.tn[i]), "fn": int(self.fn[i])}


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: Dict[str, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float

    @property
    def k(self) -> int:
        return len(self.per_class)


def confusion(predictions: Sequence[str], gold: Sequence[str], categories: CategorySet) -> ConfusionCounts:
    """
    :raises ValueError: if the sequences differ in length.
    :raises LabelError: on a label outside `categories`.
    """
    if len(predictions) != len(gold):
        raise ValueError("Got {} predictions for {} gold labels".format(len(predictions), len(gold)))
    for label in itertools.chain(predictions, gold):
        categories.index(label)
    k = len(categories)
    if gold:
        # One 2x2 matrix [[tn, fp], [fn, tp]] per category.
        matrices = multilabel_confusion_matrix(list(gold), list(predictions), labels=list(categories.labels))
    else:
        matrices = np.zeros((k, 2, 2), dtype=np.int64)
    return ConfusionCounts(categories, matrices[:, 1, 1], matrices[:, 0, 1], matrices[:, 0, 0], matrices[:, 1, 0],
                           tuple(predictions), tuple(gold))


def metrics(counts: ConfusionCounts) -> MetricsReport:
    labels = list(counts.categories.labels)
    if counts.gold:
        precision, recall, f1, _ = precision_recall_fscore_support(
            list(counts.gold), list(counts.predictions), labels=labels, average=None, zero_division=0)
    else:
        precision = recall = f1 = np.zeros(len(labels))
    support = counts.support
    per_class = {label: ClassMetrics(float(precision[i]), float(recall[i]), float(f1[i]), int(support[i]))
                 for i, label in enumerate(labels)}
    # Macro averages run over every category, including those without test records.
    return MetricsReport(per_class, float(np.mean(precision)), float(np.mean(recall)), float(np.mean(f1)))


def _mean_sizes(sizes: Sequence[Dict[str, Tuple[int, int]]], categories: CategorySet) -> Dict[str, Dict[str, float]]:
    return {label: {"unigrams": float(np.mean([s[label][0] for s in sizes])),
                    "bigrams": float(np.mean([s[label][1] for s in sizes]))}
            for label in categories}


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1)) if len(values) > 1 else 0.0


@dataclass
class ExperimentRow:
    split: float
    stage: str
    precision: Tuple[float, float]
    recall: Tuple[float, float]
    f1: Tuple[float, float]
    """Mean and sample standard deviation across samplings."""
    reduction: float
    per_class: Dict[str, Dict[str, float]] = field(default_factory=dict)
    lexicon_sizes: Dict[str, Dict[str, float]] = field(default_factory=dict)
    lexicon_sizes_before_filter: Dict[str, Dict[str, float]] = field(default_factory=dict)
    timings: Optional[Dict[str, float]] = None

    def as_dict(self) -> Dict[str, Any]:
        out = {
            "split": self.split,
            "stage": self.stage,
            "P_macro": self.precision[0], "P_macro_std": self.precision[1],
            "R_macro": self.recall[0], "R_macro_std": self.recall[1],
            "F_macro": self.f1[0], "F_macro_std": self.f1[1],
            "reduction": self.reduction,
            "per_class": self.per_class,
            "lexicon_sizes": self.lexicon_sizes,
            "lexicon_sizes_before_filter": self.lexicon_sizes_before_filter,
        }
        if self.timings is not None:
            out["timings"] = self.timings
        return out


@dataclass
class ExperimentTable:
    rows: List[ExperimentRow]
    samplings: int
    seed: int
    config: Dict[str, Any] = field(default_factory=dict)

    def row(self, split: float, stage: str) -> ExperimentRow:
        for r in self.rows:
            if r.split == split and r.stage == stage:
                return r
        raise KeyError((split, stage))

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{c: r.as_dict()[c] for c in TSV_COLUMNS} for r in self.rows], columns=list(TSV_COLUMNS))

    def as_dict(self) -> Dict[str, Any]:
        return {"samplings": self.samplings, "seed": self.seed, "config": self.config,
                "rows": [r.as_dict() for r in self.rows]}


def run_experiment(dataset: Dataset, splits: Optional[Sequence[float]] = None, samplings: Optional[int] = None,
                   stages: Optional[Sequence[str]] = None, seed_base: Optional[int] = None,
                   config: Optional[Config] = None, gazetteer: Optional[GazetteerConfig] = None,
                   timings: bool = False) -> ExperimentTable:
    """
    For every split fraction, sampling and feature stage: split, train the full pipeline on the training part and
    classify the test part. Rows hold the mean and standard deviation of the macro metrics across samplings.

    Arguments left as None come from ``config.experiment``. Sampling ``s`` of split ``i`` uses the seed
    ``seed_base + 1000 * i + s``, shared by every stage so all stages see the same partitions.

    :param timings: Record mean training and test seconds per row (kept out of the TSV table).
    """
    config = config or Config()
    gazetteer = gazetteer or gazetteer_for(config)
    exp = config.experiment
    splits = list(splits if splits is not None else exp.splits)
    samplings = samplings if samplings is not None else exp.samplings
    stages = list(stages if stages is not None else exp.stages)
    seed_base = seed_base if seed_base is not None else exp.seed
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise ValueError("Unknown stages {}; choose from {}".format(unknown, sorted(STAGES)))
    if samplings < 1:
        raise ValueError("samplings must be positive")
    categories = dataset.categories
    stage_configs = {s: config.with_overrides({"features.groups": list(STAGES[s])}) for s in stages}

    rows = []
    for i, fraction in enumerate(splits):
        cells: Dict[str, List[Tuple]] = {s: [] for s in stages}
        for s in range(samplings):
            train, test = split_dataset(dataset, fraction, seed_base + 1000 * i + s)
            gold = [r.category for r in test]
            for stage in stages:
                start = time.perf_counter()
                bundle, report = train_pipeline(train, gazetteer, stage_configs[stage])
                trained = time.perf_counter()
                predicted = [c.category for c in classify_many(bundle, test.records)]
                done = time.perf_counter()
                cells[stage].append((metrics(confusion(predicted, gold, categories)), report,
                                     trained - start, done - trained))
                logger.info("Split %.2f sampling %d stage %s: F_macro %.4f", fraction, s, stage,
                            cells[stage][-1][0].macro_f1)
        for stage in stages:
            results = cells[stage]
            reports = [m for m, _, _, _ in results]
            per_class = {label: {key: float(np.mean([getattr(m.per_class[label], key) for m in reports]))
                                 for key in ("precision", "recall", "f1")}
                         for label in categories}
            train_reports = [r for _, r, _, _ in results]
            rows.append(ExperimentRow(
                fraction, stage,
                _mean_std([m.macro_precision for m in reports]),
                _mean_std([m.macro_recall for m in reports]),
                _mean_std([m.macro_f1 for m in reports]),
                float(np.mean([r.reduction for r in train_reports])),
                per_class,
                _mean_sizes([r.lexicon_sizes for r in train_reports], categories),
                _mean_sizes([r.lexicon_sizes_before_filter for r in train_reports], categories),
                {"train_seconds": float(np.mean([t for _, _, t, _ in results])),
                 "test_seconds": float(np.mean([t for _, _, _, t in results]))} if timings else None))
    return ExperimentTable(rows, samplings, seed_base, config.as_dict())


def write_table_tsv(table: ExperimentTable, path: Union[str, Path]) -> None:
    table.as_frame().to_csv(path, sep="\t", index=False, float_format="%.6f", lineterminator="\n")
    logger.info("Wrote %d experiment rows to %s", len(table.rows), path)


def write_report_json(table: ExperimentTable, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(table.as_dict(), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
