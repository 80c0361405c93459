"""
btclass classifies the short free-text descriptions of bank transactions into a fixed set of spending categories.

Classification runs in two stages. A record whose description is nearly identical to a training description takes
that record's category; every other record is scored by a one-vs-one ensemble of linear SVMs over word and
character n-grams, category lexica and amount and date features.
"""
from btclass.corpus import CategorySet, Dataset, TransactionRecord, load_dataset
from btclass.pipeline import Classification, ModelBundle, classify, classify_many, load_bundle, save_bundle, \
    train_pipeline

__all__ = ["CategorySet", "Dataset", "TransactionRecord", "load_dataset", "Classification", "ModelBundle",
           "train_pipeline", "classify", "classify_many", "save_bundle", "load_bundle"]
