import logging
import os
from datetime import date

import pytest

import btclass.tasks
import btclass.task_runtime
from btclass.corpus import CategorySet, Dataset, TransactionRecord
from btclass.preprocess import GazetteerConfig
from btclass.task_runtime import Scheduler

if os.getenv("LOG_LEVEL") is not None:
    level = os.getenv("LOG_LEVEL")
    logging.basicConfig(level=level)
    logger = logging.getLogger(__name__)
    logger.setLevel(logging.INFO)
    btclass.tasks.logger.setLevel(level)
    btclass.task_runtime.logger.setLevel(level)
else:
    logging.basicConfig(level=logging.INFO)

# The worked lexicon example: ten training descriptions of one category.
LEXICON_EXAMPLE = (
    "Compra en Pescados Diego, S.L.",
    "Compra en supermercado Elvira Madrid 28",
    "Compra en amazon.es",
    "Compra en supermercado Carrefour Enero 2018",
    "Compra en amazon.es Febrero 2018",
    "Compra en Amazon",
    "Pago en supermercado Elvira Alicante",
    "Pago en supermercado El Corte Inglés Vigo",
    "Compra en supermercado Carrefour Febrero 2018",
    "Compra en supermercado amazon.es",
)


@pytest.fixture
def runtime_sched():
    with Scheduler(4) as s:
        yield s


@pytest.fixture(scope="session")
def gazetteer():
    return GazetteerConfig.default()


@pytest.fixture
def lexicon_example():
    return LEXICON_EXAMPLE


@pytest.fixture
def shopping_records():
    return [TransactionRecord("s{}".format(i), d, -10.0 - i, date(2018, 3, 1 + i), "Shopping")
            for i, d in enumerate(LEXICON_EXAMPLE)]


@pytest.fixture
def make_record():
    return record


def record(rid, description, category=None, amount=-10.0, when=date(2018, 3, 15)):
    return TransactionRecord(rid, description, amount, when, category)


@pytest.fixture
def small_categories():
    return CategorySet(("Bank", "Shopping", "Payroll"))


@pytest.fixture
def small_dataset(small_categories):
    rows = [
        ("b{}", "Comision mantenimiento cuenta {}", "Bank", -3.0),
        ("s{}", "Compra supermercado tienda {}", "Shopping", -45.0),
        ("p{}", "Nomina empresa transferencia {}", "Payroll", 1500.0),
    ]
    records = []
    for rid, text, label, amount in rows:
        for i in range(8):
            records.append(record(rid.format(i), text.format(1000 + i), label, amount, date(2018, 1 + i, 28)))
    return Dataset(tuple(records), small_categories)
