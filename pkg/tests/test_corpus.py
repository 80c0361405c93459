from datetime import date

import pytest

from btclass.corpus import (CategorySet, Dataset, DatasetError, LabelError, RowError, SchemaError, TransactionRecord,
                            iter_records, load_dataset, parse_amount, parse_date, split_dataset, write_dataset)

HEADER = "id;description;amount;date;category\n"


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_example_row(tmp_path):
    path = write(tmp_path, HEADER + "59da944c;Recibo ORANGE ESPAGNE S.A.U;-42,29;2017-09-28;Household expenses\n")
    dataset = load_dataset(path)
    assert len(dataset) == 1
    r = dataset.records[0]
    assert r.id == "59da944c"
    assert r.description == "Recibo ORANGE ESPAGNE S.A.U"
    assert r.amount == pytest.approx(-42.29)
    assert r.date == date(2017, 9, 28)
    assert r.category == "Household expenses"
    assert dataset.is_labeled


def test_header_only(tmp_path):
    dataset = load_dataset(write(tmp_path, HEADER))
    assert len(dataset) == 0


def test_bad_amount_reports_line(tmp_path):
    path = write(tmp_path, HEADER + "a;x;1,00;2018-01-01;Bank\nb;y;abc;2018-01-01;Bank\n")
    with pytest.raises(RowError) as info:
        load_dataset(path)
    assert info.value.row == 3


def test_bad_date(tmp_path):
    with pytest.raises(RowError):
        load_dataset(write(tmp_path, HEADER + "a;x;1,00;01/02/2018;Bank\n"))


def test_missing_column(tmp_path):
    with pytest.raises(SchemaError) as info:
        load_dataset(write(tmp_path, "id;description;date\na;x;2018-01-01\n"))
    assert info.value.column == "amount"


def test_unknown_label(tmp_path):
    with pytest.raises(LabelError) as info:
        load_dataset(write(tmp_path, HEADER + "a;x;1,00;2018-01-01;Groceries\n"))
    assert info.value.label == "Groceries"


def test_unlabeled_file(tmp_path):
    dataset = load_dataset(write(tmp_path, "id;description;amount;date\na;x;100,00;2018-01-01T10:30:00\n"))
    assert dataset.records[0].category is None
    assert dataset.records[0].date == date(2018, 1, 1)
    assert not dataset.is_labeled


def test_duplicate_ids(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(write(tmp_path, HEADER + "a;x;1;2018-01-01;Bank\na;y;2;2018-01-01;Bank\n"))


@pytest.mark.parametrize("text, value", [
    ("-42,29", -42.29),
    ("-42,29 €", -42.29),
    ("100.00", 100.0),
    ("1.234,56", 1234.56),
    ("1,234.56", 1234.56),
    ("0", 0.0),
])
def test_parse_amount(text, value):
    assert parse_amount(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["abc", "", "inf", "nan"])
def test_parse_amount_rejects(text):
    with pytest.raises(ValueError):
        parse_amount(text)


def test_parse_date():
    assert parse_date("2017-09-28") == date(2017, 9, 28)
    assert parse_date("2017-09-28T23:59:59Z") == date(2017, 9, 28)


def test_write_then_load(tmp_path, shopping_records):
    dataset = Dataset(tuple(shopping_records), CategorySet.default())
    path = tmp_path / "out.csv"
    write_dataset(dataset, path)
    assert load_dataset(path) == dataset


def test_iter_records_chunks(tmp_path, shopping_records):
    path = tmp_path / "out.csv"
    write_dataset(shopping_records, path)
    assert list(iter_records(path, chunksize=3)) == shopping_records


def test_iter_records_zero_byte_file(tmp_path):
    path = write(tmp_path, "")
    assert list(iter_records(path)) == []
    with pytest.raises(SchemaError):
        load_dataset(path)


def test_iter_records_reports_global_line(tmp_path):
    rows = "".join("r{};x;1,00;2018-01-01;Bank\n".format(i) for i in range(5))
    path = write(tmp_path, HEADER + rows + "bad;x;zz;2018-01-01;Bank\n")
    with pytest.raises(RowError) as info:
        list(iter_records(path, chunksize=2))
    assert info.value.row == 7


def test_category_set():
    categories = CategorySet.default()
    assert len(categories) == 15
    assert categories.index("Bank") == 0
    assert categories.index("Others") == 14
    with pytest.raises(LabelError):
        categories.index("Groceries")
    with pytest.raises(ValueError):
        CategorySet(("Bank", "Bank"))


def test_record_validation():
    with pytest.raises(DatasetError):
        TransactionRecord("", "x", 1.0, date(2018, 1, 1))
    with pytest.raises(DatasetError):
        TransactionRecord("a", "x", float("nan"), date(2018, 1, 1))


def make_dataset(n):
    return Dataset(tuple(TransactionRecord(str(i), "d", 1.0, date(2018, 1, 1), "Bank") for i in range(n)),
                   CategorySet.default())


def test_split_sizes():
    train, test = split_dataset(make_dataset(10), 0.7, 3)
    assert len(train) == 7 and len(test) == 3


def test_split_large_dataset():
    train, test = split_dataset(make_dataset(30844), 0.7, 0)
    assert len(train) == 21591
    assert len(test) == 30844 - 21591


@pytest.mark.parametrize("seed", range(5))
def test_split_partition(seed):
    dataset = make_dataset(37)
    train, test = split_dataset(dataset, 0.4, seed)
    train_ids = {r.id for r in train}
    test_ids = {r.id for r in test}
    assert not train_ids & test_ids
    assert train_ids | test_ids == {r.id for r in dataset}
    assert split_dataset(dataset, 0.4, seed) == (train, test)


def test_split_errors():
    with pytest.raises(ValueError):
        split_dataset(make_dataset(0), 0.5, 0)
    with pytest.raises(ValueError):
        split_dataset(make_dataset(5), 1.0, 0)
