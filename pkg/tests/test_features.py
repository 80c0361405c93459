import random
from collections import Counter
from datetime import date

import numpy as np
import pytest

from btclass.config import FeatureConfig
from btclass.corpus import CategorySet, TransactionRecord
from btclass.features import (VectorizerModel, amount_features, char_ngrams, clean_for_char_ngrams, date_features,
                              fit_vectorizer, vectorize, vectorize_many, word_ngrams)
from btclass.lexicon import build_lexica
from btclass.preprocess import preprocess

AMAZON = "Operación tarjeta débito Amazon"
EDGES = (20.0, 60.0, 200.0, 800.0, 1500.0, 3000.0)
WINDOWS = (5, 10, 20, 25)
CATEGORIES = CategorySet(("Household expenses", "Shopping"))


def fitted(gazetteer, records, groups=None):
    texts = [preprocess(r.description, gazetteer) for r in records]
    lexicon = build_lexica([(t, r.category) for r, t in zip(records, texts)], CATEGORIES)
    return fit_vectorizer(list(zip(records, texts)), lexicon, groups), texts


def test_word_ngrams_listing(gazetteer):
    grams = word_ngrams(preprocess(AMAZON, gazetteer))
    assert set(grams) == {
        ("operación",), ("tarjeta",), ("débito",), ("amazon",),
        ("operación", "tarjeta"), ("tarjeta", "débito"), ("débito", "amazon"),
        ("operación", "tarjeta", "débito"), ("tarjeta", "débito", "amazon"),
        ("operación", "tarjeta", "débito", "amazon"),
    }
    assert sum(grams.values()) == 10


def test_word_ngrams_edge_cases(gazetteer):
    assert word_ngrams(preprocess("Nomina", gazetteer)) == Counter({("nomina",): 1})
    assert word_ngrams(preprocess("", gazetteer)) == Counter()
    assert ("compra", "supermercado") in word_ngrams(preprocess("Compra en supermercado", gazetteer))


def test_char_ngrams_listing():
    s = clean_for_char_ngrams(AMAZON)
    assert s == "operación tarjeta débito amazon"
    trigrams = [s[i:i + 3] for i in range(len(s) - 2)]
    assert trigrams[:5] == ["ope", "per", "era", "rac", "aci"]
    grams = char_ngrams(AMAZON)
    assert "ón ta" in grams
    assert " déb" in grams
    assert "mazon" in grams
    expected = ("ope per era rac aci ció ión".split() + ["ón ", "n t", " ta", "tar"])
    assert all(g in grams for g in expected)
    assert sum(grams.values()) == (len(s) - 2) + (len(s) - 3) + (len(s) - 4)


def test_char_ngrams_short_input():
    assert char_ngrams("ab") == Counter()
    assert char_ngrams("") == Counter()


def test_char_ngrams_punctuation_becomes_space():
    assert clean_for_char_ngrams("TARJ.  :*320546") == "tarj 320546"


def test_char_ngrams_brute_force():
    rng = random.Random(11)
    alphabet = "ab c.*Ñ"
    for _ in range(200):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
        s = clean_for_char_ngrams(raw)
        expected = Counter(s[i:j] for i in range(len(s)) for j in range(i + 3, min(i + 5, len(s)) + 1))
        assert char_ngrams(raw) == expected


@pytest.mark.parametrize("amount, income, bucket", [
    (-42.29, False, 1),
    (100.0, True, 2),
    (0.0, True, 0),
    (20.0, True, 0),
    (-20.01, False, 1),
    (3000.0, True, 5),
    (-3000.5, False, 6),
])
def test_amount_features(amount, income, bucket):
    assert amount_features(amount, EDGES) == (income, bucket)


@pytest.mark.parametrize("when, flags", [
    (date(2018, 2, 7), [0, 0, 0, 1]),
    (date(2017, 9, 28), [1, 1, 1, 1]),
    (date(2018, 1, 1), [0, 0, 0, 0]),
    (date(2016, 2, 25), [1, 1, 1, 1]),
    (date(2018, 1, 22), [0, 1, 1, 1]),
    (date(2018, 1, 21), [0, 0, 1, 1]),
])
def test_date_features(when, flags):
    assert date_features(when, WINDOWS) == flags


def test_date_indicators_nested():
    day = date(2017, 1, 1)
    for offset in range(730):
        flags = date_features(date.fromordinal(day.toordinal() + offset), WINDOWS)
        assert flags == sorted(flags)


def test_fit_single_record(gazetteer):
    r = TransactionRecord("a", AMAZON, -10.0, date(2018, 1, 1), "Shopping")
    model, _ = fitted(gazetteer, [r])
    assert set(model.word_vocab) == set(word_ngrams(preprocess(AMAZON, gazetteer)))
    assert sorted(model.word_vocab.values()) == list(range(len(model.word_vocab)))


def test_fit_is_deterministic(gazetteer, shopping_records):
    a, _ = fitted(gazetteer, shopping_records)
    b, _ = fitted(gazetteer, list(shopping_records))
    assert a.word_vocab == b.word_vocab and a.char_vocab == b.char_vocab


def test_vocabulary_has_no_frequency_floor(gazetteer, shopping_records):
    model, _ = fitted(gazetteer, shopping_records)
    assert ("pago",) in model.word_vocab
    assert "pago" not in model.lexicon.unigrams["Shopping"]


def test_fit_empty():
    lexicon = build_lexica([], CATEGORIES)
    with pytest.raises(ValueError):
        fit_vectorizer([], lexicon)


def test_layout(gazetteer, shopping_records):
    model, _ = fitted(gazetteer, shopping_records)
    slices = model.group_slices()
    assert list(slices) == ["lexica", "amount", "date", "word_ngrams", "char_ngrams"]
    assert slices["lexica"] == slice(0, 4)
    assert slices["amount"] == slice(4, 12)
    assert slices["date"] == slice(12, 16)
    assert model.dimension == 16 + len(model.word_vocab) + len(model.char_vocab)


def test_orange_record(gazetteer):
    orange = TransactionRecord("59da944c", "Recibo ORANGE ESPAGNE S.A.U", -42.29, date(2017, 9, 28),
                               "Household expenses")
    model, texts = fitted(gazetteer, [orange])
    x = vectorize(model, orange, texts[0]).toarray().ravel()
    slices = model.group_slices()
    assert x[slices["amount"]].tolist() == [0, 1, 0, 0, 0, 0, 0, 0]
    assert x[slices["date"]].tolist() == [1, 1, 1, 1]
    assert not x[slices["lexica"]].any()
    assert np.linalg.norm(x[slices["word_ngrams"]]) == pytest.approx(1.0)
    assert np.linalg.norm(x[slices["char_ngrams"]]) == pytest.approx(1.0)


def test_unknown_ngrams_are_ignored(gazetteer, shopping_records):
    model, _ = fitted(gazetteer, shopping_records)
    r = TransactionRecord("z", "Xyzzy", 5.0, date(2018, 1, 1))
    x = vectorize(model, r, preprocess(r.description, gazetteer)).toarray().ravel()
    slices = model.group_slices()
    assert not x[slices["word_ngrams"]].any()
    assert not x[slices["char_ngrams"]].any()
    assert x.shape == (model.dimension,)


def test_single_known_unigram(gazetteer, shopping_records):
    model, _ = fitted(gazetteer, shopping_records, groups=["word_ngrams"])
    r = TransactionRecord("z", "Pago", -1.0, date(2018, 1, 1))
    x = vectorize(model, r, preprocess(r.description, gazetteer)).toarray().ravel()
    assert model.dimension == len(model.word_vocab)
    assert x[model.word_vocab[("pago",)]] == pytest.approx(1.0)
    assert np.count_nonzero(x) == 1


def test_normalization_and_partition(gazetteer, shopping_records):
    model, texts = fitted(gazetteer, shopping_records)
    X = vectorize_many(model, shopping_records, texts).toarray()
    slices = model.group_slices()
    for row in X:
        for group in ("word_ngrams", "char_ngrams"):
            norm = np.linalg.norm(row[slices[group]])
            assert norm == 0 or abs(norm - 1) < 1e-9
        assert row[slices["amount"]][:7].sum() == 1
        assert set(np.unique(row[slices["date"]])) <= {0.0, 1.0}
        assert (row[slices["lexica"]] >= 0).all()


def test_batch_matches_single(gazetteer, shopping_records):
    model, texts = fitted(gazetteer, shopping_records)
    X = vectorize_many(model, shopping_records, texts)
    for i, (r, t) in enumerate(zip(shopping_records, texts)):
        assert (vectorize(model, r, t) != X[i]).nnz == 0


def test_round_trip(gazetteer, shopping_records):
    model, texts = fitted(gazetteer, shopping_records, groups=["char_ngrams", "word_ngrams", "date"])
    assert model.groups == ("date", "word_ngrams", "char_ngrams")
    copy = VectorizerModel.from_dict(model.to_dict(), model.categories, model.lexicon)
    assert copy.word_vocab == model.word_vocab
    assert copy.char_vocab == model.char_vocab
    assert copy.group_slices() == model.group_slices()


def test_custom_orders(gazetteer, shopping_records):
    config = FeatureConfig(word_ngram_orders=[1, 1], char_ngram_orders=[2, 2])
    texts = [preprocess(r.description, gazetteer) for r in shopping_records]
    lexicon = build_lexica([(t, r.category) for r, t in zip(shopping_records, texts)], CATEGORIES)
    model = fit_vectorizer(list(zip(shopping_records, texts)), lexicon, config=config)
    assert all(len(g) == 1 for g in model.word_vocab)
    assert all(len(g) == 2 for g in model.char_vocab)


def test_ngram_blocks_are_normalized_counts(gazetteer, shopping_records):
    model, texts = fitted(gazetteer, shopping_records)
    slices = model.group_slices()
    record, text = shopping_records[0], texts[0]
    x = vectorize(model, record, text).toarray().ravel()
    for group, vocab, counts in (("char_ngrams", model.char_vocab, char_ngrams(record.description)),
                                 ("word_ngrams", model.word_vocab, word_ngrams(text))):
        expected = np.zeros(len(vocab))
        for gram, n in counts.items():
            expected[vocab[gram]] = n
        expected /= np.linalg.norm(expected)
        assert x[slices[group]] == pytest.approx(expected)


def test_descriptions_too_short_for_char_ngrams(gazetteer):
    r = TransactionRecord("a", "Xy", -1.0, date(2018, 1, 1), "Shopping")
    model, texts = fitted(gazetteer, [r])
    assert model.char_vocab == {}
    assert model.word_vocab == {("xy",): 0}
    slices = model.group_slices()
    assert slices["char_ngrams"].start == slices["char_ngrams"].stop == model.dimension
    x = vectorize(model, r, texts[0]).toarray().ravel()
    assert x[slices["word_ngrams"]].tolist() == [1.0]
    other = TransactionRecord("b", "Compra supermercado", -1.0, date(2018, 1, 1))
    assert vectorize(model, other, preprocess(other.description, gazetteer)).shape == (1, model.dimension)


def test_vectorize_no_records(gazetteer, shopping_records):
    model, _ = fitted(gazetteer, shopping_records)
    assert vectorize_many(model, [], []).shape == (0, model.dimension)
