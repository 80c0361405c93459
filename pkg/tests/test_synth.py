import pytest

from btclass.config import SynthSettings
from btclass.corpus import CategorySet, load_dataset, write_dataset
from btclass.lexicon import lexical_tokens
from btclass.preprocess import preprocess
from btclass.synth import (CategoryProfile, SynthConfig, SynthConfigError, default_profiles, duplicate_fraction,
                           generate_synthetic)

FEW = CategorySet(("Bank", "Shopping", "Payroll", "Transfers"))


def test_every_default_category_has_templates():
    profiles = default_profiles()
    assert set(profiles) == set(CategorySet.default())
    assert all(p.templates for p in profiles.values())


def test_counts_and_labels(gazetteer):
    dataset = generate_synthetic(SynthConfig(records_per_category=20, duplicate_rate=0.5, categories=FEW), gazetteer)
    assert len(dataset) == 80
    assert dataset.label_counts() == {label: 20 for label in FEW}
    assert dataset.is_labeled


def test_per_label_counts(gazetteer):
    config = SynthConfig(records_per_category={"Bank": 3, "Payroll": 5}, categories=FEW)
    assert generate_synthetic(config, gazetteer).label_counts() == {"Bank": 3, "Shopping": 0, "Payroll": 5,
                                                                     "Transfers": 0}


def test_no_duplicates_at_rate_zero(gazetteer):
    dataset = generate_synthetic(SynthConfig(records_per_category=30, duplicate_rate=0.0, categories=FEW), gazetteer)
    assert duplicate_fraction(dataset, gazetteer) == 0.0


def test_rate_one_two_records(gazetteer):
    dataset = generate_synthetic(SynthConfig(records_per_category=2, duplicate_rate=1.0, categories=FEW), gazetteer)
    assert duplicate_fraction(dataset, gazetteer) == 1.0


@pytest.mark.parametrize("rate", [0.3, 0.6, 0.9])
def test_duplicate_fraction_tracks_rate(gazetteer, rate):
    dataset = generate_synthetic(SynthConfig(records_per_category=60, duplicate_rate=rate, categories=FEW, seed=5),
                                 gazetteer)
    assert abs(duplicate_fraction(dataset, gazetteer) - rate) <= 0.05


def test_deterministic(tmp_path, gazetteer):
    paths = []
    for name in ("a.csv", "b.csv"):
        dataset = generate_synthetic(SynthConfig(records_per_category=15, categories=FEW, seed=42), gazetteer)
        paths.append(tmp_path / name)
        write_dataset(dataset, paths[-1])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    other = generate_synthetic(SynthConfig(records_per_category=15, categories=FEW, seed=43), gazetteer)
    assert other.records != load_dataset(paths[0], FEW).records


def test_amount_signs_and_days(gazetteer):
    dataset = generate_synthetic(SynthConfig(records_per_category=25, categories=FEW), gazetteer)
    for r in dataset:
        if r.category == "Payroll":
            assert r.amount > 0
            assert r.date.day >= 25
        elif r.category == "Shopping":
            assert r.amount < 0
        assert 2017 <= r.date.year <= 2018


def test_vocabulary_disjoint(gazetteer):
    categories = CategorySet.default()
    dataset = generate_synthetic(SynthConfig(records_per_category=20, vocabulary_disjoint=True), gazetteer)
    words = {label: set() for label in categories}
    for r in dataset:
        words[r.category].update(lexical_tokens(preprocess(r.description, gazetteer)))
    labels = list(categories)
    for i, a in enumerate(labels):
        assert words[a]
        for b in labels[i + 1:]:
            assert not words[a] & words[b]


def test_from_settings():
    config = SynthConfig.from_settings(SynthSettings(records_per_category=7, duplicate_rate=0.2, seed=3))
    assert config.counts()["Bank"] == 7
    assert config.duplicate_rate == 0.2 and config.seed == 3


@pytest.mark.parametrize("config", [
    SynthConfig(duplicate_rate=1.5),
    SynthConfig(duplicate_rate=-0.1),
    SynthConfig(duplicate_sources=0),
    SynthConfig(records_per_category=0),
    SynthConfig(categories=CategorySet(("Bank", "Groceries"))),
    SynthConfig(categories=CategorySet(("Bank",)), profiles={"Bank": CategoryProfile(())}),
])
def test_invalid_configs(config):
    with pytest.raises(SynthConfigError):
        config.validate()


def test_exhausted_templates(gazetteer):
    profile = CategoryProfile(("Comision fija",))
    config = SynthConfig(records_per_category=2, duplicate_rate=0.0, categories=CategorySet(("Bank",)),
                         profiles={"Bank": profile})
    with pytest.raises(SynthConfigError):
        generate_synthetic(config, gazetteer)
