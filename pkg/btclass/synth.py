"""
Seeded synthetic transaction corpora.

Every category has a profile: description templates with ``{merchant}``, ``{name}``, ``{month}`` and ``{digits}``
slots, merchants, an amount range with its sign and the days of the month its transactions fall on.

Per category, ``min(round(duplicate_rate * n), n - 1)`` records are near-copies and the rest are fresh. Fresh records
are drawn from the templates and rejected until their token-set similarity to every earlier fresh record of the
category is below 0.85. Near-copies are made from the first `duplicate_sources` fresh records by changing letter case,
inserting stopwords, swapping the proper name and prefixing punctuation, none of which changes the similarity
signature; their amounts and days are jittered.
"""
import calendar
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .config import SynthSettings
from .corpus import CategorySet, Dataset, TransactionRecord
from .preprocess import GazetteerConfig, preprocess
from .similarity import SetSignature, jaccard, signature

logger = logging.getLogger(__name__)

__all__ = ["SynthConfigError", "CategoryProfile", "SynthConfig", "default_profiles", "disjoint_profiles",
           "generate_synthetic", "duplicate_fraction"]

MONTHS = ("Enero", "Febrero", "Marzo", "Abril", "Mayo", "Junio", "Julio", "Agosto", "Septiembre", "Octubre",
          "Noviembre", "Diciembre")

_DUPLICATE_THRESHOLD = 0.85
_MAX_ATTEMPTS = 200
_INSERTED_STOPWORDS = ("en", "de", "por", "para", "el", "la", "a")


class SynthConfigError(ValueError):
    """
    A synthetic corpus configuration is invalid or cannot produce distinct records.
    """
    pass


@dataclass(frozen=True)
class CategoryProfile:
    templates: Tuple[str, ...]
    merchants: Tuple[str, ...] = ("",)
    amount_range: Tuple[float, float] = (1.0, 100.0)
    income: bool = False
    day_range: Tuple[int, int] = (1, 31)


def _profile(templates, merchants, amount_range, income=False, day_range=(1, 31)) -> CategoryProfile:
    return CategoryProfile(tuple(templates), tuple(merchants), amount_range, income, day_range)


def default_profiles() -> Dict[str, CategoryProfile]:
    """
    Spanish-language profiles for the default categories; generic words such as ``compra`` or ``recibo`` are shared
    between categories.
    """
    return {
        "Bank": _profile(
            ["Comision mantenimiento cuenta {digits}", "Comision tarjeta credito {merchant} {digits}",
             "Liquidacion intereses prestamo {merchant} {digits}", "Cuota anual tarjeta {merchant} {month} {digits}"],
            ["BBVA", "Bankinter", "ING Direct", "Openbank", "Unicaja"], (1.0, 60.0)),
        "Means of transport": _profile(
            ["Compra gasolinera {merchant} {digits}", "Pago peaje autopista {merchant} {digits}",
             "Billete tren {merchant} {month} {digits}", "Recarga abono transporte {merchant} {digits}"],
            ["Repsol", "Cepsa", "Renfe", "Alsa", "Abertis", "Galp"], (10.0, 90.0)),
        "Shopping": _profile(
            ["Compra en supermercado {merchant} TARJ. :*{digits}", "Compra en {merchant} {month} {digits}",
             "Pago en tienda {merchant} {digits}", "Operacion tarjeta debito {merchant} {digits}"],
            ["Carrefour", "Mercadona", "El Corte Ingles", "Amazon", "Alcampo", "Lidl", "Zara"], (5.0, 250.0)),
        "Household expenses": _profile(
            ["Recibo {merchant} S.A.U {digits}", "Recibo luz {merchant} {month} {digits}",
             "Recibo agua {merchant} {digits}", "Cargo telefonia {merchant} {digits}"],
            ["ORANGE ESPAGNE", "Iberdrola", "Endesa", "Naturgy", "Movistar", "Vodafone", "Aguas Levante"],
            (20.0, 150.0)),
        "Taxes and charges": _profile(
            ["Impuesto circulacion vehiculos ayuntamiento {merchant} {digits}", "Pago tributos {merchant} {month} "
             "{digits}", "Recibo IBI {merchant} {digits}", "Tasa basuras {merchant} {digits}"],
            ["Madrid", "Valencia", "Sevilla", "Zaragoza", "Bilbao", "Agencia Tributaria"], (30.0, 600.0)),
        "Off-cycle income": _profile(
            ["Transferencia recibida {name} {digits}", "Devolucion compra {merchant} {digits}",
             "Abono reembolso {merchant} {month} {digits}", "Ingreso efectivo cajero {digits}"],
            ["Amazon", "Zalando", "Wallapop", "Hacienda"], (10.0, 500.0), income=True),
        "Payroll": _profile(
            ["Nomina {merchant} {month} {digits}", "Abono nomina {month} {merchant} {digits}",
             "Transferencia nomina empresa {merchant} {digits}"],
            ["Indra Sistemas", "Telefonica", "Inditex", "Mapfre", "Acciona"], (900.0, 3500.0), income=True,
            day_range=(25, 31)),
        "Leisure": _profile(
            ["Compra entradas {merchant} {digits}", "Restaurante {merchant} {digits}",
             "Suscripcion {merchant} {month} {digits}", "Reserva hotel {merchant} {digits}"],
            ["Netflix", "Spotify", "Cines Yelmo", "Booking", "Ticketmaster", "La Tagliatella"], (5.0, 200.0)),
        "Health, sport and education": _profile(
            ["Farmacia {merchant} {digits}", "Cuota gimnasio {merchant} {month} {digits}",
             "Matricula academia {merchant} {digits}", "Consulta clinica dental {merchant} {digits}"],
            ["Vivagym", "Sanitas", "Farmacia Central", "Colegio Alameda", "Decathlon"], (10.0, 400.0)),
        "Insurances": _profile(
            ["Recibo seguro hogar {merchant} {digits}", "Seguro coche poliza {merchant} {digits}",
             "Prima seguro vida {merchant} {month} {digits}"],
            ["Mapfre", "Allianz", "AXA", "Mutua", "Linea Directa"], (20.0, 900.0), day_range=(1, 10)),
        "Social security, grants and pensions": _profile(
            ["Pension jubilacion {merchant} {month} {digits}", "Prestacion desempleo SEPE {digits}",
             "Abono ayuda beca {merchant} {digits}"],
            ["INSS", "Ministerio Educacion", "Junta Andalucia", "Generalitat"], (100.0, 1500.0), income=True,
            day_range=(1, 10)),
        "Transfers": _profile(
            ["Transferencia a favor de {name} {digits}", "Transferencia emitida {name} concepto {month} {digits}",
             "Bizum enviado {name} {digits}", "Traspaso cuenta ahorro {digits}"],
            [""], (10.0, 1000.0)),
        "Business and professional expenses": _profile(
            ["Compra material oficina {merchant} {digits}", "Pago proveedor {merchant} factura {digits}",
             "Servicios profesionales asesoria {merchant} {digits}", "Coworking {merchant} {month} {digits}"],
            ["Staples", "Lyreco", "Amazon Business", "Asesoria Norte"], (20.0, 2000.0)),
        "Rentals": _profile(
            ["Alquiler {month} piso {merchant} {digits}", "Transferencia alquiler vivienda {name} {month} {digits}",
             "Pago renta local {merchant} {digits}"],
            ["Inmobiliaria Sol", "Fotocasa", "Idealista", "Tecnocasa"], (300.0, 1500.0), day_range=(1, 7)),
        "Others": _profile(
            ["Cargo {merchant} {digits}", "Operacion varios {merchant} {digits}",
             "Pago {merchant} referencia {digits}", "Movimiento {merchant} {digits}"],
            ["Paypal", "Western Union", "Loteria Nacional", "Correos"], (1.0, 300.0)),
    }


_STEMS = ("compra", "recibo", "cuota", "abono", "cargo", "pago", "servicio", "factura", "tienda", "oficina", "pedido",
          "contrato")
_MERCHANT_STEMS = ("norte", "centro", "plaza", "mercado", "grupo")


def disjoint_profiles(categories: CategorySet) -> Dict[str, CategoryProfile]:
    """
    Profiles whose words are unique to their category (each word carries a category-specific letter suffix), so
    every category is separable by its vocabulary alone. Amount ranges and days differ per category as well.
    """
    profiles = {}
    for c, label in enumerate(categories):
        suffix = "q" + chr(ord("a") + c % 26) + chr(ord("a") + c // 26)
        words = [s + suffix for s in _STEMS]
        templates = tuple("{} {} {} {{merchant}} {{digits}}".format(words[t % 12], words[(t + 3) % 12],
                                                                    words[(t + 7) % 12]).capitalize()
                          for t in range(4))
        merchants = tuple(m.capitalize() + suffix for m in _MERCHANT_STEMS)
        lo = 10.0 * (c + 1)
        profiles[label] = CategoryProfile(templates, merchants, (lo, lo * 3), income=c % 3 == 0,
                                          day_range=(1 + 2 * (c % 14), 3 + 2 * (c % 14)))
    return profiles


@dataclass
class SynthConfig:
    """
    :param records_per_category: A count for every category, or a count per label.
    :param duplicate_rate: The fraction of each category's records generated as near-copies, in [0, 1].
    :param duplicate_sources: How many fresh records per category the near-copies are made from.
    :param profiles: Per-label profiles; defaults to `default_profiles` (or `disjoint_profiles`).
    """
    records_per_category: Union[int, Mapping[str, int]] = 200
    duplicate_rate: float = 0.6
    duplicate_sources: int = 1
    vocabulary_disjoint: bool = False
    seed: int = 0
    categories: CategorySet = field(default_factory=CategorySet.default)
    profiles: Optional[Mapping[str, CategoryProfile]] = None

    @classmethod
    def from_settings(cls, settings: SynthSettings, categories: Optional[CategorySet] = None) -> "SynthConfig":
        return cls(settings.records_per_category, settings.duplicate_rate, settings.duplicate_sources,
                   settings.vocabulary_disjoint, settings.seed, categories or CategorySet.default())

    def resolved_profiles(self) -> Dict[str, CategoryProfile]:
        if self.profiles is not None:
            return dict(self.profiles)
        if self.vocabulary_disjoint:
            return disjoint_profiles(self.categories)
        return default_profiles()

    def counts(self) -> Dict[str, int]:
        if isinstance(self.records_per_category, Mapping):
            return {label: int(self.records_per_category.get(label, 0)) for label in self.categories}
        return {label: int(self.records_per_category) for label in self.categories}

    def validate(self) -> "SynthConfig":
        """
        :raises SynthConfigError: if a rate, count or profile is invalid.
        """
        if not 0.0 <= self.duplicate_rate <= 1.0:
            raise SynthConfigError("duplicate_rate must be in [0, 1], got {}".format(self.duplicate_rate))
        if self.duplicate_sources < 1:
            raise SynthConfigError("duplicate_sources must be positive")
        counts = self.counts()
        if any(n < 0 for n in counts.values()) or not any(counts.values()):
            raise SynthConfigError("records_per_category must be non-negative with at least one record")
        profiles = self.resolved_profiles()
        for label in self.categories:
            profile = profiles.get(label)
            if profile is None or not profile.templates:
                raise SynthConfigError("category '{}' has no templates".format(label))
            lo, hi = profile.amount_range
            if not 0 <= lo <= hi:
                raise SynthConfigError("category '{}' has an invalid amount range".format(label))
            if not 1 <= profile.day_range[0] <= profile.day_range[1]:
                raise SynthConfigError("category '{}' has an invalid day range".format(label))
        return self


@dataclass
class _Draft:
    template: str
    slots: Dict[str, str]
    description: str
    signature: SetSignature


class _Generator:
    def __init__(self, config: SynthConfig, gazetteer: GazetteerConfig):
        self.config = config
        self.gazetteer = gazetteer
        self.rng = np.random.default_rng(config.seed)
        self.names = sorted(n.capitalize() for n in gazetteer.proper_names)
        self.stopwords = [w for w in _INSERTED_STOPWORDS if w in gazetteer.stopwords] or sorted(gazetteer.stopwords)

    def choice(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def signature(self, description: str) -> SetSignature:
        return signature(preprocess(description, self.gazetteer))

    def fill(self, profile: CategoryProfile) -> _Draft:
        template = self.choice(profile.templates)
        slots = {
            "merchant": self.choice(profile.merchants),
            "name": self.choice(self.names) if self.names else "",
            "month": self.choice(MONTHS),
            "digits": str(int(self.rng.integers(100000, 10000000))),
        }
        description = " ".join(template.format(**slots).split())
        return _Draft(template, slots, description, self.signature(description))

    def fresh(self, label: str, profile: CategoryProfile, earlier: List[_Draft]) -> _Draft:
        for attempt in range(_MAX_ATTEMPTS):
            draft = self.fill(profile)
            if all(jaccard(draft.signature, e.signature) < _DUPLICATE_THRESHOLD for e in earlier):
                if attempt:
                    logger.debug("Category %s: accepted a fresh record after %d rejections", label, attempt)
                return draft
        raise SynthConfigError("Cannot generate {} distinct records for category '{}'; add templates or merchants"
                               .format(len(earlier) + 1, label))

    def near_copy(self, source: _Draft) -> str:
        slots = dict(source.slots)
        if "{name}" in source.template and len(self.names) > 1 and self.rng.random() < 0.5:
            slots["name"] = self.choice(self.names)
        tokens = " ".join(source.template.format(**slots).split()).split()
        for _ in range(1 + int(self.rng.integers(2))):
            op = int(self.rng.integers(3))
            if op == 0 and tokens:
                i = int(self.rng.integers(len(tokens)))
                tokens[i] = tokens[i].lower() if tokens[i] != tokens[i].lower() else tokens[i].upper()
            elif op == 1:
                tokens.insert(int(self.rng.integers(len(tokens) + 1)), self.choice(self.stopwords))
            elif tokens:
                i = int(self.rng.integers(len(tokens)))
                tokens[i] = "*" + tokens[i]
        description = " ".join(tokens)
        if self.signature(description) != source.signature:
            return source.description
        return description

    def amount(self, profile: CategoryProfile, base: Optional[float] = None) -> float:
        lo, hi = profile.amount_range
        value = base * (1.0 + self.rng.uniform(-0.05, 0.05)) if base is not None else self.rng.uniform(lo, hi)
        value = round(abs(value), 2)
        return value if profile.income else -value

    def day(self, profile: CategoryProfile, year: int, month: int) -> date:
        days = calendar.monthrange(year, month)[1]
        lo, hi = profile.day_range
        lo = min(lo, days)
        return date(year, month, int(self.rng.integers(lo, min(hi, days) + 1)))

    def when(self, profile: CategoryProfile) -> date:
        return self.day(profile, int(self.rng.integers(2017, 2019)), int(self.rng.integers(1, 13)))

    def record_id(self, used: set) -> str:
        while True:
            rid = self.rng.bytes(12).hex()
            if rid not in used:
                used.add(rid)
                return rid


def generate_synthetic(config: SynthConfig, gazetteer: Optional[GazetteerConfig] = None) -> Dataset:
    """
    Generate a labeled dataset; the same configuration always produces the same records in the same order.

    :raises SynthConfigError: if the configuration is invalid.
    """
    config.validate()
    gazetteer = gazetteer or GazetteerConfig.default()
    gen = _Generator(config, gazetteer)
    profiles = config.resolved_profiles()
    rows: List[Tuple[str, float, date, str]] = []
    for label, n in config.counts().items():
        if n == 0:
            continue
        profile = profiles[label]
        n_copies = min(int(round(config.duplicate_rate * n)), n - 1)
        fresh: List[_Draft] = []
        for _ in range(n - n_copies):
            draft = gen.fresh(label, profile, fresh)
            fresh.append(draft)
            rows.append((draft.description, gen.amount(profile), gen.when(profile), label))
        sources = [(d, rows[len(rows) - len(fresh) + i]) for i, d in enumerate(fresh[:config.duplicate_sources])]
        for _ in range(n_copies):
            draft, (_, amount, when, _) = sources[int(gen.rng.integers(len(sources)))]
            rows.append((gen.near_copy(draft), gen.amount(profile, amount), gen.day(profile, when.year, when.month),
                         label))
        logger.debug("Category %s: %d fresh records, %d near-copies", label, len(fresh), n_copies)

    order = gen.rng.permutation(len(rows))
    used = set()
    records = tuple(TransactionRecord(gen.record_id(used), *rows[i]) for i in order)
    logger.info("Generated %d synthetic records over %d categories (duplicate rate %.2f, seed %d)",
                len(records), len(config.categories), config.duplicate_rate, config.seed)
    return Dataset(records, config.categories)


def duplicate_fraction(dataset: Dataset, gazetteer: Optional[GazetteerConfig] = None,
                       threshold: float = _DUPLICATE_THRESHOLD) -> float:
    """
    The fraction of records whose best similarity to another record of the same category is at least `threshold`,
    by exhaustive pairwise comparison.
    """
    gazetteer = gazetteer or GazetteerConfig.default()
    by_category: Dict[str, List[SetSignature]] = {}
    for r in dataset:
        by_category.setdefault(r.category, []).append(signature(preprocess(r.description, gazetteer)))
    hits = 0
    for sigs in by_category.values():
        for i, a in enumerate(sigs):
            if any(jaccard(a, b) >= threshold for j, b in enumerate(sigs) if j != i):
                hits += 1
    return hits / len(dataset) if len(dataset) else 0.0
