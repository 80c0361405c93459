"""
Command-line interface: ``btclass synth|train|classify|eval|lexicon``.

Configuration comes from defaults, then ``--config FILE``, then ``--set key=value`` and the dedicated flags.
Exit codes: 0 success, 1 usage or configuration error, 2 data, model or I/O error, 3 internal error.
"""
import argparse
import json
import logging
import os
import sys
from itertools import islice
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
import yaml

from .bundle import BundleError
from .config import Config, ConfigError, load_config
from .corpus import DatasetError, iter_records, load_dataset, write_dataset
from .evaluation import run_experiment, write_report_json, write_table_tsv
from .pipeline import classify_many, gazetteer_for, induce_lexicon, load_bundle, save_bundle, train_pipeline
from .synth import SynthConfig, SynthConfigError, generate_synthetic

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_DATA", "EXIT_INTERNAL"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

CLASSIFY_CHUNK = 1024


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "{}: error: {}\n".format(self.prog, message))


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got {!r}".format(text))


def _names(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _key_value(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError("expected key=value, got {!r}".format(text))
    return key.strip(), yaml.safe_load(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--set", dest="overrides", type=_key_value, action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key, e.g. svm.c=2.0 (repeatable)")
    common.add_argument("--seed", type=int, help="seed of the command's random choices")
    common.add_argument("--threads", type=int, help="worker threads for training and classification (runtime.threads)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--threshold", type=float, help="similarity.threshold")
    model.add_argument("--c", type=float, help="svm.c")
    model.add_argument("--groups", type=_names, help="features.groups, comma separated")

    parser = _ArgumentParser(prog="btclass", description="Two-stage banking transaction classifier.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_ArgumentParser)
    sub.required = True

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True, help="output CSV file")
    p.add_argument("--records-per-category", type=int, help="synth.records_per_category")
    p.add_argument("--duplicate-rate", type=float, help="synth.duplicate_rate")
    p.add_argument("--duplicate-sources", type=int, help="synth.duplicate_sources")
    p.add_argument("--vocabulary-disjoint", action="store_true", default=None, help="synth.vocabulary_disjoint")

    p = sub.add_parser("train", parents=[common, model], help="train a model bundle")
    p.add_argument("dataset", help="labeled CSV file")
    p.add_argument("--out", required=True, help="model bundle file (.txm)")

    p = sub.add_parser("classify", parents=[common], help="classify a CSV file with a model bundle")
    p.add_argument("bundle", help="model bundle file (.txm)")
    p.add_argument("input", help="CSV file to classify")
    p.add_argument("--out", help="output CSV file, standard output by default")

    p = sub.add_parser("eval", parents=[common, model], help="run the split and feature-stage experiment")
    p.add_argument("dataset", help="labeled CSV file")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.tsv and PREFIX.json")
    p.add_argument("--splits", type=_floats, help="experiment.splits, comma separated fractions")
    p.add_argument("--samplings", type=int, help="experiment.samplings")
    p.add_argument("--stages", type=_names, help="experiment.stages, comma separated")
    p.add_argument("--timings", action="store_true", help="add mean train/test seconds to the JSON report")

    p = sub.add_parser("lexicon", parents=[common], help="print the lexica of a model bundle or a labeled dataset")
    p.add_argument("source", help="model bundle (.txm) or labeled CSV file")
    return parser


_SEED_KEYS = {"synth": "synth.seed", "train": "svm.seed", "eval": "experiment.seed"}

_FLAG_KEYS = {
    "threads": "runtime.threads",
    "threshold": "similarity.threshold",
    "c": "svm.c",
    "groups": "features.groups",
    "records_per_category": "synth.records_per_category",
    "duplicate_rate": "synth.duplicate_rate",
    "duplicate_sources": "synth.duplicate_sources",
    "vocabulary_disjoint": "synth.vocabulary_disjoint",
    "splits": "experiment.splits",
    "samplings": "experiment.samplings",
    "stages": "experiment.stages",
}


def effective_config(args: argparse.Namespace) -> Config:
    """
    Defaults, then the configuration file, then ``--set`` overrides, then dedicated flags.
    """
    config = load_config(args.config)
    config = config.with_overrides(dict(args.overrides))
    overrides: Dict[str, Any] = {key: getattr(args, name) for name, key in _FLAG_KEYS.items() if hasattr(args, name)}
    if args.seed is not None and args.command in _SEED_KEYS:
        overrides[_SEED_KEYS[args.command]] = args.seed
    return config.with_overrides(overrides)


def _print_json(value: Any) -> None:
    json.dump(value, sys.stdout, indent=2, sort_keys=True, ensure_ascii=False)
    sys.stdout.write("\n")


def cmd_synth(args: argparse.Namespace, config: Config) -> int:
    dataset = generate_synthetic(SynthConfig.from_settings(config.synth), gazetteer_for(config))
    write_dataset(dataset, args.out)
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: Config) -> int:
    dataset = load_dataset(args.dataset)
    bundle, report = train_pipeline(dataset, gazetteer_for(config), config)
    save_bundle(bundle, args.out)
    _print_json(report.as_dict())
    return EXIT_OK


def cmd_classify(args: argparse.Namespace, config: Config) -> int:
    bundle = load_bundle(args.bundle)
    records = iter_records(args.input, bundle.categories, CLASSIFY_CHUNK)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        header = True
        written = 0
        while True:
            chunk = list(islice(records, CLASSIFY_CHUNK))
            if not chunk and not header:
                break
            rows = [(r.id, c.category, c.stage.value, "{:.6f}".format(c.confidence))
                    for r, c in zip(chunk, classify_many(bundle, chunk, config.runtime.threads))]
            pd.DataFrame(rows, columns=["id", "category", "stage", "confidence"]).to_csv(
                out, sep=";", index=False, header=header, lineterminator="\n")
            header = False
            written += len(rows)
            if not chunk:
                break
        logger.info("Classified %d records", written)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: Config) -> int:
    dataset = load_dataset(args.dataset)
    table = run_experiment(dataset, config=config, gazetteer=gazetteer_for(config), timings=args.timings)
    write_table_tsv(table, args.out + ".tsv")
    write_report_json(table, args.out + ".json")
    return EXIT_OK


def cmd_lexicon(args: argparse.Namespace, config: Config) -> int:
    if args.source.endswith(".txm"):
        lexicon = load_bundle(args.source).lexicon
    else:
        lexicon = induce_lexicon(load_dataset(args.source), gazetteer_for(config), config)
    _print_json(lexicon.dump())
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "classify": cmd_classify,
    "eval": cmd_eval,
    "lexicon": cmd_lexicon,
}


def _configure_logging(verbosity: int) -> None:
    if verbosity:
        level = logging.DEBUG if verbosity > 1 else logging.INFO
    else:
        level = os.environ.get("LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    _configure_logging(args.verbose)
    try:
        config = effective_config(args)
        return COMMANDS[args.command](args, config)
    except ConfigError as e:
        print("btclass: configuration error: {}".format(e), file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, BundleError, SynthConfigError, OSError) as e:
        print("btclass: error: {}".format(e), file=sys.stderr)
        return EXIT_DATA
    except Exception:
        logger.exception("Internal error")
        return EXIT_INTERNAL
