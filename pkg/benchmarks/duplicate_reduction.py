"""
Training-set reduction of the near-duplicate filter on a synthetic corpus.

Generates 15 categories of 200 records with 60% near-copies and reports, for every split fraction, the measured
fraction of training records dropped next to the value expected from the corpus construction.
"""
import os
import time

import numpy as np

from btclass.config import Config
from btclass.corpus import split_dataset
from btclass.pipeline import train_pipeline
from btclass.preprocess import GazetteerConfig
from btclass.synth import SynthConfig, generate_synthetic


def main():
    per_category = int(os.environ.get("RECORDS_PER_CATEGORY", 200))
    rate = 0.6
    samplings = int(os.environ.get("SAMPLINGS", 5))
    threads = int(os.environ["N_THREADS"]) if "N_THREADS" in os.environ else None
    gazetteer = GazetteerConfig.default()
    config = Config().with_overrides({"runtime.threads": threads})

    dataset = generate_synthetic(SynthConfig(records_per_category=per_category, duplicate_rate=rate, seed=1),
                                 gazetteer)
    hub = min(round(rate * per_category), per_category - 1) + 1
    print("records", len(dataset))
    print("split\treduction\treduction_std\texpected\tseconds")
    for i, fraction in enumerate([0.3, 0.4, 0.6, 0.7]):
        start = time.perf_counter()
        reductions = []
        for s in range(samplings):
            train, _ = split_dataset(dataset, fraction, 1000 * i + s)
            _, report = train_pipeline(train, gazetteer, config)
            reductions.append(report.reduction)
        end = time.perf_counter()
        # Every category keeps one record of its duplicate group.
        expected = hub / per_category - 1 / (per_category * fraction)
        print("{:.1f}\t{:.4f}\t{:.4f}\t{:.4f}\t{:.2f}".format(fraction, np.mean(reductions), np.std(reductions),
                                                             expected, (end - start) / samplings))
        assert abs(np.mean(reductions) - expected) < 0.05


if __name__ == '__main__':
    main()
