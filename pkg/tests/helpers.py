"""Shared generators for randomized covering instances."""

from __future__ import annotations

import numpy as np

from hdrcover import WeightedInstance


def random_instance(rng: np.random.Generator, max_n: int = 12,
                    max_rows: int = 50, unit: bool = False) -> WeightedInstance:
    """Random consecutive-ones instance; weights unit or uniform in (0, 1]."""
    n = int(rng.integers(1, max_n + 1))
    n_rows = int(rng.integers(0, max_rows + 1))
    rows = []
    for _ in range(n_rows):
        lo = int(rng.integers(1, n + 1))
        hi = int(rng.integers(lo, n + 1))
        rows.append((lo, hi, int(rng.integers(1, 5))))
    if unit:
        weights = [1.0] * n
    elif rng.random() < 0.5:
        # coarse grid keeps cost ties frequent, which is where tie-break
        # bugs hide
        weights = [float(w) for w in rng.choice([0.25, 0.5, 0.75, 1.0], size=n)]
    else:
        weights = [float(w) for w in 1.0 - rng.random(n)]
    return WeightedInstance(n=n, rows=rows, weights=weights)


def instance_corpus(seed: int, count: int, unit: bool = False):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, unit=unit) for _ in range(count)]
