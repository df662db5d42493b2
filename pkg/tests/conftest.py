"""Shared fixtures: the three-outcome demo problem and randomized instances."""

import numpy as np
import pytest

from momentbayes import make_problem

# Demo problem: three outcome kinds labeled 1, 2, 3; a sample of 20 draws
# with counts (11, 2, 7); target mean 2.3; uniform prior.
DEMO_LABELS = (1.0, 2.0, 3.0)
DEMO_COUNTS = (11, 2, 7)
DEMO_TARGET = 2.3

# Independently verified reference solution of the demo problem (solved to
# high precision with an external root-finder over quadrature moments).
DEMO_BETA = 14.1166
DEMO_ZETA = 1874.1247
DEMO_MEANS = (0.2942, 0.1115, 0.5942)
DEMO_TILTED = (0.3015, 0.0971, 0.6015)
DEMO_FREQS = (0.55, 0.10, 0.35)
DEMO_BAYES = (12.0 / 23.0, 3.0 / 23.0, 8.0 / 23.0)
DEMO_BAYES_MOMENT = 42.0 / 23.0


@pytest.fixture
def demo():
    return make_problem(DEMO_LABELS, DEMO_COUNTS, DEMO_TARGET)


def random_problem(rng, k=None, max_count=7, label_span=1.5):
    """A random valid problem with integer counts and a flat prior."""
    if k is None:
        k = int(rng.integers(2, 5))
    labels = np.sort(rng.uniform(0.0, label_span, size=k))
    while labels[-1] - labels[0] < 1e-3:  # keep the moment identifiable
        labels = np.sort(rng.uniform(0.0, label_span, size=k))
    counts = rng.integers(0, max_count + 1, size=k)
    lo, hi = labels[0], labels[-1]
    target = lo + (hi - lo) * rng.uniform(0.15, 0.85)
    return make_problem(labels, counts, target)
