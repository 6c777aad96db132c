"""
Splits and dataset statistics
=============================

Splits are drawn per clique with a seeded PCG64 generator: reserved cliques
go to test, sampled 2-6 version cliques fill it to 10%, and the rest is cut
90/10 into train and validation.
"""

import numpy as np

from vforge.analytics import clique_size_stats, duration_histogram
from vforge.cliques import Clique, TrackOccurrence, Version
from vforge.splitter import make_splits

rng = np.random.default_rng(0)
sizes = rng.zipf(2.2, size=300).clip(2, 60)


def make(i, n):
    versions = [Version(f"c{i}v{j}", (j + 1,), [TrackOccurrence(i, str(j), "t", "t", (j + 1,))])
                for j in range(n)]
    return Clique(f"c{i:04d}", "t", versions)


cliques = [make(i, int(n)) for i, n in enumerate(sizes)]
print(clique_size_stats(cliques))

plan = make_splits(cliques, reserved={"c0000"}, seed=42)
print(plan.counts())
assert plan.assignments["c0000"] == "test"

# %%
# Duration histograms are sparse: empty bins are left out.
hist = duration_histogram(rng.gamma(4.0, 60.0, size=500), bin_width_s=60)
for b, n in hist.bins.items():
    print(f"{b * 60:5d}-{(b + 1) * 60:<5d} {'#' * (n // 5)}")
