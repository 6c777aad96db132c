"""
MAP and MR1
===========

Every item queries all others. Items labelled as noise are never queries,
but they stay in the candidate lists where they can outrank real versions.
"""

import numpy as np

from vforge.metrics import EvalInstance, evaluate, evaluate_embeddings

rng = np.random.default_rng(1)
labels = np.repeat(np.arange(20), 3).tolist() + ["noise"] * 10
centers = rng.normal(size=(21, 16))
emb = np.stack([centers[l if l != "noise" else 20] for l in labels]) + 0.8 * rng.normal(size=(70, 16))

print(evaluate_embeddings(emb, labels, noise_label="noise"))

# %%
# The worked single-query example: relevant items at ranks 1 and 3.
print(evaluate(EvalInstance([[0.9, 0.5, 0.1]], ["a"], ["a", "b", "a"])))
