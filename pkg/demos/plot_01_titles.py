"""
Normalizing track titles
========================

Clique building groups tracks on a "full" normalized title. Video matching
uses a lighter "matching" form that keeps brackets and punctuation, because
``(Radio Edit)`` should not match a plain upload.
"""

from vforge.normalize import Normalizer, normalize_title_full, normalize_title_matching

titles = ["Love Theme (Radio Edit)", "Café & Crème", "The Song", "Don't Stop [Live]", "Ærøskøbing"]
for t in titles:
    print(f"{t!r:28} full={normalize_title_full(t)!r:22} matching={normalize_title_matching(t)!r}")

# %%
# The article list is configuration, so other languages can be added.
fr = Normalizer(articles=("the", "a", "an", "le", "la", "les"))
print(fr.full("La Vie en Rose"))

# %%
# The full form can always be rebuilt from the matching form.
n = Normalizer()
assert all(n.refine(n.matching(t)) == n.full(t) for t in titles)
