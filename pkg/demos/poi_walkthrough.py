"""
Feature weights on a five-place toy graph
=========================================

Three users rated five points of interest. Each place is linked to a type
and a city. We extract 1-hop features, build Pink's labelled dataset and
look at which features carry information about Pink's taste.
"""

from kgflex.dataset import load_ratings
from kgflex.entropy import build_entropy_dataset, compute_user_weights, information_gain
from kgflex.graph import build_catalog, explore, load_item_map, load_triples
from kgflex.synthetic import POI_SEED, poi

fx = poi()
# item ids are tied to graph entities through the mapping file
kg = load_triples(fx.triples, load_item_map(fx.mapping))
log = load_ratings(fx.ratings)
print("users:", sorted(log.users))
print("Pink liked:", sorted(log.positives["Pink"]))

# the 1-hop features of one item
for f in sorted(explore(kg, "Vondelpark", 1)):
    print("Vondelpark", f)

catalog = build_catalog(kg, log.items, depth=1)

# Pink's negatives come from items other users enjoyed
d = build_entropy_dataset(log, "Pink", seed=POI_SEED)
print("positives:", sorted(d.positives), "negatives:", sorted(d.negatives))

for fid, f in enumerate(catalog.features):
    ig = information_gain(d, catalog.item_features, fid)
    print(f"IG {str(f):28s} {ig:.4f}")

w = compute_user_weights(d, catalog)
print("kept:", {str(catalog.features[f]): round(v, 4) for f, v in w.ranked()})
