"""Per-user information gain of item features.

For every user a small labelled dataset is built: the positive items
(label 1) and as many sampled negatives (label 0). The information gain of a
feature on that dataset becomes the user's frozen weight for the feature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .dataset import InteractionLog, sample_entropy_negatives
from .graph import FeatureCatalog

logger = logging.getLogger(__name__)

DEFAULT_PER_HOP_LIMIT = 100


@dataclass(frozen=True)
class UserEntropyDataset:
    user: str
    positives: frozenset[str]
    negatives: frozenset[str]

    def __post_init__(self):
        if self.positives & self.negatives:
            raise ValueError(f"user {self.user}: positives and negatives overlap")

    def __len__(self):
        return len(self.positives) + len(self.negatives)


@dataclass
class UserFeatureWeights:
    user: str
    weights: dict[int, float] = field(default_factory=dict)

    def ranked(self) -> list[tuple[int, float]]:
        """Features by descending weight, ties by ascending id."""
        return sorted(self.weights.items(), key=lambda kv: (-kv[1], kv[0]))


def binary_entropy(q: float) -> float:
    """Entropy in bits of a Bernoulli(q) variable, with 0 log 0 = 0."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability out of range: {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -(q * math.log2(q) + (1.0 - q) * math.log2(1.0 - q))


def _split_entropy(pos: int, neg: int, total: int) -> float:
    t = pos + neg
    if t == 0:
        return 0.0
    return t / total * binary_entropy(pos / t)


def gain_from_counts(p: int, n: int, n_pos: int, n_neg: int) -> float:
    """IG of a binary feature carried by ``p`` positives and ``n`` negatives."""
    total = n_pos + n_neg
    base = binary_entropy(n_pos / total)
    ig = base - _split_entropy(p, n, total) - _split_entropy(n_pos - p, n_neg - n, total)
    # rounding can leave tiny negatives for useless features
    return max(ig, 0.0)


def information_gain(d: UserEntropyDataset, item_features: Mapping[str, Iterable[int]], f: int) -> float:
    if len(d) == 0:
        raise ValueError("empty entropy dataset")
    p = sum(1 for i in d.positives if f in item_features.get(i, ()))
    n = sum(1 for i in d.negatives if f in item_features.get(i, ()))
    return gain_from_counts(p, n, len(d.positives), len(d.negatives))


def build_entropy_dataset(log: InteractionLog, u: str, seed=None) -> UserEntropyDataset:
    return UserEntropyDataset(u, log.positives[u], sample_entropy_negatives(log, u, seed))


def user_features(d: UserEntropyDataset, catalog: FeatureCatalog) -> set[int]:
    """F_u: union of the features of the user's positive items."""
    out: set[int] = set()
    for i in d.positives:
        out |= catalog.item_features.get(i, frozenset())
    return out


def compute_user_weights(
    d: UserEntropyDataset,
    catalog: FeatureCatalog,
    per_hop_limit: int | None = DEFAULT_PER_HOP_LIMIT,
    ig_cutoff: float = 0.0,
) -> UserFeatureWeights:
    """Weigh every feature of the user's items by its information gain.

    Features with gain <= ``ig_cutoff`` are dropped, then at most
    ``per_hop_limit`` features are kept per chain depth (``None`` = no limit).
    """
    if per_hop_limit is not None and per_hop_limit < 1:
        raise ValueError("per_hop_limit must be >= 1 or None")
    if not 0.0 <= ig_cutoff < 1.0:
        raise ValueError("ig_cutoff must be in [0, 1)")
    fu = user_features(d, catalog)
    if not fu or len(d) == 0:
        return UserFeatureWeights(d.user)

    fids = np.fromiter(sorted(fu), dtype=np.int64)
    index = {f: j for j, f in enumerate(fids)}
    p = np.zeros(len(fids), dtype=np.int64)
    n = np.zeros(len(fids), dtype=np.int64)
    for items, counts in ((d.positives, p), (d.negatives, n)):
        for i in items:
            for f in catalog.item_features.get(i, ()):
                j = index.get(f)
                if j is not None:
                    counts[j] += 1

    n_pos, n_neg = len(d.positives), len(d.negatives)
    by_depth: dict[int, list[tuple[float, int]]] = {}
    for j, f in enumerate(fids):
        ig = gain_from_counts(int(p[j]), int(n[j]), n_pos, n_neg)
        if ig > ig_cutoff:
            by_depth.setdefault(catalog.depth_of(int(f)), []).append((ig, int(f)))

    weights = {}
    for depth in sorted(by_depth):
        ranked = sorted(by_depth[depth], key=lambda t: (-t[0], t[1]))
        if per_hop_limit is not None:
            ranked = ranked[:per_hop_limit]
        weights.update((f, ig) for ig, f in ranked)
    return UserFeatureWeights(d.user, dict(sorted(weights.items())))


def compute_all_weights(
    log: InteractionLog,
    catalog: FeatureCatalog,
    seed=None,
    per_hop_limit: int | None = DEFAULT_PER_HOP_LIMIT,
    ig_cutoff: float = 0.0,
) -> dict[str, UserFeatureWeights]:
    """Weights for every user with at least one positive, users in ascending order.

    Each user's negatives are drawn from an independent stream spawned from
    ``seed``, so one user's draw does not depend on the others.
    """
    users = [u for u in sorted(log.positives) if log.positives[u]]
    streams = np.random.SeedSequence(seed).spawn(len(users))
    out = {}
    for u, ss in zip(users, streams):
        d = build_entropy_dataset(log, u, np.random.default_rng(ss))
        out[u] = compute_user_weights(d, catalog, per_hop_limit, ig_cutoff)
    logger.info(
        "weights: %d users, %.1f retained features per user",
        len(out), np.mean([len(w.weights) for w in out.values()]) if out else 0.0,
    )
    return out


def dump_weights(weights: Mapping[str, UserFeatureWeights]) -> str:
    lines = ["user\tfeature_id\tweight\n"]
    for u in sorted(weights):
        for f, k in sorted(weights[u].weights.items()):
            lines.append(f"{u}\t{f}\t{k!r}\n")
    return "".join(lines)
