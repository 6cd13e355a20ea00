"""Accuracy, diversity and popularity-bias metrics for top-k lists.

Lists are given as ``{user: [item, ...]}`` (or :class:`RecommendationList`
values) already ordered by rank; every metric truncates them at ``k``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import InteractionLog
from .entropy import UserEntropyDataset, UserFeatureWeights, compute_user_weights
from .graph import FeatureCatalog
from .recommend import RecommendationList


def _items(lst) -> list[str]:
    return lst.items if isinstance(lst, RecommendationList) else list(lst)


def _topk(lists: Mapping, k: int) -> dict[str, list[str]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    return {u: _items(lst)[:k] for u, lst in lists.items()}


def _test_of(test: InteractionLog | Mapping[str, Iterable[str]]) -> Mapping[str, frozenset[str]]:
    return test.positives if isinstance(test, InteractionLog) else {u: frozenset(v) for u, v in test.items()}


def ndcg_per_user(lists: Mapping, test, k: int) -> dict[str, float]:
    """Binary-relevance nDCG@k for every user with a non-empty test set."""
    top = _topk(lists, k)
    out = {}
    for u, rel in _test_of(test).items():
        if not rel:
            continue
        ranked = top.get(u, [])
        dcg = sum(1.0 / math.log2(r + 2) for r, i in enumerate(ranked) if i in rel)
        idcg = sum(1.0 / math.log2(r + 2) for r in range(min(k, len(rel))))
        out[u] = dcg / idcg
    return out


def ndcg_at_k(lists: Mapping, test, k: int) -> float:
    per_user = ndcg_per_user(lists, test, k)
    return float(np.mean(list(per_user.values()))) if per_user else 0.0


def hit_ratio_per_user(lists: Mapping, test, k: int) -> dict[str, float]:
    top = _topk(lists, k)
    return {u: float(any(i in rel for i in top.get(u, [])))
            for u, rel in _test_of(test).items() if rel}


def hit_ratio_at_k(lists: Mapping, test, k: int) -> float:
    per_user = hit_ratio_per_user(lists, test, k)
    return float(np.mean(list(per_user.values()))) if per_user else 0.0


def _exposure(lists: Mapping, k: int) -> Counter:
    counts: Counter = Counter()
    for items in _topk(lists, k).values():
        counts.update(items)
    return counts


def item_coverage_at_k(lists: Mapping, k: int) -> int:
    return len(_exposure(lists, k))


def gini_coefficient_at_k(lists: Mapping, n_items: int, k: int) -> float:
    counts = _exposure(lists, k)
    total = sum(counts.values())
    if n_items < 2 or total == 0:
        return 0.0
    if len(counts) > n_items:
        raise ValueError("more distinct recommended items than the catalog size")
    freq = np.zeros(n_items)
    freq[n_items - len(counts):] = sorted(counts.values())
    freq /= total
    j = np.arange(1, n_items + 1)
    return float(np.sum((2 * j - n_items - 1) * freq) / (n_items - 1))


def gini_diversity_at_k(lists: Mapping, n_items: int, k: int) -> float:
    """``1 - Gini`` of item exposure: 1 for perfectly even exposure, 0 for a single item."""
    return 1.0 - gini_coefficient_at_k(lists, n_items, k)


def shannon_entropy_at_k(lists: Mapping, k: int) -> float:
    counts = np.array(list(_exposure(lists, k).values()), dtype=float)
    if counts.sum() == 0:
        return 0.0
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p)) + 0.0)


@dataclass(frozen=True)
class PopularityPartition:
    short_head: frozenset[str]
    long_tail: frozenset[str]


def popularity_partition(train: InteractionLog, ratio: float = 0.8) -> PopularityPartition:
    """Short head = smallest set of most popular items jointly holding >= ``ratio`` of the interactions."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    deg = train.item_degrees()
    ranked = sorted(deg.items(), key=lambda kv: (-kv[1], kv[0]))
    total = sum(deg.values())
    head = []
    cum = 0
    for item, d in ranked:
        if total == 0 or cum >= ratio * total:
            break
        head.append(item)
        cum += d
    head_set = frozenset(head)
    return PopularityPartition(head_set, frozenset(deg) - head_set)


def aclt_per_user(lists: Mapping, partition: PopularityPartition, k: int) -> dict[str, float]:
    return {u: float(sum(i in partition.long_tail for i in items)) for u, items in _topk(lists, k).items()}


def aclt_at_k(lists: Mapping, partition: PopularityPartition, k: int) -> float:
    per_user = aclt_per_user(lists, partition, k)
    return float(np.mean(list(per_user.values()))) if per_user else 0.0


def _relative_gap(a: float, b: float) -> float:
    # std/mean of the two group probabilities
    return 0.0 if a + b == 0 else abs(a - b) / (a + b)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def pop_rsp_at_k(lists: Mapping, partition: PopularityPartition, train: InteractionLog, k: int) -> float:
    top = _topk(lists, k)
    num = {"h": 0, "t": 0}
    den = {"h": 0, "t": 0}
    for u, items in top.items():
        seen = train.items_of(u)
        num["h"] += sum(i in partition.short_head for i in items)
        num["t"] += sum(i in partition.long_tail for i in items)
        den["h"] += len(partition.short_head - seen)
        den["t"] += len(partition.long_tail - seen)
    return _relative_gap(_ratio(num["h"], den["h"]), _ratio(num["t"], den["t"]))


def pop_reo_at_k(lists: Mapping, partition: PopularityPartition, test, k: int) -> float:
    top = _topk(lists, k)
    num = {"h": 0, "t": 0}
    den = {"h": 0, "t": 0}
    for u, rel in _test_of(test).items():
        if not rel:
            continue
        hits = set(top.get(u, [])) & rel
        num["h"] += len(hits & partition.short_head)
        num["t"] += len(hits & partition.long_tail)
        den["h"] += len(rel & partition.short_head)
        den["t"] += len(rel & partition.long_tail)
    return _relative_gap(_ratio(num["h"], den["h"]), _ratio(num["t"], den["t"]))


@dataclass
class EvalReport:
    cutoff: int
    values: dict[str, float] = field(default_factory=dict)
    per_user: dict[str, dict[str, float]] = field(default_factory=dict)

    def records(self) -> list[tuple[str, int, float]]:
        return [(name, self.cutoff, v) for name, v in self.values.items()]


def evaluate(lists: Mapping, train: InteractionLog, test, k: int,
             partition: PopularityPartition | None = None, pop_ratio: float = 0.8) -> EvalReport:
    """Every metric at cutoff ``k``.

    Users with an empty test set count for diversity and bias but not for
    nDCG/HR.
    """
    if partition is None:
        partition = popularity_partition(train, pop_ratio)
    n_items = len(train.items)
    rep = EvalReport(k)
    rep.values = {
        "nDCG": ndcg_at_k(lists, test, k),
        "HR": hit_ratio_at_k(lists, test, k),
        "ItemCoverage": float(item_coverage_at_k(lists, k)),
        "Gini": gini_diversity_at_k(lists, n_items, k),
        "GiniCoefficient": gini_coefficient_at_k(lists, n_items, k),
        "SE": shannon_entropy_at_k(lists, k),
        "ACLT": aclt_at_k(lists, partition, k),
        "PopRSP": pop_rsp_at_k(lists, partition, train, k),
        "PopREO": pop_reo_at_k(lists, partition, test, k),
    }
    rep.per_user = {
        "nDCG": ndcg_per_user(lists, test, k),
        "HR": hit_ratio_per_user(lists, test, k),
        "ACLT": aclt_per_user(lists, partition, k),
    }
    return rep


def format_report(reports: Sequence[EvalReport]) -> str:
    lines = ["metric\tcutoff\tvalue\n"]
    for rep in reports:
        for name, cutoff, value in rep.records():
            lines.append(f"{name}\t{cutoff}\t{value!r}\n")
    return "".join(lines)


def parse_report(text: str) -> dict[tuple[str, int], float]:
    out = {}
    for line in text.splitlines()[1:]:
        name, cutoff, value = line.split("\t")
        out[(name, int(cutoff))] = float(value)
    return out


# --- semantics preservation -------------------------------------------------

@dataclass
class SemanticsReport:
    k_values: tuple[int | None, ...]
    per_user: dict[str, dict[int | None, float]]
    quartiles: dict[int | None, tuple[float, float, float]]
    feature_table: list[tuple[int, float, float]]
    top_feature_share: float

    def to_tsv(self) -> str:
        cols = [_klabel(k) for k in self.k_values]
        out = ["user\t" + "\t".join(cols) + "\n"]
        for u in sorted(self.per_user):
            out.append(u + "\t" + "\t".join(repr(self.per_user[u][k]) for k in self.k_values) + "\n")
        for q, name in enumerate(("Q1", "Q2", "Q3")):
            out.append(name + "\t" + "\t".join(repr(self.quartiles[k][q]) for k in self.k_values) + "\n")
        return "".join(out)

    def features_tsv(self, catalog: FeatureCatalog | None = None) -> str:
        out = ["feature_id\tfeature\tig_dataset\tig_recommended\n"]
        for f, ig_data, ig_rec in self.feature_table:
            label = str(catalog[f]) if catalog is not None else ""
            out.append(f"{f}\t{label}\t{ig_data!r}\t{ig_rec!r}\n")
        return "".join(out)


def _klabel(k: int | None) -> str:
    return "k=inf" if k is None else f"k={k}"


def preserved_share(weights: UserFeatureWeights, recommended: Iterable[str],
                    item_features: Mapping[str, frozenset[int]], k: int | None) -> float:
    """Percentage of the user's top-k weighted features carried by at least one recommended item."""
    top = [f for f, _ in weights.ranked()]
    if k is not None:
        top = top[:k]
    if not top:
        return 0.0
    covered: set[int] = set()
    for i in recommended:
        covered |= item_features.get(i, frozenset())
    return 100.0 * sum(f in covered for f in top) / len(top)


def semantics_report(lists: Mapping, weights: Mapping[str, UserFeatureWeights], catalog: FeatureCatalog,
                     k_values: Sequence[int | None] = (5, 10, 50, 100, None), cutoff: int | None = None,
                     seed=None, top_features: int = 100) -> SemanticsReport:
    """How much of each user's informative feature profile survives in their list.

    Also recomputes information gain with the recommended items as positives
    (negatives drawn from other users' lists) and sums it per feature next
    to the summed dataset weights: the data behind a before/after word cloud.
    """
    k_values = tuple(k_values)
    lists_items = {u: _items(lst)[:cutoff] if cutoff else _items(lst) for u, lst in lists.items()}
    per_user = {}
    for u in sorted(weights):
        if u not in lists_items or not weights[u].weights:
            continue
        per_user[u] = {k: preserved_share(weights[u], lists_items[u], catalog.item_features, k)
                       for k in k_values}
    quartiles = {}
    for k in k_values:
        vals = [per_user[u][k] for u in per_user]
        quartiles[k] = tuple(float(q) for q in np.percentile(vals, [25, 50, 75])) if vals else (0.0, 0.0, 0.0)

    ig_data: dict[int, float] = {}
    for w in weights.values():
        for f, v in w.weights.items():
            ig_data[f] = ig_data.get(f, 0.0) + v

    rec_log = InteractionLog.from_positives({u: its for u, its in lists_items.items() if its})
    ig_rec: dict[int, float] = {}
    users = sorted(rec_log.positives)
    for u, ss in zip(users, np.random.SeedSequence(seed).spawn(len(users))):
        pool = sorted(set().union(*(rec_log.positives[v] for v in users if v != u)) - rec_log.positives[u])
        rng = np.random.default_rng(ss)
        want = len(rec_log.positives[u])
        neg = pool if len(pool) <= want else [pool[j] for j in rng.choice(len(pool), want, replace=False)]
        d = UserEntropyDataset(u, rec_log.positives[u], frozenset(neg))
        for f, v in compute_user_weights(d, catalog, per_hop_limit=None).weights.items():
            ig_rec[f] = ig_rec.get(f, 0.0) + v

    table = sorted(
        ((f, ig_data.get(f, 0.0), ig_rec.get(f, 0.0)) for f in set(ig_data) | set(ig_rec)),
        key=lambda t: (-t[1], -t[2], t[0]),
    )
    top = [f for f, v, _ in table if v > 0][:top_features]
    recommended_features: set[int] = set()
    for its in lists_items.values():
        for i in its:
            recommended_features |= catalog.item_features.get(i, frozenset())
    share = 100.0 * sum(f in recommended_features for f in top) / len(top) if top else 0.0
    return SemanticsReport(k_values, per_user, quartiles, table, share)
