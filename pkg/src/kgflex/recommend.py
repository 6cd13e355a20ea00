"""Top-k lists under the all-unrated-items protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .dataset import InteractionLog
from .model import KGFlexModel


@dataclass(frozen=True)
class RecommendationList:
    user: str
    entries: tuple[tuple[str, float], ...]

    @property
    def items(self) -> list[str]:
        return [i for i, _ in self.entries]

    def __len__(self):
        return len(self.entries)


class Recommender:
    """Scores every candidate item of a user at once through a sparse item x feature matrix."""

    def __init__(self, model: KGFlexModel, train: InteractionLog, item_features: Mapping[str, frozenset[int]]):
        self.model = model
        self.train = train
        self.catalog = sorted(train.items)
        self._pos = {i: j for j, i in enumerate(self.catalog)}
        rows, cols = [], []
        for j, item in enumerate(self.catalog):
            for f in item_features.get(item, ()):
                rows.append(j)
                cols.append(f)
        self.X = sp.csc_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(len(self.catalog), model.n_features)
        )

    def scores(self, u: str) -> np.ndarray:
        fids, contrib = self.model.feature_contributions(u)
        if len(fids) == 0:
            return np.zeros(len(self.catalog))
        return self.X[:, fids] @ contrib

    def top_k(self, u: str, k: int) -> RecommendationList:
        if k < 1:
            raise ValueError("k must be >= 1")
        if u not in self.train.users:
            raise KeyError(f"unknown user {u!r}")
        scores = self.scores(u)
        candidates = np.ones(len(self.catalog), dtype=bool)
        for i in self.train.items_of(u):
            candidates[self._pos[i]] = False
        idx = np.flatnonzero(candidates)
        # catalog is sorted, so a stable sort on -score breaks ties by item id
        order = idx[np.argsort(-scores[idx], kind="stable")][:k]
        return RecommendationList(u, tuple((self.catalog[j], float(scores[j])) for j in order))


def recommend_top_k(u: str, model: KGFlexModel, train: InteractionLog,
                    item_features: Mapping[str, frozenset[int]], k: int) -> RecommendationList:
    return Recommender(model, train, item_features).top_k(u, k)


def recommend_all(model: KGFlexModel, train: InteractionLog,
                  item_features: Mapping[str, frozenset[int]], k: int) -> dict[str, RecommendationList]:
    rec = Recommender(model, train, item_features)
    return {u: rec.top_k(u, k) for u in sorted(train.users)}


def dump_recommendations(lists: Mapping[str, RecommendationList]) -> str:
    out = ["user\titem\tscore\trank\n"]
    for u in sorted(lists):
        for rank, (i, s) in enumerate(lists[u].entries, start=1):
            out.append(f"{u}\t{i}\t{s!r}\t{rank}\n")
    return "".join(out)


def load_recommendations(text: str) -> dict[str, RecommendationList]:
    rows: dict[str, list] = {}
    for line in text.splitlines()[1:]:
        u, i, s, r = line.split("\t")
        rows.setdefault(u, []).append((int(r), i, float(s)))
    return {u: RecommendationList(u, tuple((i, s) for _, i, s in sorted(v))) for u, v in rows.items()}
