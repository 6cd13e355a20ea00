"""Feature-factorization model trained with pairwise ranking (BPR).

The model keeps no user or item vectors. Every feature has a shared global
embedding ``g_f`` and bias ``b_f``; each user additionally owns a personal
embedding ``p_f`` for each feature the user retained. A user-item score is

    x_ui = sum over f in F_u & F_i of  k_uf * (p_f . g_f + b_f)

with ``k_uf`` the frozen information-gain weight.
"""

from __future__ import annotations

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .dataset import InteractionLog, sample_bpr_negative
from .entropy import UserFeatureWeights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 10
    learning_rate: float = 0.01
    epochs: int = 30
    l2: float = 0.0
    seed: int | None = 0
    init_scale: float = 0.1
    threads: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class PersonalEmbeddings:
    """One user's retained features, their weights and personal vectors.

    ``fids`` is sorted; row ``r`` of ``vectors`` belongs to ``fids[r]``.
    """

    user: str
    fids: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray
    index: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {int(f): r for r, f in enumerate(self.fids)}

    def rows_for(self, item_fids: Iterable[int]) -> np.ndarray:
        """Local rows of the features this user shares with an item (F_ui)."""
        idx = self.index
        if len(idx) <= len(item_fids):
            rows = [r for f, r in idx.items() if f in item_fids]
        else:
            rows = [idx[f] for f in item_fids if f in idx]
        rows.sort()
        return np.asarray(rows, dtype=np.int64)


class KGFlexModel:
    """Global feature table plus per-user personal embeddings."""

    def __init__(self, global_embeddings: np.ndarray, global_biases: np.ndarray,
                 personal: dict[str, PersonalEmbeddings]):
        self.G = global_embeddings
        self.b = global_biases
        self.personal = personal

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    @property
    def n_features(self) -> int:
        return self.G.shape[0]

    def user(self, u: str) -> PersonalEmbeddings:
        pe = self.personal.get(u)
        if pe is None:
            pe = PersonalEmbeddings(u, np.zeros(0, np.int64), np.zeros(0), np.zeros((0, self.dim)))
        return pe

    def weights_of(self, u: str) -> dict[int, float]:
        pe = self.user(u)
        return {int(f): float(k) for f, k in zip(pe.fids, pe.weights)}

    def _score_rows(self, pe: PersonalEmbeddings, rows: np.ndarray) -> float:
        if len(rows) == 0:
            return 0.0
        fids = pe.fids[rows]
        affinity = np.einsum("ij,ij->i", pe.vectors[rows], self.G[fids]) + self.b[fids]
        return float(pe.weights[rows] @ affinity)

    def predict(self, u: str, item_fids: Iterable[int]) -> float:
        pe = self.user(u)
        return self._score_rows(pe, pe.rows_for(item_fids))

    def feature_contributions(self, u: str) -> tuple[np.ndarray, np.ndarray]:
        """``(fids, k_uf * (p_f . g_f + b_f))`` for every retained feature of ``u``."""
        pe = self.user(u)
        aff = np.einsum("ij,ij->i", pe.vectors, self.G[pe.fids]) + self.b[pe.fids]
        return pe.fids, pe.weights * aff

    def copy(self) -> KGFlexModel:
        return KGFlexModel(
            self.G.copy(), self.b.copy(),
            {u: PersonalEmbeddings(u, pe.fids.copy(), pe.weights.copy(), pe.vectors.copy())
             for u, pe in self.personal.items()},
        )

    # checkpoint format: one record per line, tab separated
    #   G <fid> <b_f> <g_f[0]> ... <g_f[E-1]>
    #   P <user> <fid> <k_uf> <p_f[0]> ... <p_f[E-1]>
    # preceded by a header "# kgflex-checkpoint <n_features> <dim>".
    def dumps(self) -> str:
        out = io.StringIO()
        out.write(f"# kgflex-checkpoint {self.n_features} {self.dim}\n")
        for f in range(self.n_features):
            vec = "\t".join(repr(float(x)) for x in self.G[f])
            out.write(f"G\t{f}\t{float(self.b[f])!r}\t{vec}\n")
        for u in sorted(self.personal):
            pe = self.personal[u]
            for r, f in enumerate(pe.fids):
                vec = "\t".join(repr(float(x)) for x in pe.vectors[r])
                out.write(f"P\t{u}\t{int(f)}\t{float(pe.weights[r])!r}\t{vec}\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> KGFlexModel:
        lines = text.splitlines()
        head = lines[0].split()
        if head[:2] != ["#", "kgflex-checkpoint"]:
            raise ValueError("not a kgflex checkpoint")
        n, dim = int(head[2]), int(head[3])
        G = np.zeros((n, dim))
        b = np.zeros(n)
        rows: dict[str, list] = {}
        for line in lines[1:]:
            parts = line.split("\t")
            if parts[0] == "G":
                f = int(parts[1])
                b[f] = float(parts[2])
                G[f] = [float(x) for x in parts[3:]]
            elif parts[0] == "P":
                rows.setdefault(parts[1], []).append(
                    (int(parts[2]), float(parts[3]), [float(x) for x in parts[4:]]))
        personal = {}
        for u, recs in rows.items():
            recs.sort(key=lambda r: r[0])
            personal[u] = PersonalEmbeddings(
                u,
                np.array([r[0] for r in recs], dtype=np.int64),
                np.array([r[1] for r in recs]),
                np.array([r[2] for r in recs]).reshape(len(recs), dim),
            )
        return cls(G, b, personal)


def init_model(users: Iterable[str], weights: Mapping[str, UserFeatureWeights], n_features: int,
               dim: int = 10, seed=None, init_scale: float = 0.1) -> KGFlexModel:
    """Draw every g_f and p_f from N(0, init_scale^2); biases start at zero.

    Global rows exist for all ``n_features`` ids; a user gets personal
    vectors only for the features the user retained.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    G = rng.normal(0.0, init_scale, size=(n_features, dim))
    b = np.zeros(n_features)
    personal = {}
    for u in sorted(set(users)):
        w = weights.get(u)
        items = sorted(w.weights.items()) if w is not None else []
        fids = np.array([f for f, _ in items], dtype=np.int64)
        if len(fids) and fids.max() >= n_features:
            raise ValueError(f"user {u} weighs feature {fids.max()} outside the id space")
        personal[u] = PersonalEmbeddings(
            u, fids, np.array([k for _, k in items], dtype=float),
            rng.normal(0.0, init_scale, size=(len(fids), dim)),
        )
    return KGFlexModel(G, b, personal)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


def _pair_rows(pe: PersonalEmbeddings, pos_fids, neg_fids):
    """Union of the rows touched by either item and the sign of each in the difference."""
    rows_pos = pe.rows_for(pos_fids)
    rows_neg = pe.rows_for(neg_fids)
    rows = np.union1d(rows_pos, rows_neg)
    coef = np.isin(rows, rows_pos).astype(float) - np.isin(rows, rows_neg).astype(float)
    return rows, coef, rows_pos, rows_neg


def bpr_gradients(model: KGFlexModel, u: str, pos_fids, neg_fids):
    """Loss ``-ln sigmoid(x_u+ - x_u-)`` and its gradient on the touched parameters.

    Returns ``(loss, fids, grad_p, grad_g, grad_b)`` where row ``r`` of each
    gradient belongs to feature ``fids[r]``.
    """
    pe = model.user(u)
    rows, coef, rows_pos, rows_neg = _pair_rows(pe, pos_fids, neg_fids)
    delta = model._score_rows(pe, rows_pos) - model._score_rows(pe, rows_neg)
    loss = float(np.logaddexp(0.0, -delta))
    fids = pe.fids[rows]
    scale = -_sigmoid(-delta) * coef * pe.weights[rows]
    grad_p = scale[:, None] * model.G[fids]
    grad_g = scale[:, None] * pe.vectors[rows]
    return loss, fids, grad_p, grad_g, scale.copy()


def bpr_step(model: KGFlexModel, u: str, pos_fids, neg_fids, lr: float, l2: float = 0.0) -> float:
    """One SGD step on a (user, positive, negative) triple; returns the pre-step loss.

    Only the parameters of features in F_u,i+ | F_u,i- move. A feature shared
    by both items contributes opposite-signed gradients that cancel.
    """
    pe = model.user(u)
    rows, coef, rows_pos, rows_neg = _pair_rows(pe, pos_fids, neg_fids)
    if len(rows) == 0:
        return float(np.log(2.0))
    delta = model._score_rows(pe, rows_pos) - model._score_rows(pe, rows_neg)
    fids = pe.fids[rows]
    step = _sigmoid(-delta) * coef * pe.weights[rows]
    P = pe.vectors[rows]
    G = model.G[fids]
    b = model.b[fids]
    pe.vectors[rows] = P + lr * (step[:, None] * G - l2 * P)
    model.G[fids] = G + lr * (step[:, None] * P - l2 * G)
    model.b[fids] = b + lr * (step - l2 * b)
    return float(np.logaddexp(0.0, -delta))


def _run_triples(model, log, item_features, pairs, rng, catalog, cfg) -> float:
    total = 0.0
    for u, i_pos in pairs:
        i_neg = sample_bpr_negative(log, u, rng, catalog)
        total += bpr_step(model, u, item_features.get(i_pos, frozenset()),
                          item_features.get(i_neg, frozenset()), cfg.learning_rate, cfg.l2)
    return total


def train(model: KGFlexModel, log: InteractionLog, item_features: Mapping[str, frozenset[int]],
          config: TrainConfig) -> list[float]:
    """Run BPR-SGD in place and return the mean loss of every epoch.

    One epoch visits every training (user, item) pair once in shuffled order
    and pairs it with a uniformly drawn unconsumed item. With
    ``config.threads > 1`` users are sharded over worker threads that update
    the global table without locks; that mode is not reproducible.
    """
    pairs = log.pairs()
    if not pairs:
        raise ValueError("empty training set")
    catalog = sorted(log.items)
    rng = np.random.default_rng(config.seed)
    trace = []
    if config.threads == 1:
        for epoch in range(config.epochs):
            order = rng.permutation(len(pairs))
            total = _run_triples(model, log, item_features, [pairs[j] for j in order], rng, catalog, config)
            trace.append(total / len(pairs))
            logger.debug("epoch %d loss %.6f", epoch + 1, trace[-1])
        return trace

    users = sorted({u for u, _ in pairs})
    shard_of = {u: j % config.threads for j, u in enumerate(users)}
    shards = [[p for p in pairs if shard_of[p[0]] == s] for s in range(config.threads)]
    rngs = [np.random.default_rng(ss) for ss in np.random.SeedSequence(config.seed).spawn(config.threads)]

    def work(s):
        shard = shards[s]
        order = rngs[s].permutation(len(shard))
        return _run_triples(model, log, item_features, [shard[j] for j in order], rngs[s], catalog, config)

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        for epoch in range(config.epochs):
            trace.append(sum(pool.map(work, range(config.threads))) / len(pairs))
    return trace
