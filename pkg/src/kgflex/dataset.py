"""Implicit-feedback interactions: loading, k-core pruning, splitting, sampling."""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Mapping

import numpy as np

logger = logging.getLogger(__name__)


class RatingsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionLog:
    """Users, the item catalog and each user's positive items ``I_u``.

    ``items`` is the full catalog and may contain items nobody interacted
    with (e.g. items that only survive in the test half of a split).
    """

    users: frozenset[str]
    items: frozenset[str]
    positives: Mapping[str, frozenset[str]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], items: Iterable[str] = ()) -> InteractionLog:
        pos: dict[str, set[str]] = {}
        for u, i in pairs:
            pos.setdefault(u, set()).add(i)
        return cls.from_positives(pos, items)

    @classmethod
    def from_positives(cls, positives: Mapping[str, Iterable[str]], items: Iterable[str] = ()) -> InteractionLog:
        pos = {u: frozenset(its) for u, its in positives.items()}
        all_items = set(items)
        for its in pos.values():
            all_items |= its
        return cls(frozenset(pos), frozenset(all_items), pos)

    def __len__(self):
        return sum(len(v) for v in self.positives.values())

    def pairs(self) -> list[tuple[str, str]]:
        """All (user, item) pairs in ascending order."""
        return [(u, i) for u in sorted(self.positives) for i in sorted(self.positives[u])]

    def items_of(self, user: str) -> frozenset[str]:
        return self.positives.get(user, frozenset())

    def item_degrees(self) -> dict[str, int]:
        deg = dict.fromkeys(self.items, 0)
        for its in self.positives.values():
            for i in its:
                deg[i] += 1
        return deg

    def to_tsv(self) -> str:
        return "".join(f"{u}\t{i}\n" for u, i in self.pairs())


@dataclass(frozen=True)
class Split:
    train: InteractionLog
    test: InteractionLog


def load_ratings(source: BinaryIO | bytes | str, threshold: float = 3.0) -> InteractionLog:
    """Read user/item[/rating[/...]] TSV lines, keeping ratings >= threshold.

    Lines without a rating column are implicit positives; columns past the
    rating (timestamps etc.) are ignored.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    pairs = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) < 2 or not parts[0] or not parts[1]:
            raise RatingsFormatError(f"ratings: line {lineno}: expected user<TAB>item[<TAB>rating], got {line!r}")
        if len(parts) >= 3 and parts[2]:
            try:
                rating = float(parts[2])
            except ValueError:
                raise RatingsFormatError(f"ratings: line {lineno}: bad rating {parts[2]!r}") from None
            if rating < threshold:
                continue
        pairs.append((parts[0], parts[1]))
    log = InteractionLog.from_pairs(pairs)
    logger.info("ratings: %d users, %d items, %d positives", len(log.users), len(log.items), len(log))
    return log


def k_core(log: InteractionLog, k: int) -> InteractionLog:
    """Iteratively drop users and items with fewer than ``k`` interactions."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pos = {u: set(its) for u, its in log.positives.items()}
    rounds = 0
    while True:
        rounds += 1
        weak_users = [u for u, its in pos.items() if len(its) < k]
        for u in weak_users:
            del pos[u]
        deg: dict[str, int] = {}
        for its in pos.values():
            for i in its:
                deg[i] = deg.get(i, 0) + 1
        weak_items = {i for i, d in deg.items() if d < k}
        for its in pos.values():
            its -= weak_items
        logger.debug("k-core round %d: -%d users, -%d items", rounds, len(weak_users), len(weak_items))
        if not weak_users and not weak_items:
            break
    return InteractionLog.from_positives(pos)


def holdout_split(log: InteractionLog, train_ratio: float = 0.8, seed=None) -> Split:
    """Per-user random hold-out; ``ceil(train_ratio * |I_u|)`` items go to train."""
    if not 0 < train_ratio < 1:
        raise ValueError(f"train_ratio must be in (0, 1), got {train_ratio}")
    rng = np.random.default_rng(seed)
    train, test = {}, {}
    for u in sorted(log.positives):
        items = sorted(log.positives[u])
        perm = rng.permutation(len(items))
        cut = math.ceil(train_ratio * len(items))
        train[u] = frozenset(items[j] for j in perm[:cut])
        test[u] = frozenset(items[j] for j in perm[cut:])
    return Split(
        train=InteractionLog.from_positives(train, log.items),
        test=InteractionLog.from_positives(test, log.items),
    )


def entropy_negative_pool(log: InteractionLog, u: str) -> list[str]:
    mine = log.positives[u]
    pool = set()
    for v, its in log.positives.items():
        if v != u:
            pool |= its
    return sorted(pool - mine)


def sample_entropy_negatives(log: InteractionLog, u: str, seed=None) -> frozenset[str]:
    """Draw ``|I_u|`` items other users enjoyed but ``u`` did not, without replacement.

    If the pool is too small the whole pool is returned.
    """
    if u not in log.positives:
        raise KeyError(f"unknown user {u!r}")
    pool = entropy_negative_pool(log, u)
    want = len(log.positives[u])
    if len(pool) <= want:
        if len(pool) < want:
            logger.warning("user %s: negative pool has %d items, wanted %d", u, len(pool), want)
        return frozenset(pool)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pool), size=want, replace=False)
    return frozenset(pool[j] for j in picks)


def sample_bpr_negative(log: InteractionLog, u: str, rng: np.random.Generator, catalog: list[str] | None = None) -> str:
    """Uniform draw from the items ``u`` has not consumed (rejection sampling)."""
    mine = log.positives.get(u, frozenset())
    if catalog is None:
        catalog = sorted(log.items)
    if len(mine) >= len(catalog):
        raise ValueError(f"user {u!r} has consumed the whole catalog")
    while True:
        item = catalog[rng.integers(len(catalog))]
        if item not in mine:
            return item
