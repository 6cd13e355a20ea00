"""Knowledge-graph ingestion and multi-hop feature extraction.

Items are mapped to graph entities and explored up to a fixed depth. Every
path ``entity -p1-> e1 -p2-> ... -pn-> object`` yields a feature made of the
predicate chain ``(p1, ..., pn)`` and the terminal object; intermediate
entities are not part of the feature identity.
"""

from __future__ import annotations

import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Mapping

logger = logging.getLogger(__name__)

DEFAULT_BLACKLIST = frozenset(
    {
        "dbo:wikiPageWikiLink",
        "owl:sameAs",
        "rdf:type",
        "gold:hypernym",
        "rdfs:seeAlso",
        "dbp:wordnet_type",
        "dbo:wikiPageExternalLink",
        "dbo:thumbnail",
        "prov:wasDerivedFrom",
        "dbp:wikiPageUsesTemplate",
    }
)

DEFAULT_MIN_ITEMS = 10


class GraphFormatError(ValueError):
    """Raised when a triple or mapping file cannot be parsed."""


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        if not (self.subject and self.predicate and self.object):
            raise ValueError(f"triple fields must be non-empty: {self!r}")


@dataclass(frozen=True, order=True)
class Feature:
    """A predicate chain together with the entity it ends on."""

    chain: tuple[str, ...]
    object: str

    def __post_init__(self):
        if not self.chain:
            raise ValueError("feature chain must be non-empty")
        object.__setattr__(self, "chain", tuple(self.chain))

    @property
    def depth(self) -> int:
        return len(self.chain)

    def __str__(self):
        return f"<{'/'.join(self.chain)}, {self.object}>"


@dataclass
class KnowledgeGraph:
    adjacency: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    item_map: dict[str, str] = field(default_factory=dict)
    unmapped: set[str] = field(default_factory=set)

    @property
    def n_triples(self) -> int:
        return sum(len(edges) for edges in self.adjacency.values())

    @property
    def entities(self) -> set[str]:
        ents = set(self.adjacency)
        for edges in self.adjacency.values():
            ents.update(obj for _, obj in edges)
        return ents

    def triples(self) -> Iterable[Triple]:
        for subject in sorted(self.adjacency):
            for predicate, obj in self.adjacency[subject]:
                yield Triple(subject, predicate, obj)

    def entity_of(self, item: str) -> str | None:
        return self.item_map.get(item)

    def map_items(self, items: Iterable[str]) -> None:
        """Record every item lacking a mapping as explicitly unmapped."""
        self.unmapped = {i for i in items if i not in self.item_map}
        if self.unmapped:
            logger.info("%d items have no entity mapping", len(self.unmapped))


def _read_text(source: BinaryIO | bytes | str) -> str:
    if isinstance(source, str):
        return source
    if isinstance(source, bytes):
        data = source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as err:
        raise GraphFormatError(f"stream is not valid UTF-8: {err}") from err


def _tsv_rows(text: str, n_fields: int, what: str):
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != n_fields or not all(p.strip() for p in parts):
            raise GraphFormatError(
                f"{what}: line {lineno}: expected {n_fields} tab-separated fields, got {line!r}"
            )
        yield [p.strip() for p in parts]


def load_triples(source: BinaryIO | bytes | str, item_map: Mapping[str, str] | None = None) -> KnowledgeGraph:
    """Parse a subject/predicate/object TSV stream into an adjacency index.

    Duplicate triples are dropped. ``#`` lines are comments.
    """
    text = _read_text(source)
    adjacency: dict[str, list[tuple[str, str]]] = defaultdict(list)
    seen = set()
    n_lines = 0
    for s, p, o in _tsv_rows(text, 3, "triples"):
        n_lines += 1
        if (s, p, o) in seen:
            continue
        seen.add((s, p, o))
        adjacency[s].append((p, o))
    if n_lines == 0:
        raise GraphFormatError("triples: empty stream")
    kg = KnowledgeGraph(adjacency=dict(adjacency), item_map=dict(item_map or {}))
    logger.info(
        "loaded %d lines, %d distinct triples, %d entities",
        n_lines, kg.n_triples, len(kg.entities),
    )
    return kg


def load_item_map(source: BinaryIO | bytes | str) -> dict[str, str]:
    """Parse an item-id/entity-id TSV stream."""
    return {item: entity for item, entity in _tsv_rows(_read_text(source), 2, "mapping")}


def load_blacklist(source: BinaryIO | bytes | str) -> frozenset[str]:
    text = _read_text(source)
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def explore(kg: KnowledgeGraph, item: str, depth: int, blacklist: Iterable[str] = ()) -> set[Feature]:
    """Return every feature reachable from ``item`` by chains of length 1..depth.

    The blacklist filters the first predicate of a chain only. A path never
    revisits an entity it already passed through, but the item's own entity
    may still be a terminal object.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    root = kg.entity_of(item)
    if root is None:
        return set()
    blacklist = frozenset(blacklist)
    features: set[Feature] = set()
    # (entity, chain, entities visited on this path)
    frontier = [(root, (), frozenset([root]))]
    for _ in range(depth):
        nxt = []
        for entity, chain, visited in frontier:
            for predicate, obj in kg.adjacency.get(entity, ()):
                if not chain and predicate in blacklist:
                    continue
                new_chain = chain + (predicate,)
                features.add(Feature(new_chain, obj))
                if obj not in visited:
                    nxt.append((obj, new_chain, visited | {obj}))
        frontier = nxt
    return features


class FeatureCatalog:
    """Dense feature ids plus the item -> features index and its inverse."""

    def __init__(self):
        self.features: list[Feature] = []
        self.ids: dict[Feature, int] = {}
        self.item_features: dict[str, frozenset[int]] = {}
        self.feature_items: dict[int, frozenset[str]] = {}

    def register(self, feature: Feature) -> int:
        fid = self.ids.get(feature)
        if fid is None:
            fid = len(self.features)
            self.ids[feature] = fid
            self.features.append(feature)
        return fid

    def __len__(self):
        return len(self.feature_items)

    def __getitem__(self, fid: int) -> Feature:
        return self.features[fid]

    @property
    def n_ids(self) -> int:
        """Size of the id space (ids of filtered features are not reused)."""
        return len(self.features)

    def id_of(self, feature: Feature) -> int:
        return self.ids[feature]

    def depth_of(self, fid: int) -> int:
        return self.features[fid].depth

    def _rebuild_inverse(self) -> None:
        inverse: dict[int, set[str]] = defaultdict(set)
        for item, fids in self.item_features.items():
            for fid in fids:
                inverse[fid].add(item)
        self.feature_items = {fid: frozenset(items) for fid, items in sorted(inverse.items())}

    def _derive(self, item_features: dict[str, frozenset[int]]) -> FeatureCatalog:
        out = FeatureCatalog()
        out.features = self.features
        out.ids = self.ids
        out.item_features = item_features
        out._rebuild_inverse()
        return out

    def check_consistency(self) -> None:
        for item, fids in self.item_features.items():
            for fid in fids:
                assert item in self.feature_items[fid], (item, fid)
        for fid, items in self.feature_items.items():
            assert items, fid
            for item in items:
                assert fid in self.item_features[item], (item, fid)


def build_catalog(
    kg: KnowledgeGraph, items: Iterable[str], depth: int, blacklist: Iterable[str] = ()
) -> FeatureCatalog:
    """Explore every item and assign feature ids in first-encountered order.

    Items are visited in ascending id order and each item's features in
    sorted order, so the id assignment is reproducible.
    """
    items = sorted(set(items))
    if not items:
        raise ValueError("build_catalog needs at least one item")
    blacklist = frozenset(blacklist)
    catalog = FeatureCatalog()
    item_features = {}
    for item in items:
        feats = explore(kg, item, depth, blacklist)
        item_features[item] = frozenset(catalog.register(f) for f in sorted(feats))
    catalog.item_features = item_features
    catalog._rebuild_inverse()
    logger.info("catalog: %d items, %d features", len(items), len(catalog))
    return catalog


def filter_by_frequency(catalog: FeatureCatalog, min_items: int = DEFAULT_MIN_ITEMS) -> FeatureCatalog:
    """Drop features shared by fewer than ``min_items`` items."""
    if min_items < 1:
        raise ValueError(f"min_items must be >= 1, got {min_items}")
    keep = {fid for fid, its in catalog.feature_items.items() if len(its) >= min_items}
    return catalog._derive(
        {item: frozenset(f for f in fids if f in keep) for item, fids in catalog.item_features.items()}
    )


def restrict_hops(catalog: FeatureCatalog, hops: Iterable[int]) -> FeatureCatalog:
    """Keep only features whose chain length is in ``hops`` (ablation switch)."""
    hops = frozenset(hops)
    return catalog._derive(
        {
            item: frozenset(f for f in fids if catalog.depth_of(f) in hops)
            for item, fids in catalog.item_features.items()
        }
    )
