import itertools

import pytest
from hypothesis import given, settings, strategies as st

from kgflex.graph import (
    DEFAULT_BLACKLIST, Feature, GraphFormatError, KnowledgeGraph, build_catalog, explore,
    filter_by_frequency, load_blacklist, load_triples, restrict_hops,
)

from conftest import feat


class TestLoadTriples:
    def test_single_line(self):
        kg = load_triples(b"Vondelpark\tlocation\tAmsterdam\n")
        assert kg.n_triples == 1
        assert kg.entities == {"Vondelpark", "Amsterdam"}

    def test_poi(self, toy_kg):
        assert toy_kg.n_triples == 15
        assert len(toy_kg.entities) == 12

    def test_malformed_names_line(self):
        with pytest.raises(GraphFormatError, match="line 1"):
            load_triples(b"a\tb\n")

    def test_malformed_later_line(self):
        with pytest.raises(GraphFormatError, match="line 3"):
            load_triples(b"# c\na\tb\tc\nx\ty\n")

    def test_empty(self):
        with pytest.raises(GraphFormatError, match="empty"):
            load_triples(b"# only a comment\n\n")

    def test_duplicates_dropped(self):
        kg = load_triples("a\tp\tb\na\tp\tb\na\tq\tb\n")
        assert kg.n_triples == 2

    def test_not_utf8(self):
        with pytest.raises(GraphFormatError, match="UTF-8"):
            load_triples(b"\xff\xfe\tp\to\n")

    def test_blacklist_file(self):
        assert load_blacklist(b"rdf:type\n\n# x\nowl:sameAs\n") == {"rdf:type", "owl:sameAs"}


class TestExplore:
    def test_vondelpark_depth1(self, toy_kg):
        assert explore(toy_kg, "Vondelpark", 1) == {
            feat("type", "Location"), feat("location", "Amsterdam"), feat("type", "Urban Park"),
        }

    def test_unmapped_item(self, toy_kg):
        assert explore(toy_kg, "Nowhere", 2) == set()

    def test_two_hops(self):
        kg = load_triples("A\tp\tB\nB\tq\tC\n", {"a": "A"})
        assert explore(kg, "a", 2) == {Feature(("p",), "B"), Feature(("p", "q"), "C")}

    def test_intermediates_collapse(self):
        kg = load_triples("A\tp\tB1\nA\tp\tB2\nB1\tq\tC\nB2\tq\tC\n", {"a": "A"})
        assert explore(kg, "a", 2) == {
            Feature(("p",), "B1"), Feature(("p",), "B2"), Feature(("p", "q"), "C"),
        }

    def test_blacklist_first_hop_only(self):
        kg = load_triples("A\tp\tB\nA\tq\tD\nB\tq\tC\n", {"a": "A"})
        assert explore(kg, "a", 2, {"q"}) == {Feature(("p",), "B"), Feature(("p", "q"), "C")}

    def test_cycle_terminates_and_keeps_root_as_object(self):
        kg = load_triples("A\tp\tB\nB\tr\tA\n", {"a": "A"})
        assert explore(kg, "a", 5) == {Feature(("p",), "B"), Feature(("p", "r"), "A")}

    def test_bad_depth(self, toy_kg):
        with pytest.raises(ValueError):
            explore(toy_kg, "Vondelpark", 0)

    def test_pink_profile(self, toy_kg):
        fu = explore(toy_kg, "Rijksmuseum", 1) | explore(toy_kg, "Vondelpark", 1)
        assert fu == {
            feat("type", "Location"), feat("location", "Amsterdam"),
            feat("type", "Urban Park"), feat("type", "Art Museum"),
        }


def brute_paths(edges, root, depth):
    """Enumerate every simple walk of length <= depth by brute force."""
    out = set()
    for n in range(1, depth + 1):
        for walk in itertools.product(edges, repeat=n):
            if walk[0][0] != root:
                continue
            if any(walk[j][2] != walk[j + 1][0] for j in range(n - 1)):
                continue
            nodes = [root] + [e[2] for e in walk[:-1]]
            if len(set(nodes)) != len(nodes):
                continue
            out.add(Feature(tuple(e[1] for e in walk), walk[-1][2]))
    return out


edges_strategy = st.sets(
    st.tuples(st.sampled_from("ABCD"), st.sampled_from("pq"), st.sampled_from("ABCD")),
    min_size=1, max_size=8,
)


@settings(max_examples=60, deadline=None)
@given(edges=edges_strategy, depth=st.integers(1, 3))
def test_explore_matches_brute_force(edges, depth):
    text = "".join(f"{s}\t{p}\t{o}\n" for s, p, o in sorted(edges))
    kg = load_triples(text, {"item": "A"})
    assert explore(kg, "item", depth) == brute_paths(sorted(edges), "A", depth)


@settings(max_examples=40, deadline=None)
@given(edges=edges_strategy, depth=st.integers(1, 3))
def test_depth_monotone(edges, depth):
    text = "".join(f"{s}\t{p}\t{o}\n" for s, p, o in sorted(edges))
    kg = load_triples(text, {"item": "A"})
    assert explore(kg, "item", depth) <= explore(kg, "item", depth + 1)


class TestCatalog:
    def test_poi_seven_features(self, toy_catalog):
        names = {str(toy_catalog[f]) for f in toy_catalog.feature_items}
        assert names == {
            "<type, Location>", "<type, Art Museum>", "<type, Urban Park>", "<type, Square>",
            "<location, Amsterdam>", "<location, Rome>", "<location, New York City>",
        }
        toy_catalog.check_consistency()

    def test_blacklist(self, toy_kg, toy_log):
        cat = build_catalog(toy_kg, toy_log.items, 1, {"location"})
        assert {poi_catalog_chain(cat, f) for f in cat.feature_items} == {("type",)}

    def test_identical_items_share_ids(self):
        kg = load_triples("A\tp\tX\nB\tp\tX\n", {"a": "A", "b": "B"})
        cat = build_catalog(kg, ["a", "b"], 1)
        assert cat.item_features["a"] == cat.item_features["b"] == {0}

    def test_deterministic_ids(self, toy_kg, toy_log):
        a = build_catalog(toy_kg, toy_log.items, 2)
        b = build_catalog(toy_kg, list(reversed(sorted(toy_log.items))), 2)
        assert a.features == b.features and a.item_features == b.item_features

    def test_empty_items(self, toy_kg):
        with pytest.raises(ValueError):
            build_catalog(toy_kg, [], 1)

    def test_unmapped_gets_empty_set(self, toy_kg):
        poi_kg_local = KnowledgeGraph(toy_kg.adjacency, dict(toy_kg.item_map))
        cat = build_catalog(poi_kg_local, ["Vondelpark", "Atlantis"], 1)
        assert cat.item_features["Atlantis"] == frozenset()

    def test_default_blacklist(self):
        assert len(DEFAULT_BLACKLIST) == 10 and "rdf:type" in DEFAULT_BLACKLIST


def poi_catalog_chain(cat, f):
    return cat[f].chain


class TestFrequencyFilter:
    def _catalog(self, n_items):
        lines = "".join(f"e{j}\tp\tX\n" for j in range(n_items)) + "e0\tp\tY\n"
        kg = load_triples(lines, {f"i{j}": f"e{j}" for j in range(n_items)})
        return build_catalog(kg, kg.item_map, 1)

    def test_nine_items_removed(self):
        cat = filter_by_frequency(self._catalog(9), 10)
        assert len(cat) == 0
        assert all(not fs for fs in cat.item_features.values())

    def test_ten_items_kept(self):
        cat = filter_by_frequency(self._catalog(10), 10)
        assert [str(cat[f]) for f in cat.feature_items] == ["<p, X>"]
        cat.check_consistency()

    def test_min_items_one_is_noop(self, toy_catalog):
        cat = filter_by_frequency(toy_catalog, 1)
        assert cat.item_features == toy_catalog.item_features
        assert cat.feature_items == toy_catalog.feature_items

    def test_all_singletons(self):
        kg = load_triples("A\tp\tX\nB\tp\tY\n", {"a": "A", "b": "B"})
        cat = filter_by_frequency(build_catalog(kg, ["a", "b"], 1), 2)
        assert cat.item_features == {"a": frozenset(), "b": frozenset()}

    def test_invalid(self, toy_catalog):
        with pytest.raises(ValueError):
            filter_by_frequency(toy_catalog, 0)


def test_restrict_hops():
    kg = load_triples("A\tp\tB\nB\tq\tC\n", {"a": "A"})
    cat = build_catalog(kg, ["a"], 2)
    assert {cat[f].depth for f in restrict_hops(cat, [2]).item_features["a"]} == {2}
    assert restrict_hops(cat, []).item_features["a"] == frozenset()


@settings(max_examples=40, deadline=None)
@given(edges=edges_strategy, bl=st.sets(st.sampled_from("pq")), min_items=st.integers(1, 3))
def test_catalog_invariants(edges, bl, min_items):
    text = "".join(f"{s}\t{p}\t{o}\n" for s, p, o in sorted(edges))
    kg = load_triples(text, {"a": "A", "b": "B", "c": "C"})
    cat = filter_by_frequency(build_catalog(kg, ["a", "b", "c"], 2, bl), min_items)
    cat.check_consistency()
    assert set(cat.feature_items) == set().union(*cat.item_features.values())
    assert all(cat[f].chain[0] not in bl for f in cat.feature_items)
    assert all(len(items) >= min_items for items in cat.feature_items.values())
