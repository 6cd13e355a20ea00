import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kgflex.dataset import (
    InteractionLog, RatingsFormatError, holdout_split, k_core, load_ratings,
    sample_bpr_negative, sample_entropy_negatives,
)


class TestLoadRatings:
    def test_above_threshold(self):
        assert load_ratings(b"u1\ti1\t4\n", 3).positives == {"u1": {"i1"}}

    def test_below_threshold(self):
        assert len(load_ratings(b"u1\ti1\t2\nu1\ti2\t3\n", 3)) == 1

    def test_implicit(self):
        assert load_ratings(b"u1\ti1\n", 3).positives == {"u1": {"i1"}}

    def test_extra_columns_and_duplicates(self):
        log = load_ratings(b"u1\ti1\t5\t978300760\nu1\ti1\t4\t978300761\n")
        assert len(log) == 1

    def test_malformed(self):
        with pytest.raises(RatingsFormatError, match="line 2"):
            load_ratings(b"u1\ti1\t4\nu2\n")

    def test_bad_rating(self):
        with pytest.raises(RatingsFormatError, match="line 1"):
            load_ratings(b"u1\ti1\tfive\n")

    def test_fixture_binarized(self, toy_log):
        assert toy_log.positives["Blue"] == {"Piazza Navona", "Central Park"}


def random_log(rng, n_users=60, n_items=40, density=0.3):
    mask = rng.random((n_users, n_items)) < density
    return InteractionLog.from_pairs(
        (f"u{a}", f"i{b}") for a, b in zip(*np.nonzero(mask))
    )


class TestKCore:
    def test_fixpoint(self):
        log = InteractionLog.from_pairs([(u, i) for u in "ab" for i in "xy"])
        assert k_core(log, 2).positives == log.positives

    def test_star(self):
        log = InteractionLog.from_pairs((f"u{j}", "item") for j in range(20))
        out = k_core(log, 5)
        assert len(out) == 0 and not out.users

    def test_k1_noop(self):
        log = random_log(np.random.default_rng(0))
        assert k_core(log, 1).positives == log.positives

    def test_cascade(self):
        # dropping u2 starves item z, which then starves u1
        pairs = [("u0", "x"), ("u0", "y"), ("u1", "x"), ("u1", "z"), ("u2", "z"),
                 ("u3", "x"), ("u3", "y")]
        out = k_core(InteractionLog.from_pairs(pairs), 2)
        assert out.positives == {"u0": {"x", "y"}, "u3": {"x", "y"}}

    @pytest.mark.parametrize("seed", range(5))
    def test_postcondition(self, seed):
        log = k_core(random_log(np.random.default_rng(seed), density=0.25), 10)
        assert all(len(v) >= 10 for v in log.positives.values())
        assert all(d >= 10 for d in log.item_degrees().values())

    def test_invalid(self):
        with pytest.raises(ValueError):
            k_core(InteractionLog.from_pairs([("u", "i")]), 0)


class TestHoldout:
    def test_ten_items(self):
        log = InteractionLog.from_pairs(("u", f"i{j}") for j in range(10))
        s = holdout_split(log, 0.8, seed=1)
        assert len(s.train.positives["u"]) == 8 and len(s.test.positives["u"]) == 2

    def test_single_item(self):
        s = holdout_split(InteractionLog.from_pairs([("u", "i")]), 0.8, seed=1)
        assert s.train.positives["u"] == {"i"} and s.test.positives["u"] == frozenset()

    def test_deterministic(self):
        log = random_log(np.random.default_rng(3))
        assert holdout_split(log, 0.8, 5) == holdout_split(log, 0.8, 5)

    def test_invalid_ratio(self):
        with pytest.raises(ValueError):
            holdout_split(InteractionLog.from_pairs([("u", "i")]), 1.0)

    @settings(max_examples=50, deadline=None)
    @given(sizes=st.lists(st.integers(1, 25), min_size=1, max_size=8),
           ratio=st.floats(0.05, 0.95), seed=st.integers(0, 2**32 - 1))
    def test_partition(self, sizes, ratio, seed):
        log = InteractionLog.from_positives({f"u{a}": [f"i{b}" for b in range(n)] for a, n in enumerate(sizes)})
        s = holdout_split(log, ratio, seed)
        for u, items in log.positives.items():
            tr, te = s.train.positives[u], s.test.positives[u]
            assert not tr & te and tr | te == items
            assert len(tr) == math.ceil(ratio * len(items))
        assert s.train.items == s.test.items == log.items


class TestEntropyNegatives:
    def test_pink_pool(self, toy_log):
        draws = {sample_entropy_negatives(toy_log, "Pink", seed) for seed in range(50)}
        pool = {"Capitoline Museums", "Piazza Navona", "Central Park"}
        assert all(len(d) == 2 and d <= pool for d in draws)
        assert frozenset({"Piazza Navona", "Central Park"}) in draws

    def test_pool_exhaustion(self):
        log = InteractionLog.from_positives({"u": ["a", "b", "c"], "v": ["a", "d"]})
        assert sample_entropy_negatives(log, "u", 0) == {"d"}

    def test_deterministic(self, toy_log):
        assert sample_entropy_negatives(toy_log, "Pink", 11) == sample_entropy_negatives(toy_log, "Pink", 11)

    def test_unknown_user(self, toy_log):
        with pytest.raises(KeyError):
            sample_entropy_negatives(toy_log, "Nobody", 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_disjoint_and_enjoyed_elsewhere(self, seed):
        log = random_log(np.random.default_rng(seed), n_users=20, n_items=30, density=0.15)
        for u in log.positives:
            neg = sample_entropy_negatives(log, u, seed)
            assert not neg & log.positives[u]
            assert all(any(i in log.positives[v] for v in log.positives if v != u) for i in neg)


class TestBPRNegative:
    def test_forced(self):
        log = InteractionLog.from_positives({"u": ["a"], "v": ["b"]})
        rng = np.random.default_rng(0)
        assert {sample_bpr_negative(log, "u", rng) for _ in range(50)} == {"b"}

    def test_full_catalog(self):
        log = InteractionLog.from_positives({"u": ["a", "b"]})
        with pytest.raises(ValueError):
            sample_bpr_negative(log, "u", np.random.default_rng(0))

    def test_uniform(self):
        items = [f"i{j}" for j in range(10)]
        log = InteractionLog.from_positives({"u": items[:3], "v": items})
        rng = np.random.default_rng(2024)
        n = 100_000
        counts = {}
        for _ in range(n):
            i = sample_bpr_negative(log, "u", rng)
            counts[i] = counts.get(i, 0) + 1
        assert set(counts) == set(items[3:])
        p = 1 / 7
        sigma = math.sqrt(n * p * (1 - p))
        for c in counts.values():
            assert abs(c - n * p) <= 3 * sigma
