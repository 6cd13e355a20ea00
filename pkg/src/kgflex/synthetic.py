"""Bundled toy data and planted-preference generators.

``poi`` is the five point-of-interest excerpt with users Pink, Green and
Blue. The planted generators build catalogs where each user's taste is a
known function of item features, so a working model must recover it.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

POI_ITEMS = ("Capitoline Museums", "Central Park", "Piazza Navona", "Rijksmuseum", "Vondelpark")

# negative_seed for which Pink's entropy negatives are {Piazza Navona, Central Park}
POI_SEED = 0


@dataclass
class Instance:
    triples: str
    mapping: str
    ratings: str
    # extra config keys that suit this instance
    config: dict

    def write(self, directory: Path | str, **overrides) -> Path:
        """Write the data files plus ``config.toml``; returns the config path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "triples.tsv").write_text(self.triples, encoding="utf-8")
        (directory / "mapping.tsv").write_text(self.mapping, encoding="utf-8")
        (directory / "ratings.tsv").write_text(self.ratings, encoding="utf-8")
        cfg = {
            "ratings": "ratings.tsv", "triples": "triples.tsv", "mapping": "mapping.tsv",
            "output_dir": "out", **self.config, **overrides,
        }
        path = directory / "config.toml"
        path.write_text("".join(f"{k} = {_toml(v)}\n" for k, v in cfg.items()), encoding="utf-8")
        return path


def _toml(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml(x) for x in v) + "]"
    return repr(v)


def poi() -> Instance:
    base = resources.files("kgflex") / "data" / "poi"
    return Instance(
        triples=(base / "triples.tsv").read_text(encoding="utf-8"),
        mapping=(base / "mapping.tsv").read_text(encoding="utf-8"),
        ratings=(base / "ratings.tsv").read_text(encoding="utf-8"),
        config=dict(
            core_k=1, min_items=1, depth=1, blacklist=[], negative_seed=POI_SEED,
            top_k=3, cutoffs=[1, 3], semantics_k=[1, 2, 0], epochs=10,
        ),
    )


def poi_config_path() -> Path:
    return Path(str(resources.files("kgflex") / "data" / "poi" / "config.toml"))


def _ids(prefix: str, n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"{prefix}{j:0{width}d}" for j in range(n)]


def planted_one_hop(n_users: int = 20, n_items: int = 40, n_features: int = 10,
                    likes: int = 2, seed: int = 0) -> Instance:
    """Each item has one ``genre``; each user consumes every item of ``likes`` genres.

    Item ids are shuffled against genres so id order carries no signal.
    """
    rng = np.random.default_rng(seed)
    items = _ids("item", n_items)
    genre_of = {item: f"genre{g}" for item, g in zip(items, rng.permutation(np.arange(n_items) % n_features))}
    triples = [f"ent_{i}\tgenre\t{genre_of[i]}\n" for i in items]
    ratings = []
    for u in _ids("user", n_users):
        fav = {f"genre{g}" for g in rng.choice(n_features, size=likes, replace=False)}
        ratings.extend(f"{u}\t{i}\t5\n" for i in items if genre_of[i] in fav)
    return Instance(
        "".join(triples), "".join(f"{i}\tent_{i}\n" for i in items), "".join(ratings),
        config=dict(core_k=1, min_items=1, depth=1, blacklist=[]),
    )


def planted_two_hop(n_users: int = 30, n_items: int = 60, n_genres: int = 6, n_countries: int = 6,
                    seed: int = 0) -> Instance:
    """Informative features at both depths.

    Items have a 1-hop ``genre`` and a 1-hop ``director``; every director is
    unique to one item and has a 1-hop ``country``, so the country is a
    2-hop feature of the item. A user consumes every item of their favourite
    genre or of their favourite country.
    """
    rng = np.random.default_rng(seed)
    items = _ids("item", n_items)
    genre = rng.permutation(np.arange(n_items) % n_genres)
    country = rng.permutation(np.arange(n_items) % n_countries)
    triples = []
    for j, item in enumerate(items):
        triples.append(f"ent_{item}\tgenre\tgenre{genre[j]}\n")
        triples.append(f"ent_{item}\tdirector\tdirector_{item}\n")
        triples.append(f"director_{item}\tcountry\tcountry{country[j]}\n")
    ratings = []
    for u in _ids("user", n_users):
        g, c = rng.integers(n_genres), rng.integers(n_countries)
        ratings.extend(f"{u}\t{item}\t5\n" for j, item in enumerate(items) if genre[j] == g or country[j] == c)
    return Instance(
        "".join(triples), "".join(f"{i}\tent_{i}\n" for i in items), "".join(ratings),
        config=dict(core_k=1, min_items=2, depth=2, blacklist=[]),
    )
