import pytest

from kgflex.dataset import load_ratings
from kgflex.entropy import UserEntropyDataset
from kgflex.graph import Feature, build_catalog, load_item_map, load_triples
from kgflex.synthetic import poi

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def toy():
    return poi()


@pytest.fixture(scope="session")
def toy_kg(toy):
    return load_triples(toy.triples, load_item_map(toy.mapping))


@pytest.fixture(scope="session")
def toy_log(toy):
    return load_ratings(toy.ratings)


@pytest.fixture(scope="session")
def toy_catalog(toy_kg, toy_log):
    return build_catalog(toy_kg, toy_log.items, depth=1)


@pytest.fixture
def pink_dataset():
    return UserEntropyDataset(
        "Pink",
        frozenset({"Rijksmuseum", "Vondelpark"}),
        frozenset({"Piazza Navona", "Central Park"}),
    )


def feat(pred, obj):
    chain = tuple(pred.split("/"))
    return Feature(chain, obj)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
