import numpy as np
import pytest

from cmamem import EngineParams, MemoryEngine, MemoryFragment, MemoryStore

ACCEPTANCE_LINES: list[str] = []


def unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_store(rng: np.random.Generator, n_nodes: int, n_edges: int, dim: int = 16,
                 params: EngineParams | None = None, kinds=("semantic", "associative")) -> MemoryStore:
    """Store with random unit embeddings and random weighted edges."""
    params = params or EngineParams(dim=dim)
    store = MemoryStore(params)
    ids = []
    for i in range(n_nodes):
        frag = MemoryFragment(content=f"node {i}", embedding=unit(rng, params.dim), created_at=float(i))
        ids.append(store.add_fragment(frag))
    seen = set()
    attempts = 0
    while len(seen) < n_edges and attempts < 20 * n_edges + 100:
        attempts += 1
        a, b = (int(x) for x in rng.choice(n_nodes, size=2, replace=False))
        kind = kinds[int(rng.integers(len(kinds)))]
        key = (min(a, b), max(a, b), kind)
        if key in seen:
            continue
        seen.add(key)
        store.connect(ids[key[0]], ids[key[1]], kind, round(float(rng.uniform(0.05, 1.0)), 6))
    return store


@pytest.fixture
def engine() -> MemoryEngine:
    return MemoryEngine()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
