import numpy as np
import pytest

from planvec.synthetic import generate_corpus

CORPUS_SEED = 20240501


@pytest.fixture(scope="session")
def corpus() -> list[np.ndarray]:
    """50 deterministic synthetic plans shared across test modules."""
    return generate_corpus(50, seed=CORPUS_SEED)
