import pytest

from normex.oracle import simulate_sums


@pytest.fixture(scope="session")
def sims():
    """Memoized Monte-Carlo samples shared across the whole test session."""
    cache = {}

    def get(n, alpha, n_samples=10**6, seed=42, workers=1):
        key = (n, alpha, n_samples, seed, workers)
        if key not in cache:
            cache[key] = simulate_sums(n, alpha, n_samples, seed=seed, workers=workers)
        return cache[key]

    return get
