"""Pytest configuration and shared fixtures for adaptivereadout tests."""

import pytest
from pathlib import Path
from typing import Callable, Generator
import numpy as np

from adaptivereadout.core.types import ExpandedHmm, Hmm
from adaptivereadout.models.expansion import expand_rate_model
from adaptivereadout.models.fluorescence import RateModel
from adaptivereadout.models.three_state import three_state_expanded


@pytest.fixture
def temp_output_dir(tmp_path: Path) -> Generator[Path, None, None]:
    """Create and return a temporary output directory."""
    output_dir = tmp_path / "output"
    output_dir.mkdir(exist_ok=True)
    yield output_dir


@pytest.fixture
def three_state() -> ExpandedHmm:
    """Three-state model with a = b = 0.05."""
    return three_state_expanded(0.05, 0.05)


@pytest.fixture
def two_state() -> ExpandedHmm:
    """Noisy two-level model without output memory, carrying a 'flip' permutation."""
    hmm = Hmm(
        trans=np.array([[0.9, 0.2], [0.1, 0.8]]),
        out=np.array([[0.8, 0.3], [0.2, 0.7]]),
        prior=np.array([0.5, 0.5]),
    )
    return ExpandedHmm.trivial(hmm, {"flip": (1, 0)})


@pytest.fixture
def small_rate_model() -> RateModel:
    """Bright level 0 and a dark level 1 leaking into it, 5 photon-count outputs."""
    return RateModel(
        rate_matrix=np.array([[0.0, 800.0], [0.0, -800.0]]),
        emission_rates=np.array([40000.0, 4000.0]),
        dt=50e-6,
        n_max=4,
        prior=np.array([0.5, 0.5]),
        quad_points=8,
        state_labels=("bright", "dark"),
        permutations={"tau": (1, 0)},
    )


@pytest.fixture
def small_expanded(small_rate_model: RateModel) -> ExpandedHmm:
    """Expanded form of ``small_rate_model`` (10 expanded states)."""
    return expand_rate_model(small_rate_model)


def _random_columns(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    matrix = rng.dirichlet(np.ones(rows), size=cols).T
    return matrix / matrix.sum(axis=0, keepdims=True)


@pytest.fixture
def random_model() -> Callable[..., ExpandedHmm]:
    """Factory for random plain models: random_model(seed, num_states, num_outputs)."""

    def make(seed: int, num_states: int = 3, num_outputs: int = 3) -> ExpandedHmm:
        rng = np.random.default_rng(seed)
        hmm = Hmm(
            trans=_random_columns(rng, num_states, num_states),
            out=_random_columns(rng, num_outputs, num_states),
            prior=rng.dirichlet(np.ones(num_states)),
        )
        return ExpandedHmm.trivial(hmm)

    return make


# Pytest configuration
def pytest_configure(config: pytest.Config) -> None:
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "slow: mark test as slow running")
    config.addinivalue_line("markers", "integration: mark test as integration test")
    config.addinivalue_line("markers", "benchmark: mark test as benchmark")
