import numpy as np
import pytest

from app.models.bath import BathParams


@pytest.fixture
def fig_params() -> BathParams:
    """The N=20, alpha=0.03 bath used for the reference figures"""
    return BathParams(N=20, alpha=0.03)


@pytest.fixture
def small_params() -> BathParams:
    """Small enough for the brute-force oracle"""
    return BathParams(N=4, alpha=0.1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
