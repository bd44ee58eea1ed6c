import numpy as np
import pytest

from semibs.symbols import EnergyWindow, builtin


@pytest.fixture(scope="session")
def harmonic():
    return builtin("harmonic")


@pytest.fixture(scope="session")
def quartic():
    return builtin("quartic")


@pytest.fixture(scope="session")
def window():
    # chosen so no harmonic level h(2n+1), h in {0.2, 0.1, 0.05, 0.025},
    # falls exactly on a window edge
    return EnergyWindow(0.08, 1.02)


@pytest.fixture()
def rng():
    return np.random.default_rng(20230817)
