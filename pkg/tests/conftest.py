import pytest

from tontine.mortality import MortalityBasis
from tontine.quadrature import EconomicBasis


@pytest.fixture
def payout_basis():
    return MortalityBasis(m=88.72, b=10.0, x=65.0)


@pytest.fixture
def loading_basis():
    return MortalityBasis(m=87.25, b=9.5, x=60.0)


@pytest.fixture
def econ4():
    return EconomicBasis(0.04)


@pytest.fixture
def econ3():
    return EconomicBasis(0.03)
