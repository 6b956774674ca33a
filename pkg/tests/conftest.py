import pytest

from robinaudit.primes import PrimeTable


@pytest.fixture(scope="session")
def table_1e5():
    return PrimeTable.build(10**5)


@pytest.fixture(scope="session")
def table_1e6():
    return PrimeTable.build(10**6)


@pytest.fixture(scope="session")
def table_1e7():
    return PrimeTable.build(10**7)
