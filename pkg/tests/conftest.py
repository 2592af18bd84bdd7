import pytest

from telescopes.instances import build_alt, build_el


@pytest.fixture(scope="session")
def alt52():
    return build_alt(5, 2)


@pytest.fixture(scope="session")
def el42():
    return build_el(4, 2, max_level=5)
