import pytest
from hypothesis import settings

from foelner_rank import QQ, make_group, parse_element

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def Z1():
    return make_group("Z^1")


@pytest.fixture(scope="session")
def Z2():
    return make_group("Z^2")


@pytest.fixture(scope="session")
def ZC():
    return make_group("Z^1 x C2")


@pytest.fixture(scope="session")
def H3():
    return make_group("H3")


def el(g, text, field=QQ):
    return parse_element(g, field, text)
