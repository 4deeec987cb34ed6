import pytest

from confined_growth.schreier import (
    cyclic_quotient,
    from_abelianization,
    from_free_product,
    trivial_subgroup,
)
from confined_growth.words import Alphabet


@pytest.fixture
def F2():
    return Alphabet(2)


@pytest.fixture
def tree(F2):
    return trivial_subgroup(F2)


@pytest.fixture
def zkernel(F2):
    """Kernel of F_2 -> Z, a -> 1, b -> 0."""
    return from_abelianization(F2, [1, 0])


@pytest.fixture
def z2z3(F2):
    """Kernel of F_2 -> Z/2 * Z/3."""
    return from_free_product(F2, [2, 3])


@pytest.fixture
def zmod2(F2):
    return cyclic_quotient(F2, 2)


@pytest.fixture
def zmod3(F2):
    return cyclic_quotient(F2, 3)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for name in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[name])
