import pytest

from gsanatomy.design import SequentialDesign

# mpmath (30 digits): constant boundary spending 0.025 over two equal stages
POCOCK_C = 2.17827209437573407


@pytest.fixture
def pocock_rounded():
    """Two single-observation stages with the rounded constant boundary 2.18."""
    return SequentialDesign([1, 1], [2.18, 2.18])


@pytest.fixture
def pocock_exact():
    return SequentialDesign([1, 1], [POCOCK_C, POCOCK_C])


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, passed: bool, detail: str) -> bool:
        store[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for number in sorted(store):
            terminalreporter.write_line(store[number])
