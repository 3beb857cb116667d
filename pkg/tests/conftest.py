import pytest

from decent.crypto.group import SeededRng, get_group

# (number, name, passed, detail) for every acceptance criterion that ran
CRITERIA: list = []


@pytest.fixture
def rng():
    return SeededRng("tests")


@pytest.fixture(scope="session")
def toy():
    return get_group("toy-256-64")


@pytest.fixture(scope="session")
def big():
    return get_group()


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(CRITERIA):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {name} ({detail})")
