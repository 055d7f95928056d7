import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nlab.primes import build_covering, build_tables  # noqa: E402
from nlab.svfun import SvFunction  # noqa: E402


@pytest.fixture(scope="session")
def small():
    return build_tables(10_000)


@pytest.fixture(scope="session")
def t6():
    return build_tables(10**6)


@pytest.fixture(scope="session")
def t7():
    """Tables reaching the first prime past 10^7 (f is defined up to 10^7)."""
    return build_covering(10**7)


@pytest.fixture(scope="session")
def t8():
    return build_covering(10**8)


@pytest.fixture(scope="session")
def fn7(t7):
    return SvFunction(t7)


@pytest.fixture(scope="session")
def fn_small(small):
    return SvFunction(small)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Print and record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def emit(tag: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
