import contextlib
import time

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, with its runtime budget."""

    @contextlib.contextmanager
    def record(number, title, budget):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            ACCEPTANCE_LINES.append(f"criterion {number} FAIL ({elapsed:.2f}s) {title}: {exc!s:.120}")
            raise
        elapsed = time.perf_counter() - start
        ok = elapsed < budget
        ACCEPTANCE_LINES.append(
            f"criterion {number} {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s of {budget:g}s) {title}")
        assert ok, f"criterion {number} took {elapsed:.2f}s, budget {budget}s"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
