import numpy as np
import pytest

from memdd import kernels

ACCEPTANCE_RESULTS = {}


def record_criterion(number: int, name: str, ok, detail: str) -> None:
    """Accumulate sub-check outcomes (True, False or "SKIP") for one criterion."""
    entry = ACCEPTANCE_RESULTS.setdefault(number, [name, [], []])
    entry[1].append(ok)
    entry[2].append(detail)


def _status(outcomes) -> str:
    if any(o != "SKIP" and not o for o in outcomes):
        return "FAIL"
    if all(o == "SKIP" for o in outcomes):
        return "SKIP"
    return "PARTIAL" if "SKIP" in outcomes else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        name, outcomes, details = ACCEPTANCE_RESULTS[number]
        status = _status(outcomes)
        shown = [d for d in details if d]
        quiet = len(details) - len(shown)
        if quiet:
            shown.append(f"{quiet} further checks passed")
        terminalreporter.write_line(f"[{status}] {number}. {name}: " + "; ".join(shown))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]
