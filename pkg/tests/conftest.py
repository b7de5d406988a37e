import pytest

from porobound.tensor import DEFAULT_MATERIALS, CompositeSpec, Loading

MAT1, MAT2 = DEFAULT_MATERIALS

_acceptance_lines: list[str] = []


def make(m1, m2, rho, mats=DEFAULT_MATERIALS):
    return CompositeSpec(mats[0], mats[1], m1, m2, Loading(rho))


@pytest.fixture
def record():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def _record(label: str, ok: bool, detail: str = "") -> None:
        _acceptance_lines.append(f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else ""))
    return _record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
