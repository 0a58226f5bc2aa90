from pathlib import Path

import pytest

from grangerseq.model import VarModel

DATA = Path(__file__).parent / "data"

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def toy():
    return VarModel.toy(0.25)


@pytest.fixture
def k2_model():
    return VarModel(
        K=2,
        a_uu=[0.5 + 0.2j, -0.3],
        a_uv=[0.4 - 0.1j, 0.2j],
        a_vv=[0.6, -0.2 + 0.1j],
        sigma2_eta_u=1.0,
        sigma2_eta_v=2.0,
    )


@pytest.fixture
def pair_file():
    return DATA / "pair_synthetic.txt"


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion, shown in the terminal summary."""

    def _report(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
