from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "grl" / "data"


def load_fixture(name: str):
    path = DATA_DIR / name
    if not path.exists():
        return None
    values = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0]
        values.extend(float(tok) for tok in line.replace(",", " ").split())
    return np.array(values)


@pytest.fixture(scope="session")
def leukaemia():
    x = load_fixture("leukaemia.txt")
    if x is None:
        pytest.skip("leukaemia fixture absent")
    return x


@pytest.fixture(scope="session")
def epicenter():
    x = load_fixture("epicenter.txt")
    if x is None:
        pytest.skip("epicenter fixture absent")
    return x


# acceptance criteria report lines, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
