import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dirac1d import SimulationDomain, two_electron_superposition  # noqa: E402
from dirac1d.fock import FockState  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def domain():
    return SimulationDomain(2 * np.pi, 256, 16)


@pytest.fixture
def two_mode():
    return two_electron_superposition(2, 1)


@pytest.fixture
def mixed_state():
    """Electrons and positrons of both chiralities plus a pair-coherent term."""
    return FockState.from_terms([
        (1.0, [], []),
        (0.6 - 0.3j, [2], [-3]),
        (0.4j, [1, -2], []),
        (0.5, [3], [1]),
    ])


@pytest.fixture
def configs_dir():
    return ROOT / "configs"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
