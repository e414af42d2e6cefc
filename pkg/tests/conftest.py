import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dvlgp.geometry import BeamGeometry, build_transform

settings.register_profile(
    "dvlgp", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("dvlgp")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def transform():
    return build_transform(BeamGeometry.from_degrees(20.0))


_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; repeated in the terminal summary."""

    def record(criterion: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        return ok

    return record


def _criterion_key(line):
    label = line.split(":")[0].split()[-1]
    digits = "".join(c for c in label if c.isdigit())
    return int(digits), label


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=_criterion_key):
            terminalreporter.write_line(line)
