from __future__ import annotations

import pytest

from dcebound.cli import bundled_config
from dcebound.scenario import load_config

NATURAL = dict(
    units="natural", lx=2.0, ly=1.0, lz=0.5, plate_mass=1.0, plate_area=1.0, plate_gamma=1.0,
    temperature=1.0, final_position=1.0, duration=10.0, noise_rate=0.5, noise_variance=1.0,
    mode_angular_frequency=1.0, folding_length=1.0, occupancy=1.0,
)


@pytest.fixture(scope="session")
def nondim():
    return load_config(bundled_config("nondimensional"))


@pytest.fixture(scope="session")
def lab():
    return load_config(bundled_config("paper_sec4"))


@pytest.fixture(scope="session")
def natural():
    """Factory for natural-unit scenarios: ``natural(noise_rate=2.0, ...)``."""
    from dcebound.scenario import validate_scenario

    def make(**changes):
        raw = dict(NATURAL)
        for key, value in changes.items():
            if value is None:
                raw.pop(key, None)
            else:
                raw[key] = value
        return validate_scenario(raw)

    return make


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _restore_mpmath_precision():
    import mpmath
    dps = mpmath.mp.dps
    yield
    mpmath.mp.dps = dps
