import numpy as np
import pytest

from jrctoolkit.array import ArrayGeometry
from jrctoolkit.cli import bundled_scenario, load_scenario_file
from jrctoolkit.scenario import Scenario, Target
from jrctoolkit.waveform import FmcwCarrier, make_envelope

_ACCEPTANCE = {}


def record(number: int, name: str, ok: bool, detail: str) -> str:
    """Store and print one PASS/FAIL line for the acceptance summary."""
    line = f"criterion {number} [{name}]: {'PASS' if ok else 'FAIL'} :: {detail}"
    _ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])


@pytest.fixture(scope="session")
def two_target():
    """Bundled two-target scenario (512 chirps)."""
    return load_scenario_file(bundled_scenario()).scenario


@pytest.fixture(scope="session")
def two_target_64(two_target):
    return two_target.replace(num_pulses=64)


@pytest.fixture
def small_scenario():
    env = make_envelope("gaussian", 100e-6, 4e6)
    car = FmcwCarrier(24e9 - 50e6, 100e6, 100e-6)
    tgt = Target(range=30.0, velocity=2.0, azimuth=np.pi / 2 + 0.2, rcs=1.0)
    return Scenario(car, env, ArrayGeometry.ula(4, 0.00625), [tgt], num_pulses=8,
                    tx_power=1e10, noise_variance=1.0)
