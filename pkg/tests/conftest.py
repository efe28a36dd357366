import numpy as np
import pytest

from swipt_ps.config import PRESETS
from swipt_ps.model import ChannelRealization, SystemParams

_ACCEPTANCE_LINES: list[str] = []


def preset_channel(name: str) -> ChannelRealization:
    mags, phases = zip(*PRESETS[name])
    return ChannelRealization.from_polar(mags, phases)


def random_channel(rng, K=None, lo=0.05, hi=0.6) -> ChannelRealization:
    K = K or int(rng.integers(1, 6))
    return ChannelRealization(rng.uniform(lo, hi, K) * np.exp(1j * rng.uniform(0, 2 * np.pi, K)))


@pytest.fixture
def params():
    return SystemParams(transmit_power=2.0, antenna_noise_var=0.1,
                        processing_noise_var=0.1, conversion_efficiency=1.0)


@pytest.fixture
def h1():
    return preset_channel("h1")


@pytest.fixture
def h2():
    return preset_channel("h2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
