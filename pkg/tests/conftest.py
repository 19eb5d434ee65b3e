import pytest

from colltune.params import synth_params

US = 1e-6

# every power of two up to 16 MiB, so sampled and interpolated sizes both occur
POW2_SAMPLES = [1 << i for i in range(25)]

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def affine():
    """L = 50 us, g(m) = 20 us + 0.08 us/byte."""
    return synth_params(20 * US, 12.5e6, 50 * US, POW2_SAMPLES + [250, 500, 1000], label="affine")


@pytest.fixture
def overhead_dominated():
    """g(m) = 100 us + 0.001 us/byte, L = 50 us."""
    return synth_params(100 * US, 1e9, 50 * US, POW2_SAMPLES, label="overhead")


@pytest.fixture
def fast_ethernet():
    return synth_params(3.0e-5, 1.25e7, 5.0e-5, [1 << i for i in range(23)], label="fast-ethernet-100")


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    """Lines collected here are printed in the terminal summary."""
    return pytestconfig.stash[_ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
