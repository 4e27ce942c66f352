import numpy as np
import pytest

from photonsource.experiment import ApparatusParams, simulate_run
from photonsource.hilbert import HilbertSpace
from photonsource.model import PulseSequence, SystemParams


@pytest.fixture(scope="session")
def space():
    return HilbertSpace(2)


@pytest.fixture(scope="session")
def default_run_2s():
    """Shared 2 s reference-parameter run without dark counts."""
    app = ApparatusParams(dark_count_rate=0.0)
    clicks = simulate_run(SystemParams(), PulseSequence(), app, 2.0,
                          seed=14, workers=2)
    return clicks, app


@pytest.fixture()
def params():
    return SystemParams()


@pytest.fixture()
def seq():
    return PulseSequence()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20020901)
