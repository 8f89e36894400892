import functools
import warnings

import pytest

from ptconsensus import load_bundled, run
from ptconsensus.engine import SimConfig
from ptconsensus.protocols import ConfigWarning


@functools.lru_cache(maxsize=None)
def _bundled_run(name, **sim_overrides):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfigWarning)
        scn = load_bundled(name)
    sim = scn.sim
    if sim_overrides:
        from dataclasses import replace

        sim = replace(sim, **sim_overrides)
    return scn, run(scn, sim)


@pytest.fixture(scope="session")
def bundled_run():
    """``bundled_run(name, **SimConfig overrides) -> (scenario, result)``, cached per session."""
    return _bundled_run


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfigWarning)
        yield


def fast_sim(**kw):
    kw.setdefault("dt", 1e-3)
    return SimConfig(**kw)
