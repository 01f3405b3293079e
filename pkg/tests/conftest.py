import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from asynctrig.presets import preset_config
from asynctrig.simulation import prepare


@pytest.fixture(scope="session")
def prepared_offline_unperturbed():
    """Offline-unperturbed preset pipeline, built once; returns build seconds too."""
    cfg = preset_config("offline-unperturbed")
    t0 = time.monotonic()
    prep = prepare(cfg)
    return cfg, prep, time.monotonic() - t0


@pytest.fixture(scope="session")
def prepared_offline_perturbed():
    cfg = preset_config("offline-perturbed")
    t0 = time.monotonic()
    prep = prepare(cfg)
    return cfg, prep, time.monotonic() - t0
