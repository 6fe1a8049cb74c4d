import os
import tempfile

# База для HTTP-тестов создаётся во временном каталоге до импорта настроек
os.environ.setdefault("DATABASE_URL", f"sqlite+aiosqlite:///{tempfile.mkdtemp()}/waterbox-test.db")

import numpy as np
import pytest

from app.config import Settings
from app.core.control import ControllerGains
from app.core.plant import DemandSchedule, NoiseConfig, PlantModel
from app.services.loop import ControlLoop


@pytest.fixture
def settings() -> Settings:
    return Settings(_env_file=None)


@pytest.fixture
def model(settings) -> PlantModel:
    return PlantModel.from_settings(settings)


@pytest.fixture
def gains(settings, model) -> ControllerGains:
    return ControllerGains.from_settings(settings, model)


@pytest.fixture
def make_loop(model, gains):
    def factory(sensor_std: float = 0.0, seed: int = 0, demand=None, xi0=None) -> ControlLoop:
        return ControlLoop(
            model=model,
            gains=gains,
            noise=NoiseConfig(sensor_std=sensor_std, seed=seed),
            demand=DemandSchedule(demand, n=model.n),
            xi0=None if xi0 is None else np.asarray(xi0, dtype=float),
        )
    return factory
