import numpy as np
import pytest

from app.core.plant import DemandSchedule, NoiseConfig, SettleTrigger
from app.services.loop import ControlLoop

NIGHT = [[0.0, 1e-4, 1e-4, 1e-4]]


@pytest.fixture
def balanced(model, gains):
    """Уровни на опорных, клапаны на равновесных открытиях: ξ не меняется"""
    def factory(settle=None, demand=NIGHT) -> ControlLoop:
        return ControlLoop(
            model=model,
            gains=gains,
            noise=NoiseConfig(sensor_std=0.0),
            demand=DemandSchedule(demand, n=model.n),
            xi0=np.zeros(model.n),
            valves0=model.alpha_bar_2.copy(),
            settle=settle,
        )
    return factory


def test_demand_waits_for_settled_levels(balanced):
    loop = balanced(settle=SettleTrigger(band=0.003, samples=3))
    for t in (1.0, 2.0):
        loop.sample()
        loop.advance(t)
        assert loop.settled_at is None
        assert np.array_equal(loop.state.xi, np.zeros(3))

    loop.sample()
    assert loop.settled_at == pytest.approx(2.0)
    loop.advance(3.0)
    assert np.allclose(loop.state.xi, 1e-4, rtol=0, atol=1e-15)


def test_demand_by_time_ignores_levels(balanced):
    loop = balanced(demand=[[0.5, 1e-4, 1e-4, 1e-4]])
    loop.sample()
    loop.advance(1.0)
    assert loop.settled_at is None
    assert np.allclose(loop.state.xi, 0.5e-4, rtol=0, atol=1e-15)


def test_settle_counts_consecutive_samples():
    trigger = SettleTrigger(band=0.003, samples=3)
    inside, outside = np.array([0.001, -0.002, 0.0]), np.array([0.001, -0.004, 0.0])
    assert not trigger.update(inside)
    assert not trigger.update(inside)
    assert not trigger.update(outside)
    assert trigger.count == 0
    assert not trigger.update(inside)
    assert not trigger.update(inside)
    assert trigger.update(inside)


def test_settle_band_edge():
    trigger = SettleTrigger(band=0.003, samples=1)
    assert trigger.update(np.array([0.003, -0.003, 0.0]))
