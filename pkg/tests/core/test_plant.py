import numpy as np
import pytest

from app.core.plant import DemandSchedule, NoiseConfig, PlantModel, PlantState, SettleTrigger, sense, step
from app.errors import ArgumentError, ConfigurationError


def scalar_model(a: float = 0.0) -> PlantModel:
    return PlantModel(
        A=np.array([[a]]),
        B1=np.array([[1.0]]),
        B2=np.array([[2.0]]),
        alpha_bar_1=np.array([0.0]),
        alpha_bar_2=np.array([1.0]),
        h_ref=np.array([10.0]),
        h_low=np.array([5.0]),
    )


def test_step_is_exact_for_constant_input(model):
    state = PlantState(xi=np.array([-0.01, 0.0, 0.005]), mode=2)
    v = np.array([100.0, 50.0, 70.0])
    new = step(state, v, 0.37, model)
    expected = state.xi + model.B2 @ (v - model.alpha_bar_2) * 0.37
    assert np.allclose(new.xi, expected, rtol=0, atol=1e-15)
    assert new.time == pytest.approx(0.37)
    assert new.mode == 2


def test_step_splits_consistently(model):
    state = PlantState(xi=np.array([-0.02, -0.01, 0.0]), mode=1)
    v = np.array([300.0, 200.0, 100.0])
    once = step(state, v, 1.0, model)
    twice = step(step(state, v, 0.4, model), v, 0.6, model)
    assert np.allclose(once.xi, twice.xi, atol=1e-15)


def test_step_with_disturbance(model):
    state = PlantState(xi=np.zeros(3), mode=2)
    d = np.array([1e-4, 0.0, -1e-4])
    new = step(state, model.alpha_bar_2, 2.0, model, d)
    assert np.allclose(new.xi, 2.0 * d)


def test_step_clips_to_empty_tank(model):
    state = PlantState(xi=np.array([-0.055, 0.0, 0.0]), mode=2)
    new = step(state, np.zeros(3), 100.0, model)
    assert np.all(new.xi >= -model.h_ref)
    assert new.xi[0] == pytest.approx(-model.h_ref[0])


def test_step_with_nonzero_state_matrix():
    model = scalar_model(a=-1.0)
    new = step(PlantState(xi=np.array([1.0]), mode=1), np.array([0.0]), 1.0, model)
    assert new.xi[0] == pytest.approx(np.exp(-1.0))


def test_step_rejects_nonpositive_dt(model):
    with pytest.raises(ArgumentError):
        step(PlantState(xi=np.zeros(3)), np.zeros(3), 0.0, model)


def test_state_rejects_unknown_mode():
    with pytest.raises(ArgumentError):
        PlantState(xi=np.zeros(3), mode=3)


def test_model_validation():
    with pytest.raises(ConfigurationError):
        PlantModel(
            A=np.zeros((1, 1)), B1=np.eye(1), B2=np.eye(1),
            alpha_bar_1=np.zeros(1), alpha_bar_2=np.zeros(1),
            h_ref=np.array([0.03]), h_low=np.array([0.06]),
        )
    with pytest.raises(ConfigurationError):
        PlantModel(
            A=np.zeros((1, 1)), B1=np.zeros((1, 1)), B2=np.eye(1),
            alpha_bar_1=np.zeros(1), alpha_bar_2=np.zeros(1),
            h_ref=np.array([0.06]), h_low=np.array([0.03]),
        )


def test_levels(model):
    state = PlantState(xi=np.array([-0.06, 0.0, 0.01]))
    assert np.allclose(state.levels(model), [0.0, 0.06, 0.07])


def test_noise_is_reproducible():
    a = NoiseConfig(sensor_std=0.0005, seed=3).draw(5)
    b = NoiseConfig(sensor_std=0.0005, seed=3).draw(5)
    c = NoiseConfig(sensor_std=0.0005, seed=4).draw(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sense_without_noise_is_exact():
    state = PlantState(xi=np.array([0.001, -0.002, 0.0]))
    assert np.array_equal(sense(state, NoiseConfig(sensor_std=0.0)), state.xi)


def test_sense_noise_statistics(settings):
    state = PlantState(xi=np.zeros(100_000))
    error = sense(state, NoiseConfig(sensor_std=settings.SENSOR_STD, seed=12))
    assert abs(error.mean()) < 1e-5
    assert error.std() == pytest.approx(0.0005, rel=0.02)


def test_negative_noise_rejected():
    with pytest.raises(ArgumentError):
        NoiseConfig(sensor_std=-1.0)


def test_demand_schedule():
    demand = DemandSchedule([[70.0, 1.0, 2.0, 3.0], [10.0, 0.5, 0.5, 0.5]], n=3)
    assert np.array_equal(demand.at(0.0), np.zeros(3))
    assert np.array_equal(demand.at(10.0), [0.5, 0.5, 0.5])
    assert np.array_equal(demand.at(80.0), [1.0, 2.0, 3.0])
    assert demand.breakpoints(0.0, 70.0) == [10.0]
    assert demand.breakpoints(10.0, 71.0) == [70.0]


def test_demand_schedule_dimension():
    with pytest.raises(ConfigurationError):
        DemandSchedule([[1.0, 0.1]], n=3)


def test_demand_schedule_shifted():
    demand = DemandSchedule([[0.0, 1.0, 1.0, 1.0], [5.0, 2.0, 2.0, 2.0]], n=3).shifted(40.0)
    assert np.array_equal(demand.at(39.9), np.zeros(3))
    assert np.array_equal(demand.at(40.0), [1.0, 1.0, 1.0])
    assert np.array_equal(demand.at(45.0), [2.0, 2.0, 2.0])
    assert demand.breakpoints(40.0, 50.0) == [45.0]


def test_settle_trigger_validation():
    with pytest.raises(ConfigurationError):
        SettleTrigger(band=0.0, samples=3)
    with pytest.raises(ConfigurationError):
        SettleTrigger(band=0.003, samples=0)
