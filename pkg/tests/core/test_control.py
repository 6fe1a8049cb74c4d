import numpy as np
import pytest

from app.core.control import ControllerGains, ModeAutomaton, compute_input, saturate_quantize, update_mode
from app.errors import ArgumentError, ConfigurationError


def test_saturate_quantize():
    s = np.array([-5.0, 0.0, 9.9, 10.0, 355.0, 400.0])
    assert np.array_equal(saturate_quantize(s), [0.0, 0.0, 0.0, 10.0, 350.0, 360.0])


def test_quantized_values_are_on_grid():
    rng = np.random.default_rng(0)
    values = saturate_quantize(rng.uniform(-100, 500, size=1000))
    assert np.all(values % 10 == 0)
    assert values.min() >= 0 and values.max() <= 360


def test_equilibrium_input(gains):
    assert np.array_equal(compute_input(np.zeros(3), 2, gains), [80.0, 60.0, 70.0])
    assert np.array_equal(compute_input(np.zeros(3), 1, gains), [360.0, 360.0, 360.0])


def test_empty_tanks_open_valves_fully(gains):
    assert np.array_equal(compute_input(np.full(3, -0.06), 2, gains), [360.0, 360.0, 360.0])


def test_full_tanks_close_valves(gains):
    assert np.array_equal(compute_input(np.full(3, 0.05), 2, gains), [0.0, 0.0, 0.0])


def test_unknown_mode(gains):
    with pytest.raises(ArgumentError):
        compute_input(np.zeros(3), 0, gains)


def test_default_gains_are_hurwitz(gains, model):
    gains.check_hurwitz(model)


def test_destabilizing_gains_rejected(gains, model):
    bad = ControllerGains(K1=-gains.K1, K2=gains.K2, alpha_bar_1=gains.alpha_bar_1, alpha_bar_2=gains.alpha_bar_2)
    with pytest.raises(ConfigurationError):
        bad.check_hurwitz(model)


def test_switch_to_low_power_mode(model):
    automaton = ModeAutomaton(mode=2)
    update_mode(automaton, np.zeros(3), np.array([50.0, 50.0, 50.0]), model, time=12.0)
    assert automaton.mode == 1
    assert automaton.t_sm == 12.0
    assert automaton.switch_kinds == ["2->1"]


def test_no_switch_with_large_valve_sum(model):
    automaton = ModeAutomaton(mode=2)
    update_mode(automaton, np.zeros(3), np.array([80.0, 60.0, 70.0]), model, time=1.0)
    assert automaton.mode == 2
    assert automaton.t_sm is None


def test_switch_back_when_tank_runs_low(model):
    automaton = ModeAutomaton(mode=1)
    update_mode(automaton, np.array([0.0, -0.03, 0.0]), None, model, time=5.0)
    assert automaton.mode == 2
    assert automaton.switch_kinds == ["1->2"]
    assert automaton.t_sm is None


def test_one_transition_per_call(model):
    automaton = ModeAutomaton(mode=2)
    update_mode(automaton, np.full(3, -0.05), np.zeros(3), model, time=1.0)
    assert automaton.mode == 1
    assert automaton.switch_count == 1


def test_switch_times_strictly_increase(model):
    automaton = ModeAutomaton(mode=2)
    update_mode(automaton, np.zeros(3), np.zeros(3), model, time=3.0)
    with pytest.raises(ArgumentError):
        update_mode(automaton, np.full(3, -0.05), None, model, time=3.0)
