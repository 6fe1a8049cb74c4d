import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import IncompleteTraceError
from app.mac.simulator import FrameOutcome
from app.services.metrics import MetricsReport, RunMetrics, SimulationTrace, WindowMetrics, compute_metrics

CURRENTS = {"sleep": 10.0, "idle": 20.0, "rx": 120.0, "tx": 120.0, "sense": 40.0, "actuate": 150.0}


def frame(index, valves, max_level, violation, transmissions, controls):
    times = {state: 0.0 for state in CURRENTS}
    times.update(sleep=0.9, tx=0.1)
    return FrameOutcome(
        index=index,
        start_s=float(index),
        end_s=float(index + 1),
        max_level=max_level,
        valves=np.array(valves, dtype=float),
        command=np.array(valves, dtype=float),
        mode=2,
        violation=violation,
        state_transmissions=transmissions,
        control_messages=controls,
        node_times={j: dict(times) for j in (1, 2, 3)},
    )


@pytest.fixture
def trace():
    return SimulationTrace(
        frames=[
            frame(0, [360, 360, 360], 0.05, True, 3, 3),
            frame(1, [360, 350, 360], 0.07, False, 1, 0),
            frame(2, [0, 0, 0], 0.065, True, 3, 3),
        ],
        initial_valves=np.zeros(3),
        n_nodes=3,
        currents_mA=CURRENTS,
    )


def test_total_window(trace):
    run = compute_metrics(trace, t_sm=2.0, t_end=3.0)
    total = run.total
    assert total.water_level_overshoot == pytest.approx(0.07)
    assert total.switching_time == 2.0
    assert total.actuations == 7
    assert total.valve_movement == pytest.approx(2160.0)
    assert total.violations == 2
    assert total.control_signals == 6
    assert total.state_transmissions == 7
    assert total.control_messages == 6
    assert total.sleep_time == pytest.approx(3 * 3 * 0.9)
    assert total.discharge_mAh == pytest.approx(9 * (0.9 * 10.0 + 0.1 * 120.0) / 3600.0)
    assert total.discharge_deep_sleep_mAh == pytest.approx(9 * 0.1 * 120.0 / 3600.0)


def test_window_until_switch(trace):
    until = compute_metrics(trace, t_sm=2.0, t_end=3.0).until_switch
    assert until.actuations == 4
    assert until.valve_movement == pytest.approx(1090.0)
    assert until.violations == 1
    assert until.state_transmissions == 4
    assert until.water_level_overshoot == pytest.approx(0.07)


def test_without_switch_windows_coincide(trace):
    run = compute_metrics(trace, t_sm=None, t_end=3.0)
    assert run.t_sm is None
    assert run.total == run.until_switch
    assert run.total.switching_time == 3.0


def test_incomplete_trace(trace):
    with pytest.raises(IncompleteTraceError):
        compute_metrics(trace, t_sm=None, t_end=5.0)
    with pytest.raises(IncompleteTraceError):
        compute_metrics(SimulationTrace(frames=[], initial_valves=np.zeros(3), n_nodes=3), None, 1.0)


def test_report_mean_and_validation(trace):
    runs = [compute_metrics(trace, 2.0, 3.0, 0), compute_metrics(trace, None, 3.0, 1)]
    report = MetricsReport.aggregate("TTC", 1.0, 3.0, runs)
    assert report.mean_total.switching_time == pytest.approx(2.5)
    assert report.mean_until_switch.actuations == pytest.approx((4 + 7) / 2)
    with pytest.raises(ValidationError):
        MetricsReport(strategy="TTC", period=1.0, t_end=1.0, runs=[RunMetrics(
            t_sm=2.0, total=WindowMetrics(), until_switch=WindowMetrics())])


def test_failed_report():
    report = MetricsReport.failed("PSDETC", 0.3, 110.0, "кадр короче минимума", {"sigma": 0.2})
    assert report.status == "failed"
    assert report.runs == []
    assert report.error == "кадр короче минимума"


def test_mean_of_nothing():
    assert WindowMetrics.mean([]) == WindowMetrics()
