import json
import logging

import numpy as np
import pytest

from app.core.triggers import TriggerPolicy, build_strategy
from app.errors import ConfigurationError
from app.mac.energy import EnergyLedger, RadioModel
from app.mac.schedule import SlotTimings, build_schedule, packet_sizes
from app.mac.simulator import MacSimulator


class Harness:
    def __init__(self, settings, make_loop, kind, period=1.0, loss=0.0, record=False, seed=0, **policy):
        self.policy = TriggerPolicy(kind=kind, T=period, **policy)
        schedule = build_schedule(self.policy.protocol, 3, SlotTimings.from_settings(settings), period * 1000.0)
        radio = RadioModel(loss_probability=loss, currents_mA=dict(settings.current_draws))
        self.sim = MacSimulator(schedule, radio, packet_sizes(settings), sense_ms=2.0, actuate_ms=20.0,
                                record_trace=record)
        self.strategy = build_strategy(self.policy, 3)
        self.loop = make_loop()
        self.ledger = EnergyLedger(currents_mA=dict(radio.currents_mA))
        self.rng = np.random.default_rng(seed)

    def frame(self, index=0):
        return self.sim.simulate_superframe(self.strategy, self.loop, self.ledger, self.rng, index)

    def kinds(self):
        return [record.kind for record in self.sim.trace if record.outcome != "drop"]


@pytest.mark.parametrize("kind", ["TTC", "PETC", "PSDETC", "PADETCabs", "PADETCrel"])
def test_first_frame_updates_every_node(settings, make_loop, kind):
    harness = Harness(settings, make_loop, kind)
    outcome = harness.frame()
    assert outcome.violation
    assert outcome.state_transmissions == 3
    assert outcome.control_messages == 3
    assert outcome.actuations == 3
    assert outcome.drops == 0
    assert np.array_equal(outcome.valves, [360.0, 360.0, 360.0])


def test_ttc_message_counts(settings, make_loop):
    harness = Harness(settings, make_loop, "TTC", record=True)
    harness.frame()
    kinds = harness.kinds()
    assert kinds.count("state_x") == 3
    assert kinds.count("request_r") == 3
    assert kinds.count("control_u") == 3
    assert "violation_v" not in kinds


def test_sdc_message_counts(settings, make_loop):
    harness = Harness(settings, make_loop, "PSDETC", record=True)
    harness.frame()
    kinds = harness.kinds()
    assert kinds.count("violation_v") == 3
    assert kinds.count("request_a") == 3
    assert kinds.count("state_x") == 3
    assert kinds.count("request_r") == 3


def test_sdc_quiet_frame_sleeps_after_answer(settings, make_loop):
    harness = Harness(settings, make_loop, "PSDETC", record=True)
    harness.strategy.node_xi_hat = list(harness.loop.state.xi)
    outcome = harness.frame()
    kinds = harness.kinds()
    assert not outcome.violation
    assert outcome.state_transmissions == 0
    assert outcome.control_messages == 0
    assert kinds.count("request_a") == 3
    assert "request_r" not in kinds and "state_x" not in kinds


def test_adc_quiet_frame_only_polls_controller(settings, make_loop):
    harness = Harness(settings, make_loop, "PADETCabs", record=True, eta=1.0)
    harness.strategy.node_xi_hat = list(harness.loop.state.xi)
    outcome = harness.frame()
    kinds = harness.kinds()
    assert not outcome.violation
    assert outcome.state_transmissions == 0
    assert kinds.count("request_r") == 3
    assert "state_x" not in kinds and "increment_m" not in kinds
    assert outcome.actuations == 0


def test_quiet_frame_sleeps_more(settings, make_loop):
    busy = Harness(settings, make_loop, "TTC").frame()
    quiet_harness = Harness(settings, make_loop, "PADETCabs", eta=1.0)
    quiet_harness.strategy.node_xi_hat = list(quiet_harness.loop.state.xi)
    quiet = quiet_harness.frame()
    assert quiet.sleep_s() > busy.sleep_s()
    assert quiet.discharge_mAh(settings.current_draws) < busy.discharge_mAh(settings.current_draws)


def test_node_time_breakdown(settings, make_loop):
    outcome = Harness(settings, make_loop, "TTC").frame()
    times = outcome.node_times[1]
    assert times["sense"] == pytest.approx(0.002)
    assert times["tx"] == pytest.approx(0.001184)
    assert times["rx"] == pytest.approx(0.018816)
    assert times["actuate"] == pytest.approx(0.020)
    assert times["idle"] == pytest.approx(0.090)
    assert times["sleep"] == pytest.approx(0.868)


@pytest.mark.parametrize("kind", ["TTC", "PSDETC", "PADETCrel"])
def test_time_is_conserved(settings, make_loop, kind):
    harness = Harness(settings, make_loop, kind, period=0.6, loss=0.3, seed=5)
    frames = [harness.frame(i) for i in range(10)]
    for outcome in frames:
        for times in outcome.node_times.values():
            assert sum(times.values()) == pytest.approx(0.6, abs=1e-12)
            assert all(value >= 0 for value in times.values())
    for node in (1, 2, 3):
        assert harness.ledger.total_time(node) == pytest.approx(6.0, abs=1e-9)


def test_attempts_stay_inside_usable_windows(settings, make_loop):
    harness = Harness(settings, make_loop, "PSDETC", loss=0.5, record=True, seed=3)
    for i in range(5):
        harness.frame(i)
    schedule = harness.sim.schedule
    for record in harness.sim.trace:
        if record.outcome == "drop":
            continue
        rel = record.time_ms % schedule.frame_length_ms
        windows = [(s.start_ms, s.usable_end_ms) for s in schedule.node_slots(record.node)]
        assert any(start - 1e-9 <= rel <= end + 1e-9 for start, end in windows)


def test_losses_are_counted_and_logged(settings, make_loop, caplog):
    harness = Harness(settings, make_loop, "TTC", loss=0.9, seed=1)
    with caplog.at_level(logging.WARNING, logger="app.mac.simulator"):
        drops = sum(harness.frame(i).drops for i in range(5))
    assert drops > 0
    assert any("потеряно" in message for message in caplog.messages)


def test_same_seed_same_frames(settings, make_loop):
    a = Harness(settings, make_loop, "PADETCabs", loss=0.4, seed=9)
    b = Harness(settings, make_loop, "PADETCabs", loss=0.4, seed=9)
    for i in range(5):
        fa, fb = a.frame(i), b.frame(i)
        assert fa.drops == fb.drops
        assert fa.state_transmissions == fb.state_transmissions
        assert np.array_equal(fa.valves, fb.valves)


def test_protocol_mismatch(settings, make_loop):
    harness = Harness(settings, make_loop, "TTC")
    wrong = build_strategy(TriggerPolicy(kind="PSDETC"), 3)
    with pytest.raises(ConfigurationError):
        harness.sim.simulate_superframe(wrong, harness.loop, harness.ledger, harness.rng)


def test_export_trace(settings, make_loop, tmp_path):
    harness = Harness(settings, make_loop, "PADETCrel", record=True)
    harness.frame(0)
    harness.frame(1)
    path = tmp_path / "trace" / "frames.jsonl"
    count = harness.sim.export_trace(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert count == len(lines) > 0
    first = json.loads(lines[0])
    assert set(first) == {"time_ms", "node", "kind", "size_bytes", "outcome"}
