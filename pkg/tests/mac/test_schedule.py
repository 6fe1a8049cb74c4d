import pytest

from app.config import Settings
from app.mac.schedule import PROTOCOLS, SlotTimings, build_schedule, min_interval, packet_sizes
from app.errors import ArgumentError, InfeasibleScheduleError

TIMINGS = SlotTimings()


def test_minimum_intervals_for_three_nodes():
    assert min_interval("SDCTDMA", 3, TIMINGS) == pytest.approx(564.0)
    assert min_interval("CTDMA", 3, TIMINGS) == pytest.approx(406.0)
    assert min_interval("ADCTDMA", 3, TIMINGS) == pytest.approx(406.0)


@pytest.mark.parametrize("n", range(1, 7))
def test_violation_block_cost(n):
    extra = min_interval("SDCTDMA", n, TIMINGS) - min_interval("CTDMA", n, TIMINGS)
    assert extra == pytest.approx(n * (TIMINGS.v_slot_ms + TIMINGS.guard_ms) + TIMINGS.violation_delay_ms)


@pytest.mark.parametrize("protocol", PROTOCOLS)
@pytest.mark.parametrize("n", range(1, 7))
def test_slots_never_overlap(protocol, n):
    schedule = build_schedule(protocol, n, TIMINGS)
    assert schedule.overlaps() == []
    assert schedule.required_ms <= schedule.frame_length_ms


def test_block_order_and_delays():
    schedule = build_schedule("SDCTDMA", 3, TIMINGS, frame_length_ms=1000.0)
    kinds = [slot.kind for slot in schedule.slots]
    assert kinds == ["V"] * 3 + ["X"] * 3 + ["U"] * 3
    assert schedule.block("X")[0].start_ms == pytest.approx(schedule.block_end_ms("V") + 5.0)
    assert schedule.block("U")[0].start_ms == pytest.approx(schedule.block_end_ms("X") + 10.0)
    assert [slot.node_id for slot in schedule.block("X")] == [1, 2, 3]
    assert schedule.delays == (10.0, 5.0)


def test_guard_is_excluded_from_usable_window():
    schedule = build_schedule("CTDMA", 3, TIMINGS)
    x1 = schedule.block("X")[0]
    assert x1.usable_ms == pytest.approx(80.0)
    assert x1.end_ms - x1.usable_end_ms == pytest.approx(1.0)
    assert len(schedule.node_slots(2)) == 2


def test_frame_shorter_than_minimum_is_rejected():
    with pytest.raises(InfeasibleScheduleError):
        build_schedule("SDCTDMA", 3, TIMINGS, frame_length_ms=500.0)


def test_unknown_protocol_and_empty_network():
    with pytest.raises(ArgumentError):
        build_schedule("FDMA", 3, TIMINGS)
    with pytest.raises(ArgumentError):
        build_schedule("CTDMA", 0, TIMINGS)


def test_negative_timings_rejected():
    with pytest.raises(ArgumentError):
        SlotTimings(x_slot_ms=0.0)
    with pytest.raises(ArgumentError):
        SlotTimings(guard_ms=-1.0)


def test_timings_from_settings():
    timings = SlotTimings.from_settings(Settings(_env_file=None, X_SLOT_MS=100.0))
    assert min_interval("CTDMA", 3, timings) == pytest.approx(466.0)


def test_packet_sizes(settings):
    sizes = packet_sizes(settings)
    assert sizes["state_x"].size_bytes == 36
    assert sizes["increment_m"].size_bytes == 4
    assert sizes["ack"].size_bytes == 1


def test_describe_lists_every_slot():
    schedule = build_schedule("ADCTDMA", 2, TIMINGS)
    assert len(schedule.describe()) == 1 + len(schedule.slots)
