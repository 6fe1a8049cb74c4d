"""Дискретно-событийная симуляция суперкадра TDMA"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from app.core.triggers import TriggerStrategy
from app.errors import ConfigurationError
from app.mac.energy import NODE_STATES, EnergyLedger, RadioModel, account
from app.mac.events import Event, EventQueue
from app.mac.schedule import PacketSpec, Slot, SlotSchedule

logger = logging.getLogger(__name__)

Interval = Tuple[float, float, str]


class TraceRecord(BaseModel):
    """Строка трассы: одна попытка или подтверждение"""
    time_ms: float
    node: int
    kind: str
    size_bytes: int
    outcome: str


@dataclass
class FrameOutcome:
    """Итог одного суперкадра"""
    index: int
    start_s: float
    end_s: float
    max_level: float
    valves: np.ndarray
    command: np.ndarray
    mode: int
    violation: bool
    state_transmissions: int = 0
    control_messages: int = 0
    drops: int = 0
    actuations: int = 0
    node_times: Dict[int, Dict[str, float]] = field(default_factory=dict)

    def sleep_s(self) -> float:
        return math.fsum(times["sleep"] for times in self.node_times.values())

    def discharge_mAh(self, currents: Dict[str, float], include_sleep: bool = True) -> float:
        return math.fsum(
            currents[state] * seconds / 3600.0
            for times in self.node_times.values()
            for state, seconds in times.items()
            if include_sleep or state != "sleep"
        )


@dataclass
class _NodeTimeline:
    activities: List[Interval] = field(default_factory=list)
    awake: List[Tuple[float, float]] = field(default_factory=list)

    def state_times_ms(self, frame_ms: float) -> Dict[str, float]:
        totals = {state: 0.0 for state in NODE_STATES}
        for start, end, state in self.activities:
            totals[state] += end - start
        idle = 0.0
        for w_start, w_end in self.awake:
            busy = sum(max(0.0, min(end, w_end) - max(start, w_start)) for start, end, _ in self.activities)
            idle += max(0.0, (w_end - w_start) - busy)
        totals["idle"] = idle
        totals["sleep"] = max(0.0, frame_ms - math.fsum(totals.values()))
        return totals


class MacSimulator:
    """
    Исполнитель суперкадров одного протокола

    Для каждого кадра строит очередь событий: измерение, слоты V/X/U,
    решение контроллера после X-блока и конец кадра.
    """

    def __init__(
            self,
            schedule: SlotSchedule,
            radio: RadioModel,
            packets: Dict[str, PacketSpec],
            sense_ms: float = 2.0,
            actuate_ms: float = 20.0,
            record_trace: bool = False,
    ):
        self.schedule = schedule
        self.radio = radio
        self.packets = packets
        self.sense_ms = sense_ms
        self.actuate_ms = actuate_ms
        self.record_trace = record_trace
        self.trace: List[TraceRecord] = []

    @property
    def frame_s(self) -> float:
        return self.schedule.frame_length_ms / 1000.0

    def size_of(self, kind: str) -> int:
        return self.packets[kind].size_bytes

    def simulate_superframe(
            self,
            strategy: TriggerStrategy,
            loop,
            ledger: EnergyLedger,
            rng: np.random.Generator,
            index: int = 0,
    ) -> FrameOutcome:
        """
        Один суперкадр: измерение → (V) → X → d_c → U

        Args:
            strategy: Стратегия запуска, согласованная с протоколом
            loop: Объект управления (ControlLoop)
            ledger: Журнал энергии, пополняется временами узлов
            rng: Поток потерь пакетов
            index: Номер кадра

        Returns:
            FrameOutcome
        """
        if strategy.protocol != self.schedule.protocol:
            raise ConfigurationError(
                f"Стратегия {strategy.kind} работает поверх {strategy.protocol}, а не {self.schedule.protocol}"
            )
        frame = _Frame(self, strategy, loop, rng, index)
        outcome = frame.run()
        for node, times in outcome.node_times.items():
            for state, seconds in times.items():
                account(ledger, node, state, seconds, self.radio.currents_mA)
        return outcome

    def export_trace(self, path: Path) -> int:
        """Трасса построчно в JSON; возвращает число записей"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            for record in self.trace:
                f.write(record.model_dump_json() + "\n")
        return len(self.trace)


class _Frame:
    """Состояние одного суперкадра во время обработки событий"""

    def __init__(self, sim: MacSimulator, strategy: TriggerStrategy, loop, rng: np.random.Generator, index: int):
        self.sim = sim
        self.strategy = strategy
        self.loop = loop
        self.rng = rng
        self.index = index
        self.n = sim.schedule.n_nodes
        self.t0 = loop.state.time
        self.frame_ms = sim.schedule.frame_length_ms
        self.timelines = {j: _NodeTimeline() for j in range(1, self.n + 1)}
        self.measured = loop.sample()
        self.flags: Dict[int, bool] = {}
        self.event = False
        self.answers: Dict[int, bool] = {}
        self.violation = False
        self.command: Optional[np.ndarray] = None
        self.outcome = FrameOutcome(
            index=index, start_s=self.t0, end_s=self.t0 + sim.frame_s, max_level=0.0,
            valves=loop.valves.copy(), command=loop.command.copy(), mode=loop.automaton.mode, violation=False,
        )

    def abs_s(self, rel_ms: float) -> float:
        return self.t0 + rel_ms / 1000.0

    def run(self) -> FrameOutcome:
        queue = EventQueue()
        schedule = self.sim.schedule
        for j in range(1, self.n + 1):
            queue.schedule(0.0, j, "sense")
        for slot in schedule.slots:
            queue.schedule(slot.start_ms, slot.node_id, "slot", slot)
        if schedule.protocol == "SDCTDMA":
            queue.schedule(schedule.block_end_ms("V"), 0, "aggregate")
        queue.schedule(schedule.block_end_ms("X"), 0, "decision")
        queue.schedule(self.frame_ms, 0, "frame_end")

        handlers = {
            "sense": self.on_sense,
            "slot": self.on_slot,
            "aggregate": self.on_aggregate,
            "decision": self.on_decision,
            "frame_end": self.on_frame_end,
        }
        while queue.has_events():
            event = queue.pop()
            handlers[event.kind](event)
        self.strategy.end_frame()
        return self.outcome

    # Обработчики

    def on_sense(self, event: Event) -> None:
        self.timelines[event.node_id].activities.append((0.0, self.sim.sense_ms, "sense"))

    def on_slot(self, event: Event) -> None:
        slot: Slot = event.data
        {"V": self.v_slot, "X": self.x_slot, "U": self.u_slot}[slot.kind](slot)

    def on_aggregate(self, event: Event) -> None:
        self.event = any(self.flags.values())

    def on_decision(self, event: Event) -> None:
        time = self.abs_s(event.time_ms)
        self.violation = self.strategy.controller_decide(time)
        xi_dot = None
        if self.violation:
            self.command = self.loop.control(self.strategy.held.xi_hat, time)
            xi_dot = self.loop.xi_dot(self.strategy.held.xi_hat)
        self.strategy.after_control(time, xi_dot, self.violation)

    def on_frame_end(self, event: Event) -> None:
        self.outcome.max_level = self.loop.advance(self.abs_s(self.frame_ms))
        self.outcome.valves = self.loop.valves.copy()
        self.outcome.command = self.loop.command.copy()
        self.outcome.mode = self.loop.automaton.mode
        self.outcome.violation = self.violation
        frame_s = self.sim.frame_s
        for j, timeline in self.timelines.items():
            times_ms = timeline.state_times_ms(self.frame_ms)
            times = {state: ms / 1000.0 for state, ms in times_ms.items() if state != "sleep"}
            times["sleep"] = max(0.0, frame_s - math.fsum(times.values()))
            self.outcome.node_times[j] = times

    # Слоты

    def v_slot(self, slot: Slot) -> None:
        j = slot.node_id
        flag = self.strategy.node_wants_update(j - 1, float(self.measured[j - 1]))
        ok, _ = self.exchange(slot, self.slot_start(slot), "violation_v")
        self.wake(j, slot.start_ms, slot.end_ms)
        if ok:
            self.flags[j] = flag

    def x_slot(self, slot: Slot) -> None:
        j = slot.node_id
        y_j = float(self.measured[j - 1])
        protocol = self.sim.schedule.protocol
        start = self.slot_start(slot)
        if protocol == "SDCTDMA":
            ok, end = self.exchange(slot, start, "request_a")
            self.answers[j] = ok and self.event
            if not self.answers[j]:
                self.wake(j, slot.start_ms, end)
                return
            start = end
        elif protocol == "ADCTDMA" and not self.strategy.node_wants_update(j - 1, y_j):
            return
        payload = self.strategy.node_payload(j - 1, y_j)
        self.outcome.state_transmissions += 1
        self.wake(j, slot.start_ms, slot.end_ms)
        ok, _ = self.exchange(slot, start, payload.kind)
        if ok:
            self.strategy.controller_receive(j - 1, payload)
            self.strategy.node_delivered(j - 1)

    def u_slot(self, slot: Slot) -> None:
        j = slot.node_id
        if self.sim.schedule.protocol == "SDCTDMA" and not self.answers.get(j, False):
            return
        self.wake(j, slot.start_ms, slot.end_ms)
        with_control = self.violation and self.command is not None
        params = self.strategy.controller_params(j - 1, self.violation)
        ack_size = self.sim.size_of("ack")
        if with_control:
            ack_size += self.sim.size_of("control_u")
        for name in params:
            ack_size += self.sim.size_of(f"{name}_param")
        ok, end = self.exchange(slot, self.slot_start(slot), "request_r", ack_kind="control_u" if with_control else "ack",
                                ack_size=ack_size)
        if not ok:
            return
        if params:
            self.strategy.params_delivered(j - 1, params)
            self.strategy.node_receive_params(j - 1, params)
        if with_control:
            self.outcome.control_messages += 1
            if self.loop.set_valve(self.abs_s(end), j - 1, float(self.command[j - 1])):
                self.outcome.actuations += 1
                stop = min(end + self.sim.actuate_ms, self.frame_ms)
                if stop > end:
                    self.timelines[j].activities.append((end, stop, "actuate"))

    # Радио

    def slot_start(self, slot: Slot) -> float:
        """Первая попытка не раньше конца измерения"""
        return max(slot.start_ms, self.sim.sense_ms)

    def wake(self, j: int, start: float, end: float) -> None:
        self.timelines[j].awake.append((start, end))

    def exchange(self, slot: Slot, start_ms: float, kind: str, ack_kind: str = "ack",
                 ack_size: Optional[int] = None) -> Tuple[bool, float]:
        """
        Запрос с подтверждением и повторами в рабочем окне слота

        Returns:
            (доставлено, момент окончания последней попытки)
        """
        sim = self.sim
        j = slot.node_id
        size = sim.size_of(kind)
        airtime = sim.radio.airtime_ms(size)
        per_try = sim.radio.per_try_duration_ms
        tries = sim.radio.tries_in(slot.usable_end_ms - start_ms)
        timeline = self.timelines[j]
        t = start_ms
        for _ in range(tries):
            timeline.activities.append((t, t + airtime, "tx"))
            timeline.activities.append((t + airtime, t + per_try, "rx"))
            ok = sim.radio.attempt(self.rng)
            self._trace(t, j, kind, size, "ok" if ok else "lost")
            t += per_try
            if ok:
                self._trace(t, j, ack_kind, ack_size if ack_size is not None else sim.size_of("ack"), "ok")
                return True, t
        self.outcome.drops += 1
        self._trace(t, j, kind, size, "drop")
        logger.warning(f"Кадр {self.index}: сообщение {kind} узла {j} потеряно после {tries} попыток")
        return False, t

    def _trace(self, rel_ms: float, node: int, kind: str, size: int, outcome: str) -> None:
        if self.sim.record_trace:
            self.sim.trace.append(TraceRecord(
                time_ms=self.t0 * 1000.0 + rel_ms, node=node, kind=kind, size_bytes=size, outcome=outcome,
            ))
