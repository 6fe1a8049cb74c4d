"""Раскладка суперкадра для C-TDMA, SDC-TDMA и ADC-TDMA"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple

from app.config import Settings
from app.errors import ArgumentError, InfeasibleScheduleError

logger = logging.getLogger(__name__)

Protocol = Literal["CTDMA", "SDCTDMA", "ADCTDMA"]
SlotKind = Literal["V", "X", "U"]
PROTOCOLS = ("CTDMA", "SDCTDMA", "ADCTDMA")


@dataclass(frozen=True)
class PacketSpec:
    kind: str
    size_bytes: int


def packet_sizes(settings: Settings) -> Dict[str, PacketSpec]:
    """Размеры пакетов по видам сообщений"""
    sizes = {
        "state_x": settings.STATE_BYTES,
        "ack": settings.ACK_BYTES,
        "request_r": settings.REQUEST_BYTES,
        "request_a": settings.REQUEST_BYTES,
        "violation_v": settings.REQUEST_BYTES,
        "control_u": settings.CONTROL_BYTES,
        "eta_param": settings.PARAM_BYTES,
        "theta_param": settings.PARAM_BYTES,
        "increment_m": settings.INCREMENT_BYTES,
    }
    return {kind: PacketSpec(kind, size) for kind, size in sizes.items()}


@dataclass(frozen=True)
class SlotTimings:
    """Длительности слотов и задержек, мс"""
    x_slot_ms: float = 80.0
    u_slot_ms: float = 50.0
    v_slot_ms: float = 50.0
    control_delay_ms: float = 10.0
    violation_delay_ms: float = 5.0
    guard_ms: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if name == "guard_ms":
                if value < 0:
                    raise ArgumentError("guard_ms не может быть отрицательным")
            elif value <= 0:
                raise ArgumentError(f"{name} должно быть положительным")

    @classmethod
    def from_settings(cls, settings: Settings) -> "SlotTimings":
        return cls(
            x_slot_ms=settings.X_SLOT_MS,
            u_slot_ms=settings.U_SLOT_MS,
            v_slot_ms=settings.V_SLOT_MS,
            control_delay_ms=settings.CONTROL_DELAY_MS,
            violation_delay_ms=settings.VIOLATION_DELAY_MS,
            guard_ms=settings.GUARD_MS,
        )


@dataclass(frozen=True)
class Slot:
    """Слот узла: duration_ms включает защитный интервал в конце"""
    node_id: int
    kind: SlotKind
    start_ms: float
    duration_ms: float
    guard_ms: float

    @property
    def usable_ms(self) -> float:
        return self.duration_ms - self.guard_ms

    @property
    def usable_end_ms(self) -> float:
        return self.start_ms + self.usable_ms

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.duration_ms


@dataclass(frozen=True)
class SlotSchedule:
    protocol: Protocol
    n_nodes: int
    frame_length_ms: float
    slots: Tuple[Slot, ...]
    delays: Tuple[float, float]  # (d_c, d_g)

    @property
    def required_ms(self) -> float:
        return self.slots[-1].end_ms

    def block(self, kind: SlotKind) -> List[Slot]:
        return [slot for slot in self.slots if slot.kind == kind]

    def block_end_ms(self, kind: SlotKind) -> Optional[float]:
        block = self.block(kind)
        return block[-1].end_ms if block else None

    def node_slots(self, node_id: int) -> List[Slot]:
        return [slot for slot in self.slots if slot.node_id == node_id]

    def overlaps(self) -> List[Tuple[Slot, Slot]]:
        """Пары пересекающихся слотов (ожидается пустой список)"""
        ordered = sorted(self.slots, key=lambda s: s.start_ms)
        return [(a, b) for a, b in zip(ordered, ordered[1:]) if b.start_ms < a.end_ms]

    def describe(self) -> List[str]:
        lines = [f"{self.protocol}: N={self.n_nodes}, T_min={self.required_ms:.1f} мс, кадр={self.frame_length_ms:.1f} мс"]
        for slot in self.slots:
            lines.append(
                f"  {slot.kind}{slot.node_id}: [{slot.start_ms:.1f}, {slot.end_ms:.1f}) мс,"
                f" рабочее окно {slot.usable_ms:.1f} мс"
            )
        return lines


def _layout(protocol: str, n_nodes: int, timings: SlotTimings) -> Tuple[List[Slot], Tuple[float, float]]:
    if protocol not in PROTOCOLS:
        raise ArgumentError(f"Неизвестный протокол {protocol}")
    if n_nodes < 1:
        raise ArgumentError("Нужен хотя бы один узел")

    slots: List[Slot] = []
    cursor = 0.0
    guard = timings.guard_ms

    def add_block(kind: SlotKind, size: float) -> None:
        nonlocal cursor
        for node in range(1, n_nodes + 1):
            slots.append(Slot(node, kind, cursor, size + guard, guard))
            cursor += size + guard

    d_g = 0.0
    if protocol == "SDCTDMA":
        add_block("V", timings.v_slot_ms)
        d_g = timings.violation_delay_ms
        cursor += d_g
    add_block("X", timings.x_slot_ms)
    cursor += timings.control_delay_ms
    add_block("U", timings.u_slot_ms)
    return slots, (timings.control_delay_ms, d_g)


def min_interval(protocol: str, n_nodes: int, timings: SlotTimings) -> float:
    """Минимальная длина суперкадра T_min, мс"""
    slots, _ = _layout(protocol, n_nodes, timings)
    return slots[-1].end_ms


def build_schedule(
        protocol: str,
        n_nodes: int,
        timings: SlotTimings,
        frame_length_ms: Optional[float] = None,
) -> SlotSchedule:
    """
    Каноническая раскладка суперкадра

    Args:
        protocol: CTDMA, SDCTDMA или ADCTDMA
        n_nodes: Число узлов
        timings: Длительности слотов
        frame_length_ms: Длина кадра (по умолчанию T_min)

    Returns:
        SlotSchedule
    """
    slots, delays = _layout(protocol, n_nodes, timings)
    required = slots[-1].end_ms
    frame = required if frame_length_ms is None else frame_length_ms
    if frame < required - 1e-9:
        raise InfeasibleScheduleError(
            f"{protocol}: кадр {frame:.1f} мс короче минимума {required:.1f} мс для N={n_nodes}"
        )
    return SlotSchedule(protocol, n_nodes, frame, tuple(slots), delays)
