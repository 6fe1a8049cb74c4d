"""Модель радио и учёт заряда батарей узлов"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from app.config import Settings
from app.errors import ArgumentError, ConfigurationError

logger = logging.getLogger(__name__)

NODE_STATES = ("sleep", "idle", "rx", "tx", "sense", "actuate")


@dataclass
class RadioModel:
    """Потери пакетов, длительность попытки и токи по состояниям"""
    loss_probability: float = 0.0
    per_try_duration_ms: float = 10.0
    bitrate_kbps: float = 250.0
    max_retries_per_slot: Optional[int] = None
    currents_mA: Dict[str, float] = field(default_factory=lambda: {
        "sleep": 10.0, "idle": 20.0, "rx": 120.0, "tx": 120.0, "sense": 40.0, "actuate": 150.0,
    })

    def __post_init__(self):
        if not 0 <= self.loss_probability < 1:
            raise ConfigurationError("loss_probability должна лежать в [0, 1)")
        if self.per_try_duration_ms <= 0 or self.bitrate_kbps <= 0:
            raise ConfigurationError("Длительность попытки и скорость должны быть положительными")
        missing = set(NODE_STATES) - set(self.currents_mA)
        if missing:
            raise ConfigurationError(f"Не заданы токи для состояний {sorted(missing)}")
        if any(value < 0 for value in self.currents_mA.values()):
            raise ConfigurationError("Токи не могут быть отрицательными")

    def airtime_ms(self, size_bytes: int) -> float:
        """Время передачи пакета"""
        return size_bytes * 8.0 / self.bitrate_kbps

    def tries_in(self, window_ms: float) -> int:
        """Число попыток, помещающихся в окно"""
        tries = int(math.floor(window_ms / self.per_try_duration_ms + 1e-9))
        if self.max_retries_per_slot is not None:
            tries = min(tries, self.max_retries_per_slot)
        return max(tries, 0)

    def attempt(self, rng: np.random.Generator) -> bool:
        """Одна попытка запрос/подтверждение"""
        if self.loss_probability == 0:
            return True
        return bool(rng.random() >= self.loss_probability)

    @classmethod
    def from_settings(cls, settings: Settings) -> "RadioModel":
        return cls(
            loss_probability=settings.LOSS_PROBABILITY,
            per_try_duration_ms=settings.PER_TRY_MS,
            bitrate_kbps=settings.BITRATE_KBPS,
            currents_mA=dict(settings.current_draws),
        )


@dataclass
class EnergyLedger:
    """Время в каждом состоянии по узлам, с"""
    times: Dict[int, Dict[str, float]] = field(default_factory=dict)
    currents_mA: Dict[str, float] = field(default_factory=dict)

    def node(self, node: int) -> Dict[str, float]:
        if node not in self.times:
            self.times[node] = {state: 0.0 for state in NODE_STATES}
        return self.times[node]

    def total_time(self, node: int) -> float:
        return math.fsum(self.node(node).values())

    def discharge_mAh(self, node: Optional[int] = None) -> float:
        """Верхняя оценка: Σ I·t/3600 по всем состояниям"""
        return self._discharge(node, include_sleep=True)

    def discharge_deep_sleep_mAh(self, node: Optional[int] = None) -> float:
        """Нижняя оценка: без вклада сна"""
        return self._discharge(node, include_sleep=False)

    def _discharge(self, node: Optional[int], include_sleep: bool) -> float:
        nodes = list(self.times) if node is None else [node]
        terms = []
        for n in nodes:
            for state, seconds in self.node(n).items():
                if state == "sleep" and not include_sleep:
                    continue
                terms.append(self.currents_mA.get(state, 0.0) * seconds / 3600.0)
        return math.fsum(terms)

    def sleep_time(self) -> float:
        return math.fsum(times["sleep"] for times in self.times.values())

    def snapshot(self) -> Dict[int, Dict[str, float]]:
        return {n: dict(states) for n, states in self.times.items()}


def account(
        ledger: EnergyLedger,
        node: int,
        state: str,
        duration_s: float,
        currents: Optional[Dict[str, float]] = None,
) -> EnergyLedger:
    """
    Начисление времени пребывания узла в состоянии

    Args:
        ledger: Журнал
        node: Номер узла
        state: sleep, idle, rx, tx, sense или actuate
        duration_s: Длительность, с
        currents: Токи, если журнал создан без них

    Returns:
        Тот же журнал
    """
    if state not in NODE_STATES:
        raise ArgumentError(f"Неизвестное состояние узла {state}")
    if duration_s < 0:
        raise ArgumentError(f"Отрицательная длительность {duration_s}")
    if currents is not None and not ledger.currents_mA:
        ledger.currents_mA = dict(currents)
    if duration_s > 0:
        ledger.node(node)[state] += duration_s
    return ledger
