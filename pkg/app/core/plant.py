"""Линеаризованная переключаемая модель WaterBox"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np

from app.config import Settings
from app.core.numerics import expm
from app.errors import ArgumentError, ConfigurationError

logger = logging.getLogger(__name__)

MODES = (1, 2)


@dataclass(frozen=True)
class PlantModel:
    """Параметры модели: ξ̇ = Aξ + B_ϑ(v − ᾱ_ϑ) + d(t)"""
    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    alpha_bar_1: np.ndarray
    alpha_bar_2: np.ndarray
    h_ref: np.ndarray
    h_low: np.ndarray

    def __post_init__(self):
        n = self.h_ref.shape[0]
        for name in ("A", "B1", "B2"):
            if getattr(self, name).shape != (n, n):
                raise ConfigurationError(f"{name} должна быть {n}×{n}")
        if np.any(self.h_low >= self.h_ref):
            raise ConfigurationError("Нижние уровни должны быть меньше опорных")
        for name in ("B1", "B2"):
            if abs(np.linalg.det(getattr(self, name))) < 1e-300:
                raise ConfigurationError(f"{name} вырождена")

    @property
    def n(self) -> int:
        return self.h_ref.shape[0]

    def B(self, mode: int) -> np.ndarray:
        return self.B1 if mode == 1 else self.B2

    def alpha_bar(self, mode: int) -> np.ndarray:
        return self.alpha_bar_1 if mode == 1 else self.alpha_bar_2

    def derivative(self, xi: np.ndarray, v: np.ndarray, mode: int) -> np.ndarray:
        """ξ̇ без возмущения (то, что знает контроллер)"""
        return self.A @ xi + self.B(mode) @ (v - self.alpha_bar(mode))

    @classmethod
    def from_settings(cls, settings: Settings) -> "PlantModel":
        """Константы WaterBox из настроек"""
        n = len(settings.H_REF)
        return cls(
            A=np.zeros((n, n)),
            B1=np.array(settings.B1, dtype=float),
            B2=np.array(settings.B2, dtype=float),
            alpha_bar_1=np.array(settings.ALPHA_BAR_1, dtype=float),
            alpha_bar_2=np.array(settings.ALPHA_BAR_2, dtype=float),
            h_ref=np.array(settings.H_REF, dtype=float),
            h_low=np.array(settings.H_LOW, dtype=float),
        )


@dataclass(frozen=True)
class PlantState:
    """Отклонение ξ = h − h′, режим насосов и время"""
    xi: np.ndarray
    mode: int = 2
    time: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ArgumentError(f"Неизвестный режим {self.mode}")

    def levels(self, model: PlantModel) -> np.ndarray:
        return self.xi + model.h_ref


@dataclass
class NoiseConfig:
    """Аддитивный гауссов шум датчиков уровня"""
    sensor_std: float = 0.0005
    seed: Union[int, np.random.SeedSequence] = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.sensor_std < 0:
            raise ArgumentError("sensor_std должен быть неотрицательным")
        self._rng = np.random.default_rng(self.seed)

    def draw(self, size: int) -> np.ndarray:
        if self.sensor_std == 0:
            return np.zeros(size)
        return self._rng.normal(0.0, self.sensor_std, size)


class DemandSchedule:
    """Кусочно-постоянное возмущение потребления d(t), м/с"""

    def __init__(self, steps: Optional[Sequence[Sequence[float]]] = None, n: int = 3):
        self.n = n
        self._steps: List[tuple] = sorted(
            (float(row[0]), np.array(row[1:], dtype=float)) for row in (steps or [])
        )
        for start, rate in self._steps:
            if rate.shape != (n,):
                raise ConfigurationError(f"Шаг потребления в t={start} должен иметь {n} компонент")

    def at(self, t: float) -> np.ndarray:
        rate = np.zeros(self.n)
        for start, value in self._steps:
            if t >= start:
                rate = value
        return rate

    def breakpoints(self, t0: float, t1: float) -> List[float]:
        """Моменты смены возмущения внутри (t0, t1)"""
        return [start for start, _ in self._steps if t0 < start < t1]

    def shifted(self, offset: float) -> "DemandSchedule":
        """То же расписание, отсчитанное от момента offset"""
        return DemandSchedule([[start + offset, *rate] for start, rate in self._steps], n=self.n)


@dataclass
class SettleTrigger:
    """
    Запуск сценария потребления после установления уровней

    Узлы сравнивают каждое измерение с полосой ±band вокруг опорного уровня.
    Сценарий стартует, когда samples измерений подряд у всех узлов лежат
    в полосе, поэтому выдержка составляет samples периодов опроса.
    """
    band: float
    samples: int
    count: int = field(default=0, init=False)

    def __post_init__(self):
        if self.band <= 0:
            raise ConfigurationError("Полоса установления должна быть положительной")
        if self.samples < 1:
            raise ConfigurationError("Нужно хотя бы одно измерение в полосе")

    def update(self, measured: np.ndarray) -> bool:
        """Учесть измерение; True когда уровни установились"""
        if np.all(np.abs(measured) <= self.band):
            self.count += 1
        else:
            self.count = 0
        return self.count >= self.samples


def step(
        state: PlantState,
        v: np.ndarray,
        dt: float,
        model: PlantModel,
        disturbance: Optional[np.ndarray] = None,
) -> PlantState:
    """
    Точное интегрирование на интервале с постоянным входом

    Args:
        state: Текущее состояние
        v: Положения клапанов (град), постоянные на шаге
        dt: Длительность шага, с
        model: Параметры модели
        disturbance: Постоянное возмущение d на шаге, м/с

    Returns:
        Новое состояние; уровень воды не опускается ниже нуля
    """
    if dt <= 0:
        raise ArgumentError(f"dt должен быть положительным, получено {dt}")
    rate = model.B(state.mode) @ (np.asarray(v, dtype=float) - model.alpha_bar(state.mode))
    if disturbance is not None:
        rate = rate + disturbance
    if np.any(model.A):
        # A ≠ 0: дискретизация через расширенную экспоненту
        n = model.n
        aug = np.zeros((n + 1, n + 1))
        aug[:n, :n] = model.A
        aug[:n, n] = rate
        phi = expm(aug, dt)
        xi = phi[:n, :n] @ state.xi + phi[:n, n]
    else:
        xi = state.xi + rate * dt
    xi = np.maximum(xi, -model.h_ref)
    return replace(state, xi=xi, time=state.time + dt)


def sense(state: PlantState, noise: NoiseConfig) -> np.ndarray:
    """Измерение ξ + w, w ~ N(0, sensor_std²)"""
    return state.xi + noise.draw(state.xi.shape[0])
