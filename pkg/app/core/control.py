"""Переключаемый регулятор по состоянию и автомат режимов насосов"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from app.config import Settings
from app.core.plant import PlantModel
from app.errors import ArgumentError, ConfigurationError

logger = logging.getLogger(__name__)

VALVE_STEP_DEG = 10.0
VALVE_MAX_DEG = 360.0
MODE_SWITCH_BUDGET_DEG = 180.0


@dataclass(frozen=True)
class ControllerGains:
    """Коэффициенты K_ϑ и равновесные открытия ᾱ_ϑ"""
    K1: np.ndarray
    K2: np.ndarray
    alpha_bar_1: np.ndarray
    alpha_bar_2: np.ndarray

    def K(self, mode: int) -> np.ndarray:
        return self.K1 if mode == 1 else self.K2

    def alpha_bar(self, mode: int) -> np.ndarray:
        return self.alpha_bar_1 if mode == 1 else self.alpha_bar_2

    def check_hurwitz(self, model: PlantModel) -> None:
        """Проверка, что −B_ϑK_ϑ гурвицева в обоих режимах"""
        for mode in (1, 2):
            closed = -model.B(mode) @ self.K(mode)
            worst = np.linalg.eigvals(closed).real.max()
            if worst >= 0:
                raise ConfigurationError(
                    f"−B{mode}K{mode} не гурвицева: max Re λ = {worst:.3e}"
                )
            logger.debug(f"Режим {mode}: max Re λ(−BK) = {worst:.4f}")

    @classmethod
    def from_settings(cls, settings: Settings, model: Optional[PlantModel] = None) -> "ControllerGains":
        gains = cls(
            K1=np.array(settings.K1, dtype=float),
            K2=np.array(settings.K2, dtype=float),
            alpha_bar_1=np.array(settings.ALPHA_BAR_1, dtype=float),
            alpha_bar_2=np.array(settings.ALPHA_BAR_2, dtype=float),
        )
        if model is not None:
            gains.check_hurwitz(model)
        return gains


def saturate_quantize(s: np.ndarray) -> np.ndarray:
    """S(s) = max(min(10⌊s/10⌋, 360), 0) покомпонентно"""
    s = np.asarray(s, dtype=float)
    return np.clip(VALVE_STEP_DEG * np.floor(s / VALVE_STEP_DEG), 0.0, VALVE_MAX_DEG)


def compute_input(xi_hat: np.ndarray, mode: int, gains: ControllerGains) -> np.ndarray:
    """
    Управление v = S(−K_ϑξ̂ + ᾱ_ϑ)

    Args:
        xi_hat: Удерживаемое состояние ξ̂, м
        mode: Режим насосов
        gains: Коэффициенты регулятора

    Returns:
        Положения клапанов, град
    """
    if mode not in (1, 2):
        raise ArgumentError(f"Неизвестный режим {mode}")
    return saturate_quantize(-gains.K(mode) @ np.asarray(xi_hat, dtype=float) + gains.alpha_bar(mode))


@dataclass
class ModeAutomaton:
    """Гибридный автомат режимов 1 ↔ 2"""
    mode: int = 2
    switch_count: int = 0
    switch_times: List[float] = field(default_factory=list)
    switch_kinds: List[str] = field(default_factory=list)

    @property
    def t_sm(self) -> Optional[float]:
        """Момент первого перехода 2→1"""
        for time, kind in zip(self.switch_times, self.switch_kinds):
            if kind == "2->1":
                return time
        return None

    def _record(self, new_mode: int, time: float) -> None:
        if self.switch_times and time <= self.switch_times[-1]:
            raise ArgumentError(f"Переключения должны идти строго по времени: {time} после {self.switch_times[-1]}")
        kind = f"{self.mode}->{new_mode}"
        self.switch_times.append(time)
        self.switch_kinds.append(kind)
        self.switch_count += 1
        self.mode = new_mode
        logger.info(f"Переключение режима {kind} в t={time:.3f} с")

    def update(
            self,
            xi: np.ndarray,
            v_candidate: Optional[np.ndarray],
            model: PlantModel,
            time: float,
    ) -> "ModeAutomaton":
        """Не более одного перехода за вызов"""
        if self.mode == 1:
            if np.any(np.asarray(xi) <= model.h_low - model.h_ref):
                self._record(2, time)
        elif v_candidate is not None and np.abs(v_candidate).sum() < MODE_SWITCH_BUDGET_DEG:
            self._record(1, time)
        return self


def update_mode(
        automaton: ModeAutomaton,
        xi: np.ndarray,
        v_candidate: Optional[np.ndarray],
        model: PlantModel,
        time: float = 0.0,
) -> ModeAutomaton:
    """
    Проверка охранных условий автомата

    Args:
        automaton: Текущий автомат
        xi: Удерживаемое состояние ξ̂
        v_candidate: S(−K₂ξ̂ + ᾱ₂), используется в режиме 2
        model: Модель с уровнями h′ и ẖ
        time: Момент проверки

    Returns:
        Тот же автомат после возможного перехода
    """
    return automaton.update(xi, v_candidate, model, time)
