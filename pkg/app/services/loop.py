"""Объект управления с точки зрения MAC-симулятора: датчики, регулятор, клапаны"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from app.core.control import ControllerGains, ModeAutomaton, compute_input
from app.core.plant import DemandSchedule, NoiseConfig, PlantModel, PlantState, SettleTrigger, sense, step

logger = logging.getLogger(__name__)


class ControlLoop:
    """
    Состояние WaterBox между событиями суперкадра

    Измерения берутся в начале кадра. Команды клапанов и смена режима насосов
    запоминаются с моментом применения и интегрируются в конце кадра точно,
    по кусочно-постоянным участкам. С settle расписание потребления ждёт
    установления уровней и затем отсчитывается от этого момента.
    """

    def __init__(
            self,
            model: PlantModel,
            gains: ControllerGains,
            noise: NoiseConfig,
            demand: Optional[DemandSchedule] = None,
            xi0: Optional[np.ndarray] = None,
            mode: int = 2,
            valves0: Optional[np.ndarray] = None,
            settle: Optional[SettleTrigger] = None,
    ):
        self.model = model
        self.gains = gains
        self.noise = noise
        demand = demand or DemandSchedule(n=model.n)
        self.settle = settle
        self.settled_at: Optional[float] = None
        self._scenario = demand
        self.demand = demand if settle is None else DemandSchedule(n=model.n)
        xi0 = -model.h_ref.copy() if xi0 is None else np.asarray(xi0, dtype=float)
        self.state = PlantState(xi=xi0, mode=mode, time=0.0)
        self.automaton = ModeAutomaton(mode=mode)
        self.valves = np.zeros(model.n) if valves0 is None else np.asarray(valves0, dtype=float)
        self.command = self.valves.copy()
        self._changes: List[Tuple[float, str, int, float]] = []

    @property
    def n(self) -> int:
        return self.model.n

    def sample(self) -> np.ndarray:
        """Зашумлённые измерения всех узлов в текущий момент"""
        measured = sense(self.state, self.noise)
        if self.settle is not None and self.settled_at is None and self.settle.update(measured):
            self.settled_at = self.state.time
            self.demand = self._scenario.shifted(self.settled_at)
            logger.info(f"Уровни установились в t={self.settled_at:.2f} с, запуск сценария потребления")
        return measured

    def control(self, xi_hat: np.ndarray, time: float) -> np.ndarray:
        """Проверка охранных условий и новая команда S(−K_ϑξ̂ + ᾱ_ϑ)"""
        before = self.automaton.mode
        candidate = compute_input(xi_hat, 2, self.gains) if before == 2 else None
        self.automaton.update(xi_hat, candidate, self.model, time)
        if self.automaton.mode != before:
            self._changes.append((time, "mode", -1, float(self.automaton.mode)))
        self.command = compute_input(xi_hat, self.automaton.mode, self.gains)
        return self.command

    def xi_dot(self, xi_hat: np.ndarray) -> np.ndarray:
        """ξ̇ по модели при текущей команде и режиме"""
        return self.model.derivative(np.asarray(xi_hat, dtype=float), self.command, self.automaton.mode)

    def set_valve(self, time: float, j: int, value: float) -> bool:
        """Команда дошла до актуатора j; True если положение клапана меняется"""
        current = self._valve_at_end(j)
        if current == value:
            return False
        self._changes.append((time, "valve", j, float(value)))
        return True

    def _valve_at_end(self, j: int) -> float:
        value = float(self.valves[j])
        for _, kind, idx, new in self._changes:
            if kind == "valve" and idx == j:
                value = new
        return value

    def advance(self, t_end: float) -> float:
        """
        Интегрирование до t_end с учётом накопленных изменений

        Returns:
            Максимальный уровень воды на интервале, м
        """
        t = self.state.time
        changes = sorted(self._changes, key=lambda c: c[0])
        self._changes = []
        cuts = sorted({c[0] for c in changes} | set(self.demand.breakpoints(t, t_end)))
        max_level = float(self.state.levels(self.model).max())
        valves = self.valves.copy()
        state = self.state
        pending = list(changes)
        for cut in cuts + [t_end]:
            if cut > t:
                state = step(state, valves, cut - t, self.model, self.demand.at(t))
                max_level = max(max_level, float(state.levels(self.model).max()))
                t = cut
            while pending and pending[0][0] <= t:
                _, kind, idx, value = pending.pop(0)
                if kind == "valve":
                    valves[idx] = value
                else:
                    state = PlantState(xi=state.xi, mode=int(value), time=state.time)
        self.valves = valves
        self.state = PlantState(xi=state.xi, mode=state.mode, time=t_end)
        return max_level
