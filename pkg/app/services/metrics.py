"""Метрики эксперимента по двум окнам: [0, t_end] и [0, t_sm]"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, model_validator

from app.errors import IncompleteTraceError
from app.mac.simulator import FrameOutcome

logger = logging.getLogger(__name__)

METRIC_FIELDS = (
    "water_level_overshoot",
    "switching_time",
    "sleep_time",
    "discharge_mAh",
    "discharge_deep_sleep_mAh",
    "actuations",
    "valve_movement",
    "violations",
    "state_transmissions",
    "control_signals",
    "control_messages",
)


class WindowMetrics(BaseModel):
    water_level_overshoot: float = 0.0
    switching_time: float = 0.0
    sleep_time: float = 0.0
    discharge_mAh: float = 0.0
    discharge_deep_sleep_mAh: float = 0.0
    actuations: float = 0.0
    valve_movement: float = 0.0
    violations: float = 0.0
    state_transmissions: float = 0.0
    control_signals: float = 0.0
    control_messages: float = 0.0

    @classmethod
    def mean(cls, items: List["WindowMetrics"]) -> "WindowMetrics":
        """Среднее арифметическое по повторениям"""
        if not items:
            return cls()
        return cls(**{
            name: math.fsum(getattr(item, name) for item in items) / len(items)
            for name in METRIC_FIELDS
        })


class RunMetrics(BaseModel):
    repetition: int = 0
    t_sm: Optional[float] = None
    total: WindowMetrics
    until_switch: WindowMetrics
    drops: int = 0


class MetricsReport(BaseModel):
    """Метрики одной конфигурации: по прогонам и средние"""
    strategy: str
    period: float
    t_end: float
    parameters: Dict[str, float] = {}
    runs: List[RunMetrics] = []
    mean_total: WindowMetrics = WindowMetrics()
    mean_until_switch: WindowMetrics = WindowMetrics()
    status: str = "ok"
    error: Optional[str] = None

    @model_validator(mode="after")
    def switching_within_run(self) -> "MetricsReport":
        for run in self.runs:
            if run.t_sm is not None and run.t_sm > self.t_end:
                raise ValueError(f"t_sm={run.t_sm} позже t_end={self.t_end}")
        return self

    @classmethod
    def aggregate(cls, strategy: str, period: float, t_end: float, runs: List[RunMetrics],
                  parameters: Optional[Dict[str, float]] = None) -> "MetricsReport":
        return cls(
            strategy=strategy,
            period=period,
            t_end=t_end,
            parameters=parameters or {},
            runs=runs,
            mean_total=WindowMetrics.mean([r.total for r in runs]),
            mean_until_switch=WindowMetrics.mean([r.until_switch for r in runs]),
        )

    @classmethod
    def failed(cls, strategy: str, period: float, t_end: float, error: str,
               parameters: Optional[Dict[str, float]] = None) -> "MetricsReport":
        return cls(strategy=strategy, period=period, t_end=t_end, parameters=parameters or {},
                   status="failed", error=error)


@dataclass
class SimulationTrace:
    """Последовательность кадров одного прогона"""
    frames: List[FrameOutcome]
    initial_valves: np.ndarray
    n_nodes: int
    currents_mA: Dict[str, float] = field(default_factory=dict)


def _window(trace: SimulationTrace, frames: List[FrameOutcome], previous: np.ndarray,
            switching_time: float) -> WindowMetrics:
    actuations = 0
    movement = 0.0
    for frame in frames:
        delta = np.abs(frame.valves - previous)
        actuations += int(np.count_nonzero(delta))
        movement += float(delta.sum())
        previous = frame.valves
    violations = sum(1 for frame in frames if frame.violation)
    return WindowMetrics(
        water_level_overshoot=max((frame.max_level for frame in frames), default=0.0),
        switching_time=switching_time,
        sleep_time=math.fsum(frame.sleep_s() for frame in frames),
        discharge_mAh=math.fsum(frame.discharge_mAh(trace.currents_mA) for frame in frames),
        discharge_deep_sleep_mAh=math.fsum(frame.discharge_mAh(trace.currents_mA, include_sleep=False)
                                           for frame in frames),
        actuations=actuations,
        valve_movement=movement,
        violations=violations,
        state_transmissions=sum(frame.state_transmissions for frame in frames),
        control_signals=trace.n_nodes * violations,
        control_messages=sum(frame.control_messages for frame in frames),
    )


def compute_metrics(trace: SimulationTrace, t_sm: Optional[float], t_end: float,
                    repetition: int = 0) -> RunMetrics:
    """
    Метрики прогона для окон [0, t_end] и [0, t_sm]

    Args:
        trace: Кадры прогона
        t_sm: Момент первого перехода 2→1 (None - перехода не было)
        t_end: Конец эксперимента
        repetition: Номер повторения

    Returns:
        RunMetrics
    """
    if not trace.frames or trace.frames[-1].end_s < t_end - 1e-9:
        reached = trace.frames[-1].end_s if trace.frames else 0.0
        raise IncompleteTraceError(f"Трасса обрывается на {reached:.3f} с, нужно {t_end:.3f} с")
    switching_time = t_end if t_sm is None else min(t_sm, t_end)
    in_run = [frame for frame in trace.frames if frame.start_s < t_end]
    until_switch = [frame for frame in in_run if frame.start_s < switching_time]
    return RunMetrics(
        repetition=repetition,
        t_sm=t_sm,
        total=_window(trace, in_run, trace.initial_valves, switching_time),
        until_switch=_window(trace, until_switch, trace.initial_valves, switching_time),
        drops=sum(frame.drops for frame in in_run),
    )
