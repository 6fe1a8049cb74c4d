"""Запуск эксперимента: сборка модели, протокола и стратегии, прогоны по повторениям"""
import logging
import math
from dataclasses import replace
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.config import Settings, settings as default_settings
from app.core.control import ControllerGains
from app.core.plant import DemandSchedule, NoiseConfig, PlantModel, SettleTrigger
from app.core.triggers import TriggerPolicy, build_strategy
from app.errors import ConfigurationError
from app.mac.energy import EnergyLedger, RadioModel
from app.mac.schedule import SlotTimings, build_schedule, min_interval, packet_sizes
from app.mac.simulator import MacSimulator
from app.services.loop import ControlLoop
from app.services.metrics import MetricsReport, RunMetrics, SimulationTrace, compute_metrics

logger = logging.getLogger(__name__)


class ExperimentConfig(BaseModel):
    """Сценарий: стратегия, период, длительность, повторения и источники случайности"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    policy: TriggerPolicy = TriggerPolicy()
    t_end: float = 110.0
    repetitions: int = 10
    seed: int = 2017
    seeds: Optional[List[int]] = None
    cell_index: Optional[int] = None
    sensor_std: float = 0.0005
    loss_probability: float = 0.0
    xi0: Optional[List[float]] = None
    initial_mode: int = 2
    demand_steps: List[List[float]] = []
    demand_trigger: Literal["time", "settled"] = "time"
    settle_band: float = 0.003
    settle_samples: int = 10
    record_trace: bool = False
    settings: Settings = Field(default_factory=lambda: default_settings, exclude=True)

    @field_validator("repetitions")
    @classmethod
    def at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("repetitions должно быть не меньше 1")
        return v

    @field_validator("t_end")
    @classmethod
    def positive_duration(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("t_end должно быть положительным")
        return v

    @field_validator("sensor_std")
    @classmethod
    def nonnegative_noise(cls, v: float) -> float:
        if v < 0:
            raise ValueError("sensor_std не может быть отрицательным")
        return v

    @field_validator("loss_probability")
    @classmethod
    def loss_in_range(cls, v: float) -> float:
        if not 0 <= v < 1:
            raise ValueError("loss_probability должна лежать в [0, 1)")
        return v

    @field_validator("settle_band", "settle_samples")
    @classmethod
    def settle_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("параметры установления должны быть положительными")
        return v

    @field_validator("initial_mode")
    @classmethod
    def known_mode(cls, v: int) -> int:
        if v not in (1, 2):
            raise ValueError("initial_mode должен быть 1 или 2")
        return v

    @property
    def protocol(self) -> str:
        return self.policy.protocol

    @property
    def period(self) -> float:
        return self.policy.T

    @property
    def n_nodes(self) -> int:
        return len(self.settings.H_REF)

    @property
    def frames(self) -> int:
        return int(math.ceil(self.t_end / self.period - 1e-9))

    def parameters(self) -> Dict[str, float]:
        """Параметры стратегии, влияющие на результат"""
        kind = self.policy.kind
        if kind in ("PETC", "PSDETC"):
            return {"sigma": self.policy.sigma}
        if kind.startswith("PADETC"):
            return {"mu": self.policy.mu, "varrho": self.policy.varrho, "eta_min": self.policy.eta_min}
        return {}

    def settle_trigger(self) -> Optional[SettleTrigger]:
        if self.demand_trigger != "settled":
            return None
        return SettleTrigger(band=self.settle_band, samples=self.settle_samples)

    def min_period(self) -> float:
        return min_interval(self.protocol, self.n_nodes, SlotTimings.from_settings(self.settings)) / 1000.0

    def seed_streams(self, repetition: int) -> Tuple[np.random.SeedSequence, np.random.SeedSequence]:
        """Потоки (шум датчиков, потери пакетов) для повторения"""
        if self.seeds:
            if repetition >= len(self.seeds):
                raise ConfigurationError(f"Для повторения {repetition} не задан seed")
            root = np.random.SeedSequence(self.seeds[repetition])
        elif self.cell_index is not None:
            root = np.random.SeedSequence(self.seed, spawn_key=(self.cell_index, repetition))
        else:
            root = np.random.SeedSequence(self.seed, spawn_key=(repetition,))
        noise, radio = root.spawn(2)
        return noise, radio

    @classmethod
    def from_settings(cls, settings: Settings, **overrides) -> "ExperimentConfig":
        """Конфигурация по умолчанию из настроек с точечными переопределениями"""
        policy_fields = {
            "kind": settings.STRATEGY,
            "sigma": settings.SIGMA,
            "mu": settings.MU,
            "varrho": settings.VARRHO,
            "eta": settings.ETA_INIT,
            "eta_min": settings.ETA_MIN,
            "omega": settings.OMEGA,
            "T": settings.PERIOD,
            "te_mode": settings.TE_MODE,
            "rel_update": settings.REL_UPDATE,
        }
        for key in list(overrides):
            if key in policy_fields:
                policy_fields[key] = overrides.pop(key)
        fields = {
            "policy": TriggerPolicy(**policy_fields),
            "t_end": settings.T_END,
            "repetitions": settings.REPETITIONS,
            "seed": settings.SEED,
            "sensor_std": settings.SENSOR_STD,
            "loss_probability": settings.LOSS_PROBABILITY,
            "demand_steps": settings.DEMAND_STEPS,
            "demand_trigger": settings.DEMAND_TRIGGER,
            "settle_band": settings.SETTLE_BAND,
            "settle_samples": settings.SETTLE_SAMPLES,
            "settings": settings,
        }
        fields.update(overrides)
        return cls(**fields)


class RunResult:
    """Кадры, автомат и журнал энергии одного прогона"""

    def __init__(self, trace: SimulationTrace, loop: ControlLoop, ledger: EnergyLedger, simulator: MacSimulator):
        self.trace = trace
        self.loop = loop
        self.ledger = ledger
        self.simulator = simulator

    @property
    def t_sm(self) -> Optional[float]:
        return self.loop.automaton.t_sm


def simulate_run(config: ExperimentConfig, repetition: int = 0) -> RunResult:
    """Один прогон сценария до t_end"""
    s = config.settings
    timings = SlotTimings.from_settings(s)
    schedule = build_schedule(config.protocol, config.n_nodes, timings, frame_length_ms=config.period * 1000.0)
    radio = replace(RadioModel.from_settings(s), loss_probability=config.loss_probability)

    model = PlantModel.from_settings(s)
    gains = ControllerGains.from_settings(s, model)
    noise_seq, radio_seq = config.seed_streams(repetition)
    loop = ControlLoop(
        model=model,
        gains=gains,
        noise=NoiseConfig(sensor_std=config.sensor_std, seed=noise_seq),
        demand=DemandSchedule(config.demand_steps, n=model.n),
        xi0=None if config.xi0 is None else np.asarray(config.xi0, dtype=float),
        mode=config.initial_mode,
        settle=config.settle_trigger(),
    )
    strategy = build_strategy(config.policy, config.n_nodes)
    simulator = MacSimulator(
        schedule, radio, packet_sizes(s),
        sense_ms=s.SENSE_MS, actuate_ms=s.ACTUATE_MS, record_trace=config.record_trace,
    )
    ledger = EnergyLedger(currents_mA=dict(radio.currents_mA))
    rng = np.random.default_rng(radio_seq)

    initial_valves = loop.valves.copy()
    frames = [
        simulator.simulate_superframe(strategy, loop, ledger, rng, index)
        for index in range(config.frames)
    ]
    trace = SimulationTrace(frames=frames, initial_valves=initial_valves, n_nodes=config.n_nodes,
                            currents_mA=dict(radio.currents_mA))
    return RunResult(trace, loop, ledger, simulator)


def run_experiment(config: ExperimentConfig) -> MetricsReport:
    """
    Все повторения сценария и средние метрики

    Args:
        config: Сценарий

    Returns:
        MetricsReport
    """
    logger.info(
        f"Эксперимент {config.policy.kind} T={config.period} с, t_end={config.t_end} с,"
        f" повторений {config.repetitions}"
    )
    runs: List[RunMetrics] = []
    for repetition in range(config.repetitions):
        result = simulate_run(config, repetition)
        run = compute_metrics(result.trace, result.t_sm, config.t_end, repetition)
        logger.debug(
            f"Повторение {repetition}: t_sm={run.t_sm}, передач {run.total.state_transmissions:.0f},"
            f" нарушений {run.total.violations:.0f}"
        )
        runs.append(run)
    return MetricsReport.aggregate(config.policy.kind, config.period, config.t_end, runs, config.parameters())
