"""Сервисы: контур управления, метрики, эксперименты, перебор и отчёты"""

from .experiment import ExperimentConfig, run_experiment, simulate_run
from .sweep import SweepGrid, SweepRunner, sweep

__all__ = ["ExperimentConfig", "run_experiment", "simulate_run", "SweepGrid", "SweepRunner", "sweep"]
