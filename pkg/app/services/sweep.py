"""Перебор сетки параметров стратегий с повторениями"""
import asyncio
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional

from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel, field_validator

from app.core.triggers import StrategyKind
from app.errors import SimulationError
from app.services.experiment import ExperimentConfig, run_experiment
from app.services.metrics import METRIC_FIELDS, MetricsReport, WindowMetrics

logger = logging.getLogger(__name__)


class SweepGrid(BaseModel):
    """Сетка: стратегии × параметры × периоды"""
    strategies: List[StrategyKind]
    periods: List[float] = [1.0]
    sigmas: List[float] = [0.2]
    mus: List[float] = [0.95]
    varrhos: List[float] = [85.0]
    common_seeds: bool = False

    @field_validator("strategies", "periods", "sigmas", "mus", "varrhos")
    @classmethod
    def nonempty(cls, v: list) -> list:
        if not v:
            raise ValueError("сетка не может быть пустой")
        return v

    def cells(self, base: ExperimentConfig) -> List[ExperimentConfig]:
        """Конфигурации ячеек в детерминированном порядке"""
        cells: List[ExperimentConfig] = []
        for kind, period in itertools.product(self.strategies, self.periods):
            if kind in ("PETC", "PSDETC"):
                variants = [{"sigma": sigma} for sigma in self.sigmas]
            elif kind.startswith("PADETC"):
                variants = [{"mu": mu, "varrho": varrho} for mu, varrho in itertools.product(self.mus, self.varrhos)]
            else:
                variants = [{}]
            for variant in variants:
                policy = base.policy.model_copy(update={"kind": kind, "T": period, **variant})
                index = len(cells)
                cells.append(base.model_copy(update={
                    "policy": policy,
                    "cell_index": None if self.common_seeds else index,
                }))
        return cells


class SavingsRow(BaseModel):
    """Экономия относительно TTC с тем же периодом, %"""
    strategy: str
    period: float
    parameters: Dict[str, float] = {}
    total: Dict[str, Optional[float]] = {}
    until_switch: Dict[str, Optional[float]] = {}


class SweepResult(BaseModel):
    reports: List[MetricsReport]
    savings: List[SavingsRow] = []

    @property
    def failed(self) -> List[MetricsReport]:
        return [report for report in self.reports if report.status != "ok"]


def run_cell(config: ExperimentConfig) -> MetricsReport:
    """Ячейка сетки; ошибка симуляции помечает ячейку, а не прерывает перебор"""
    try:
        return run_experiment(config)
    except SimulationError as e:
        logger.warning(f"Ячейка {config.policy.kind} T={config.period} пропущена: {e}")
        return MetricsReport.failed(config.policy.kind, config.period, config.t_end, str(e), config.parameters())


def _savings(reference: WindowMetrics, value: WindowMetrics) -> Dict[str, Optional[float]]:
    result: Dict[str, Optional[float]] = {}
    for name in METRIC_FIELDS:
        ref = getattr(reference, name)
        result[name] = None if ref == 0 else (ref - getattr(value, name)) / ref * 100.0
    return result


def savings_table(reports: List[MetricsReport]) -> List[SavingsRow]:
    """Сравнение каждой успешной ячейки с ячейкой TTC того же периода"""
    reference = {
        report.period: report
        for report in reports
        if report.strategy == "TTC" and report.status == "ok"
    }
    rows = []
    for report in reports:
        ttc = reference.get(report.period)
        if ttc is None or report.status != "ok":
            continue
        rows.append(SavingsRow(
            strategy=report.strategy,
            period=report.period,
            parameters=report.parameters,
            total=_savings(ttc.mean_total, report.mean_total),
            until_switch=_savings(ttc.mean_until_switch, report.mean_until_switch),
        ))
    return rows


class SweepRunner:
    """Параллельный запуск ячеек пакетами в пуле процессов"""

    def __init__(self, workers: int = 0):
        self.workers = workers

    async def run(self, cells: List[ExperimentConfig]) -> SweepResult:
        if not cells:
            raise SimulationError("Пустая сетка")
        logger.info(f"🚀 Перебор {len(cells)} ячеек, процессов: {self.workers or 'нет'}")

        if self.workers <= 0:
            # по одной ячейке в потоке, цикл событий остаётся свободным
            reports = [await run_in_threadpool(run_cell, cell) for cell in cells]
        else:
            reports = await self._run_parallel(cells)

        failed = sum(1 for report in reports if report.status != "ok")
        if failed:
            logger.warning(f"⚠️ {failed} ячеек завершились ошибкой")
        logger.info(f"✅ Перебор завершён: {len(reports) - failed}/{len(reports)} ячеек")
        return SweepResult(reports=reports, savings=savings_table(reports))

    async def _run_parallel(self, cells: List[ExperimentConfig]) -> List[MetricsReport]:
        loop = asyncio.get_running_loop()
        reports: List[MetricsReport] = []
        batch_size = self.workers
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            for i in range(0, len(cells), batch_size):
                batch = cells[i:i + batch_size]
                results = await asyncio.gather(
                    *(loop.run_in_executor(pool, run_cell, cell) for cell in batch),
                    return_exceptions=True,
                )
                for cell, result in zip(batch, results):
                    if isinstance(result, BaseException):
                        logger.error(f"Ошибка в ячейке {cell.policy.kind} T={cell.period}: {result}", exc_info=result)
                        result = MetricsReport.failed(cell.policy.kind, cell.period, cell.t_end, str(result),
                                                      cell.parameters())
                    reports.append(result)
        return reports


def sweep(grid: SweepGrid, base: ExperimentConfig, workers: int = 0) -> SweepResult:
    """Синхронная обёртка для CLI и тестов"""
    return asyncio.run(SweepRunner(workers).run(grid.cells(base)))
