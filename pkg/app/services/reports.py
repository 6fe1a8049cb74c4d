"""Выгрузка результатов: CSV, журнал прогонов в JSONL и база данных"""
import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional

from loguru import logger as run_log
from sqlalchemy.ext.asyncio import AsyncSession

from app.database.models import ExperimentRun, Sweep
from app.services.metrics import METRIC_FIELDS, MetricsReport
from app.services.sweep import SavingsRow

logger = logging.getLogger(__name__)

PARAMETER_COLUMNS = ("sigma", "mu", "varrho", "eta_min")
REPORT_COLUMNS = ("strategy", "period", *PARAMETER_COLUMNS, "status", "window", *METRIC_FIELDS)
SAVINGS_COLUMNS = ("strategy", "period", *PARAMETER_COLUMNS, "window", *METRIC_FIELDS)


def _parameter_cells(parameters: dict) -> List[str]:
    return ["" if parameters.get(name) is None else repr(parameters[name]) for name in PARAMETER_COLUMNS]


def write_reports_csv(reports: Iterable[MetricsReport], path: Path) -> Path:
    """Средние метрики: по строке на конфигурацию и окно"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            head = [report.strategy, repr(report.period), *_parameter_cells(report.parameters), report.status]
            for window, metrics in (("total", report.mean_total), ("until_switch", report.mean_until_switch)):
                values = metrics.model_dump()
                writer.writerow([*head, window, *(repr(values[name]) for name in METRIC_FIELDS)])
    logger.info(f"Отчёт записан: {path}")
    return path


def write_savings_csv(rows: Iterable[SavingsRow], path: Path) -> Path:
    """Таблица экономии относительно TTC, %"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(SAVINGS_COLUMNS)
        for row in rows:
            head = [row.strategy, repr(row.period), *_parameter_cells(row.parameters)]
            for window, values in (("total", row.total), ("until_switch", row.until_switch)):
                writer.writerow([*head, window, *("" if values.get(n) is None else repr(values[n])
                                                  for n in METRIC_FIELDS)])
    return path


class RunLog:
    """Машиночитаемый журнал прогонов (loguru, serialize=True)"""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._sink_id = run_log.add(
            str(self.path),
            serialize=True,
            level="INFO",
            filter=lambda record: record["extra"].get("channel") == "runs",
        )
        self._log = run_log.bind(channel="runs")

    def report(self, report: MetricsReport) -> None:
        """Запись по каждому повторению и итоговая запись конфигурации"""
        for run in report.runs:
            self._log.bind(
                strategy=report.strategy,
                period=report.period,
                repetition=run.repetition,
                t_sm=run.t_sm,
                drops=run.drops,
                total=run.total.model_dump(),
                until_switch=run.until_switch.model_dump(),
            ).info("run")
        self._log.bind(
            strategy=report.strategy,
            period=report.period,
            parameters=report.parameters,
            status=report.status,
            error=report.error,
        ).info("report")

    def close(self) -> None:
        run_log.remove(self._sink_id)

    def __enter__(self) -> "RunLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


async def store_report(session: AsyncSession, report: MetricsReport, sweep_id: Optional[int] = None) -> ExperimentRun:
    """Сохранение отчёта конфигурации в базе"""
    row = ExperimentRun(
        sweep_id=sweep_id,
        strategy=report.strategy,
        period=report.period,
        t_end=report.t_end,
        status=report.status,
        error=report.error,
        parameters=json.dumps(report.parameters),
        report=report.model_dump_json(),
    )
    session.add(row)
    await session.commit()
    await session.refresh(row)
    logger.info(f"Отчёт {report.strategy} T={report.period} сохранён под id={row.id}")
    return row


async def store_sweep(session: AsyncSession, grid_json: str, reports: List[MetricsReport]) -> Sweep:
    """Сохранение перебора и всех его ячеек одной транзакцией"""
    sweep = Sweep(grid=grid_json, cells=len(reports),
                  failed=sum(1 for report in reports if report.status != "ok"))
    session.add(sweep)
    await session.flush()
    for report in reports:
        session.add(ExperimentRun(
            sweep_id=sweep.id,
            strategy=report.strategy,
            period=report.period,
            t_end=report.t_end,
            status=report.status,
            error=report.error,
            parameters=json.dumps(report.parameters),
            report=report.model_dump_json(),
        ))
    await session.commit()
    await session.refresh(sweep)
    logger.info(f"Перебор сохранён под id={sweep.id}: {sweep.cells} ячеек")
    return sweep
