from fastapi import APIRouter, HTTPException, Depends
from fastapi.concurrency import run_in_threadpool
from sqlalchemy.ext.asyncio import AsyncSession
from sqlalchemy import select
from pydantic import BaseModel
from typing import Optional, List
import json
import logging

from app.config import settings
from app.core.triggers import StrategyKind
from app.database.connection import get_session
from app.database.models import ExperimentRun, Sweep
from app.mac.schedule import SlotTimings, build_schedule
from app.services.experiment import ExperimentConfig, run_experiment
from app.services.metrics import MetricsReport
from app.services.reports import store_report, store_sweep
from app.services.sweep import SweepGrid, SweepResult, SweepRunner

logger = logging.getLogger(__name__)

router = APIRouter()
schedule_router = APIRouter()


class RunRequest(BaseModel):
    """Запрос на прогон одной конфигурации"""
    strategy: StrategyKind = "TTC"
    period: float = 1.0
    sigma: Optional[float] = None
    mu: Optional[float] = None
    varrho: Optional[float] = None
    t_end: Optional[float] = None
    repetitions: Optional[int] = None
    seed: Optional[int] = None
    loss_probability: Optional[float] = None
    store: bool = True

    def to_config(self) -> ExperimentConfig:
        overrides = {"kind": self.strategy, "T": self.period}
        for name in ("sigma", "mu", "varrho", "t_end", "repetitions", "seed", "loss_probability"):
            value = getattr(self, name)
            if value is not None:
                overrides[name] = value
        return ExperimentConfig.from_settings(settings, **overrides)


class RunResponse(BaseModel):
    id: Optional[int] = None
    report: MetricsReport


class SweepRequest(BaseModel):
    grid: SweepGrid
    t_end: Optional[float] = None
    repetitions: Optional[int] = None
    seed: Optional[int] = None
    store: bool = True


class SweepResponse(BaseModel):
    id: Optional[int] = None
    result: SweepResult


class ScheduleResponse(BaseModel):
    protocol: str
    n_nodes: int
    min_interval_ms: float
    slots: List[dict]


@router.post("/run", response_model=RunResponse)
async def run(request: RunRequest, db: AsyncSession = Depends(get_session)):
    """
    Прогон конфигурации со всеми повторениями

    Args:
        request: Стратегия, период и переопределения настроек
        db: Сессия базы данных

    Returns:
        Средние метрики и id сохранённого отчёта
    """
    config = request.to_config()
    report = await run_in_threadpool(run_experiment, config)
    row_id = None
    if request.store:
        row = await store_report(db, report)
        row_id = row.id
    return RunResponse(id=row_id, report=report)


@router.post("/sweep", response_model=SweepResponse)
async def sweep(request: SweepRequest, db: AsyncSession = Depends(get_session)):
    """Перебор сетки; неудачные ячейки помечаются, перебор продолжается"""
    overrides = {
        name: getattr(request, name)
        for name in ("t_end", "repetitions", "seed")
        if getattr(request, name) is not None
    }
    base = ExperimentConfig.from_settings(settings, **overrides)
    result = await SweepRunner(settings.WORKERS).run(request.grid.cells(base))
    sweep_id = None
    if request.store:
        row = await store_sweep(db, request.grid.model_dump_json(), result.reports)
        sweep_id = row.id
    return SweepResponse(id=sweep_id, result=result)


@schedule_router.get("", response_model=ScheduleResponse)
async def schedule(protocol: str, n_nodes: int = 3):
    """Раскладка суперкадра минимальной длины"""
    plan = build_schedule(protocol, n_nodes, SlotTimings.from_settings(settings))
    return ScheduleResponse(
        protocol=plan.protocol,
        n_nodes=plan.n_nodes,
        min_interval_ms=plan.required_ms,
        slots=[
            {"node": s.node_id, "kind": s.kind, "start_ms": s.start_ms, "end_ms": s.end_ms,
             "usable_ms": s.usable_ms}
            for s in plan.slots
        ],
    )


@router.get("/sweeps/{sweep_id}", response_model=List[MetricsReport])
async def get_sweep(sweep_id: int, db: AsyncSession = Depends(get_session)):
    """Отчёты всех ячеек сохранённого перебора"""
    sweep_row = await db.get(Sweep, sweep_id)
    if not sweep_row:
        raise HTTPException(status_code=404, detail="Перебор не найден")
    result = await db.execute(
        select(ExperimentRun).where(ExperimentRun.sweep_id == sweep_id).order_by(ExperimentRun.id)
    )
    return [MetricsReport.model_validate(json.loads(row.report)) for row in result.scalars()]


@router.get("/{run_id}", response_model=MetricsReport)
async def get_run(run_id: int, db: AsyncSession = Depends(get_session)):
    """Сохранённый отчёт по id"""
    row = await db.get(ExperimentRun, run_id)
    if not row:
        raise HTTPException(status_code=404, detail="Отчёт не найден")
    return MetricsReport.model_validate(json.loads(row.report))
