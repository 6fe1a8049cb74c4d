"""Командная строка: run, sweep, certify, schedule, serve"""
import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import uvicorn
from pydantic import ValidationError
from sqlalchemy.ext.asyncio import AsyncSession, async_sessionmaker

from app.config import Settings, load_settings

logger = logging.getLogger(__name__)

EXIT_REJECTED = 1
EXIT_CONFIG = 2


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waterbox", description="Событийное управление WaterBox поверх TDMA")
    parser.add_argument("--config", help="Файл сценария KEY=VALUE (формат .env)")
    parser.add_argument("--out", help="Каталог результатов (по умолчанию OUTPUT_DIR)")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Прогон одной конфигурации")
    run.add_argument("--strategy", choices=["TTC", "PETC", "PSDETC", "PADETCabs", "PADETCrel"])
    run.add_argument("--period", type=float)
    run.add_argument("--sigma", type=float)
    run.add_argument("--mu", type=float)
    run.add_argument("--varrho", type=float)
    run.add_argument("--loss", type=float, dest="loss_probability")
    run.add_argument("--t-end", type=float, dest="t_end")
    run.add_argument("--repetitions", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--trace", action="store_true", help="Сохранить трассу пакетов первого повторения")
    run.add_argument("--store", action="store_true", help="Сохранить отчёт в базе")

    sweep = sub.add_parser("sweep", help="Перебор сетки параметров")
    sweep.add_argument("--strategies", default="TTC,PETC,PSDETC,PADETCabs,PADETCrel")
    sweep.add_argument("--periods", type=_floats, default=[1.0])
    sweep.add_argument("--sigmas", type=_floats, default=[0.2])
    sweep.add_argument("--mus", type=_floats, default=[0.95])
    sweep.add_argument("--varrhos", type=_floats, default=[85.0])
    sweep.add_argument("--common-seeds", action="store_true")
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--t-end", type=float, dest="t_end")
    sweep.add_argument("--repetitions", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--store", action="store_true")

    certify = sub.add_parser("certify", help="Проверка сертификата устойчивости")
    certify.add_argument("bundle", help="JSON: kind, sigma, bundle и, при необходимости, A, B, K")

    schedule = sub.add_parser("schedule", help="Раскладка суперкадра")
    schedule.add_argument("--protocol", required=True, choices=["CTDMA", "SDCTDMA", "ADCTDMA"])
    schedule.add_argument("--nodes", type=int, default=3)

    sub.add_parser("serve", help="HTTP API")
    return parser


def _overrides(args: argparse.Namespace, names) -> dict:
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


async def _store(settings: Settings, action):
    from app.database.connection import make_engine
    from app.database.models import Base

    engine = make_engine(settings.DATABASE_URL)
    try:
        async with engine.begin() as conn:
            await conn.run_sync(Base.metadata.create_all)
        async with async_sessionmaker(engine, class_=AsyncSession, expire_on_commit=False)() as session:
            return await action(session)
    finally:
        await engine.dispose()


def cmd_run(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    from app.services.experiment import ExperimentConfig, run_experiment, simulate_run
    from app.services.reports import RunLog, store_report, write_reports_csv

    overrides = _overrides(args, ("period", "sigma", "mu", "varrho", "loss_probability", "t_end",
                                  "repetitions", "seed"))
    if args.strategy:
        overrides["kind"] = args.strategy
    if "period" in overrides:
        overrides["T"] = overrides.pop("period")
    config = ExperimentConfig.from_settings(settings, **overrides)

    report = run_experiment(config)
    with RunLog(out / "runs.jsonl") as run_log:
        run_log.report(report)
    write_reports_csv([report], out / f"{config.policy.kind}_T{config.period:g}.csv")
    if args.trace:
        traced = simulate_run(config.model_copy(update={"record_trace": True}), 0)
        traced.simulator.export_trace(out / f"{config.policy.kind}_T{config.period:g}_trace.jsonl")
    if args.store:
        row = asyncio.run(_store(settings, lambda session: store_report(session, report)))
        logger.info(f"Отчёт сохранён: id={row.id}")

    total = report.mean_total
    print(f"{report.strategy} T={report.period:g} с: передач {total.state_transmissions:.1f},"
          f" нарушений {total.violations:.1f}, разряд {total.discharge_mAh:.3f} мА·ч,"
          f" перерегулирование {total.water_level_overshoot * 1000:.1f} мм")
    return 0


def cmd_sweep(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    from app.services.experiment import ExperimentConfig
    from app.services.reports import RunLog, store_sweep, write_reports_csv, write_savings_csv
    from app.services.sweep import SweepGrid, SweepRunner

    grid = SweepGrid(
        strategies=[s for s in args.strategies.split(",") if s],
        periods=args.periods,
        sigmas=args.sigmas,
        mus=args.mus,
        varrhos=args.varrhos,
        common_seeds=args.common_seeds,
    )
    base = ExperimentConfig.from_settings(settings, **_overrides(args, ("t_end", "repetitions", "seed")))
    workers = settings.WORKERS if args.workers is None else args.workers
    result = asyncio.run(SweepRunner(workers).run(grid.cells(base)))

    with RunLog(out / "runs.jsonl") as run_log:
        for report in result.reports:
            run_log.report(report)
    write_reports_csv(result.reports, out / "sweep.csv")
    write_savings_csv(result.savings, out / "savings.csv")
    if args.store:
        row = asyncio.run(_store(settings, lambda s: store_sweep(s, grid.model_dump_json(), result.reports)))
        logger.info(f"Перебор сохранён: id={row.id}")
    print(f"Ячеек: {len(result.reports)}, с ошибкой: {len(result.failed)}")
    return 0


def cmd_certify(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    from app.api.certificates import CertifyRequest, certify

    request = CertifyRequest.model_validate(json.loads(Path(args.bundle).read_text(encoding="utf-8")))
    response = certify(request)
    print(response.model_dump_json(indent=2))
    return 0 if response.feasible else EXIT_REJECTED


def cmd_schedule(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    from app.mac.schedule import SlotTimings, build_schedule

    plan = build_schedule(args.protocol, args.nodes, SlotTimings.from_settings(settings))
    print("\n".join(plan.describe()))
    return 0


def cmd_serve(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    from main import app

    config = uvicorn.Config(
        app,
        host=settings.API_HOST,
        port=settings.API_PORT,
        log_level="info" if settings.DEBUG else "warning"
    )
    uvicorn.Server(config).run()
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
    "schedule": cmd_schedule,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    from app.errors import SimulationError

    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args.config)
    except ValidationError as e:
        logging.basicConfig(level=logging.INFO)
        logger.error(f"❌ Некорректный файл сценария: {e}")
        return EXIT_CONFIG

    logging.basicConfig(
        level=getattr(logging, (args.log_level or settings.LOG_LEVEL).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    out = Path(args.out or settings.OUTPUT_DIR)
    try:
        return COMMANDS[args.command](args, settings, out)
    except (SimulationError, ValidationError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
