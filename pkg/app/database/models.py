from sqlalchemy import Column, Integer, String, Text, DateTime, Float, ForeignKey
from sqlalchemy.orm import declarative_base, relationship
from sqlalchemy.sql import func

Base = declarative_base()


class Sweep(Base):
    """Перебор сетки параметров"""
    __tablename__ = 'sweeps'

    id = Column(Integer, primary_key=True, autoincrement=True)
    grid = Column(Text, nullable=False)  # JSON сетки
    cells = Column(Integer, nullable=False, default=0)
    failed = Column(Integer, nullable=False, default=0)

    created_at = Column(DateTime, default=func.now(), nullable=False)

    # Связи
    runs = relationship("ExperimentRun", back_populates="sweep", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Sweep(id={self.id}, cells={self.cells})>"


class ExperimentRun(Base):
    """Отчёт одной конфигурации: стратегия, период, средние метрики"""
    __tablename__ = 'experiment_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    sweep_id = Column(Integer, ForeignKey('sweeps.id'), nullable=True, index=True)

    strategy = Column(String(16), nullable=False, index=True)
    period = Column(Float, nullable=False)
    t_end = Column(Float, nullable=False)
    status = Column(String(16), nullable=False, default="ok")
    error = Column(Text, nullable=True)

    parameters = Column(Text, nullable=False, default="{}")  # JSON
    report = Column(Text, nullable=False)  # MetricsReport в JSON

    created_at = Column(DateTime, default=func.now(), nullable=False)

    # Связи
    sweep = relationship("Sweep", back_populates="runs")

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, strategy={self.strategy}, period={self.period})>"
