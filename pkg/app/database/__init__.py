"""Хранилище отчётов экспериментов"""

from .models import Sweep, ExperimentRun, Base
from .connection import get_session, DatabaseManager, AsyncSessionLocal

__all__ = ["Sweep", "ExperimentRun", "Base", "get_session", "DatabaseManager", "AsyncSessionLocal"]
