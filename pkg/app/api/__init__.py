"""FastAPI routes"""

from . import experiments, certificates

__all__ = ["experiments", "certificates"]
