"""Небольшое ядро плотной линейной алгебры для certify и triggers"""
import logging

import numpy as np
import scipy.linalg

from app.errors import DimensionError, NotPositiveSemidefiniteError, SingularMatrixError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9


def _require_square(m: np.ndarray, name: str = "M") -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"{name} должна быть квадратной, получено {m.shape}")
    return m


def symmetrize(m: np.ndarray) -> np.ndarray:
    """(M + Mᵀ)/2"""
    m = _require_square(m)
    return 0.5 * (m + m.T)


def expm(m: np.ndarray, t: float = 1.0) -> np.ndarray:
    """
    Матричная экспонента e^{Mt}

    Args:
        m: Квадратная матрица
        t: Множитель времени

    Returns:
        e^{Mt} (scaling-and-squaring с аппроксимацией Паде)
    """
    m = _require_square(m)
    return scipy.linalg.expm(m * float(t))


def is_positive_definite(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """
    Проверка положительной определённости через разложение Холецкого

    Args:
        m: Квадратная матрица (симметризуется)
        tol: Минимально допустимый ведущий элемент

    Returns:
        True если все ведущие элементы разложения больше tol
    """
    sym = symmetrize(m)
    try:
        lower = np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        return False
    pivots = np.diag(lower) ** 2
    return bool(np.all(pivots > tol))


def psd_factor(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """
    Множитель S̄ с S̄S̄ᵀ = M для положительно полуопределённой M

    Допускаются вырожденные матрицы: собственные числа в [-tol·(1+‖M‖), 0]
    обнуляются перед извлечением корня.

    Args:
        m: Симметричная PSD матрица
        tol: Относительный допуск

    Returns:
        Матрица S̄ того же размера
    """
    sym = symmetrize(m)
    scale = 1.0 + np.linalg.norm(sym, 2)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals.min() < -tol * scale:
        raise NotPositiveSemidefiniteError(
            f"Собственное число {eigvals.min():.3e} ниже допуска {-tol * scale:.3e}"
        )
    clipped = np.clip(eigvals, 0.0, None)
    return eigvecs * np.sqrt(clipped)


def solve(m: np.ndarray, b: np.ndarray, cond_limit: float = 1e12) -> np.ndarray:
    """
    Решение MX = B

    Args:
        m: Квадратная невырожденная матрица
        b: Правая часть
        cond_limit: Предельное число обусловленности

    Returns:
        X
    """
    m = _require_square(m)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != m.shape[0]:
        raise DimensionError(f"Правая часть {b.shape} не согласована с {m.shape}")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularMatrixError(f"Матрица вырождена (cond={cond:.3e})")
    return scipy.linalg.solve(m, b)
