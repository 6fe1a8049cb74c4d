"""Проверка сертификатов устойчивости PETC, PSDETC и PADETC"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from app.core.numerics import expm, is_positive_definite, psd_factor, solve, symmetrize
from app.errors import AssumptionViolatedError, ConfigurationError, DimensionError, SingularMatrixError

logger = logging.getLogger(__name__)

Subset = FrozenSet[int]

F11_GRID_STEPS = 100
S_BAR_TOL = 1e-8


def subset_key(subset: Iterable[int], i: int) -> str:
    """Ключ ε_{J,i}: индексы J через запятую (с единицы), двоеточие, i"""
    return ",".join(str(j) for j in sorted(subset)) + f":{i}"


class CertificateBundle(BaseModel):
    """Кандидат в сертификат: P и скалярные множители"""
    P: List[List[float]]
    rho: float
    T: float
    mu1: float = 0.0
    mu2: float = 0.0
    mu3: float = 0.0
    gamma: float = 2.0
    beta1: float = 1.0
    beta2: float = 1.0
    varrho: float = 85.0
    epsilon: Dict[str, float] = {}
    epsilon_default: Optional[float] = None
    omega: Optional[List[float]] = None

    @field_validator("P")
    @classmethod
    def p_symmetric(cls, v: List[List[float]]) -> List[List[float]]:
        p = np.asarray(v, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("P должна быть квадратной")
        if not np.allclose(p, p.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(p).max())):
            raise ValueError("P должна быть симметричной")
        return v

    @field_validator("mu1", "mu2", "mu3")
    @classmethod
    def multipliers_nonnegative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("множители μ должны быть неотрицательными")
        return v

    @field_validator("rho", "T", "beta1", "beta2", "varrho")
    @classmethod
    def strictly_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("значение должно быть положительным")
        return v

    @field_validator("gamma")
    @classmethod
    def gamma_above_one(cls, v: float) -> float:
        if v <= 1:
            raise ValueError("gamma должна быть больше 1")
        return v

    @model_validator(mode="after")
    def epsilon_positive(self) -> "CertificateBundle":
        values = list(self.epsilon.values())
        if self.epsilon_default is not None:
            values.append(self.epsilon_default)
        if any(value <= 0 for value in values):
            raise ValueError("все ε должны быть положительными")
        return self

    @property
    def P_matrix(self) -> np.ndarray:
        return np.asarray(self.P, dtype=float)

    def eps(self, subset: Iterable[int], i: int) -> float:
        """ε_{J,i} по индексам с нуля"""
        key = subset_key([j + 1 for j in subset], i + 1)
        if key in self.epsilon:
            return self.epsilon[key]
        if self.epsilon_default is None:
            raise ConfigurationError(f"Не задано ε для {key}")
        return self.epsilon_default


@dataclass
class ClosedLoopMatrices:
    """Блочные матрицы замкнутого контура для n состояний"""
    A_bar: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    Q_i: List[np.ndarray]
    n: int
    _f_cache: Dict[Tuple[float, float, float], np.ndarray] = field(default_factory=dict, repr=False)

    def Q_sigma(self, sigma: float) -> np.ndarray:
        """Q = [[(1−σ)I, −I], [−I, I]]"""
        eye = np.eye(self.n)
        return np.block([[(1.0 - sigma) * eye, -eye], [-eye, eye]])

    def transition(self, T: float) -> np.ndarray:
        """e^{ĀT}"""
        return expm(self.A_bar, T)

    def gamma_subset(self, subset: Iterable[int]) -> np.ndarray:
        """Γ_J: диагональ из единиц на позициях J (индексы с нуля)"""
        diag = np.zeros(self.n)
        for j in subset:
            diag[j] = 1.0
        return np.diag(diag)

    def j_subset(self, subset: Iterable[int]) -> np.ndarray:
        """J_J = [[I, 0], [Γ_J, I − Γ_J]]"""
        gamma = self.gamma_subset(subset)
        eye = np.eye(self.n)
        return np.block([[eye, np.zeros((self.n, self.n))], [gamma, eye - gamma]])

    def theta(self, omega: Sequence[float]) -> np.ndarray:
        """Θ = (ω_1, …, ω_n)ᵀ"""
        omega = np.asarray(omega, dtype=float).reshape(-1, 1)
        if omega.shape[0] != self.n:
            raise DimensionError(f"omega должна иметь {self.n} компонент")
        return omega

    def delta_bar(self, subset: Iterable[int], omega: Sequence[float]) -> np.ndarray:
        """Δ̄_J = [0; Γ_JΘ]"""
        return np.vstack([np.zeros((self.n, 1)), self.gamma_subset(subset) @ self.theta(omega)])

    def hamiltonian(self, rho: float, gamma: float) -> np.ndarray:
        m = 2 * self.n
        eye = np.eye(m)
        h11 = self.A_bar + rho * eye
        h21 = -np.eye(m) / (gamma ** 2 - 1.0)
        return np.block([[h11, np.zeros((m, m))], [h21, -h11.T]])

    def F(self, tau: float, rho: float, gamma: float) -> np.ndarray:
        """F(τ) = e^{−Hτ}"""
        key = (float(tau), float(rho), float(gamma))
        if key not in self._f_cache:
            self._f_cache[key] = expm(-self.hamiltonian(rho, gamma), tau)
        return self._f_cache[key]

    def F_blocks(self, tau: float, rho: float, gamma: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        f = self.F(tau, rho, gamma)
        m = 2 * self.n
        return f[:m, :m], f[:m, m:], f[m:, :m], f[m:, m:]

    def s_bar(self, T: float, rho: float, gamma: float) -> np.ndarray:
        """S̄ с S̄S̄ᵀ = −F₁₁⁻¹(T)F₁₂(T)"""
        f11, f12, _, _ = self.F_blocks(T, rho, gamma)
        return psd_factor(-solve(f11, f12), tol=S_BAR_TOL)


def build_closed_loop(A: np.ndarray, B: np.ndarray, K: np.ndarray) -> ClosedLoopMatrices:
    """
    Сборка Ā = [[A, BK], [0, 0]], J₁, J₂ и Q_i

    Args:
        A: Матрица состояния n×n
        B: Матрица входа n×m
        K: Коэффициенты m×n (управление u = Kξ̂)

    Returns:
        ClosedLoopMatrices
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError(f"A должна быть квадратной, получено {A.shape}")
    if B.shape[0] != n or K.shape != (B.shape[1], n):
        raise DimensionError(f"Несогласованные размеры A {A.shape}, B {B.shape}, K {K.shape}")

    zeros = np.zeros((n, n))
    eye = np.eye(n)
    q_i = []
    for i in range(n):
        g = np.zeros((n, n))
        g[i, i] = 1.0
        q_i.append(np.block([[g, -g], [-g, g]]))
    return ClosedLoopMatrices(
        A_bar=np.block([[A, B @ K], [zeros, zeros]]),
        J1=np.block([[eye, zeros], [eye, zeros]]),
        J2=np.eye(2 * n),
        Q_i=q_i,
        n=n,
    )


def _sampling_lmi(P: np.ndarray, rho: float, T: float, q_term: np.ndarray, J: np.ndarray,
                  cl: ClosedLoopMatrices) -> np.ndarray:
    """[[e^{−2ρT}P + q_term, Jᵀe^{ĀᵀT}P], [⋆, P]]"""
    upper_right = J.T @ cl.transition(T).T @ P
    return np.block([
        [np.exp(-2.0 * rho * T) * P + q_term, upper_right],
        [upper_right.T, P],
    ])


def petc_matrices(bundle: CertificateBundle, sigma: float, cl: ClosedLoopMatrices) -> List[np.ndarray]:
    P, Q = bundle.P_matrix, cl.Q_sigma(sigma)
    return [
        _sampling_lmi(P, bundle.rho, bundle.T, -bundle.mu1 * Q, cl.J1, cl),
        _sampling_lmi(P, bundle.rho, bundle.T, bundle.mu2 * Q, cl.J2, cl),
    ]


def psdetc_matrices(bundle: CertificateBundle, sigma: float, cl: ClosedLoopMatrices) -> List[np.ndarray]:
    P, Q = bundle.P_matrix, cl.Q_sigma(sigma)
    return petc_matrices(bundle, sigma, cl) + [
        _sampling_lmi(P, bundle.rho, bundle.T, bundle.mu3 * Q, cl.J1, cl),
    ]


def _require_dimension(bundle: CertificateBundle, cl: ClosedLoopMatrices) -> None:
    if bundle.P_matrix.shape != (2 * cl.n, 2 * cl.n):
        raise DimensionError(f"P должна быть {2 * cl.n}×{2 * cl.n}")


def check_petc_certificate(bundle: CertificateBundle, sigma: float, cl: ClosedLoopMatrices,
                           tol: float = 1e-9) -> bool:
    """Обе блочные матрицы PETC положительно определены"""
    _require_dimension(bundle, cl)
    if not is_positive_definite(bundle.P_matrix, tol):
        return False
    return all(is_positive_definite(m, tol) for m in petc_matrices(bundle, sigma, cl))


def check_psdetc_certificate(bundle: CertificateBundle, sigma: float, cl: ClosedLoopMatrices,
                             tol: float = 1e-9) -> bool:
    """Все три блочные матрицы PSDETC положительно определены"""
    _require_dimension(bundle, cl)
    if not is_positive_definite(bundle.P_matrix, tol):
        return False
    return all(is_positive_definite(m, tol) for m in psdetc_matrices(bundle, sigma, cl))


def all_subsets(n: int) -> Iterator[Subset]:
    """Все 2ⁿ подмножества {0, …, n−1}"""
    for size in range(n + 1):
        for combo in itertools.combinations(range(n), size):
            yield frozenset(combo)


def require_f11_invertible(cl: ClosedLoopMatrices, T: float, rho: float, gamma: float,
                           cond_limit: float = 1e12) -> None:
    """F₁₁(τ) обратима на сетке τ ∈ [0, T] с шагом T/100"""
    for tau in np.linspace(0.0, T, F11_GRID_STEPS + 1):
        f11 = cl.F_blocks(tau, rho, gamma)[0]
        cond = np.linalg.cond(f11)
        if not np.isfinite(cond) or cond > cond_limit:
            raise AssumptionViolatedError(f"F11({tau:.4g}) вырождена (cond={cond:.3e})")


def padetc_matrix(bundle: CertificateBundle, cl: ClosedLoopMatrices, subset: Subset) -> np.ndarray:
    """
    Блочная матрица 5×5 билинейного неравенства для подмножества J

    F̃ стоит в двух блоках ровно в том виде, в каком задано неравенство;
    нижний треугольник зеркалит верхний.
    """
    n, m = cl.n, 2 * cl.n
    P = bundle.P_matrix
    omega = bundle.omega if bundle.omega is not None else [1.0 / np.sqrt(n)] * n
    f11, _, f21, _ = cl.F_blocks(bundle.T, bundle.rho, bundle.gamma)
    try:
        f11_inv = solve(f11, np.eye(m))
    except SingularMatrixError as e:
        raise AssumptionViolatedError(str(e)) from e
    s_bar = cl.s_bar(bundle.T, bundle.rho, bundle.gamma)
    f_tilde = f11_inv.T @ P @ f11_inv + f21 @ f11_inv

    j_mat = cl.j_subset(subset)
    theta = cl.theta(omega)
    delta = cl.delta_bar(subset, omega)
    complement = [i for i in range(n) if i not in subset]

    h1 = -bundle.beta1 * np.eye(m) + bundle.beta2 * j_mat.T @ j_mat
    h2 = bundle.beta1 * bundle.varrho ** 2 * np.eye(1) - bundle.beta2 * delta.T @ delta
    for i in subset:
        h1 = h1 - bundle.eps(subset, i) * cl.Q_i[i]
        h2 = h2 + bundle.eps(subset, i) * theta.T @ cl.gamma_subset([i]) @ theta
    for i in complement:
        h1 = h1 + bundle.eps(subset, i) * cl.Q_i[i]
        h2 = h2 - bundle.eps(subset, i) * theta.T @ cl.gamma_subset([i]) @ theta

    zm = np.zeros((m, m))
    zc = np.zeros((m, 1))
    upper = [
        [bundle.beta2 * np.eye(m), f11_inv.T @ P @ s_bar, f_tilde, -bundle.beta2 * j_mat, zc],
        [None, np.eye(m) - s_bar.T @ P @ s_bar, zm, zm, zc],
        [None, None, f_tilde, zm, zc],
        [None, None, None, P + h1, zc],
        [None, None, None, None, h2],
    ]
    rows = []
    for r in range(5):
        row = []
        for c in range(5):
            if c >= r:
                block = upper[r][c]
                row.append(symmetrize(block) if c == r else block)
            else:
                row.append(upper[c][r].T)
        rows.append(row)
    return np.block(rows)


def check_padetc_certificate(bundle: CertificateBundle, cl: ClosedLoopMatrices, n: Optional[int] = None,
                             tol: float = 1e-9, parallel: bool = False) -> bool:
    """
    Проверка билинейного неравенства PADETC по всем 2ⁿ подмножествам J

    Args:
        bundle: Кандидат (P, β₁, β₂, ϱ, ε, γ, ω)
        cl: Матрицы замкнутого контура
        n: Число узлов (по умолчанию размерность контура)
        tol: Допуск ведущих элементов Холецкого
        parallel: Проверять подмножества в пуле потоков

    Returns:
        True если матрица положительно определена для каждого J
    """
    n = cl.n if n is None else n
    if n != cl.n:
        raise DimensionError(f"n={n} не совпадает с размерностью контура {cl.n}")
    _require_dimension(bundle, cl)
    if not is_positive_definite(bundle.P_matrix, tol):
        return False
    require_f11_invertible(cl, bundle.T, bundle.rho, bundle.gamma)

    def check(subset: Subset) -> bool:
        return is_positive_definite(padetc_matrix(bundle, cl, subset), tol)

    subsets = list(all_subsets(n))
    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(check, subsets))
    else:
        results = [check(s) for s in subsets]
    for subset, ok in zip(subsets, results):
        if not ok:
            logger.debug(f"Неравенство нарушено для J={sorted(j + 1 for j in subset)}")
    return all(results)


def grid_search(
        candidates: Iterable[CertificateBundle],
        feasible: Callable[[CertificateBundle], bool],
) -> Optional[CertificateBundle]:
    """Перебор кандидатов до первого допустимого (оракул для малых примеров)"""
    for checked, bundle in enumerate(candidates, start=1):
        if feasible(bundle):
            logger.info(f"Найден допустимый сертификат после {checked} кандидатов")
            return bundle
    return None


def min_eigenvalue(m: np.ndarray) -> float:
    """Наименьшее собственное число симметризованной матрицы"""
    return float(np.linalg.eigvalsh(symmetrize(m)).min())
