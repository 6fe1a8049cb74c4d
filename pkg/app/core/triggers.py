"""
Стратегии запуска передачи: TTC, PETC, PSDETC, PADETCabs, PADETCrel

Чистые функции проверяют условия событий и обновляют пороги, классы стратегий
хранят состояние узлов и контроллера между суперкадрами.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, field_validator

from app.errors import ArgumentError, ConfigurationError, DegenerateThresholdError

logger = logging.getLogger(__name__)

StrategyKind = Literal["TTC", "PETC", "PSDETC", "PADETCabs", "PADETCrel"]

PROTOCOL_BY_STRATEGY = {
    "TTC": "CTDMA",
    "PETC": "CTDMA",
    "PSDETC": "SDCTDMA",
    "PADETCabs": "ADCTDMA",
    "PADETCrel": "ADCTDMA",
}


class TriggerPolicy(BaseModel):
    """Параметры стратегии запуска"""
    kind: StrategyKind = "TTC"
    sigma: float = 0.2
    theta: Optional[List[float]] = None
    mu: float = 0.95
    varrho: float = 85.0
    eta: Optional[float] = None
    eta_min: float = 3e-3
    omega: Optional[List[float]] = None
    T: float = 1.0
    te_mode: Literal["fixed_T", "last_interevent"] = "fixed_T"
    rel_update: Literal["contracting", "printed"] = "contracting"

    @field_validator("sigma")
    @classmethod
    def sigma_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("sigma должна быть положительной")
        return v

    @field_validator("mu")
    @classmethod
    def mu_in_unit_interval(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("mu должна лежать в (0, 1)")
        return v

    @field_validator("varrho", "eta_min", "T")
    @classmethod
    def strictly_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("значение должно быть положительным")
        return v

    @field_validator("eta")
    @classmethod
    def eta_nonnegative(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v < 0:
            raise ValueError("eta не может быть отрицательной")
        return v

    @field_validator("omega")
    @classmethod
    def omega_unit(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and abs(float(np.linalg.norm(v)) - 1.0) > 1e-9:
            raise ValueError("|omega| должна быть равна 1")
        return v

    @field_validator("theta")
    @classmethod
    def theta_zero_sum(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and abs(sum(v)) > 1e-9:
            raise ValueError("сумма theta должна быть нулевой")
        return v

    @property
    def protocol(self) -> str:
        return PROTOCOL_BY_STRATEGY[self.kind]

    def omega_for(self, n: int) -> np.ndarray:
        if self.omega is None:
            return np.full(n, 1.0 / math.sqrt(n))
        if len(self.omega) != n:
            raise ConfigurationError(f"omega должна иметь {n} компонент")
        return np.asarray(self.omega, dtype=float)


@dataclass
class HeldState:
    """Удерживаемое контроллером состояние ξ̂"""
    xi_hat: np.ndarray
    last_update_time: float = 0.0
    last_event_time: Optional[float] = None

    def error(self, xi: np.ndarray) -> np.ndarray:
        """ε = ξ̂ − ξ"""
        return self.xi_hat - xi


@dataclass(frozen=True)
class Payload:
    """Содержимое сообщения узла в X-слоте"""
    kind: Literal["state_x", "increment_m"]
    value: float = 0.0
    sign: int = 0
    m: int = 0


@dataclass
class TriggerDecision:
    """Множество сработавших узлов J и их полезная нагрузка (узлы нумеруются с нуля)"""
    triggered_nodes: FrozenSet[int]
    payloads: Dict[int, Payload] = field(default_factory=dict)
    control_update_required: bool = False
    xi_hat: Optional[np.ndarray] = None


def _absolute(xi: np.ndarray) -> Dict[int, Payload]:
    return {i: Payload("state_x", value=float(x)) for i, x in enumerate(xi)}


def ttc_decide(xi: np.ndarray) -> TriggerDecision:
    """Периодическая передача: срабатывают все узлы"""
    xi = np.asarray(xi, dtype=float)
    return TriggerDecision(
        triggered_nodes=frozenset(range(xi.shape[0])),
        payloads=_absolute(xi),
        control_update_required=True,
        xi_hat=xi.copy(),
    )


def petc_value(xi: np.ndarray, xi_hat: np.ndarray, sigma: float) -> float:
    """ξ_pᵀQξ_p = (1−σ)ξᵀξ − 2ξᵀξ̂ + ξ̂ᵀξ̂"""
    xi = np.asarray(xi, dtype=float)
    xi_hat = np.asarray(xi_hat, dtype=float)
    return float((1.0 - sigma) * xi @ xi - 2.0 * xi @ xi_hat + xi_hat @ xi_hat)


def petc_decide(xi: np.ndarray, xi_hat: np.ndarray, sigma: float) -> TriggerDecision:
    """
    Централизованное условие PETC

    Args:
        xi: Измеренное состояние
        xi_hat: Удерживаемое состояние
        sigma: Параметр условия, σ > 0

    Returns:
        Все узлы при ξ_pᵀQξ_p > 0, иначе пустое решение с прежним ξ̂
    """
    if sigma <= 0:
        raise ConfigurationError("sigma должна быть положительной")
    xi = np.asarray(xi, dtype=float)
    if petc_value(xi, xi_hat, sigma) > 0:
        return TriggerDecision(
            triggered_nodes=frozenset(range(xi.shape[0])),
            payloads=_absolute(xi),
            control_update_required=True,
            xi_hat=xi.copy(),
        )
    return TriggerDecision(triggered_nodes=frozenset(), xi_hat=np.asarray(xi_hat, dtype=float).copy())


def psdetc_local_check(xi_i: float, eps_i: float, sigma: float, theta_i: float) -> bool:
    """ε_i² − σξ_i² > θ_i"""
    return eps_i * eps_i - sigma * xi_i * xi_i > theta_i


def psdetc_compute_theta(xi: np.ndarray, xi_dot: np.ndarray, sigma: float, t_e: float) -> np.ndarray:
    """
    Смещения θ, выравнивающие прогнозы Ĝ_i на момент t_k + t_e

    Прогноз первого порядка: ξ̂_i = ξ_i + ξ̇_i·t_e, ε̂_i = −ξ̇_i·t_e.
    Решение замкнутое: θ_i = d_i − mean(d), откуда Σθ = 0 и все Ĝ_i = −mean(d).
    """
    if t_e <= 0:
        raise ArgumentError(f"t_e должно быть положительным, получено {t_e}")
    xi = np.asarray(xi, dtype=float)
    xi_dot = np.asarray(xi_dot, dtype=float)
    eps_pred = -xi_dot * t_e
    xi_pred = xi + xi_dot * t_e
    d = eps_pred ** 2 - sigma * xi_pred ** 2
    return d - d.mean()


def padetc_local_check(eps_i: float, omega_i: float, eta: float) -> bool:
    """ε_i² ≥ ω_i²η²"""
    return eps_i * eps_i >= omega_i * omega_i * eta * eta


def padetc_update_threshold(eta: float, xi_hat_plus: np.ndarray, mu: float, varrho: float, eta_min: float) -> float:
    """Закон обновления глобального порога η, случаи проверяются по порядку"""
    norm = float(np.linalg.norm(xi_hat_plus))
    if norm <= varrho * eta and eta > eta_min / mu:
        return mu * eta
    if norm <= varrho * eta and eta <= eta_min / mu:
        return eta_min
    if norm >= varrho * eta / mu:
        return eta / mu
    return eta


def padetc_apply_update(
        xi_hat_prev_i: float,
        xi_i: float,
        eta_i: float,
        mode: Literal["abs", "rel"],
        direction: Literal["contracting", "printed"] = "contracting",
) -> Tuple[float, Payload]:
    """
    Обновление ξ̂_i сработавшего узла

    Args:
        xi_hat_prev_i: Прежнее значение ξ̂_i
        xi_i: Измерение узла
        eta_i: Локальный порог η_i = ω_i²η²
        mode: abs - абсолютное значение, rel - квантованное приращение
        direction: contracting приближает ξ̂ к ξ, printed прибавляет sign(ξ̂ − ξ)·m√η_i

    Returns:
        Новое ξ̂_i и полезная нагрузка сообщения
    """
    if mode == "abs":
        return float(xi_i), Payload("state_x", value=float(xi_i))
    if eta_i <= 0:
        raise DegenerateThresholdError("η_i = 0 в относительном режиме")
    step = math.sqrt(eta_i)
    diff = xi_hat_prev_i - xi_i
    sign = 1 if diff >= 0 else -1
    m = int(math.floor(abs(diff) / step))
    return decode_increment(xi_hat_prev_i, sign, m, eta_i, direction), Payload("increment_m", sign=sign, m=m)


def decode_increment(
        xi_hat_prev_i: float,
        sign: int,
        m: int,
        eta_i: float,
        direction: Literal["contracting", "printed"] = "contracting",
) -> float:
    """Восстановление ξ̂_i по (sign, m) на стороне контроллера"""
    delta = sign * m * math.sqrt(eta_i)
    if direction == "printed":
        return xi_hat_prev_i + delta
    return xi_hat_prev_i - delta


class TriggerStrategy:
    """
    Состояние стратегии на узлах и на контроллере

    Узлы видят только свои измерения и свою копию ξ̂_j; контроллер получает
    доставленные сообщения и решает, нужно ли обновлять управление.
    """

    kind: str = ""
    needs_violation_flags = False

    def __init__(self, policy: TriggerPolicy, n: int):
        self.policy = policy
        self.n = n
        self.held = HeldState(xi_hat=np.zeros(n))
        self.node_xi_hat: List[Optional[float]] = [None] * n
        self._received: Dict[int, Payload] = {}
        self._pending: Dict[int, float] = {}

    @property
    def protocol(self) -> str:
        return PROTOCOL_BY_STRATEGY[self.kind]

    # Узел

    def node_wants_update(self, j: int, y_j: float) -> bool:
        return True

    def node_payload(self, j: int, y_j: float) -> Payload:
        self._pending[j] = float(y_j)
        return Payload("state_x", value=float(y_j))

    def node_delivered(self, j: int) -> None:
        """Узел получил подтверждение своего сообщения о состоянии"""
        if j in self._pending:
            self.node_xi_hat[j] = self._pending.pop(j)

    def node_receive_params(self, j: int, params: Dict[str, float]) -> None:
        pass

    # Контроллер

    def controller_receive(self, j: int, payload: Payload) -> None:
        self._received[j] = payload

    def _apply_received(self, time: float) -> bool:
        if not self._received:
            return False
        for j, payload in self._received.items():
            self.held.xi_hat[j] = payload.value
        self._received.clear()
        self.held.last_update_time = time
        return True

    def controller_decide(self, time: float) -> bool:
        """Обработка доставленных сообщений; True - требуется новое управление"""
        raise NotImplementedError

    def after_control(self, time: float, xi_dot: np.ndarray, violation: bool) -> None:
        pass

    def controller_params(self, j: int, violation: bool) -> Dict[str, float]:
        """Параметры, вкладываемые в подтверждение U-слота узла j"""
        return {}

    def params_delivered(self, j: int, params: Dict[str, float]) -> None:
        pass

    def end_frame(self) -> None:
        self._received.clear()
        self._pending.clear()


class TimeTriggered(TriggerStrategy):
    kind = "TTC"

    def controller_decide(self, time: float) -> bool:
        self._apply_received(time)
        self.held.last_event_time = time
        return True


class PeriodicEventTriggered(TriggerStrategy):
    kind = "PETC"

    def controller_decide(self, time: float) -> bool:
        # потерянные x_j заменяются удерживаемым значением
        measured = self.held.xi_hat.copy()
        for j, payload in self._received.items():
            measured[j] = payload.value
        self._received.clear()
        decision = petc_decide(measured, self.held.xi_hat, self.policy.sigma)
        if decision.control_update_required:
            self.held.xi_hat = decision.xi_hat
            self.held.last_update_time = time
            self.held.last_event_time = time
        return decision.control_update_required


class SynchronousDecentralized(TriggerStrategy):
    kind = "PSDETC"
    needs_violation_flags = True

    def __init__(self, policy: TriggerPolicy, n: int):
        super().__init__(policy, n)
        self.node_theta = np.zeros(n) if policy.theta is None else np.asarray(policy.theta, dtype=float)
        self.theta = self.node_theta.copy()
        self._previous_event: Optional[float] = None

    def node_wants_update(self, j: int, y_j: float) -> bool:
        held = self.node_xi_hat[j]
        if held is None:
            return True
        return psdetc_local_check(y_j, held - y_j, self.policy.sigma, float(self.node_theta[j]))

    def controller_decide(self, time: float) -> bool:
        if not self._apply_received(time):
            return False
        self._previous_event = self.held.last_event_time
        self.held.last_event_time = time
        return True

    def _t_e(self) -> float:
        if self.policy.te_mode == "last_interevent" and self._previous_event is not None:
            gap = self.held.last_event_time - self._previous_event
            if gap > 0:
                return gap
        return self.policy.T

    def after_control(self, time: float, xi_dot: np.ndarray, violation: bool) -> None:
        if violation:
            self.theta = psdetc_compute_theta(self.held.xi_hat, xi_dot, self.policy.sigma, self._t_e())

    def controller_params(self, j: int, violation: bool) -> Dict[str, float]:
        return {"theta": float(self.theta[j])} if violation else {}

    def node_receive_params(self, j: int, params: Dict[str, float]) -> None:
        if "theta" in params:
            self.node_theta[j] = params["theta"]


class AsynchronousDecentralized(TriggerStrategy):
    """PADETC: срабатывают только узлы с нарушенным локальным условием"""

    kind = "PADETCabs"

    def __init__(self, policy: TriggerPolicy, n: int):
        super().__init__(policy, n)
        self.omega = policy.omega_for(n)
        self.eta: Optional[float] = policy.eta
        self.node_eta: List[Optional[float]] = [policy.eta] * n
        self.eta_delivered: List[Optional[float]] = [policy.eta] * n

    @property
    def relative(self) -> bool:
        return self.kind == "PADETCrel"

    def local_threshold(self, j: int, eta: float) -> float:
        """η_j = ω_j²η²"""
        return float(self.omega[j] ** 2 * eta ** 2)

    def node_wants_update(self, j: int, y_j: float) -> bool:
        held, eta = self.node_xi_hat[j], self.node_eta[j]
        if held is None or eta is None:
            return True
        return padetc_local_check(held - y_j, float(self.omega[j]), eta)

    def node_payload(self, j: int, y_j: float) -> Payload:
        held, eta = self.node_xi_hat[j], self.node_eta[j]
        if not self.relative or held is None or eta is None:
            return super().node_payload(j, y_j)
        new_value, payload = padetc_apply_update(
            held, y_j, self.local_threshold(j, eta), "rel", self.policy.rel_update
        )
        self._pending[j] = new_value
        return payload

    def controller_receive(self, j: int, payload: Payload) -> None:
        if payload.kind == "increment_m":
            eta = self.eta_delivered[j]
            if eta is None:
                raise DegenerateThresholdError(f"Узел {j} прислал приращение до получения η")
            value = decode_increment(
                float(self.held.xi_hat[j]), payload.sign, payload.m,
                self.local_threshold(j, eta), self.policy.rel_update,
            )
            payload = Payload("state_x", value=value)
        super().controller_receive(j, payload)

    def controller_decide(self, time: float) -> bool:
        if not self._apply_received(time):
            return False
        self.held.last_event_time = time
        return True

    def after_control(self, time: float, xi_dot: np.ndarray, violation: bool) -> None:
        if self.eta is None:
            if not violation:
                return
            start = float(np.linalg.norm(self.held.xi_hat)) / self.policy.varrho
            self.eta = start if start > 0 else self.policy.eta_min
            logger.debug(f"Начальный порог η = {self.eta:.3e}")
            return
        self.eta = padetc_update_threshold(
            self.eta, self.held.xi_hat, self.policy.mu, self.policy.varrho, self.policy.eta_min
        )

    def controller_params(self, j: int, violation: bool) -> Dict[str, float]:
        if self.eta is None:
            return {}
        if violation or self.eta_delivered[j] != self.eta:
            return {"eta": self.eta}
        return {}

    def params_delivered(self, j: int, params: Dict[str, float]) -> None:
        if "eta" in params:
            self.eta_delivered[j] = params["eta"]

    def node_receive_params(self, j: int, params: Dict[str, float]) -> None:
        if "eta" in params:
            self.node_eta[j] = params["eta"]


class AsynchronousDecentralizedRelative(AsynchronousDecentralized):
    kind = "PADETCrel"


STRATEGIES = {
    cls.kind: cls
    for cls in (
        TimeTriggered,
        PeriodicEventTriggered,
        SynchronousDecentralized,
        AsynchronousDecentralized,
        AsynchronousDecentralizedRelative,
    )
}


def build_strategy(policy: TriggerPolicy, n: int) -> TriggerStrategy:
    """Стратегия по типу из политики"""
    try:
        return STRATEGIES[policy.kind](policy, n)
    except KeyError:
        raise ConfigurationError(f"Неизвестная стратегия {policy.kind}")
