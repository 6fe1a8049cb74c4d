"""Исключения симулятора"""


class SimulationError(Exception):
    """Базовая ошибка симулятора"""


class DimensionError(SimulationError):
    """Несогласованные размерности матриц"""


class NotPositiveSemidefiniteError(SimulationError):
    """Матрица не является положительно полуопределённой"""


class SingularMatrixError(SimulationError):
    """Матрица вырождена в пределах допуска"""


class ArgumentError(SimulationError):
    """Недопустимый аргумент операции"""


class ConfigurationError(SimulationError):
    """Некорректная конфигурация сценария"""


class InfeasibleScheduleError(SimulationError):
    """Суперкадр не вмещает слоты протокола"""


class IncompleteTraceError(SimulationError):
    """Трасса не доходит до t_end"""


class DegenerateThresholdError(SimulationError):
    """Нулевой локальный порог в относительном режиме PADETC"""


class AssumptionViolatedError(SimulationError):
    """Нарушено допущение об обратимости F11(τ)"""
