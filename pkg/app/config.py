from typing import List, Literal, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Настройки симулятора и сервиса"""

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    # Основные настройки
    DEBUG: bool = True
    API_HOST: str = "0.0.0.0"
    API_PORT: int = 8000
    LOG_LEVEL: str = "INFO"

    # Хранилище отчётов
    DATABASE_URL: str = "sqlite+aiosqlite:///./waterbox.db"
    OUTPUT_DIR: str = "out"

    # Эксперимент
    STRATEGY: str = "TTC"
    PERIOD: float = 1.0  # секунды
    T_END: float = 110.0  # секунды
    REPETITIONS: int = 10
    SEED: int = 2017
    WORKERS: int = 0  # 0 - последовательно

    # Параметры триггеров
    SIGMA: float = 0.2
    MU: float = 0.95
    VARRHO: float = 85.0
    ETA_MIN: float = 3e-3  # м
    ETA_INIT: Optional[float] = None  # None -> |ξ̂(0)|/ϱ
    OMEGA: Optional[List[float]] = None  # None -> (1,1,1)/√3
    TE_MODE: str = "fixed_T"
    REL_UPDATE: str = "contracting"

    # Слоты и задержки, мс
    X_SLOT_MS: float = 80.0
    U_SLOT_MS: float = 50.0
    V_SLOT_MS: float = 50.0
    CONTROL_DELAY_MS: float = 10.0
    VIOLATION_DELAY_MS: float = 5.0
    GUARD_MS: float = 1.0

    # Размеры пакетов, байты
    STATE_BYTES: int = 36
    ACK_BYTES: int = 1
    REQUEST_BYTES: int = 1
    CONTROL_BYTES: int = 2
    PARAM_BYTES: int = 2
    INCREMENT_BYTES: int = 4

    # Радио и энергопотребление
    LOSS_PROBABILITY: float = 0.0
    PER_TRY_MS: float = 10.0
    BITRATE_KBPS: float = 250.0
    SENSE_MS: float = 2.0
    ACTUATE_MS: float = 20.0
    CURRENT_SLEEP_MA: float = 10.0
    CURRENT_IDLE_MA: float = 20.0
    CURRENT_RX_MA: float = 120.0
    CURRENT_TX_MA: float = 120.0
    CURRENT_SENSE_MA: float = 40.0
    CURRENT_ACTUATE_MA: float = 150.0

    # Модель WaterBox
    SENSOR_STD: float = 0.0005  # м
    H_REF: List[float] = [0.06, 0.06, 0.06]
    H_LOW: List[float] = [0.03, 0.03, 0.03]
    B1: List[List[float]] = [
        [0.1436e-5, -0.0170e-5, -0.0164e-5],
        [-0.0098e-5, 0.1060e-5, -0.0100e-5],
        [-0.0139e-5, -0.0139e-5, 0.1492e-5],
    ]
    B2: List[List[float]] = [
        [0.7666e-5, -0.0493e-5, -0.0457e-5],
        [-0.0274e-5, 0.5848e-5, -0.0279e-5],
        [-0.0393e-5, -0.0432e-5, 0.7865e-5],
    ]
    K1: List[List[float]] = [
        [99950.0, 3029.0, 872.0],
        [-3014.0, 99940.0, -1679.0],
        [-922.0, 1652.0, 99982.0],
    ]
    K2: List[List[float]] = [
        [9998.5, 167.1, 41.0],
        [-166.6, 9997.9, -116.0],
        [-43.0, 115.3, 9999.2],
    ]
    ALPHA_BAR_1: List[float] = [503.5950, 422.4378, 428.5839]
    ALPHA_BAR_2: List[float] = [84.5099, 68.2069, 72.8442]

    # Ночное снижение потребления: [[t_start, d1, d2, d3], ...], м/с
    # settled: t_start отсчитывается от установления уровней, time: от начала прогона
    DEMAND_STEPS: List[List[float]] = [[0.0, 2.5e-4, 2.5e-4, 2.5e-4]]
    DEMAND_TRIGGER: Literal["time", "settled"] = "settled"
    SETTLE_BAND: float = 0.003  # м
    SETTLE_SAMPLES: int = 10

    # Сертификаты
    PD_TOL: float = 1e-9
    GAMMA: float = 2.0

    @property
    def current_draws(self) -> dict:
        """Токи потребления по состояниям узла, мА"""
        return {
            "sleep": self.CURRENT_SLEEP_MA,
            "idle": self.CURRENT_IDLE_MA,
            "rx": self.CURRENT_RX_MA,
            "tx": self.CURRENT_TX_MA,
            "sense": self.CURRENT_SENSE_MA,
            "actuate": self.CURRENT_ACTUATE_MA,
        }


def load_settings(env_file: Optional[str] = None) -> Settings:
    """Загрузка настроек из файла сценария (KEY=VALUE)"""
    if env_file:
        return Settings(_env_file=env_file)
    return Settings()


settings = Settings()
