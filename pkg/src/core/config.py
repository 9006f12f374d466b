from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    # App metadata
    APP_NAME: str = "knapsack-bench"
    APP_VERSION: str = "1.0.0"

    # Logging (JSON for batch clusters, coloured lines for a terminal)
    LOG_LEVEL: str = "INFO"
    LOG_JSON_FORMAT: bool = False

    # Bench harness
    BENCH_OUTPUT_DIR: str = "results"
    BENCH_WORKERS: int = 1
    DEFAULT_SEED: int = 7
    DEFAULT_SHOTS: int = 10_000
    DEFAULT_REPEATS: int = 20

    # Warm start relaxation
    RELAXATION_RESTARTS: int = 16
    RELAXATION_MAX_ITER: int = 500
    RELAXATION_EPSILON: float = 0.01

    # Enumeration / simulation budgets
    ENERGY_TABLE_MAX_QUBITS: int = 22
    MAX_SIMULATED_QUBITS: int = 26
    BRUTE_FORCE_MAX_VARS: int = 26
    BRANCH_AND_BOUND_MAX_VARS: int = 30

    # Runtime model constants (not published for the modelled device)
    T_MEAS_NS: float = 1_000.0
    T_OPT_S: float = 0.001
    T_COMM_S: float = 0.0

    @property
    def is_json_logging(self) -> bool:
        return self.LOG_JSON_FORMAT


settings = Settings()
