# config/settings.py
from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="WAKESLEEP_", env_file=".env", extra="ignore")

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""

    # Evaluation
    STEP_BUDGET: int = 10_000

    # Wake phase search
    BEAM_SIZE: int = 5
    NATS_WINDOW: float = 1.5
    TASK_TIMEOUT: float = 720.0
    MAX_DESCRIPTION_LENGTH: float = 99.0
    MAX_ENUMERATION_DEPTH: int = 99
    DETERMINISTIC_PROGRAM_RATE: float = 1000.0
    WORKERS: int = 4

    # Library prior
    STRUCTURE_PENALTY: float = 1.5
    PSEUDO_COUNT: float = 0.5

    # Abstraction sleep
    REFACTOR_STEPS: int = 3
    MAX_INVENTIONS: int = 10
    CANDIDATE_POOL: int = 200
    IMPROVEMENT_THRESHOLD: float = 1e-4
    NODE_BUDGET: int = 5_000_000

    # Regression
    VARIANCE_FLOOR: float = 1e-6
    FD_STEP: float = 1e-4
    FD_LEARNING_RATE: float = 0.05
    FD_ITERATIONS: int = 2000
    FD_RESTARTS: int = 32
    FD_TOLERANCE: float = 1e-12
    FD_POLISH_ITERATIONS: int = 50
    PARAMETER_INIT_RANGE: float = 5.0
    REGRESSION_TOLERANCE: float = 1e-6

    # Dreaming sleep
    FEATURE_WIDTH: int = 64
    HIDDEN_WIDTH: int = 64
    EPOCHS: int = 50
    BATCH_SIZE: int = 16
    LEARNING_RATE: float = 1e-3
    FANTASY_COUNT: int = 100
    FANTASY_RETRY_FACTOR: int = 50
    FANTASY_MAX_DEPTH: int = 20
    SYMMETRY_BREAKING_THRESHOLD: float = 0.8

    # Driver
    ITERATIONS: int = 20
    TEST_FRACTION: float = 0.5
    SEED: int = 0
    OUTPUT_DIR: str = "runs"


settings = Settings()
