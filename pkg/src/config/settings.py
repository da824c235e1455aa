import os
from pydantic_settings import BaseSettings
from pathlib import Path


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"

    # Fallback log location when no run directory is active
    LOG_DIR: str = str(Path(__file__).parent.parent / "logs")

    OUTPUT_DIR: str = "runs"

    # Thread pool cap for chunked circuit simulation (--threads overrides)
    MAX_WORKERS: int = os.cpu_count() or 1

    # Complex amplitudes held per simulation chunk (2^22 * 16 bytes = 64 MB)
    STATE_BATCH_AMPLITUDES: int = 1 << 22

    # 17 significant digits round-trips float64
    CSV_FLOAT_FORMAT: str = "%.17g"

    MAX_QUBITS: int = 20

settings = Settings()
