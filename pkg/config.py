"""Configuration management for the electron trap simulator."""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Application configuration."""

    VERSION: str = "1.0.0"

    # Execution settings
    WORKERS: int = int(os.getenv("ETRAP_WORKERS", "1"))
    JOBLIB_BACKEND: str = os.getenv("ETRAP_JOBLIB_BACKEND", "loky")
    DEFAULT_SEED: int = int(os.getenv("ETRAP_SEED", "0"))

    # Curve fitting
    FIT_MAX_EVALS: int = 20000

    # Output directory for tables and reports
    OUTPUT_DIR: Path = Path(os.getenv("ETRAP_OUTPUT_DIR", "outputs"))

    # Bundled parameter profiles
    PROFILE_DIR: Path = Path(__file__).parent / "profiles"
    DEFAULT_PROFILE: str = "reference-trap"

    @classmethod
    def ensure_output_dir(cls) -> Path:
        """Ensure output directory exists and return its path."""
        cls.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
        return cls.OUTPUT_DIR

    @classmethod
    def profile_path(cls, name: str) -> Path:
        """Get the file path of a bundled profile."""
        profiles = {
            "reference-trap": cls.PROFILE_DIR / "reference_trap.env",
        }
        return profiles.get(name, cls.PROFILE_DIR / f"{name.replace('-', '_')}.env")
