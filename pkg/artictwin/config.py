"""
ArticTwin configuration
All tunable constants, loaded from environment variables (prefix ARTICTWIN_),
an optional .env file, or a JSON config passed with --config.
"""
import json
from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # --- Frame selection ---
    TARGET_FRAME_COUNT: int = 20
    PAIR_WINDOW: int = 3  # selected-frame steps, not raw video steps

    # --- Correspondences ---
    MATCH_CONFIDENCE: float = 0.95  # strictly greater than this is valid
    MIN_PAIR_MATCHES: int = 80
    MIN_STATIC_MATCHES: int = 3
    REGION_THRESHOLD: float = 0.5  # moving-map value splitting static / dynamic

    # --- RANSAC joint fitting ---
    RANSAC_ITERATIONS: int = 50
    RANSAC_SAMPLE_SIZE: int = 3
    RANSAC_INLIER_RADIUS: float = 0.01  # meters
    # Pairs moving less than this neither vote nor enter axis averaging
    MIN_PAIR_ROTATION: float = 1e-6  # radians
    MIN_PAIR_TRANSLATION: float = 1e-9  # meters
    # Relative camera poses via RANSAC on static matches (False = one weighted fit on all)
    CAMERA_RANSAC: bool = True

    # --- Refinement ---
    ADAM_ITERATIONS: int = 400
    ADAM_LR: float = 5e-3
    ADAM_BETA1: float = 0.9
    ADAM_BETA2: float = 0.999
    ADAM_EPS: float = 1e-8
    SUBSAMPLE_FRACTION: float = 0.5  # 1.0 disables subsampling
    MOVING_VECTOR_CLAMP_LOW: float = 0.02
    MOVING_VECTOR_CLAMP_HIGH: float = 0.98

    # --- Joint type selection / segmentation ---
    PRISMATIC_AXIS_DISTANCE: float = 0.1  # meters from P^O to the revolute axis
    MOVING_THRESHOLD: float = 0.7
    ATTACH_RADIUS: float = 0.03  # meters

    # --- Evaluation ---
    GEOMETRY_SAMPLES: int = 10000
    MIOU_THRESHOLD: float = 0.5

    # --- Runtime ---
    THREADS: int = 1
    LOG_LEVEL: str = "INFO"
    SENTRY_DSN: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="ARTICTWIN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    @property
    def clamp_range(self) -> tuple[float, float]:
        return self.MOVING_VECTOR_CLAMP_LOW, self.MOVING_VECTOR_CLAMP_HIGH

    def with_overrides(self, **overrides) -> "Settings":
        """Copy with selected fields replaced (validated)."""
        data = self.model_dump()
        data.update(overrides)
        return Settings(**data)


def load_settings(path: str | Path | None = None, **overrides) -> Settings:
    """Build Settings from env/.env, then a JSON config file, then explicit overrides."""
    data: dict = {}
    if path is not None:
        data.update(json.loads(Path(path).read_text(encoding="utf-8")))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**data)


settings = Settings()
