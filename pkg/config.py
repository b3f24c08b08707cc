import os
from typing import Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables
load_dotenv()

TOOL_NAME = "entrocrit"
__version__ = "1.0.0"


class Tolerances(BaseModel):
    """Numerical slack used by every spectral predicate."""

    psd: float = Field(1e-9, gt=0)          # PSD slack on eigenvalue margins
    rank: float = Field(1e-10, gt=0)        # eigenvalue counted as nonzero above this
    major: float = Field(1e-10, gt=0)       # majorization partial sums
    entropic: float = Field(1e-10, gt=0)    # entropic sign margins
    hermitian: float = Field(1e-9, gt=0)    # relative Frobenius asymmetry
    trace: float = Field(1e-9, gt=0)
    sign_band: float = Field(1e-12, gt=0)   # dead-band of the sign predicate


class Settings(BaseModel):
    seed: int = 0
    eigen_backend: str = "jacobi"
    jacobi_tol: float = 1e-13
    jacobi_max_sweeps: int = 100
    max_dimension: int = 4096
    log_level: str = "WARNING"
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from ENTROCRIT_* environment variables."""
        defaults = Tolerances()
        tolerances = Tolerances(
            psd=float(os.getenv('ENTROCRIT_TOL_PSD', defaults.psd)),
            rank=float(os.getenv('ENTROCRIT_TOL_RANK', defaults.rank)),
            major=float(os.getenv('ENTROCRIT_TOL_MAJOR', defaults.major)),
            entropic=float(os.getenv('ENTROCRIT_TOL_ENTROPIC', defaults.entropic)),
        )
        return cls(
            seed=int(os.getenv('ENTROCRIT_SEED', 0)),
            eigen_backend=os.getenv('ENTROCRIT_EIGEN_BACKEND', 'jacobi').lower(),
            jacobi_max_sweeps=int(os.getenv('ENTROCRIT_JACOBI_SWEEPS', 100)),
            max_dimension=int(os.getenv('ENTROCRIT_MAX_DIM', 4096)),
            log_level=os.getenv('ENTROCRIT_LOG_LEVEL', 'WARNING').upper(),
            tolerances=tolerances,
        )


settings = Settings.from_env()


def apply_tolerance_overrides(overrides: Optional[Dict[str, float]]) -> Tolerances:
    """Replace the shared tolerances with the given overrides applied."""
    if overrides:
        merged = {**settings.tolerances.model_dump(), **overrides}
        settings.tolerances = Tolerances(**merged)
    return settings.tolerances


def resolved_seed(seed: Optional[int]) -> int:
    """Flag wins over ENTROCRIT_SEED, which wins over the built-in default."""
    return settings.seed if seed is None else seed


def settings_snapshot() -> Dict:
    return settings.model_dump()


def restore_settings(snapshot: Dict) -> None:
    """Install a snapshot taken in another process."""
    restored = Settings(**snapshot)
    for name in Settings.model_fields:
        setattr(settings, name, getattr(restored, name))
