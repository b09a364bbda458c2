"""
Configuration module for the zero-error lumping toolkit
"""
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from utils.errors import ConfigError


@dataclass
class LumpingConfig:
    """Konfigurasi sistem lumping"""
    # Numerics
    positivity_threshold: float = 1e-12
    stochastic_tolerance: float = 1e-9
    lossless_tolerance: float = 1e-12

    # Resource caps
    enumeration_cap: int = 2 ** 20
    exact_solver_cap: int = 64
    bruteforce_cap: int = 10

    # Stationary / Perron solvers
    direct_solve_max_states: int = 512
    power_iteration_tolerance: float = 1e-10
    power_iteration_max_iter: int = 100_000

    # Simulation
    default_seed: int = 0

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None
    logs_dir: Path = Path("./logs")

    def __post_init__(self):
        if not 0.0 <= self.positivity_threshold < 1.0:
            raise ConfigError(f"positivity_threshold must be in [0, 1), got {self.positivity_threshold}")
        for name in ("enumeration_cap", "exact_solver_cap", "bruteforce_cap",
                     "direct_solve_max_states", "power_iteration_max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        self.logs_dir = Path(self.logs_dir)

    @classmethod
    def from_env(cls) -> 'LumpingConfig':
        """Load configuration from environment variables"""
        try:
            return cls(
                positivity_threshold=float(os.getenv('LUMP_POSITIVITY_THRESHOLD', '1e-12')),
                stochastic_tolerance=float(os.getenv('LUMP_STOCHASTIC_TOLERANCE', '1e-9')),
                lossless_tolerance=float(os.getenv('LUMP_LOSSLESS_TOLERANCE', '1e-12')),
                enumeration_cap=int(os.getenv('LUMP_ENUMERATION_CAP', str(2 ** 20))),
                exact_solver_cap=int(os.getenv('LUMP_EXACT_SOLVER_CAP', '64')),
                bruteforce_cap=int(os.getenv('LUMP_BRUTEFORCE_CAP', '10')),
                direct_solve_max_states=int(os.getenv('LUMP_DIRECT_SOLVE_MAX_STATES', '512')),
                power_iteration_tolerance=float(os.getenv('LUMP_POWER_TOLERANCE', '1e-10')),
                power_iteration_max_iter=int(os.getenv('LUMP_POWER_MAX_ITER', '100000')),
                default_seed=int(os.getenv('LUMP_SEED', '0')),
                log_level=os.getenv('LUMP_LOG_LEVEL', 'INFO'),
                log_file=os.getenv('LUMP_LOG_FILE') or None,
                logs_dir=Path(os.getenv('LUMP_LOGS_DIR', './logs')),
            )
        except ValueError as e:
            raise ConfigError(f"Invalid LUMP_* environment value: {e}") from e


DEFAULT_CONFIG = LumpingConfig()
