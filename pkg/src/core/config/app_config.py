"""
Application configuration with dependency injection.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
import logging.handlers
import os
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


@dataclass
class SolverConfig:
    """Minimal-gradient solver configuration"""
    tol: float = 1e-6
    max_iter: int = 100_000
    feas_tol: float = 1e-9
    multistart: int = 8


@dataclass
class DiagnosticsConfig:
    """Geometry diagnostics configuration"""
    distortion_threshold: float = 16.0
    grid_per_unit: int = 10_000
    bound_tol: float = 1.05
    integrability_tol: float = 1e-3


@dataclass
class LoggingConfig:
    """Logging configuration"""
    level: str = "WARNING"
    file_path: str = ""
    max_file_size: int = 10 * 1024 * 1024  # 10MB
    backup_count: int = 5


@dataclass
class RunConfig:
    """Single CLI run: command, flags, seed and output location"""
    command: str = ""
    flags: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    jobs: int = 0
    output_dir: str = "reports"

    @property
    def workers(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


@dataclass
class AppConfig:
    """Main application configuration"""
    solver: SolverConfig
    diagnostics: DiagnosticsConfig
    logging: LoggingConfig
    run: RunConfig

    @classmethod
    def from_env(cls) -> "AppConfig":
        """Create configuration from environment variables"""

        solver = SolverConfig(
            tol=float(os.getenv("QMMS_SOLVER_TOL", "1e-6")),
            max_iter=int(os.getenv("QMMS_SOLVER_MAX_ITER", "100000")),
            feas_tol=float(os.getenv("QMMS_FEAS_TOL", "1e-9")),
            multistart=int(os.getenv("QMMS_MULTISTART", "8")),
        )

        diagnostics = DiagnosticsConfig(
            distortion_threshold=float(os.getenv("QMMS_DISTORTION_THRESHOLD", "16")),
            grid_per_unit=int(os.getenv("QMMS_GRID_PER_UNIT", "10000")),
            bound_tol=float(os.getenv("QMMS_BOUND_TOL", "1.05")),
            integrability_tol=float(os.getenv("QMMS_INTEGRABILITY_TOL", "1e-3")),
        )

        logging_config = LoggingConfig(
            level=os.getenv("QMMS_LOG_LEVEL", "WARNING"),
            file_path=os.getenv("QMMS_LOG_FILE", ""),
            max_file_size=int(os.getenv("QMMS_LOG_MAX_FILE_SIZE", str(10 * 1024 * 1024))),
            backup_count=int(os.getenv("QMMS_LOG_BACKUP_COUNT", "5")),
        )

        run = RunConfig(
            seed=int(os.getenv("QMMS_SEED", "0")),
            jobs=int(os.getenv("QMMS_JOBS", "0")),
            output_dir=os.getenv("QMMS_OUTPUT_DIR", "reports"),
        )

        return cls(solver=solver, diagnostics=diagnostics, logging=logging_config, run=run)

    def with_run(self, **overrides: Any) -> "AppConfig":
        """Copy with RunConfig fields replaced (CLI flags win over environment)"""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, run=replace(self.run, **clean))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def errors(self) -> List[str]:
        """Collect configuration problems without side effects"""
        errors = []

        if not self.solver.tol > 0:
            errors.append("QMMS_SOLVER_TOL must be positive")
        if self.solver.max_iter < 1:
            errors.append("QMMS_SOLVER_MAX_ITER must be at least 1")
        if self.solver.feas_tol < 0:
            errors.append("QMMS_FEAS_TOL must be nonnegative")
        if self.diagnostics.bound_tol < 1:
            errors.append("QMMS_BOUND_TOL is multiplicative and must be >= 1")
        if self.diagnostics.grid_per_unit < 2:
            errors.append("QMMS_GRID_PER_UNIT must be at least 2")
        if self.run.jobs < 0:
            errors.append("--jobs must be >= 0 (0 means all cores)")
        if self.logging.level.upper() not in logging._nameToLevel:
            errors.append(f"Unknown log level: {self.logging.level}")
        return errors

    def validate(self) -> bool:
        """Validate configuration"""
        errors = self.errors()

        out_dir = Path(self.run.output_dir)
        if not out_dir.exists():
            try:
                out_dir.mkdir(parents=True, exist_ok=True)
            except Exception as e:
                errors.append(f"Cannot create output directory: {e}")

        if self.logging.file_path:
            log_dir = Path(self.logging.file_path).parent
            if not log_dir.exists():
                try:
                    log_dir.mkdir(parents=True, exist_ok=True)
                except Exception as e:
                    errors.append(f"Cannot create log directory: {e}")

        if errors:
            print("Configuration validation errors:")
            for error in errors:
                print(f"  - {error}")
            return False

        return True


def configure_logging(config: LoggingConfig, level: Optional[str] = None) -> None:
    """Install console and optional rotating file handlers on the root logger"""
    root = logging.getLogger()
    root.setLevel((level or config.level).upper())
    for handler in list(root.handlers):
        root.removeHandler(handler)

    formatter = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    console = logging.StreamHandler()
    console.setFormatter(formatter)
    root.addHandler(console)

    if config.file_path:
        file_handler = logging.handlers.RotatingFileHandler(
            config.file_path,
            maxBytes=config.max_file_size,
            backupCount=config.backup_count,
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)
