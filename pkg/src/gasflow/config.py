from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional


def _env(key: str, default: Optional[str] = None) -> Optional[str]:
    value = os.getenv(key)
    if value is None or value == "":
        return default
    return value


@dataclass
class SolverSettings:
    tolerance: float = 1e-8
    max_iterations: int = 2000


@dataclass
class AppSettings:
    solver: SolverSettings = field(default_factory=SolverSettings)
    threads: int = 1
    log_level: str = "WARNING"


def load_settings() -> AppSettings:
    return AppSettings(
        solver=SolverSettings(
            tolerance=float(_env("GASFLOW_TOL", "1e-8")),
            max_iterations=int(_env("GASFLOW_MAX_ITER", "2000")),
        ),
        threads=max(1, int(_env("GASFLOW_THREADS", str(os.cpu_count() or 1)))),
        log_level=(_env("GASFLOW_LOG_LEVEL", "WARNING") or "WARNING").upper(),
    )
