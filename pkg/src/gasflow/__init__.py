"""Steady-state gas network flow solver."""

__all__ = ["cli", "config", "eos", "errors", "models", "network", "oracle", "pipeline", "reports", "scaling", "service", "solver"]
