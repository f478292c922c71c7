"""Command-line orchestration, tick ingestion and Monte Carlo studies."""
from .pipeline import RunConfig, run_day_test
from .montecarlo import CellSpec, MonteCarloReport, emit_report, run_monte_carlo

__all__ = ["RunConfig", "run_day_test", "CellSpec", "MonteCarloReport", "emit_report",
           "run_monte_carlo"]
