"""Core modules package."""

from .executor import ExecutionResult, ParallelExecutor
from .reports import ReportBuilder, read_table, write_table, write_text

__all__ = ["ExecutionResult", "ParallelExecutor", "ReportBuilder", "read_table", "write_table", "write_text"]
