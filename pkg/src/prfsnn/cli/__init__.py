"""Command-line front end, data ingestion, benchmarks and equivalence suites."""

from .bench import BENCH_HEADER, BenchRecord, bench, speedups
from .config import ConfigError, RunConfig, load_config, parse_config
from .data import SplitMix64, fisher_yates_permutation, ingest_mnist, read_idx, write_idx
from .equiv import EquivConfig, EquivReport, run_equivalence_suite
from .report import emit_report, read_report

__all__ = [
    "BENCH_HEADER",
    "BenchRecord",
    "ConfigError",
    "EquivConfig",
    "EquivReport",
    "RunConfig",
    "SplitMix64",
    "bench",
    "emit_report",
    "fisher_yates_permutation",
    "ingest_mnist",
    "load_config",
    "parse_config",
    "read_idx",
    "read_report",
    "run_equivalence_suite",
    "speedups",
    "write_idx",
]
