"""Trace-replay simulator for block-storage IOPS provisioning policies."""

from ._iogears import (
    ConfigError,
    ContractError,
    GearTable,
    ParseError,
    bin_iops,
    capacity_bill,
    compare,
    credit_step,
    device_allocate,
    format_trace,
    generate_synthetic,
    load_scenario,
    multiplex_stats,
    parse_trace,
    percentile,
    pool_admit,
    qos_bill,
    replay,
    simulate,
    storage_util,
    to_cents,
    tune_judge,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "GearTable",
    "ParseError",
    "bin_iops",
    "capacity_bill",
    "compare",
    "credit_step",
    "device_allocate",
    "format_trace",
    "generate_synthetic",
    "load_scenario",
    "multiplex_stats",
    "parse_trace",
    "percentile",
    "pool_admit",
    "qos_bill",
    "replay",
    "simulate",
    "storage_util",
    "to_cents",
    "tune_judge",
]
