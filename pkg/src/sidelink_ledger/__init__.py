"""Sidelink broadcast scheduling with shared reservation ledgers.

Capacity dimensioning, the ledger packet protocol, a deterministic
semi-persistent scheduling simulator, and front ends (CLI + HTTP service)
for running experiments.
"""

__version__ = "0.1.0"

from .capacity import (
    DEFAULT_MCS,
    NUMEROLOGIES,
    CapacityReport,
    McsEntry,
    Numerology,
    PhyConfig,
    capacity_report,
    numerology,
)
from .harness import MetricsTrace, RunTrace, SimConfig, convergence_rri, run, run_ensemble, run_paired
from .protocol import (
    CollisionRecord,
    LedgerPacket,
    LedgerRecord,
    LocalLedger,
    decode_packet,
    encode_packet,
)

__all__ = [
    "DEFAULT_MCS",
    "NUMEROLOGIES",
    "CapacityReport",
    "CollisionRecord",
    "LedgerPacket",
    "LedgerRecord",
    "LocalLedger",
    "McsEntry",
    "MetricsTrace",
    "Numerology",
    "PhyConfig",
    "RunTrace",
    "SimConfig",
    "capacity_report",
    "convergence_rri",
    "decode_packet",
    "encode_packet",
    "numerology",
    "run",
    "run_ensemble",
    "run_paired",
]
