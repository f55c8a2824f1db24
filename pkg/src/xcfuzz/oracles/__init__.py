from xcfuzz.oracles.findings import Finding, VulnCategory
from xcfuzz.oracles.detectors import (
    classify_cross_contract,
    detect_all,
    detect_delegatecall,
    detect_reentrancy,
    detect_tx_origin,
    witness_satisfies,
)

__all__ = [
    "Finding",
    "VulnCategory",
    "classify_cross_contract",
    "detect_all",
    "detect_delegatecall",
    "detect_reentrancy",
    "detect_tx_origin",
    "witness_satisfies",
]
