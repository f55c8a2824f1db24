"""Finding records emitted by the trace oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from xcfuzz.vm.trace import ExecutionTrace


class VulnCategory(Enum):
    REENTRANCY = "reentrancy"
    DELEGATECALL = "delegatecall"
    TX_ORIGIN = "tx-origin"


@dataclass
class Finding:
    """A detected vulnerability with its witness trace.

    ``critical_index`` is the external-call event; ``anchor_index`` the
    event that completes the pattern (the SSTORE for reentrancy, the
    DELEGATECALL for dangerous delegation, the ORIGIN for tx-origin).
    A finding is cross-contract exactly when the witness trace executed
    code owned by more than two distinct contracts.
    """

    category: VulnCategory
    critical_index: int
    anchor_index: int
    critical_pc: int
    contract_addr: int
    function_selector: int | None
    contract_addrs: set[int] = field(default_factory=set)
    cross_contract: bool = False
    trace: ExecutionTrace | None = None

    @property
    def contract_count(self) -> int:
        return len(self.contract_addrs)

    def key(self) -> tuple:
        return (self.category.value, self.contract_addr,
                self.function_selector, self.critical_pc)


__all__ = ["Finding", "VulnCategory"]
