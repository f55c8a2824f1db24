"""Execution traces: events with read/write location sets.

Every value produced on a frame's stack gets a fresh ``value_id`` (SSA over
the stack), so StackValue locations give exact def-use chains.  Memory is
tracked at word granularity; storage slots are the only locations that
persist across transactions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from xcfuzz.vm.opcodes import DEFAULT_STEP_BUDGET, WORD_BYTES, Opcode


@dataclass(frozen=True)
class StorageSlot:
    """Persistent storage word of a contract (storage-context address)."""

    addr: int
    slot: int


@dataclass(frozen=True)
class MemoryWord:
    """A word of frame-local memory, keyed by its aligned byte offset."""

    frame_id: int
    offset: int


@dataclass(frozen=True)
class StackValue:
    """A single produced stack value (SSA id, unique within a transaction)."""

    value_id: int


@dataclass(frozen=True)
class EnvInput:
    """Transaction environment input: caller, origin, callvalue, calldata, balance."""

    name: str


@dataclass(frozen=True)
class CallReturn:
    """Data returned to the call event at ``event_index``."""

    event_index: int


Location = StorageSlot | MemoryWord | StackValue | EnvInput | CallReturn


class Outcome(Enum):
    HALTED = "halted"
    REVERTED = "reverted"
    OUT_OF_STEPS = "out_of_steps"


@dataclass(frozen=True)
class TraceEvent:
    """One executed instruction.

    ``function_selector`` is the 4-byte selector of the function whose body
    is executing (None marks the fallback); ``activation_id`` distinguishes
    successive function activations inside one frame, which matters when a
    direct jump transfers control into another function's entry.
    """

    index: int
    opcode: Opcode
    pc: int
    contract_addr: int
    frame_id: int
    function_selector: int | None
    activation_id: int
    reads: frozenset[Location]
    writes: frozenset[Location]
    operands: tuple[int, ...]
    operand_value_ids: tuple[int, ...] = ()


@dataclass
class ExecutionTrace:
    events: list[TraceEvent]
    outcome: Outcome
    touched_contracts: set[int]
    value_transfers: list[tuple[int, int, int]]
    return_data: bytes = b""

    def events_of(self, mnemonic: str) -> list[TraceEvent]:
        return [e for e in self.events if e.opcode.mnemonic == mnemonic]

    def render(self) -> str:
        """Canonical text form; byte-identical for identical traces."""
        lines = [f"outcome={self.outcome.value}",
                 f"touched={sorted(self.touched_contracts)}",
                 f"transfers={self.value_transfers}",
                 f"return=0x{self.return_data.hex()}"]
        for e in self.events:
            reads = sorted(map(repr, e.reads))
            writes = sorted(map(repr, e.writes))
            lines.append(
                f"{e.index} f{e.frame_id} a{e.activation_id} "
                f"{e.contract_addr:#x}:{e.pc} {e.opcode.mnemonic} "
                f"ops={e.operands} r={reads} w={writes}")
        return "\n".join(lines)


@dataclass(frozen=True)
class TransactionRequest:
    """One externally fired transaction.

    ``selector`` is the 4-byte function selector, or None to hit the
    fallback; ``args`` are the already-encoded argument words.
    """

    caller: int
    origin: int
    target: int
    selector: int | None
    args: tuple[int, ...] = ()
    value: int = 0
    step_budget: int = DEFAULT_STEP_BUDGET

    def calldata(self) -> bytes:
        """Wire form: one word holding the selector, then the arg words."""
        out = bytearray()
        if self.selector is not None:
            out += self.selector.to_bytes(WORD_BYTES, "big")
        for word in self.args:
            out += word.to_bytes(WORD_BYTES, "big")
        return bytes(out)


def selector_from_calldata(calldata: bytes) -> int | None:
    """Extract the selector word if the calldata can carry one."""
    if len(calldata) < WORD_BYTES:
        return None
    word = int.from_bytes(calldata[:WORD_BYTES], "big")
    if word > 0xFFFFFFFF:
        return None
    return word


__all__ = [
    "CallReturn",
    "EnvInput",
    "ExecutionTrace",
    "Location",
    "MemoryWord",
    "Outcome",
    "StackValue",
    "StorageSlot",
    "TraceEvent",
    "TransactionRequest",
    "selector_from_calldata",
]
