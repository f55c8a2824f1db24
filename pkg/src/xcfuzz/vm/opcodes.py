"""Opcode table for the 64-bit EVM-style stack machine.

Numeric encodings follow the canonical EVM opcode numbering for every
supported mnemonic; only the word width (64 bits) and the instruction
subset differ from mainnet EVM.
"""

from __future__ import annotations

from dataclasses import dataclass

WORD_BITS = 64
WORD_BYTES = 8
WORD_MASK = (1 << WORD_BITS) - 1

# Default per-transaction step budget (replaces gas accounting).
DEFAULT_STEP_BUDGET = 100_000


@dataclass(frozen=True)
class Opcode:
    """One instruction of the supported set.

    ``arity`` is the number of stack cells the instruction consumes or
    inspects; it equals the length of the ``operands`` tuple recorded on
    every trace event for this opcode.
    """

    mnemonic: str
    code: int
    immediate_bytes: int
    pops: int
    pushes: int
    arity: int

    def __repr__(self) -> str:
        return f"Opcode({self.mnemonic})"


def _op(mnemonic: str, code: int, imm: int = 0, pops: int = 0, pushes: int = 0,
        arity: int | None = None) -> Opcode:
    return Opcode(mnemonic, code, imm, pops, pushes, pops if arity is None else arity)


_TABLE: list[Opcode] = [
    _op("STOP", 0x00),
    _op("ADD", 0x01, pops=2, pushes=1),
    _op("MUL", 0x02, pops=2, pushes=1),
    _op("SUB", 0x03, pops=2, pushes=1),
    _op("DIV", 0x04, pops=2, pushes=1),
    _op("LT", 0x10, pops=2, pushes=1),
    _op("GT", 0x11, pops=2, pushes=1),
    _op("EQ", 0x14, pops=2, pushes=1),
    _op("ISZERO", 0x15, pops=1, pushes=1),
    _op("AND", 0x16, pops=2, pushes=1),
    _op("OR", 0x17, pops=2, pushes=1),
    _op("NOT", 0x19, pops=1, pushes=1),
    _op("BALANCE", 0x31, pops=1, pushes=1),
    _op("ORIGIN", 0x32, pushes=1),
    _op("CALLER", 0x33, pushes=1),
    _op("CALLVALUE", 0x34, pushes=1),
    _op("CALLDATALOAD", 0x35, pops=1, pushes=1),
    _op("CALLDATASIZE", 0x36, pushes=1),
    _op("POP", 0x50, pops=1),
    _op("MLOAD", 0x51, pops=1, pushes=1),
    _op("MSTORE", 0x52, pops=2),
    _op("SLOAD", 0x54, pops=1, pushes=1),
    _op("SSTORE", 0x55, pops=2),
    _op("JUMP", 0x56, pops=1),
    _op("JUMPI", 0x57, pops=2),
    _op("JUMPDEST", 0x5B),
    *[_op(f"PUSH{k}", 0x60 + k - 1, imm=k, pushes=1) for k in range(1, 9)],
    *[_op(f"DUP{k}", 0x80 + k - 1, pushes=1, arity=1) for k in range(1, 5)],
    *[_op(f"SWAP{k}", 0x90 + k - 1, arity=2) for k in range(1, 5)],
    _op("CALL", 0xF1, pops=6, pushes=1),
    _op("CALLCODE", 0xF2, pops=6, pushes=1),
    _op("RETURN", 0xF3, pops=2),
    _op("DELEGATECALL", 0xF4, pops=5, pushes=1),
    _op("REVERT", 0xFD, pops=2),
]

_BY_MNEMONIC: dict[str, Opcode] = {op.mnemonic: op for op in _TABLE}
_BY_CODE: dict[int, Opcode] = {op.code: op for op in _TABLE}
assert len(_BY_CODE) == len(_TABLE), "opcode encodings must be injective"

# External-call opcodes: the critical set that hands control to foreign code.
CRITICAL_OPCODES: frozenset[str] = frozenset({"CALL", "CALLCODE", "DELEGATECALL"})

STOP = _BY_MNEMONIC["STOP"]
JUMPDEST = _BY_MNEMONIC["JUMPDEST"]

# Terminators end a basic block.
TERMINATORS: frozenset[str] = frozenset({"STOP", "RETURN", "REVERT", "JUMP", "JUMPI"})


def opcode_by_mnemonic(mnemonic: str) -> Opcode | None:
    return _BY_MNEMONIC.get(mnemonic.upper())


def opcode_by_code(code: int) -> Opcode | None:
    return _BY_CODE.get(code)


def all_opcodes() -> list[Opcode]:
    return list(_TABLE)


def is_push(op: Opcode) -> bool:
    return op.mnemonic.startswith("PUSH")


def is_dup(op: Opcode) -> bool:
    return op.mnemonic.startswith("DUP")


def is_swap(op: Opcode) -> bool:
    return op.mnemonic.startswith("SWAP")


def is_critical(op: Opcode) -> bool:
    return op.mnemonic in CRITICAL_OPCODES
