"""Block-local abstract simulation: constant folding plus coarse taint tags.

Used to resolve statically-constant jump targets and call sites, and by the
syntactic voters.  State never crosses block boundaries: values flowing in
from predecessors are modelled as unknown and untainted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from xcfuzz.vm.assembler import Instruction
from xcfuzz.vm.opcodes import WORD_MASK, is_dup, is_push, is_swap

# Taint tags by originating opcode family.
TAG_CALLDATA = "calldata"
TAG_ORIGIN = "origin"
TAG_STORAGE = "storage"
TAG_CALLER = "caller"
TAG_CALLVALUE = "callvalue"
TAG_BALANCE = "balance"

_SOURCE_TAGS = {
    "CALLDATALOAD": TAG_CALLDATA,
    "CALLDATASIZE": TAG_CALLDATA,
    "ORIGIN": TAG_ORIGIN,
    "SLOAD": TAG_STORAGE,
    "CALLER": TAG_CALLER,
    "CALLVALUE": TAG_CALLVALUE,
    "BALANCE": TAG_BALANCE,
}

_NO_TAINT: frozenset[str] = frozenset()


@dataclass(frozen=True)
class AbstractValue:
    const: int | None = None
    taints: frozenset[str] = _NO_TAINT

    @property
    def known(self) -> bool:
        return self.const is not None


_UNKNOWN = AbstractValue()


@dataclass
class InstructionFacts:
    """Abstract operands (top of stack first) and the memory constants
    visible when the instruction executes."""

    operands: list[AbstractValue] = field(default_factory=list)
    memory: dict[int, AbstractValue] = field(default_factory=dict)


def _fold(mnemonic: str, args: list[AbstractValue]) -> AbstractValue:
    taints = frozenset().union(*(a.taints for a in args)) if args else _NO_TAINT
    if not all(a.known for a in args):
        return AbstractValue(None, taints)
    vals = [a.const for a in args]
    x = vals[0] if vals else 0
    y = vals[1] if len(vals) > 1 else 0
    table = {
        "ADD": lambda: (x + y) & WORD_MASK,
        "MUL": lambda: (x * y) & WORD_MASK,
        "SUB": lambda: (x - y) & WORD_MASK,
        "DIV": lambda: 0 if y == 0 else x // y,
        "LT": lambda: int(x < y),
        "GT": lambda: int(x > y),
        "EQ": lambda: int(x == y),
        "ISZERO": lambda: int(x == 0),
        "AND": lambda: x & y,
        "OR": lambda: x | y,
        "NOT": lambda: (~x) & WORD_MASK,
    }
    fn = table.get(mnemonic)
    if fn is None:
        return AbstractValue(None, taints)
    return AbstractValue(fn(), taints)


def simulate_block(instrs: list[Instruction]) -> dict[int, InstructionFacts]:
    """Run the abstract interpreter over one basic block.

    Returns pc -> InstructionFacts for every instruction in the block.
    Stack underflow against the (unknown) incoming stack yields unknown
    untainted values rather than an error.
    """
    stack: list[AbstractValue] = []
    memory: dict[int, AbstractValue] = {}
    facts: dict[int, InstructionFacts] = {}

    def pop() -> AbstractValue:
        return stack.pop() if stack else _UNKNOWN

    def peek(n: int) -> AbstractValue:
        return stack[-n] if len(stack) >= n else _UNKNOWN

    for instr in instrs:
        op = instr.opcode
        name = op.mnemonic
        fact = InstructionFacts()
        if is_push(op):
            stack.append(AbstractValue(instr.immediate))
        elif is_dup(op):
            n = int(name[3:])
            v = peek(n)
            fact.operands = [v]
            stack.append(v)
        elif is_swap(op):
            n = int(name[4:])
            if len(stack) >= n + 1:
                fact.operands = [stack[-1], stack[-n - 1]]
                stack[-1], stack[-n - 1] = stack[-n - 1], stack[-1]
            else:
                fact.operands = [_UNKNOWN, _UNKNOWN]
                stack.clear()
        elif name in _SOURCE_TAGS:
            args = [pop() for _ in range(op.pops)]
            fact.operands = args
            merged = frozenset().union(*(a.taints for a in args)) if args else _NO_TAINT
            stack.append(AbstractValue(None, merged | {_SOURCE_TAGS[name]}))
        elif name == "MLOAD":
            addr = pop()
            fact.operands = [addr]
            if addr.known and addr.const in memory:
                loaded = memory[addr.const]
                stack.append(AbstractValue(loaded.const, loaded.taints | addr.taints))
            else:
                stack.append(AbstractValue(None, addr.taints))
        elif name == "MSTORE":
            addr, value = pop(), pop()
            fact.operands = [addr, value]
            if addr.known:
                memory[addr.const] = value
            else:
                memory.clear()  # unknown store may clobber anything
        else:
            args = [pop() for _ in range(op.pops)]
            fact.operands = args
            if name in ("CALL", "CALLCODE", "DELEGATECALL"):
                fact.memory = dict(memory)
                stack.append(_UNKNOWN)
            elif op.pushes:
                stack.append(_fold(name, args))
        if not fact.memory and name in ("JUMP", "JUMPI", "RETURN", "REVERT"):
            fact.memory = dict(memory)
        facts[instr.pc] = fact
    return facts


def constant_jump_target(facts: dict[int, InstructionFacts], pc: int) -> int | None:
    """The constant target of the JUMP/JUMPI at ``pc``, if known."""
    fact = facts.get(pc)
    if fact is None or not fact.operands:
        return None
    top = fact.operands[0]
    return top.const if top.known else None


def split_linear_blocks(instrs: list[Instruction]) -> list[list[Instruction]]:
    """Split a linear instruction stream at terminators and JUMPDESTs.

    Purely positional (no reachability); JUMPDEST always starts a block
    because it is the only legal jump target.
    """
    blocks: list[list[Instruction]] = []
    current: list[Instruction] = []
    from xcfuzz.vm.opcodes import TERMINATORS

    for instr in instrs:
        if instr.opcode.mnemonic == "JUMPDEST" and current:
            blocks.append(current)
            current = []
        current.append(instr)
        if instr.opcode.mnemonic in TERMINATORS:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    return blocks


__all__ = [
    "AbstractValue",
    "InstructionFacts",
    "constant_jump_target",
    "simulate_block",
    "TAG_CALLDATA",
    "TAG_ORIGIN",
    "TAG_STORAGE",
    "TAG_CALLER",
    "TAG_CALLVALUE",
    "TAG_BALANCE",
]
