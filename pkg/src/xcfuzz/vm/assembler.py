"""Textual assembly and disassembly for the supported opcode subset.

Format: one instruction per line, ``;`` starts a comment, ``name:`` binds a
label to the current code offset, and ``@name`` may be used as a PUSH
immediate that resolves to the label's offset.
"""

from __future__ import annotations

from dataclasses import dataclass

from xcfuzz.vm.opcodes import Opcode, is_push, opcode_by_code, opcode_by_mnemonic


class AssemblyError(ValueError):
    """Raised on malformed assembly source; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DisassemblyError(ValueError):
    """Raised on bytes that do not decode under the supported opcode set."""


@dataclass(frozen=True)
class Instruction:
    """A decoded instruction: opcode plus optional immediate value."""

    pc: int
    opcode: Opcode
    immediate: int | None = None

    @property
    def size(self) -> int:
        return 1 + self.opcode.immediate_bytes

    @property
    def next_pc(self) -> int:
        return self.pc + self.size

    def text(self) -> str:
        if self.opcode.immediate_bytes:
            return f"{self.opcode.mnemonic} 0x{self.immediate:X}"
        return self.opcode.mnemonic


@dataclass(frozen=True)
class _Line:
    number: int
    mnemonic: str
    operand: str | None


def _parse_lines(source: str) -> tuple[list[_Line], dict[str, tuple[int, int]]]:
    """First pass: split into instruction lines and collect label positions.

    Returns (lines, labels) where labels maps name -> (byte offset, line no).
    """
    lines: list[_Line] = []
    labels: dict[str, tuple[int, int]] = {}
    offset = 0
    for number, raw in enumerate(source.splitlines(), start=1):
        text = raw.split(";", 1)[0].strip()
        while text.endswith(":") or (":" in text and not text.startswith("@")):
            head, sep, rest = text.partition(":")
            if not sep or " " in head.strip() or not head.strip():
                break
            name = head.strip()
            if name in labels:
                raise AssemblyError(f"duplicate label {name!r}", number)
            labels[name] = (offset, number)
            text = rest.strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) > 2:
            raise AssemblyError(f"too many tokens in {text!r}", number)
        mnemonic = parts[0]
        operand = parts[1] if len(parts) == 2 else None
        op = opcode_by_mnemonic(mnemonic)
        if op is None:
            raise AssemblyError(f"unknown mnemonic {mnemonic!r}", number)
        lines.append(_Line(number, mnemonic, operand))
        offset += 1 + op.immediate_bytes
    return lines, labels


def _resolve_immediate(op: Opcode, operand: str, labels: dict[str, tuple[int, int]],
                       line: int) -> int:
    if operand.startswith("@"):
        name = operand[1:]
        if name not in labels:
            raise AssemblyError(f"undefined label {name!r}", line)
        value = labels[name][0]
    else:
        try:
            value = int(operand, 0)
        except ValueError:
            raise AssemblyError(f"bad immediate {operand!r}", line) from None
    if value < 0:
        raise AssemblyError(f"negative immediate {operand!r}", line)
    if value >= 1 << (8 * op.immediate_bytes):
        raise AssemblyError(
            f"immediate {operand!r} overflows {op.immediate_bytes} byte(s)", line)
    return value


def assemble_with_labels(source: str) -> tuple[bytes, dict[str, int]]:
    """Assemble source text; returns (bytecode, label offsets)."""
    lines, labels = _parse_lines(source)
    out = bytearray()
    for ln in lines:
        op = opcode_by_mnemonic(ln.mnemonic)
        assert op is not None
        out.append(op.code)
        if op.immediate_bytes:
            if ln.operand is None:
                raise AssemblyError(f"{op.mnemonic} needs an immediate", ln.number)
            value = _resolve_immediate(op, ln.operand, labels, ln.number)
            out += value.to_bytes(op.immediate_bytes, "big")
        elif ln.operand is not None:
            raise AssemblyError(f"{op.mnemonic} takes no operand", ln.number)
    return bytes(out), {name: pos for name, (pos, _) in labels.items()}


def assemble(source: str) -> bytes:
    return assemble_with_labels(source)[0]


def disassemble(code: bytes) -> list[Instruction]:
    """Decode bytecode into instructions; raises DisassemblyError on bad bytes."""
    instrs: list[Instruction] = []
    pc = 0
    while pc < len(code):
        op = opcode_by_code(code[pc])
        if op is None:
            raise DisassemblyError(f"undecodable byte 0x{code[pc]:02X} at offset {pc}")
        immediate = None
        if op.immediate_bytes:
            end = pc + 1 + op.immediate_bytes
            if end > len(code):
                raise DisassemblyError(
                    f"truncated immediate for {op.mnemonic} at offset {pc}")
            immediate = int.from_bytes(code[pc + 1:end], "big")
        instrs.append(Instruction(pc, op, immediate))
        pc += 1 + op.immediate_bytes
    return instrs


def format_program(instrs: list[Instruction]) -> str:
    return "\n".join(i.text() for i in instrs)


def instruction_map(code: bytes) -> dict[int, Instruction]:
    """pc -> Instruction for every instruction start in ``code``."""
    return {i.pc: i for i in disassemble(code)}


def is_jumpdest(code: bytes, pc: int, instr_starts: dict[int, Instruction]) -> bool:
    instr = instr_starts.get(pc)
    return instr is not None and instr.opcode.mnemonic == "JUMPDEST"


__all__ = [
    "AssemblyError",
    "DisassemblyError",
    "Instruction",
    "assemble",
    "assemble_with_labels",
    "disassemble",
    "format_program",
    "instruction_map",
    "is_jumpdest",
    "is_push",
]
