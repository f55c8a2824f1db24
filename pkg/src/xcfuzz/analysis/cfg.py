"""Control-flow graph construction from bytecode.

Leaders are the entry pc and every JUMPDEST (the only legal jump targets);
blocks end at STOP/RETURN/REVERT/JUMP/JUMPI or before the next leader.  A
virtual exit block joins all exiting blocks so post-dominance is computed
on a single-exit graph.

``call_boundaries`` marks other functions' entry pcs: a jump there is a
direct-call site, the callee's body is not pulled into this function's
graph, and the calling block is linked to the virtual exit (tail-call).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from xcfuzz.vm.assembler import Instruction, disassemble
from xcfuzz.vm.constsim import (
    InstructionFacts,
    constant_jump_target,
    simulate_block,
)
from xcfuzz.vm.opcodes import TERMINATORS


class CfgError(ValueError):
    pass


@dataclass
class BasicBlock:
    id: int
    start_pc: int
    instructions: list[Instruction] = field(default_factory=list)
    successors: list[int] = field(default_factory=list)
    terminator: str = "fallthrough"
    is_conditional: bool = False
    is_virtual_exit: bool = False

    @property
    def end_pc(self) -> int:
        if not self.instructions:
            return self.start_pc
        return self.instructions[-1].pc

    def pcs(self) -> list[int]:
        return [i.pc for i in self.instructions]


@dataclass(frozen=True)
class CallSite:
    """A direct jump into another function's entry."""

    block_id: int
    pc: int
    target_pc: int


@dataclass
class Cfg:
    blocks: list[BasicBlock]
    entry_id: int
    exit_id: int
    call_sites: list[CallSite] = field(default_factory=list)
    unresolved_jump_pcs: list[int] = field(default_factory=list)
    no_exit_ids: frozenset[int] = frozenset()
    facts: dict[int, InstructionFacts] = field(default_factory=dict)

    def block_of_pc(self, pc: int) -> BasicBlock | None:
        for b in self.blocks:
            if not b.is_virtual_exit and pc in (i.pc for i in b.instructions):
                return b
        return None

    def predecessors(self) -> dict[int, set[int]]:
        preds: dict[int, set[int]] = {b.id: set() for b in self.blocks}
        for b in self.blocks:
            for s in b.successors:
                preds[s].add(b.id)
        return preds

    def instructions(self) -> list[Instruction]:
        out: list[Instruction] = []
        for b in self.blocks:
            out.extend(b.instructions)
        return out

    def conditional_block_ids(self) -> list[int]:
        return [b.id for b in self.blocks if b.is_conditional]

    def to_dot(self, title: str = "cfg") -> str:
        lines = [f'digraph "{title}" {{', "  node [shape=box fontname=monospace];"]
        for b in self.blocks:
            if b.is_virtual_exit:
                label = "EXIT"
            else:
                body = "\\l".join(f"{i.pc}: {i.text()}" for i in b.instructions)
                label = f"B{b.id} @{b.start_pc}\\l{body}\\l"
            lines.append(f'  n{b.id} [label="{label}"];')
            for s in b.successors:
                lines.append(f"  n{b.id} -> n{s};")
        lines.append("}")
        return "\n".join(lines)


def build_cfg(code: bytes, entry_pc: int = 0,
              call_boundaries: frozenset[int] | set[int] = frozenset()) -> Cfg:
    """Build the CFG of the code reachable from ``entry_pc``."""
    instrs = disassemble(code)
    if not instrs:
        exit_block = BasicBlock(id=0, start_pc=-1, is_virtual_exit=True,
                                terminator="exit")
        return Cfg(blocks=[exit_block], entry_id=0, exit_id=0)

    # carve linear chunks at leaders (entry, JUMPDESTs) and terminators
    leaders = {entry_pc} | {i.pc for i in instrs if i.opcode.mnemonic == "JUMPDEST"}
    chunks: list[list[Instruction]] = []
    current: list[Instruction] = []
    for instr in instrs:
        if instr.pc in leaders and current:
            chunks.append(current)
            current = []
        current.append(instr)
        if instr.opcode.mnemonic in TERMINATORS:
            chunks.append(current)
            current = []
    if current:
        chunks.append(current)

    by_start = {chunk[0].pc: chunk for chunk in chunks}
    if entry_pc not in by_start:
        raise CfgError(f"entry pc {entry_pc} is not a block leader")

    facts: dict[int, InstructionFacts] = {}
    for chunk in chunks:
        facts.update(simulate_block(chunk))

    code_end = instrs[-1].next_pc
    boundaries = set(call_boundaries) - {entry_pc}

    # discover reachable blocks and their successor start-pcs
    EXIT = -1
    succ_pcs: dict[int, list[int]] = {}
    call_sites_raw: list[tuple[int, int]] = []  # (jump pc, target pc)
    unresolved: list[int] = []
    worklist = [entry_pc]
    seen = set()
    while worklist:
        start = worklist.pop()
        if start in seen:
            continue
        seen.add(start)
        chunk = by_start.get(start)
        if chunk is None:
            raise CfgError(f"jump target {start} is not a block leader")
        last = chunk[-1]
        term = last.opcode.mnemonic
        succs: list[int] = []

        def _resolve_jump(pc: int) -> int | None:
            """Returns a successor start pc, EXIT, or None for call sites."""
            target = constant_jump_target(facts, pc)
            if target is None:
                unresolved.append(pc)
                return EXIT
            if target in boundaries:
                call_sites_raw.append((pc, target))
                return EXIT
            return target

        if term == "JUMP":
            succs.append(_resolve_jump(last.pc))
        elif term == "JUMPI":
            succs.append(_resolve_jump(last.pc))
            fall = last.next_pc
            succs.append(fall if fall < code_end else EXIT)
        elif term in ("STOP", "RETURN", "REVERT"):
            succs.append(EXIT)
        else:  # fell off at a leader or at the end of the stream
            fall = last.next_pc
            if fall >= code_end:
                succs.append(EXIT)
            elif fall in boundaries:
                call_sites_raw.append((last.pc, fall))
                succs.append(EXIT)
            else:
                succs.append(fall)

        deduped: list[int] = []
        for s in succs:
            if s not in deduped:
                deduped.append(s)
        succ_pcs[start] = deduped
        for s in deduped:
            if s != EXIT and s not in seen:
                worklist.append(s)

    # materialize blocks in pc order; virtual exit gets the last id
    order = sorted(seen)
    ids = {start: i for i, start in enumerate(order)}
    exit_id = len(order)
    blocks: list[BasicBlock] = []
    for start in order:
        chunk = by_start[start]
        term = chunk[-1].opcode.mnemonic
        block = BasicBlock(
            id=ids[start],
            start_pc=start,
            instructions=list(chunk),
            successors=[exit_id if s == EXIT else ids[s] for s in succ_pcs[start]],
            terminator=term if term in TERMINATORS else "fallthrough",
            is_conditional=(term == "JUMPI"),
        )
        blocks.append(block)
    blocks.append(BasicBlock(id=exit_id, start_pc=-1, is_virtual_exit=True,
                             terminator="exit"))

    call_sites = []
    for pc, tgt in call_sites_raw:
        block_id = _block_of(blocks, pc)
        if block_id is not None:
            call_sites.append(CallSite(block_id=block_id, pc=pc, target_pc=tgt))

    cfg = Cfg(blocks=blocks, entry_id=ids[entry_pc], exit_id=exit_id,
              call_sites=call_sites, unresolved_jump_pcs=sorted(set(unresolved)),
              facts=facts)
    cfg.no_exit_ids = _no_exit_blocks(cfg)
    return cfg


def _block_of(blocks: list[BasicBlock], pc: int) -> int | None:
    for b in blocks:
        if b.is_virtual_exit:
            continue
        if b.instructions and b.start_pc <= pc <= b.instructions[-1].pc:
            return b.id
    return None


def _no_exit_blocks(cfg: Cfg) -> frozenset[int]:
    """Blocks with no path to the virtual exit (infinite loops)."""
    preds = cfg.predecessors()
    reached = {cfg.exit_id}
    stack = [cfg.exit_id]
    while stack:
        n = stack.pop()
        for p in preds[n]:
            if p not in reached:
                reached.add(p)
                stack.append(p)
    return frozenset(b.id for b in cfg.blocks if b.id not in reached)


def synthetic_cfg(successors: dict[int, list[int]], entry: int,
                  exit_id: int, conditional: set[int] | None = None) -> Cfg:
    """Build a Cfg from raw block ids and edges (test and oracle support)."""
    conditional = conditional or set()
    ids = sorted(successors)
    blocks = []
    for i in ids:
        blocks.append(BasicBlock(id=i, start_pc=i, successors=list(successors[i]),
                                 is_conditional=i in conditional,
                                 is_virtual_exit=(i == exit_id),
                                 terminator="exit" if i == exit_id else "fallthrough"))
    cfg = Cfg(blocks=blocks, entry_id=entry, exit_id=exit_id)
    cfg.no_exit_ids = _no_exit_blocks(cfg)
    return cfg


__all__ = ["BasicBlock", "CallSite", "Cfg", "CfgError", "build_cfg", "synthetic_cfg"]
