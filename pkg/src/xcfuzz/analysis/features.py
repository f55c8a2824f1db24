"""Static per-function features for the learner and the scheduler.

The seven boolean features feed the tail of each feature vector in a fixed,
documented order.  FunctionShape carries the counts used by the priority
formulas: caller count, parameter dimensionality, conditional complexity,
and the block distance from entry to the first conditional.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from xcfuzz.analysis.callgraph import CallGraph, function_boundaries
from xcfuzz.analysis.cfg import BasicBlock, Cfg, build_cfg
from xcfuzz.vm.opcodes import CRITICAL_OPCODES
from xcfuzz.vm.state import ContractPackage, FunctionDescriptor

# Fixed feature order; the classifier's tail components follow it exactly.
STATIC_FEATURE_NAMES: tuple[str, ...] = (
    "has_modifier",
    "has_call",
    "has_delegate",
    "has_tx_origin",
    "has_balance",
    "can_send_eth",
    "callee_external",
)


@dataclass(frozen=True)
class StaticFeatures:
    has_modifier: bool
    has_call: bool
    has_delegate: bool
    has_tx_origin: bool
    has_balance: bool
    can_send_eth: bool
    callee_external: bool

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(getattr(self, name)) for name in STATIC_FEATURE_NAMES)


@dataclass(frozen=True)
class FunctionShape:
    """Counts feeding the priority scores (all non-negative)."""

    caller_count: int
    param_dim: int
    cond_count: int
    cond_distance: int


def function_cfg(pkg: ContractPackage, fn: FunctionDescriptor) -> Cfg:
    """Intraprocedural CFG: traversal stops at other functions' entries."""
    return build_cfg(pkg.code, fn.entry_pc, function_boundaries(pkg, fn))


def _require_member(pkg: ContractPackage, fn: FunctionDescriptor) -> None:
    if all(f.name != fn.name for f in pkg.functions):
        raise KeyError(f"unknown function {fn.name!r} in contract {pkg.name!r}")


def _guard_prologue(cfg: Cfg) -> bool:
    """Entry-block CALLER/ORIGIN comparison guarding an immediate REVERT."""
    by_id = {b.id: b for b in cfg.blocks}
    entry = by_id[cfg.entry_id]
    candidates = [entry]
    if not entry.is_conditional and len(entry.successors) == 1:
        nxt = by_id[entry.successors[0]]
        if not nxt.is_virtual_exit:
            candidates.append(nxt)
    for block in candidates:
        names = {i.opcode.mnemonic for i in block.instructions}
        if not block.is_conditional:
            continue
        if not ({"CALLER", "ORIGIN"} & names and "EQ" in names):
            continue
        for succ in block.successors:
            succ_block = by_id.get(succ)
            if succ_block is not None and succ_block.terminator == "REVERT":
                return True
    return False


def extract_static_features(pkg: ContractPackage, fn: FunctionDescriptor,
                            cg: CallGraph) -> StaticFeatures:
    _require_member(pkg, fn)
    cfg = function_cfg(pkg, fn)
    mnemonics = [i.opcode.mnemonic for i in cfg.instructions()]
    present = set(mnemonics)

    can_send = False
    for block in cfg.blocks:
        for instr in block.instructions:
            if instr.opcode.mnemonic != "CALL":
                continue
            facts = cfg.facts.get(instr.pc)
            if facts is None or len(facts.operands) < 2:
                can_send = True  # value unknown: possibly nonzero
                continue
            value = facts.operands[1]
            if not value.known or value.const != 0:
                can_send = True

    return StaticFeatures(
        has_modifier=fn.has_modifier or _guard_prologue(cfg),
        has_call=bool(present & CRITICAL_OPCODES),
        has_delegate="DELEGATECALL" in present,
        has_tx_origin="ORIGIN" in present,
        has_balance="BALANCE" in present,
        can_send_eth=can_send,
        callee_external=cg.has_external_callee((pkg.name, fn.name)),
    )


def _distance_to_first_conditional(cfg: Cfg) -> int:
    """Blocks on the shortest entry path strictly before the first conditional."""
    by_id = {b.id: b for b in cfg.blocks}
    queue: deque[tuple[int, int]] = deque([(cfg.entry_id, 0)])
    seen = {cfg.entry_id}
    while queue:
        block_id, depth = queue.popleft()
        block: BasicBlock = by_id[block_id]
        if block.is_conditional:
            return depth
        for succ in block.successors:
            if succ not in seen and succ != cfg.exit_id:
                seen.add(succ)
                queue.append((succ, depth + 1))
    return 0  # no conditional at all


def function_shape(pkg: ContractPackage, fn: FunctionDescriptor,
                   cg: CallGraph) -> FunctionShape:
    """Pure function of (pkg, fn, cg); reproduces the worked fixture values."""
    _require_member(pkg, fn)
    cfg = function_cfg(pkg, fn)
    param_dim = sum(2 if p.is_complex else 1 for p in fn.params)
    cond_count = len(cfg.conditional_block_ids())
    return FunctionShape(
        caller_count=cg.in_degree((pkg.name, fn.name)),
        param_dim=param_dim,
        cond_count=cond_count,
        cond_distance=_distance_to_first_conditional(cfg),
    )


__all__ = [
    "STATIC_FEATURE_NAMES",
    "FunctionShape",
    "StaticFeatures",
    "extract_static_features",
    "function_cfg",
    "function_shape",
]
