"""Built-in labeling voters and the majority-vote rule.

Three deterministic voters with deliberately different rule sets stand in
for external analyzers:

  v1 (strict pattern) works on the function's CFG: call-before-store paths,
     origin comparisons guarding a transfer, delegation reachable from a
     calldata read.
  v2 (taint style) works on block-local taint tags: storage reads feeding a
     call value, calldata feeding a delegatecall, origin feeding a guard or
     call operand.
  v3 (conservative syntactic) scans the whole contract's code for opcode
     presence, so it also fires on dead code.

A function is labeled vulnerable when the category's vote threshold is met:
two votes for reentrancy, one for tx-origin, any report for delegatecall.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from xcfuzz.analysis.cfg import Cfg
from xcfuzz.analysis.deps import control_dependencies, post_dominators
from xcfuzz.analysis.features import function_cfg
from xcfuzz.oracles.findings import VulnCategory
from xcfuzz.vm.assembler import disassemble
from xcfuzz.vm.constsim import TAG_CALLDATA, TAG_ORIGIN, TAG_STORAGE
from xcfuzz.vm.opcodes import CRITICAL_OPCODES
from xcfuzz.vm.state import ContractPackage, FunctionDescriptor

VOTER_IDS = ("v1", "v2", "v3")

# Votes needed per category.
VOTE_THRESHOLDS = {
    VulnCategory.REENTRANCY: 2,
    VulnCategory.TX_ORIGIN: 1,
    VulnCategory.DELEGATECALL: 1,
}


def majority_label(votes: dict[str, bool], category: VulnCategory) -> bool:
    if category not in VOTE_THRESHOLDS:
        raise KeyError(f"unknown category {category!r}")
    return sum(1 for flag in votes.values() if flag) >= VOTE_THRESHOLDS[category]


def _block_reachability(cfg: Cfg) -> dict[int, set[int]]:
    reach: dict[int, set[int]] = {}
    succs = {b.id: b.successors for b in cfg.blocks}
    for b in cfg.blocks:
        seen: set[int] = set()
        stack = list(succs[b.id])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(succs.get(n, ()))
        reach[b.id] = seen
    return reach


def _blocks_with(cfg: Cfg, mnemonics: set[str]) -> dict[int, list[int]]:
    """block id -> pcs of matching instructions."""
    out: dict[int, list[int]] = {}
    for b in cfg.blocks:
        pcs = [i.pc for i in b.instructions if i.opcode.mnemonic in mnemonics]
        if pcs:
            out[b.id] = pcs
    return out


def _ordered_pair_exists(cfg: Cfg, first: set[str], then: set[str]) -> bool:
    """Is there a CFG path where a `first` op precedes a `then` op?"""
    reach = _block_reachability(cfg)
    a_blocks = _blocks_with(cfg, first)
    b_blocks = _blocks_with(cfg, then)
    for ba, pcs_a in a_blocks.items():
        for bb, pcs_b in b_blocks.items():
            if ba == bb and min(pcs_a) < max(pcs_b):
                return True
            if bb in reach[ba]:
                return True
    return False


def _transfer_blocks(cfg: Cfg) -> set[int]:
    """Blocks holding a CALL whose value operand is possibly nonzero."""
    out = set()
    for b in cfg.blocks:
        for instr in b.instructions:
            if instr.opcode.mnemonic != "CALL":
                continue
            facts = cfg.facts.get(instr.pc)
            if facts is None or len(facts.operands) < 2:
                out.add(b.id)
                continue
            value = facts.operands[1]
            if not value.known or value.const != 0:
                out.add(b.id)
    return out


def _vote_v1(cfg: Cfg) -> dict[VulnCategory, bool]:
    reentrancy = _ordered_pair_exists(cfg, CRITICAL_OPCODES, {"SSTORE"})
    delegate = _ordered_pair_exists(cfg, {"CALLDATALOAD", "CALLDATASIZE"},
                                    {"DELEGATECALL"})

    origin_guarded = False
    guard_blocks = set()
    for b in cfg.blocks:
        names = {i.opcode.mnemonic for i in b.instructions}
        if b.is_conditional and "ORIGIN" in names and "EQ" in names:
            guard_blocks.add(b.id)
    if guard_blocks:
        deps = control_dependencies(cfg, post_dominators(cfg))
        transfers = _transfer_blocks(cfg)
        for t in transfers:
            if deps.dependencies_of(t) & guard_blocks:
                origin_guarded = True
                break
    return {VulnCategory.REENTRANCY: reentrancy,
            VulnCategory.DELEGATECALL: delegate,
            VulnCategory.TX_ORIGIN: origin_guarded}


def _vote_v2(cfg: Cfg) -> dict[VulnCategory, bool]:
    reentrancy = False
    delegate = False
    origin = False
    has_call = any(i.opcode.mnemonic in CRITICAL_OPCODES
                   for i in cfg.instructions())
    for b in cfg.blocks:
        for instr in b.instructions:
            name = instr.opcode.mnemonic
            facts = cfg.facts.get(instr.pc)
            if facts is None:
                continue
            if name in ("CALL", "CALLCODE") and len(facts.operands) >= 2:
                value = facts.operands[1]
                if TAG_STORAGE in value.taints:
                    reentrancy = True
                if TAG_ORIGIN in value.taints or (
                        facts.operands and
                        TAG_ORIGIN in facts.operands[0].taints):
                    origin = True
            if name == "DELEGATECALL" and facts.operands:
                taints = set()
                for v in facts.operands[:3]:
                    taints |= v.taints
                args_off = facts.operands[1]
                if args_off.known:
                    word = facts.memory.get(args_off.const)
                    if word is not None:
                        taints |= word.taints
                if TAG_CALLDATA in taints:
                    delegate = True
            if name == "JUMPI" and len(facts.operands) == 2 and has_call:
                if TAG_ORIGIN in facts.operands[1].taints:
                    origin = True
    return {VulnCategory.REENTRANCY: reentrancy,
            VulnCategory.DELEGATECALL: delegate,
            VulnCategory.TX_ORIGIN: origin}


def _vote_v3(pkg: ContractPackage) -> dict[VulnCategory, bool]:
    names = {i.opcode.mnemonic for i in disassemble(pkg.code)}
    return {
        VulnCategory.REENTRANCY: bool(names & CRITICAL_OPCODES)
        and "SSTORE" in names,
        VulnCategory.DELEGATECALL: "DELEGATECALL" in names,
        VulnCategory.TX_ORIGIN: "ORIGIN" in names,
    }


def run_voters(pkg: ContractPackage,
               fn: FunctionDescriptor) -> dict[str, dict[VulnCategory, bool]]:
    cfg = function_cfg(pkg, fn)
    return {"v1": _vote_v1(cfg), "v2": _vote_v2(cfg), "v3": _vote_v3(pkg)}


@dataclass
class LabelRecord:
    contract: str
    function: str
    category: VulnCategory
    votes: dict[str, bool] = field(default_factory=dict)

    @property
    def label(self) -> bool:
        return majority_label(self.votes, self.category)


def voter_labels_for_corpus(packages: list[ContractPackage]) -> list[LabelRecord]:
    records = []
    for pkg in packages:
        for fn in pkg.functions:
            votes = run_voters(pkg, fn)
            for category in VulnCategory:
                records.append(LabelRecord(
                    contract=pkg.name, function=fn.name, category=category,
                    votes={vid: votes[vid][category] for vid in VOTER_IDS}))
    return records


def aggregate_labels(records: list[LabelRecord],
                     category: VulnCategory) -> dict[tuple[str, str], bool]:
    return {(r.contract, r.function): r.label
            for r in records if r.category is category}


# -- label ingestion file (JSONL: one voter vote per line) -------------------

def write_label_file(path: str | Path, records: list[LabelRecord]) -> None:
    lines = []
    for r in records:
        for voter, flag in sorted(r.votes.items()):
            lines.append(json.dumps({
                "contract": r.contract, "function": r.function,
                "category": r.category.value, "voter": voter,
                "flag": bool(flag)}, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_label_file(path: str | Path) -> list[LabelRecord]:
    grouped: dict[tuple[str, str, str], dict[str, bool]] = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
            key = (row["contract"], row["function"], row["category"])
            grouped.setdefault(key, {})[row["voter"]] = bool(row["flag"])
        except (json.JSONDecodeError, KeyError) as exc:
            raise ValueError(f"{path}:{number}: bad label record: {exc}") from exc
    return [LabelRecord(contract=c, function=f, category=VulnCategory(cat),
                        votes=votes)
            for (c, f, cat), votes in grouped.items()]


__all__ = [
    "VOTE_THRESHOLDS",
    "VOTER_IDS",
    "LabelRecord",
    "aggregate_labels",
    "majority_label",
    "read_label_file",
    "run_voters",
    "voter_labels_for_corpus",
    "write_label_file",
]
