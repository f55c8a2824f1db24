"""Call graph over (contract, function) nodes.

Intra-contract edges come from direct jumps into another function's entry;
cross-contract edges from CALL/CALLCODE/DELEGATECALL sites whose target
address and selector are statically constant, or from manifest-declared
calls.  Sites with dynamically-computed targets produce no edge and are
recorded as unresolved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from xcfuzz.analysis.cfg import Cfg, build_cfg
from xcfuzz.vm.constsim import InstructionFacts
from xcfuzz.vm.opcodes import CRITICAL_OPCODES
from xcfuzz.vm.state import ContractPackage, FunctionDescriptor

Node = tuple[str, str]  # (contract name, function name)


@dataclass(frozen=True)
class CallEdge:
    caller: Node
    callee: Node
    external: bool
    site_pc: int | None = None
    declared: bool = False


@dataclass(frozen=True)
class UnresolvedSite:
    contract: str
    function: str
    pc: int
    mnemonic: str


@dataclass(frozen=True)
class ContractLevelEdge:
    """Constant target address but dynamic selector: the callee contract is
    known, the exact function is not."""

    caller: Node
    callee_contract: str
    site_pc: int


@dataclass
class CallGraph:
    nodes: set[Node] = field(default_factory=set)
    edges: list[CallEdge] = field(default_factory=list)
    contract_edges: list[ContractLevelEdge] = field(default_factory=list)
    unresolved: list[UnresolvedSite] = field(default_factory=list)

    def in_edges(self, node: Node) -> list[CallEdge]:
        return [e for e in self.edges if e.callee == node]

    def out_edges(self, node: Node) -> list[CallEdge]:
        return [e for e in self.edges if e.caller == node]

    def callers_of(self, node: Node) -> set[Node]:
        return {e.caller for e in self.in_edges(node)}

    def in_degree(self, node: Node) -> int:
        """Number of distinct calling functions (internal plus external)."""
        return len(self.callers_of(node))

    def has_external_callee(self, node: Node) -> bool:
        if any(e.external for e in self.out_edges(node)):
            return True
        return any(e.callee_contract != node[0] for e in self.contract_edges
                   if e.caller == node)

    def to_dot(self) -> str:
        lines = ["digraph callgraph {", "  node [shape=box];"]
        for contract, fn in sorted(self.nodes):
            lines.append(f'  "{contract}.{fn}";')
        for e in self.edges:
            style = "solid" if not e.external else "bold"
            label = "external" if e.external else "internal"
            lines.append(
                f'  "{e.caller[0]}.{e.caller[1]}" -> "{e.callee[0]}.{e.callee[1]}"'
                f' [label="{label}" style={style}];')
        lines.append("}")
        return "\n".join(lines)


def _call_operand_layout(mnemonic: str) -> tuple[int, int]:
    """(args_offset operand index, args_length operand index), top-first."""
    if mnemonic == "DELEGATECALL":
        return 1, 2
    return 2, 3


def _selector_at(facts: InstructionFacts, args_off: int) -> int | None:
    word = facts.memory.get(args_off)
    if word is None or not word.known:
        return None
    return word.const if word.const <= 0xFFFFFFFF else None


def _resolve_cross_site(
        facts: InstructionFacts, mnemonic: str,
        by_address: dict[int, ContractPackage]
) -> tuple[ContractPackage, FunctionDescriptor | None] | None:
    """Resolve one CALL-family site.

    Returns (package, function) for a fully resolved site, (package, None)
    when only the target contract is constant, and None for fully dynamic
    targets.
    """
    if not facts.operands:
        return None
    target = facts.operands[0]
    if not target.known or target.const not in by_address:
        return None
    callee_pkg = by_address[target.const]
    off_i, len_i = _call_operand_layout(mnemonic)
    if len(facts.operands) <= len_i:
        return callee_pkg, None
    args_off, args_len = facts.operands[off_i], facts.operands[len_i]
    if args_len.known and args_len.const == 0:
        return callee_pkg, callee_pkg.fallback()
    if not args_off.known:
        return callee_pkg, None
    selector = _selector_at(facts, args_off.const)
    if selector is None:
        return callee_pkg, None
    for fn in callee_pkg.functions:
        if fn.selector == selector:
            return callee_pkg, fn
    return callee_pkg, callee_pkg.fallback()


def function_boundaries(pkg: ContractPackage,
                        fn: FunctionDescriptor) -> frozenset[int]:
    return frozenset(f.entry_pc for f in pkg.functions if f.name != fn.name)


def build_call_graph(packages: list[ContractPackage]) -> CallGraph:
    graph = CallGraph()
    by_address = {p.address: p for p in packages}
    for pkg in packages:
        for fn in pkg.functions:
            graph.nodes.add((pkg.name, fn.name))

    seen_edges: set[tuple[Node, Node, int | None]] = set()

    def _add(caller: Node, callee: Node, pc: int | None, declared: bool) -> None:
        key = (caller, callee, pc)
        if key in seen_edges:
            return
        seen_edges.add(key)
        graph.edges.append(CallEdge(caller=caller, callee=callee,
                                    external=caller[0] != callee[0],
                                    site_pc=pc, declared=declared))

    for pkg in packages:
        entry_to_fn = {f.entry_pc: f for f in pkg.functions}
        for fn in pkg.functions:
            cfg = build_cfg(pkg.code, fn.entry_pc, function_boundaries(pkg, fn))
            caller_node = (pkg.name, fn.name)
            for site in cfg.call_sites:
                callee_fn = entry_to_fn.get(site.target_pc)
                if callee_fn is not None:
                    _add(caller_node, (pkg.name, callee_fn.name), site.pc, False)
            for block in cfg.blocks:
                for instr in block.instructions:
                    name = instr.opcode.mnemonic
                    if name not in CRITICAL_OPCODES:
                        continue
                    facts = cfg.facts.get(instr.pc)
                    resolved = None
                    if facts is not None:
                        resolved = _resolve_cross_site(facts, name, by_address)
                    if resolved is None:
                        graph.unresolved.append(
                            UnresolvedSite(pkg.name, fn.name, instr.pc, name))
                    elif resolved[1] is None:
                        graph.contract_edges.append(ContractLevelEdge(
                            caller=caller_node,
                            callee_contract=resolved[0].name,
                            site_pc=instr.pc))
                    else:
                        callee_pkg, callee_fn = resolved
                        _add(caller_node, (callee_pkg.name, callee_fn.name),
                             instr.pc, False)

    for pkg in packages:
        for call in pkg.declared_calls:
            caller_node = (pkg.name, call.from_function)
            callee_node = (call.to_contract, call.to_function)
            if caller_node in graph.nodes and callee_node in graph.nodes:
                _add(caller_node, callee_node, None, True)

    return graph


__all__ = ["CallEdge", "CallGraph", "Node", "UnresolvedSite", "build_call_graph"]
