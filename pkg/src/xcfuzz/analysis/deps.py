"""Post-dominance, control dependency, and data dependency.

Control dependency follows the classical branch-successor formulation:
a node is control-dependent on a branch if some successor of the branch is
post-dominated by it while the branch itself is not.  Data dependency over
a trace is the exact read/write intersection relation: an edge runs from
every earlier writer of a location to each later reader.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

from xcfuzz.analysis.cfg import Cfg
from xcfuzz.vm.trace import ExecutionTrace, Location, TraceEvent


@dataclass
class PostDomTree:
    """Immediate post-dominators, rooted at the virtual exit.

    Blocks with no path to the exit carry no entry in ``ipdom`` and are
    listed in ``flagged`` (they are excluded from control dependency).
    """

    ipdom: dict[int, int]
    root: int
    flagged: frozenset[int] = frozenset()

    def post_dominates(self, a: int, b: int) -> bool:
        """True iff ``a`` post-dominates ``b`` (reflexive)."""
        node: int | None = b
        while node is not None:
            if node == a:
                return True
            node = self.ipdom.get(node) if node != self.root else None
        return False

    def chain(self, node: int) -> list[int]:
        """``node`` and all its post-dominators, walking to the root."""
        out = [node]
        while node != self.root:
            nxt = self.ipdom.get(node)
            if nxt is None:
                break
            out.append(nxt)
            node = nxt
        return out


def post_dominators(cfg: Cfg) -> PostDomTree:
    """Iterative set-based fixpoint on the reverse graph."""
    nodes = [b.id for b in cfg.blocks]
    universe = set(nodes)
    succs = {b.id: [s for s in b.successors] for b in cfg.blocks}
    pdom: dict[int, set[int]] = {n: set(universe) for n in nodes}
    pdom[cfg.exit_id] = {cfg.exit_id}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == cfg.exit_id:
                continue
            if succs[n]:
                new = set(universe)
                for s in succs[n]:
                    new &= pdom[s]
            else:
                new = set(universe)  # no successors and not exit: dead-ended
            new.add(n)
            if new != pdom[n]:
                pdom[n] = new
                changed = True

    flagged = set(cfg.no_exit_ids)
    ipdom: dict[int, int] = {}
    for n in nodes:
        if n == cfg.exit_id or n in flagged:
            continue
        strict = pdom[n] - {n} - flagged
        # the immediate post-dominator is the strict one dominated by all others
        for d in strict:
            if strict - {d} <= (pdom[d] - flagged):
                ipdom[n] = d
                break
    return PostDomTree(ipdom=ipdom, root=cfg.exit_id, flagged=frozenset(flagged))


class EdgeKind(Enum):
    CONTROL = "control"
    DATA = "data"


class DependencyGraph:
    """Typed dependency edges over integer node ids with closure queries.

    Nodes are trace event indices (dynamic graphs) or instruction offsets /
    block ids (static graphs).  An edge (i, j) means node j depends on the
    earlier node i; the dependency relation is the transitive closure,
    evaluated on query.
    """

    def __init__(self) -> None:
        self._into: dict[int, set[tuple[int, EdgeKind]]] = defaultdict(set)
        self._edges: set[tuple[int, int, EdgeKind]] = set()

    def add_edge(self, src: int, dst: int, kind: EdgeKind) -> None:
        self._into[dst].add((src, kind))
        self._edges.add((src, dst, kind))

    def edges(self) -> set[tuple[int, int, EdgeKind]]:
        return set(self._edges)

    def direct_dependencies(self, node: int,
                            kinds: tuple[EdgeKind, ...] | None = None
                            ) -> set[int]:
        return {src for src, kind in self._into.get(node, ())
                if kinds is None or kind in kinds}

    def dependencies_of(self, node: int,
                        kinds: tuple[EdgeKind, ...] | None = None) -> set[int]:
        """All nodes ``node`` transitively depends on."""
        seen: set[int] = set()
        stack = [node]
        while stack:
            n = stack.pop()
            for src in self.direct_dependencies(n, kinds):
                if src not in seen:
                    seen.add(src)
                    stack.append(src)
        return seen

    def depends_on(self, node: int, other: int,
                   kinds: tuple[EdgeKind, ...] | None = None) -> bool:
        return other in self.dependencies_of(node, kinds)


def control_dependencies(cfg: Cfg, pdom: PostDomTree) -> DependencyGraph:
    """Block-level Definition-1 control dependency via the branch-edge walk."""
    graph = DependencyGraph()
    for block in cfg.blocks:
        u = block.id
        if u in pdom.flagged or u == cfg.exit_id:
            continue
        stop = pdom.ipdom.get(u)
        for v in block.successors:
            runner: int | None = v
            while runner is not None and runner != stop:
                if runner in pdom.flagged:
                    break
                if runner != u:
                    graph.add_edge(u, runner, EdgeKind.CONTROL)
                runner = pdom.ipdom.get(runner)
    return graph


def control_source_pcs(cfg: Cfg, pdom: PostDomTree | None = None) -> dict[int, set[int]]:
    """pc -> pcs of the JUMPIs the instruction is control-dependent on.

    Instructions inherit their block's dependency; only conditional blocks
    can be dependency sources.
    """
    if pdom is None:
        pdom = post_dominators(cfg)
    block_deps = control_dependencies(cfg, pdom)
    jumpi_pc = {b.id: b.instructions[-1].pc
                for b in cfg.blocks
                if b.is_conditional and b.instructions}
    out: dict[int, set[int]] = {}
    for block in cfg.blocks:
        if block.is_virtual_exit:
            continue
        # direct sources only; transitive control flows through closure queries
        direct = {jumpi_pc[d]
                  for d in block_deps.direct_dependencies(block.id,
                                                          (EdgeKind.CONTROL,))
                  if d in jumpi_pc}
        for instr in block.instructions:
            out[instr.pc] = set(direct)
    return out


def data_dependencies(trace: ExecutionTrace) -> DependencyGraph:
    """Definition-2 edges: i -> j iff i < j and writes(i) meet reads(j)."""
    graph = DependencyGraph()
    writers: dict[Location, list[int]] = defaultdict(list)
    for event in trace.events:
        for loc in event.reads:
            for w in writers.get(loc, ()):
                graph.add_edge(w, event.index, EdgeKind.DATA)
        for loc in event.writes:
            writers[loc].append(event.index)
    return graph


def add_dynamic_control_edges(
        graph: DependencyGraph, trace: ExecutionTrace,
        source_pcs_by_fn: dict[tuple[int, int | None], dict[int, set[int]]]) -> None:
    """Mark each JUMPI event as a control source for the events it guards.

    ``source_pcs_by_fn`` maps (contract address, function selector) to the
    static pc-level control sources of that function's CFG.  For each event
    the latest earlier JUMPI in the same activation at a controlling pc
    becomes its dynamic control dependency.
    """
    jumpis_by_frame: dict[tuple[int, int], list[TraceEvent]] = defaultdict(list)
    for event in trace.events:
        key = (event.frame_id, event.activation_id)
        fn_key = (event.contract_addr, event.function_selector)
        sources = source_pcs_by_fn.get(fn_key, {}).get(event.pc, set())
        if sources:
            for jumpi in reversed(jumpis_by_frame[key]):
                if jumpi.pc in sources:
                    graph.add_edge(jumpi.index, event.index, EdgeKind.CONTROL)
                    break
        if event.opcode.mnemonic == "JUMPI":
            jumpis_by_frame[key].append(event)


def full_trace_dependencies(
        trace: ExecutionTrace,
        source_pcs_by_fn: dict[tuple[int, int | None], dict[int, set[int]]] | None = None,
) -> DependencyGraph:
    """Data edges plus dynamic control edges: the full dependency relation."""
    graph = data_dependencies(trace)
    if source_pcs_by_fn:
        add_dynamic_control_edges(graph, trace, source_pcs_by_fn)
    return graph


__all__ = [
    "DependencyGraph",
    "EdgeKind",
    "PostDomTree",
    "add_dynamic_control_edges",
    "control_dependencies",
    "control_source_pcs",
    "data_dependencies",
    "full_trace_dependencies",
    "post_dominators",
]
