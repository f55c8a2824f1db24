"""Trace oracles for reentrancy, dangerous delegatecall, and tx-origin misuse.

All three work on one execution trace plus its dependency graph (data edges
and dynamic control edges).  Reentrancy: an external call whose target,
value, or guarding condition transitively reads a storage slot that a later
SSTORE in the same function activation overwrites.  Delegatecall: the
delegated target or payload is influenced by transaction calldata, or a
later external call consumes the delegatecall's return data.  Tx-origin: an
external call transitively depends on an ORIGIN instruction.

Every emitted finding is re-checked against its defining predicate before
it leaves this module.
"""

from __future__ import annotations

from collections import defaultdict

from xcfuzz.analysis.deps import DependencyGraph, EdgeKind
from xcfuzz.oracles.findings import Finding, VulnCategory
from xcfuzz.vm.opcodes import CRITICAL_OPCODES
from xcfuzz.vm.trace import (
    CallReturn,
    EnvInput,
    ExecutionTrace,
    Location,
    StackValue,
    StorageSlot,
    TraceEvent,
)

_CALLDATA = EnvInput("calldata")


def _critical_events(trace: ExecutionTrace) -> list[TraceEvent]:
    return [e for e in trace.events if e.opcode.mnemonic in CRITICAL_OPCODES]


def _writer_index(trace: ExecutionTrace) -> dict[Location, list[int]]:
    writers: dict[Location, list[int]] = defaultdict(list)
    for event in trace.events:
        for loc in event.writes:
            writers[loc].append(event.index)
    return writers


def _guard_condition_seeds(trace: ExecutionTrace, deps: DependencyGraph,
                           event: TraceEvent) -> set[Location]:
    """StackValues of the conditions of the JUMPIs directly guarding event."""
    seeds: set[Location] = set()
    for src in deps.direct_dependencies(event.index, (EdgeKind.CONTROL,)):
        guard = trace.events[src]
        if guard.opcode.mnemonic == "JUMPI" and len(guard.operand_value_ids) == 2:
            seeds.add(StackValue(guard.operand_value_ids[1]))
    return seeds


def _backward_slice_events(trace: ExecutionTrace,
                           writers: dict[Location, list[int]],
                           before_index: int,
                           seed_locations: set[Location]) -> set[int]:
    """Events whose outputs flow (via data edges only) into the seeds.

    Each hop respects trace order: a location's writer must precede the
    event that read it.
    """
    visited: set[int] = set()
    frontier: list[tuple[Location, int]] = [(loc, before_index)
                                            for loc in seed_locations]
    while frontier:
        loc, reader = frontier.pop()
        for w in writers.get(loc, ()):
            if w < reader and w not in visited:
                visited.add(w)
                frontier.extend((r, w) for r in trace.events[w].reads)
    return visited


def _call_seed_locations(event: TraceEvent,
                         include_payload: bool) -> set[Location]:
    """Target (and value) operands; optionally the payload inputs."""
    vids = event.operand_value_ids
    seeds: set[Location] = {StackValue(vids[0])}
    if event.opcode.mnemonic in ("CALL", "CALLCODE"):
        seeds.add(StackValue(vids[1]))
        payload_vids = vids[2:4]
    else:
        payload_vids = vids[1:3]
    if include_payload:
        seeds.update(StackValue(v) for v in payload_vids)
        seeds.update(loc for loc in event.reads
                     if not isinstance(loc, StackValue))
    return seeds


def _same_activation(a: TraceEvent, b: TraceEvent) -> bool:
    return (a.frame_id, a.activation_id) == (b.frame_id, b.activation_id)


def _finish(finding: Finding, trace: ExecutionTrace,
            deps: DependencyGraph) -> Finding:
    classify_cross_contract(finding)
    assert witness_satisfies(trace, deps, finding), (
        f"emitted finding fails its own predicate: {finding}")
    return finding


def detect_reentrancy(trace: ExecutionTrace,
                      deps: DependencyGraph) -> list[Finding]:
    findings: list[Finding] = []
    writers = _writer_index(trace)
    sstores = trace.events_of("SSTORE")
    for call in _critical_events(trace):
        seeds = _call_seed_locations(call, include_payload=False)
        seeds |= _guard_condition_seeds(trace, deps, call)
        sliced = _backward_slice_events(trace, writers, call.index, seeds)
        slots = {loc for e in sliced for loc in trace.events[e].reads
                 if isinstance(loc, StorageSlot)}
        if not slots:
            continue
        for store in sstores:
            if store.index <= call.index or not _same_activation(call, store):
                continue
            written = {loc for loc in store.writes
                       if isinstance(loc, StorageSlot)}
            if written & slots:
                findings.append(_finish(Finding(
                    category=VulnCategory.REENTRANCY,
                    critical_index=call.index,
                    anchor_index=store.index,
                    critical_pc=call.pc,
                    contract_addr=call.contract_addr,
                    function_selector=call.function_selector,
                    trace=trace,
                ), trace, deps))
    return findings


def _calldata_tainted(trace: ExecutionTrace, writers, event: TraceEvent) -> bool:
    seeds = _call_seed_locations(event, include_payload=True)
    sliced = _backward_slice_events(trace, writers, event.index, seeds)
    return any(_CALLDATA in trace.events[e].reads for e in sliced)


def _return_data_writers(trace: ExecutionTrace, call_index: int) -> set[int]:
    marker = CallReturn(call_index)
    return {e.index for e in trace.events if marker in e.writes}


def detect_delegatecall(trace: ExecutionTrace,
                        deps: DependencyGraph) -> list[Finding]:
    findings: list[Finding] = []
    writers = _writer_index(trace)
    for dc in trace.events_of("DELEGATECALL"):
        if _calldata_tainted(trace, writers, dc):
            findings.append(_finish(Finding(
                category=VulnCategory.DELEGATECALL,
                critical_index=dc.index,
                anchor_index=dc.index,
                critical_pc=dc.pc,
                contract_addr=dc.contract_addr,
                function_selector=dc.function_selector,
                trace=trace,
            ), trace, deps))
            continue
        sources = {dc.index} | _return_data_writers(trace, dc.index)
        for call in _critical_events(trace):
            if call.index <= dc.index:
                continue
            if any(deps.depends_on(call.index, s) for s in sources):
                findings.append(_finish(Finding(
                    category=VulnCategory.DELEGATECALL,
                    critical_index=call.index,
                    anchor_index=dc.index,
                    critical_pc=call.pc,
                    contract_addr=call.contract_addr,
                    function_selector=call.function_selector,
                    trace=trace,
                ), trace, deps))
                break
    return findings


def detect_tx_origin(trace: ExecutionTrace,
                     deps: DependencyGraph) -> list[Finding]:
    findings: list[Finding] = []
    origins = trace.events_of("ORIGIN")
    if not origins:
        return findings
    for call in _critical_events(trace):
        for origin in origins:
            if origin.index < call.index and deps.depends_on(call.index,
                                                             origin.index):
                findings.append(_finish(Finding(
                    category=VulnCategory.TX_ORIGIN,
                    critical_index=call.index,
                    anchor_index=origin.index,
                    critical_pc=call.pc,
                    contract_addr=call.contract_addr,
                    function_selector=call.function_selector,
                    trace=trace,
                ), trace, deps))
                break
    return findings


def classify_cross_contract(finding: Finding) -> Finding:
    """Cross-contract iff the witness executed code of more than two owners."""
    trace = finding.trace
    if trace is not None:
        finding.contract_addrs = set(trace.touched_contracts)
    finding.cross_contract = len(finding.contract_addrs) > 2
    return finding


def detect_all(trace: ExecutionTrace, deps: DependencyGraph) -> list[Finding]:
    return (detect_reentrancy(trace, deps)
            + detect_delegatecall(trace, deps)
            + detect_tx_origin(trace, deps))


def witness_satisfies(trace: ExecutionTrace, deps: DependencyGraph,
                      finding: Finding) -> bool:
    """Re-check the category's defining predicate for the witness indices."""
    crit = trace.events[finding.critical_index]
    anchor = trace.events[finding.anchor_index]
    writers = _writer_index(trace)
    if finding.category is VulnCategory.REENTRANCY:
        if anchor.opcode.mnemonic != "SSTORE" or anchor.index <= crit.index:
            return False
        if not _same_activation(crit, anchor):
            return False
        seeds = _call_seed_locations(crit, include_payload=False)
        seeds |= _guard_condition_seeds(trace, deps, crit)
        sliced = _backward_slice_events(trace, writers, crit.index, seeds)
        slots = {loc for e in sliced for loc in trace.events[e].reads
                 if isinstance(loc, StorageSlot)}
        return bool(slots & {loc for loc in anchor.writes
                             if isinstance(loc, StorageSlot)})
    if finding.category is VulnCategory.DELEGATECALL:
        if anchor.opcode.mnemonic != "DELEGATECALL":
            return False
        if crit.index == anchor.index:
            return _calldata_tainted(trace, writers, anchor)
        sources = {anchor.index} | _return_data_writers(trace, anchor.index)
        return any(deps.depends_on(crit.index, s) for s in sources)
    if finding.category is VulnCategory.TX_ORIGIN:
        return (anchor.opcode.mnemonic == "ORIGIN"
                and anchor.index < crit.index
                and deps.depends_on(crit.index, anchor.index))
    return False


__all__ = [
    "classify_cross_contract",
    "detect_all",
    "detect_delegatecall",
    "detect_reentrancy",
    "detect_tx_origin",
    "witness_satisfies",
]
