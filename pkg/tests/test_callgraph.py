import corpora
from xcfuzz.analysis.callgraph import build_call_graph
from xcfuzz.vm.state import ContractPackage, DeclaredCall, FunctionDescriptor
from xcfuzz.vm.assembler import assemble_with_labels


def test_fixture_withdraw_has_internal_and_external_caller():
    cg = build_call_graph(corpora.fig8_packages())
    node = ("Wallet", "withdraw")
    assert cg.in_degree(node) == 2
    callers = cg.callers_of(node)
    assert ("Wallet", "changeOwner") in callers
    assert ("Logic", "logTrans") in callers
    kinds = {(e.caller, e.external) for e in cg.in_edges(node)}
    assert (("Wallet", "changeOwner"), False) in kinds
    assert (("Logic", "logTrans"), True) in kinds


def test_contract_without_calls_has_no_edges():
    src = """
f:
    JUMPDEST
    PUSH1 1
    POP
    STOP
"""
    code, labels = assemble_with_labels(src)
    pkg = ContractPackage(
        name="C", address=0x1, code=code,
        functions=[FunctionDescriptor("f", 0xAA000001, labels["f"])])
    cg = build_call_graph([pkg])
    assert cg.edges == []
    assert cg.unresolved == []


def test_stack_computed_target_yields_unresolved_site():
    src = """
f:
    JUMPDEST
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 8
    CALLDATALOAD
    CALL
    POP
    STOP
"""
    code, labels = assemble_with_labels(src)
    pkg = ContractPackage(
        name="C", address=0x1, code=code,
        functions=[FunctionDescriptor("f", 0xAA000001, labels["f"])])
    cg = build_call_graph([pkg])
    assert cg.edges == []
    assert len(cg.unresolved) == 1
    assert cg.unresolved[0].mnemonic == "CALL"


def test_manifest_declared_edge_is_merged():
    src = """
f:
    JUMPDEST
    STOP
g:
    JUMPDEST
    STOP
"""
    code, labels = assemble_with_labels(src)
    a = ContractPackage(
        name="A", address=0x1, code=code,
        functions=[FunctionDescriptor("f", 0xAA000001, labels["f"])],
        declared_calls=[DeclaredCall("f", "B", "g")])
    b = ContractPackage(
        name="B", address=0x2, code=code,
        functions=[FunctionDescriptor("g", 0xBB000001, labels["g"])])
    cg = build_call_graph([a, b])
    edges = [(e.caller, e.callee, e.external, e.declared) for e in cg.edges]
    assert (("A", "f"), ("B", "g"), True, True) in edges


def test_zero_length_call_resolves_to_fallback():
    fallback_src = """
fb:
    JUMPDEST
    STOP
"""
    caller_src = """
f:
    JUMPDEST
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 5
    PUSH8 0x2
    CALL
    POP
    STOP
"""
    f_code, f_labels = assemble_with_labels(fallback_src)
    c_code, c_labels = assemble_with_labels(caller_src)
    receiver = ContractPackage(
        name="R", address=0x2, code=f_code,
        functions=[FunctionDescriptor("fb", None, f_labels["fb"],
                                      is_fallback=True)])
    caller = ContractPackage(
        name="C", address=0x1, code=c_code,
        functions=[FunctionDescriptor("f", 0xAA000001, c_labels["f"])])
    cg = build_call_graph([caller, receiver])
    assert (("C", "f"), ("R", "fb")) in {(e.caller, e.callee) for e in cg.edges}
