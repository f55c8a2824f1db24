import pytest

import corpora
from xcfuzz.vm import (
    ContractPackage,
    DeployError,
    FunctionDescriptor,
    Outcome,
    StorageSlot,
    TransactionRequest,
    deploy,
    execute_transaction,
)
from xcfuzz.vm.assembler import assemble_with_labels
from xcfuzz.vm.interpreter import InvalidTransaction

ATTACKER = 0x9999


def _single(name, addr, source, selector=0xAA000001, balance=0, storage=None,
            **fn_kwargs):
    code, labels = assemble_with_labels(source)
    entry = min(labels.values()) if labels else 0
    fn = FunctionDescriptor(name="f", selector=selector, entry_pc=entry, **fn_kwargs)
    return ContractPackage(name=name, address=addr, code=code, functions=[fn],
                           balance=balance, initial_storage=dict(storage or {}))


def _tx(target, selector, args=(), value=0, budget=10_000, caller=ATTACKER,
        origin=None):
    return TransactionRequest(caller=caller, origin=origin or caller,
                              target=target, selector=selector, args=tuple(args),
                              value=value, step_budget=budget)


ARITH = """
f:
    JUMPDEST
    PUSH1 3
    PUSH1 5
    ADD
    PUSH1 0
    MSTORE
    PUSH1 8
    PUSH1 0
    RETURN
"""


def test_arithmetic_return_word():
    world = deploy([_single("T", 0x1, ARITH)])
    trace = execute_transaction(world, _tx(0x1, 0xAA000001))
    assert trace.outcome is Outcome.HALTED
    assert int.from_bytes(trace.return_data, "big") == 8


def test_step_budget_exhaustion():
    world = deploy([_single("T", 0x1, ARITH)])
    trace = execute_transaction(world, _tx(0x1, 0xAA000001, budget=2))
    assert trace.outcome is Outcome.OUT_OF_STEPS
    assert len(trace.events) == 2


CALLER_CODE = """
f:
    JUMPDEST
    PUSH4 0xBB000001
    PUSH1 0
    MSTORE
    PUSH1 0
    PUSH1 0
    PUSH1 8
    PUSH1 0
    PUSH1 0
    PUSH8 0x2
    CALL
    POP
    STOP
"""

CALLEE_CODE = """
f:
    JUMPDEST
    PUSH1 1
    PUSH1 7
    SSTORE
    STOP
"""


def test_nested_call_touches_both_and_records_callee_write():
    a = _single("A", 0x1, CALLER_CODE)
    b = _single("B", 0x2, CALLEE_CODE, selector=0xBB000001)
    world = deploy([a, b])
    trace = execute_transaction(world, _tx(0x1, 0xAA000001))
    assert trace.outcome is Outcome.HALTED
    assert trace.touched_contracts == {0x1, 0x2}
    sstores = trace.events_of("SSTORE")
    assert len(sstores) == 1
    assert StorageSlot(0x2, 7) in sstores[0].writes
    assert world.images[0x2].storage[7] == 1


def test_deploy_duplicate_address():
    a = _single("A", 0x1, ARITH)
    b = _single("B", 0x1, ARITH)
    with pytest.raises(DeployError, match="duplicate address"):
        deploy([a, b])


def test_deploy_three_packages_zeroed_storage():
    pkgs = [_single(f"C{i}", i + 1, ARITH) for i in range(3)]
    world = deploy(pkgs)
    assert len(world.images) == 3
    assert all(img.storage == {} for img in world.images.values())


def test_deploy_rejects_constant_jump_to_non_jumpdest():
    bad = """
f:
    JUMPDEST
    PUSH1 1
    JUMP
"""
    with pytest.raises(DeployError, match="invalid jump target"):
        deploy([_single("Bad", 0x1, bad)])


def test_missing_target_is_invalid_transaction():
    world = deploy([_single("T", 0x1, ARITH)])
    with pytest.raises(InvalidTransaction):
        execute_transaction(world, _tx(0x77, None))


def test_value_above_caller_balance_rejected():
    world = deploy([_single("T", 0x1, ARITH)])
    with pytest.raises(InvalidTransaction):
        execute_transaction(world, _tx(0x1, 0xAA000001, value=5))


def test_stack_underflow_reverts():
    world = deploy([_single("T", 0x1, "f:\n JUMPDEST\n POP\n STOP")])
    trace = execute_transaction(world, _tx(0x1, 0xAA000001))
    assert trace.outcome is Outcome.REVERTED


def test_revert_rolls_back_storage_and_balances():
    source = """
f:
    JUMPDEST
    PUSH1 42
    PUSH1 3
    SSTORE
    PUSH1 0
    PUSH1 0
    REVERT
"""
    world = deploy([_single("T", 0x1, source, balance=100)])
    world.ensure_account(ATTACKER).balance = 50
    before = world.snapshot()
    trace = execute_transaction(world, _tx(0x1, 0xAA000001, value=10))
    assert trace.outcome is Outcome.REVERTED
    assert world.snapshot() == before
    assert trace.value_transfers == []


def test_inner_revert_leaves_outer_state_intact():
    outer = """
f:
    JUMPDEST
    PUSH1 5
    PUSH1 1
    SSTORE
    PUSH4 0xBB000001
    PUSH1 0
    MSTORE
    PUSH1 0
    PUSH1 0
    PUSH1 8
    PUSH1 0
    PUSH1 0
    PUSH8 0x2
    CALL
    POP
    STOP
"""
    inner = """
f:
    JUMPDEST
    PUSH1 9
    PUSH1 2
    SSTORE
    PUSH1 0
    PUSH1 0
    REVERT
"""
    a = _single("A", 0x1, outer)
    b = _single("B", 0x2, inner, selector=0xBB000001)
    world = deploy([a, b])
    trace = execute_transaction(world, _tx(0x1, 0xAA000001))
    assert trace.outcome is Outcome.HALTED
    assert world.images[0x1].storage[1] == 5
    assert 2 not in world.images[0x2].storage
    # the inner frame's events remain part of the trace
    assert any(e.contract_addr == 0x2 for e in trace.events)


def test_delegatecall_context_law():
    world = deploy(corpora.delegation_packages())
    trace = execute_transaction(
        world, _tx(corpora.DELEGATION_ADDR, corpora.SEL_PWN))
    assert trace.outcome is Outcome.HALTED
    sstores = trace.events_of("SSTORE")
    assert len(sstores) == 1
    # code owner is Delegate, storage owner is Delegation
    assert sstores[0].contract_addr == corpora.DELEGATE_ADDR
    assert StorageSlot(corpora.DELEGATION_ADDR, 0) in sstores[0].writes
    assert StorageSlot(corpora.DELEGATE_ADDR, 0) not in sstores[0].writes
    assert world.images[corpora.DELEGATION_ADDR].storage[0] == ATTACKER


def test_delegatecall_preserves_caller():
    # inside the delegated frame, CALLER must be the original tx caller
    world = deploy(corpora.delegation_packages())
    trace = execute_transaction(
        world, _tx(corpora.DELEGATION_ADDR, corpora.SEL_PWN))
    assert world.images[corpora.DELEGATION_ADDR].storage[0] == ATTACKER


def test_value_transfer_triggers_fallback():
    receiver_src = """
fb:
    JUMPDEST
    PUSH1 1
    PUSH1 0
    SSTORE
    STOP
"""
    code, labels = assemble_with_labels(receiver_src)
    receiver = ContractPackage(
        name="R", address=0x2, code=code,
        functions=[FunctionDescriptor(name="fb", selector=None,
                                      entry_pc=labels["fb"], is_fallback=True)])
    sender_src = """
f:
    JUMPDEST
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 9
    PUSH8 0x2
    CALL
    POP
    STOP
"""
    sender = _single("S", 0x1, sender_src, balance=100)
    world = deploy([sender, receiver])
    trace = execute_transaction(world, _tx(0x1, 0xAA000001))
    assert trace.outcome is Outcome.HALTED
    assert world.images[0x2].balance == 9
    assert world.images[0x2].storage[0] == 1
    assert (0x1, 0x2, 9) in trace.value_transfers


def test_transfer_to_codeless_account_succeeds():
    sender_src = """
f:
    JUMPDEST
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 7
    PUSH8 0x2
    CALL
    PUSH1 0
    MSTORE
    STOP
"""
    sender = _single("S", 0x1, sender_src, balance=10)
    empty = ContractPackage(name="E", address=0x2, code=b"")
    world = deploy([sender, empty])
    execute_transaction(world, _tx(0x1, 0xAA000001))
    assert world.images[0x2].balance == 7


def test_unknown_selector_without_fallback_reverts():
    world = deploy([_single("T", 0x1, ARITH)])
    trace = execute_transaction(world, _tx(0x1, 0xDEAD0001))
    assert trace.outcome is Outcome.REVERTED


def test_unknown_selector_routes_to_fallback():
    world = deploy(corpora.delegation_packages())
    # SEL_PWN is not registered on Delegation, so its forwarding fallback runs
    trace = execute_transaction(
        world, _tx(corpora.DELEGATION_ADDR, corpora.SEL_PWN))
    assert trace.events[0].contract_addr == corpora.DELEGATION_ADDR
    assert trace.events[0].function_selector is None  # fallback marker


def test_conservation_of_balances():
    world = deploy(corpora.chain_packages())
    world.ensure_account(ATTACKER).balance = 77
    total_before = world.total_balance()
    trace = execute_transaction(
        world, _tx(corpora.CHAIN_LOGGING_ADDR, corpora.SEL_LOG, value=5))
    assert trace.outcome is Outcome.HALTED
    assert world.total_balance() == total_before


def test_replay_determinism():
    def run():
        world = deploy(corpora.chain_packages())
        world.ensure_account(ATTACKER).balance = 10
        return execute_transaction(
            world, _tx(corpora.CHAIN_LOGGING_ADDR, corpora.SEL_LOG))

    assert run().render() == run().render()
