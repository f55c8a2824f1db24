"""Shared fixture contracts, written in mini-assembly.

Each builder returns a list of ContractPackage encoding one of the classic
vulnerability patterns (or its safe variant) against the 64-bit VM's wire
format: calldata word 0 carries the selector, argument words follow.
"""

from __future__ import annotations

from xcfuzz.vm.assembler import assemble_with_labels
from xcfuzz.vm.state import ContractPackage, FunctionDescriptor, ParamKind

U = ParamKind.UINT
A = ParamKind.ADDRESS
B = ParamKind.BYTES
ARR = ParamKind.ARRAY


def _pkg(name, address, source, functions, balance=0, storage=None,
         declared_calls=None):
    code, labels = assemble_with_labels(source)
    fns = []
    for spec in functions:
        label = spec.pop("label")
        fns.append(FunctionDescriptor(entry_pc=labels[label], **spec))
    return ContractPackage(name=name, address=address, code=code, functions=fns,
                           balance=balance, initial_storage=dict(storage or {}),
                           declared_calls=list(declared_calls or []))


# ---------------------------------------------------------------------------
# Priority-score worked example: Wallet.withdraw with an internal caller
# (changeOwner) and an external caller (Logic.logTrans).

FIG8_WALLET_ADDR = 0x1001
FIG8_LOGIC_ADDR = 0x1002
SEL_WITHDRAW = 0x11110001
SEL_CHANGE_OWNER = 0x11110002
SEL_LOGTRANS = 0x22220001

_FIG8_WALLET_ASM = """
withdraw:
    JUMPDEST
    PUSH1 0          ; retLen
    PUSH1 0          ; retOff
    PUSH1 0          ; argsLen
    PUSH1 0          ; argsOff
    PUSH1 16
    CALLDATALOAD     ; amount
    PUSH1 8
    CALLDATALOAD     ; recipient
    CALL
    POP
    STOP

changeOwner:
    JUMPDEST
    PUSH1 8
    CALLDATALOAD     ; touch the array argument
    POP
    PUSH2 @co_check
    JUMP
co_check:
    JUMPDEST
    PUSH1 0
    SLOAD            ; owner
    CALLER
    EQ
    PUSH2 @co_body
    JUMPI
    PUSH1 0
    PUSH1 0
    REVERT
co_body:
    JUMPDEST
    PUSH1 16
    CALLDATALOAD
    PUSH1 0
    SSTORE           ; owner := addrArray[idx] (simplified)
    PUSH2 @withdraw
    JUMP             ; internal tail call into withdraw
"""

_FIG8_LOGIC_ASM = f"""
logTrans:
    JUMPDEST
    PUSH4 0x{SEL_WITHDRAW:08X}
    PUSH1 0
    MSTORE           ; outgoing selector word
    PUSH1 16
    CALLDATALOAD     ; _exec
    PUSH1 8
    MSTORE
    PUSH1 24
    CALLDATALOAD     ; _value
    PUSH1 16
    MSTORE
    PUSH1 0          ; retLen
    PUSH1 0          ; retOff
    PUSH1 24         ; argsLen
    PUSH1 0          ; argsOff
    PUSH1 0          ; value
    PUSH8 0x{FIG8_WALLET_ADDR:X}
    CALL
    POP
    STOP
"""


def fig8_packages() -> list[ContractPackage]:
    wallet = _pkg(
        "Wallet", FIG8_WALLET_ADDR, _FIG8_WALLET_ASM,
        [
            {"label": "withdraw", "name": "withdraw", "selector": SEL_WITHDRAW,
             "params": (A, U), "is_public": False},
            {"label": "changeOwner", "name": "changeOwner",
             "selector": SEL_CHANGE_OWNER, "params": (ARR, U)},
        ],
        balance=10_000, storage={0: 0xBEEF},
    )
    logic = _pkg(
        "Logic", FIG8_LOGIC_ADDR, _FIG8_LOGIC_ASM,
        [
            {"label": "logTrans", "name": "logTrans", "selector": SEL_LOGTRANS,
             "params": (A, A, U, B)},
        ],
    )
    return [wallet, logic]


# ---------------------------------------------------------------------------
# Reentrancy: load balance, external call carrying it, zero the slot after.

REENTRANT_WALLET_ADDR = 0x2001
SEL_WITHDRAW_BALANCE = 0x2AA10001
REENTRANT_SLOT = 1
REENTRANT_AMOUNT = 500

_REENTRANT_ASM = """
withdrawBalance:
    JUMPDEST
    PUSH1 0          ; retLen
    PUSH1 0          ; retOff
    PUSH1 0          ; argsLen
    PUSH1 0          ; argsOff
    PUSH1 1
    SLOAD            ; value = userBalance
    CALLER           ; target
    CALL
    POP
    PUSH1 0
    PUSH1 1
    SSTORE           ; userBalance := 0, after the call
    STOP
"""

_SAFE_ASM = """
withdrawBalance:
    JUMPDEST
    PUSH1 1
    SLOAD
    PUSH1 0
    MSTORE           ; stash the amount
    PUSH1 0
    PUSH1 1
    SSTORE           ; userBalance := 0, before the call
    PUSH1 0          ; retLen
    PUSH1 0          ; retOff
    PUSH1 0          ; argsLen
    PUSH1 0          ; argsOff
    PUSH1 0
    MLOAD            ; value = stashed amount
    CALLER
    CALL
    POP
    STOP
"""


def reentrant_packages() -> list[ContractPackage]:
    return [_pkg("Wallet", REENTRANT_WALLET_ADDR, _REENTRANT_ASM,
                 [{"label": "withdrawBalance", "name": "withdrawBalance",
                   "selector": SEL_WITHDRAW_BALANCE}],
                 balance=10_000, storage={REENTRANT_SLOT: REENTRANT_AMOUNT})]


def checks_effects_packages() -> list[ContractPackage]:
    return [_pkg("SafeWallet", REENTRANT_WALLET_ADDR, _SAFE_ASM,
                 [{"label": "withdrawBalance", "name": "withdrawBalance",
                   "selector": SEL_WITHDRAW_BALANCE}],
                 balance=10_000, storage={REENTRANT_SLOT: REENTRANT_AMOUNT})]


# ---------------------------------------------------------------------------
# Three-contract reentrancy chain: Logging -> Logic -> Wallet, where Wallet
# pays the attacker before updating its books.

CHAIN_LOGGING_ADDR = 0x3001
CHAIN_LOGIC_ADDR = 0x3002
CHAIN_WALLET_ADDR = 0x3003
SEL_LOG = 0x3AA10001
SEL_LOGGING = 0x3BB10001
SEL_CHAIN_WITHDRAW = 0x3CC10001

_CHAIN_LOGGING_ASM = f"""
log:
    JUMPDEST
    PUSH4 0x{SEL_LOGGING:08X}
    PUSH1 0
    MSTORE
    PUSH1 0
    PUSH1 0
    PUSH1 8
    PUSH1 0
    PUSH1 0
    PUSH8 0x{CHAIN_LOGIC_ADDR:X}
    CALL
    POP
    STOP
receive:
    JUMPDEST
    STOP
"""

_CHAIN_LOGIC_ASM = f"""
logging:
    JUMPDEST
    PUSH4 0x{SEL_CHAIN_WITHDRAW:08X}
    PUSH1 0
    MSTORE
    PUSH8 0x{CHAIN_LOGGING_ADDR:X}
    PUSH1 8
    MSTORE           ; recipient = the logging (attacker) contract
    PUSH1 0
    PUSH1 0
    PUSH1 16
    PUSH1 0
    PUSH1 0
    PUSH8 0x{CHAIN_WALLET_ADDR:X}
    CALL
    POP
    STOP
"""

_CHAIN_WALLET_ASM = """
withdraw:
    JUMPDEST
    PUSH1 0          ; retLen
    PUSH1 0          ; retOff
    PUSH1 0          ; argsLen
    PUSH1 0          ; argsOff
    PUSH1 1
    SLOAD
    PUSH1 8
    CALLDATALOAD     ; recipient
    CALL
    POP
    PUSH1 0
    PUSH1 1
    SSTORE
    STOP
"""


def chain_packages() -> list[ContractPackage]:
    logging_c = _pkg(
        "Logging", CHAIN_LOGGING_ADDR, _CHAIN_LOGGING_ASM,
        [{"label": "log", "name": "log", "selector": SEL_LOG},
         {"label": "receive", "name": "receive", "selector": None,
          "is_fallback": True}])
    logic = _pkg(
        "Logic", CHAIN_LOGIC_ADDR, _CHAIN_LOGIC_ASM,
        [{"label": "logging", "name": "logging", "selector": SEL_LOGGING}])
    wallet = _pkg(
        "Wallet", CHAIN_WALLET_ADDR, _CHAIN_WALLET_ASM,
        [{"label": "withdraw", "name": "withdraw",
          "selector": SEL_CHAIN_WITHDRAW, "params": (A,)}],
        balance=10_000, storage={1: REENTRANT_AMOUNT})
    return [logging_c, logic, wallet]


# ---------------------------------------------------------------------------
# Dangerous delegatecall: a fallback forwarding its raw calldata, plus a
# constant delegation that must stay clean.

DELEGATION_ADDR = 0x4001
DELEGATE_ADDR = 0x4002
SEL_PWN = 0x4BB10001
SEL_DELEGATE_FIXED = 0x4AA10002

_DELEGATION_ASM = f"""
forward:
    JUMPDEST
    PUSH1 0
    CALLDATALOAD
    PUSH1 0
    MSTORE           ; forward the first calldata word
    PUSH1 0          ; retLen
    PUSH1 0          ; retOff
    CALLDATASIZE     ; argsLen
    PUSH1 0          ; argsOff
    PUSH8 0x{DELEGATE_ADDR:X}
    DELEGATECALL
    POP
    STOP

delegateFixed:
    JUMPDEST
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH8 0x{DELEGATE_ADDR:X}
    DELEGATECALL
    POP
    STOP
"""

_DELEGATE_ASM = """
pwn:
    JUMPDEST
    CALLER
    PUSH1 0
    SSTORE           ; owner := msg.sender, in the caller's storage
    STOP
"""


def delegation_packages() -> list[ContractPackage]:
    delegation = _pkg(
        "Delegation", DELEGATION_ADDR, _DELEGATION_ASM,
        [{"label": "forward", "name": "forward", "selector": None,
          "is_fallback": True},
         {"label": "delegateFixed", "name": "delegateFixed",
          "selector": SEL_DELEGATE_FIXED}])
    delegate = _pkg(
        "Delegate", DELEGATE_ADDR, _DELEGATE_ASM,
        [{"label": "pwn", "name": "pwn", "selector": SEL_PWN}])
    return [delegation, delegate]


# ---------------------------------------------------------------------------
# Tx-origin misuse: an origin check guarding a transfer, a caller-checked
# variant, and an origin value that is computed but discarded.

VAULT_ADDR = 0x5001
SINK_ADDR = 0x5002
VAULT_OWNER = 0xD00D
SEL_WITHDRAW_ALL = 0x5AA10001
SEL_WITHDRAW_ALL_CALLER = 0x5AA10002
SEL_ORIGIN_POP = 0x5AA10003

_VAULT_ASM = f"""
withdrawAll:
    JUMPDEST
    ORIGIN
    PUSH1 0
    SLOAD
    EQ
    PUSH2 @wa_ok
    JUMPI
    PUSH1 0
    PUSH1 0
    REVERT
wa_ok:
    JUMPDEST
    PUSH1 0          ; retLen
    PUSH1 0          ; retOff
    PUSH1 0          ; argsLen
    PUSH1 0          ; argsOff
    PUSH8 0x{VAULT_ADDR:X}
    BALANCE          ; value = this.balance
    PUSH1 8
    CALLDATALOAD     ; recipient
    CALL
    POP
    STOP

withdrawAllCaller:
    JUMPDEST
    CALLER
    PUSH1 0
    SLOAD
    EQ
    PUSH2 @wac_ok
    JUMPI
    PUSH1 0
    PUSH1 0
    REVERT
wac_ok:
    JUMPDEST
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH8 0x{VAULT_ADDR:X}
    BALANCE
    PUSH1 8
    CALLDATALOAD
    CALL
    POP
    STOP

originPop:
    JUMPDEST
    ORIGIN
    POP              ; origin computed and discarded
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH1 0
    PUSH8 0x{SINK_ADDR:X}
    CALL
    POP
    STOP
"""


def tx_origin_packages() -> list[ContractPackage]:
    vault = _pkg(
        "Vault", VAULT_ADDR, _VAULT_ASM,
        [{"label": "withdrawAll", "name": "withdrawAll",
          "selector": SEL_WITHDRAW_ALL, "params": (A,)},
         {"label": "withdrawAllCaller", "name": "withdrawAllCaller",
          "selector": SEL_WITHDRAW_ALL_CALLER, "params": (A,)},
         {"label": "originPop", "name": "originPop",
          "selector": SEL_ORIGIN_POP}],
        balance=1_000, storage={0: VAULT_OWNER})
    sink = ContractPackage(name="Sink", address=SINK_ADDR, code=b"")
    return [vault, sink]
