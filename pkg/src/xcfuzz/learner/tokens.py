"""Opcode token sequences for the embedding.

Width variants collapse to one token (PUSH1..PUSH8 -> PUSH, DUPk -> DUP,
SWAPk -> SWAP) so the vocabulary stays small and width-independent.
"""

from __future__ import annotations

from xcfuzz.analysis.features import function_cfg
from xcfuzz.vm.state import ContractPackage, FunctionDescriptor


def collapse_mnemonic(mnemonic: str) -> str:
    for prefix in ("PUSH", "DUP", "SWAP"):
        if mnemonic.startswith(prefix) and mnemonic[len(prefix):].isdigit():
            return prefix
    return mnemonic


def token_sequence(pkg: ContractPackage, fn: FunctionDescriptor) -> list[str]:
    """Collapsed mnemonics of the function's reachable instructions, pc order."""
    cfg = function_cfg(pkg, fn)
    instrs = sorted(cfg.instructions(), key=lambda i: i.pc)
    return [collapse_mnemonic(i.opcode.mnemonic) for i in instrs]


__all__ = ["collapse_mnemonic", "token_sequence"]
