"""Contract packages, world state, and deployment.

Addresses are 8-byte manifest-assigned account ids.  Deployment validates
jump targets, selector uniqueness, and fallback constraints, and builds the
selector registry used to route cross-contract calls.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum

from xcfuzz.vm.assembler import Instruction, instruction_map
from xcfuzz.vm.constsim import constant_jump_target, simulate_block, split_linear_blocks


class DeployError(ValueError):
    pass


class ParamKind(str, Enum):
    UINT = "uint"
    ADDRESS = "address"
    BYTES = "bytes"
    ARRAY = "array"

    @property
    def is_complex(self) -> bool:
        # complex parameters count double in the parameter dimensionality
        return self in (ParamKind.ADDRESS, ParamKind.BYTES, ParamKind.ARRAY)


@dataclass(frozen=True)
class FunctionDescriptor:
    name: str
    selector: int | None
    entry_pc: int
    params: tuple[ParamKind, ...] = ()
    is_public: bool = True
    has_modifier: bool = False
    is_fallback: bool = False


@dataclass(frozen=True)
class DeclaredCall:
    """Manifest-declared call edge for sites the static scan cannot resolve."""

    from_function: str
    to_contract: str
    to_function: str
    external: bool = True


@dataclass
class ContractPackage:
    """Manifest-level contract: code plus function metadata."""

    name: str
    address: int
    code: bytes
    functions: list[FunctionDescriptor] = field(default_factory=list)
    balance: int = 0
    initial_storage: dict[int, int] = field(default_factory=dict)
    declared_calls: list[DeclaredCall] = field(default_factory=list)

    def function(self, name: str) -> FunctionDescriptor:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(f"unknown function {name!r} in contract {self.name!r}")

    def fallback(self) -> FunctionDescriptor | None:
        for fn in self.functions:
            if fn.is_fallback:
                return fn
        return None


@dataclass
class ContractImage:
    """A deployed contract: package metadata plus mutable storage/balance."""

    name: str
    address: int
    code: bytes
    functions: list[FunctionDescriptor]
    storage: dict[int, int]
    balance: int
    instructions: dict[int, Instruction] = field(default_factory=dict)

    def fallback(self) -> FunctionDescriptor | None:
        for fn in self.functions:
            if fn.is_fallback:
                return fn
        return None


@dataclass
class WorldState:
    """All deployed accounts plus the selector registry.

    A WorldState and the traces produced against it form a single-owner
    unit: no shared mutation, safe to move between threads.
    """

    images: dict[int, ContractImage] = field(default_factory=dict)
    selectors: dict[tuple[int, int], FunctionDescriptor] = field(default_factory=dict)

    def account(self, addr: int) -> ContractImage | None:
        return self.images.get(addr)

    def ensure_account(self, addr: int) -> ContractImage:
        """Get or create a codeless (balance-only) account."""
        image = self.images.get(addr)
        if image is None:
            image = ContractImage(name=f"account_{addr:#x}", address=addr, code=b"",
                                  functions=[], storage={}, balance=0)
            self.images[addr] = image
        return image

    def balance_of(self, addr: int) -> int:
        image = self.images.get(addr)
        return image.balance if image else 0

    def total_balance(self) -> int:
        return sum(img.balance for img in self.images.values())

    def entry_pcs(self, addr: int) -> dict[int, FunctionDescriptor]:
        image = self.images.get(addr)
        if image is None:
            return {}
        return {fn.entry_pc: fn for fn in image.functions}

    def snapshot(self) -> dict:
        return {
            "storage": {a: dict(img.storage) for a, img in self.images.items()},
            "balance": {a: img.balance for a, img in self.images.items()},
            "accounts": set(self.images),
        }

    def restore(self, snap: dict) -> None:
        for addr in list(self.images):
            if addr not in snap["accounts"]:
                del self.images[addr]
        for addr, storage in snap["storage"].items():
            self.images[addr].storage = dict(storage)
        for addr, balance in snap["balance"].items():
            self.images[addr].balance = balance

    def clone(self) -> "WorldState":
        return copy.deepcopy(self)


def validate_static_jump_targets(code: bytes) -> None:
    """Reject code whose statically-constant JUMP/JUMPI targets miss a JUMPDEST."""
    if not code:
        return
    instrs = instruction_map(code)
    for block in split_linear_blocks(sorted(instrs.values(), key=lambda i: i.pc)):
        facts = simulate_block(block)
        for instr in block:
            if instr.opcode.mnemonic not in ("JUMP", "JUMPI"):
                continue
            target = constant_jump_target(facts, instr.pc)
            if target is None:
                continue
            dest = instrs.get(target)
            if dest is None or dest.opcode.mnemonic != "JUMPDEST":
                raise DeployError(
                    f"invalid jump target {target} at pc {instr.pc}: not a JUMPDEST")


def validate_package(pkg: ContractPackage) -> dict[int, Instruction]:
    """All per-package checks; returns the decoded instruction map."""
    instrs = instruction_map(pkg.code)
    validate_static_jump_targets(pkg.code)

    seen_selectors: dict[int, str] = {}
    fallbacks = [fn for fn in pkg.functions if fn.is_fallback]
    if len(fallbacks) > 1:
        names = ", ".join(fn.name for fn in fallbacks)
        raise DeployError(f"contract {pkg.name!r} declares multiple fallbacks: {names}")
    for fn in pkg.functions:
        if fn.is_fallback and fn.params:
            raise DeployError(
                f"fallback {fn.name!r} of contract {pkg.name!r} must take no params")
        if fn.selector is not None:
            if fn.selector in seen_selectors:
                raise DeployError(
                    f"selector collision in contract {pkg.name!r}: "
                    f"{seen_selectors[fn.selector]!r} and {fn.name!r} "
                    f"share 0x{fn.selector:08x}")
            seen_selectors[fn.selector] = fn.name
        entry = instrs.get(fn.entry_pc)
        if entry is None or entry.opcode.mnemonic != "JUMPDEST":
            raise DeployError(
                f"entry pc {fn.entry_pc} of {pkg.name}.{fn.name} is not a JUMPDEST")
    return instrs


def deploy(packages: list[ContractPackage]) -> WorldState:
    """Deploy all contracts into a fresh world (the local private chain)."""
    world = WorldState()
    for pkg in packages:
        if pkg.address in world.images:
            other = world.images[pkg.address].name
            raise DeployError(
                f"duplicate address 0x{pkg.address:016x}: "
                f"{other!r} and {pkg.name!r}")
        instrs = validate_package(pkg)
        image = ContractImage(
            name=pkg.name,
            address=pkg.address,
            code=pkg.code,
            functions=list(pkg.functions),
            storage=dict(pkg.initial_storage),
            balance=pkg.balance,
            instructions=instrs,
        )
        world.images[pkg.address] = image
        for fn in pkg.functions:
            if fn.selector is not None:
                world.selectors[(pkg.address, fn.selector)] = fn
    return world


__all__ = [
    "ContractImage",
    "ContractPackage",
    "DeclaredCall",
    "DeployError",
    "FunctionDescriptor",
    "ParamKind",
    "WorldState",
    "deploy",
    "validate_package",
    "validate_static_jump_targets",
]
