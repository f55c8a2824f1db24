from xcfuzz.vm.opcodes import (
    CRITICAL_OPCODES,
    WORD_BYTES,
    WORD_MASK,
    Opcode,
    opcode_by_code,
    opcode_by_mnemonic,
)
from xcfuzz.vm.assembler import (
    AssemblyError,
    DisassemblyError,
    Instruction,
    assemble,
    assemble_with_labels,
    disassemble,
)
from xcfuzz.vm.state import (
    ContractImage,
    ContractPackage,
    DeployError,
    FunctionDescriptor,
    ParamKind,
    WorldState,
    deploy,
)
from xcfuzz.vm.trace import (
    CallReturn,
    EnvInput,
    ExecutionTrace,
    Location,
    MemoryWord,
    Outcome,
    StackValue,
    StorageSlot,
    TraceEvent,
    TransactionRequest,
)
from xcfuzz.vm.interpreter import InvalidTransaction, execute_transaction

__all__ = [
    "CRITICAL_OPCODES",
    "WORD_BYTES",
    "WORD_MASK",
    "Opcode",
    "opcode_by_code",
    "opcode_by_mnemonic",
    "AssemblyError",
    "DisassemblyError",
    "Instruction",
    "assemble",
    "assemble_with_labels",
    "disassemble",
    "ContractImage",
    "ContractPackage",
    "DeployError",
    "FunctionDescriptor",
    "ParamKind",
    "WorldState",
    "deploy",
    "CallReturn",
    "EnvInput",
    "ExecutionTrace",
    "Location",
    "MemoryWord",
    "Outcome",
    "StackValue",
    "StorageSlot",
    "TraceEvent",
    "TransactionRequest",
    "InvalidTransaction",
    "execute_transaction",
]
