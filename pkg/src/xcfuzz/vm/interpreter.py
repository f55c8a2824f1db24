"""Deterministic transaction execution with full read/write tracing.

Call semantics mirror the EVM for the supported subset: CALL transfers
value and may trigger a fallback, CALLCODE runs foreign code against the
caller's storage with the caller as sender, DELEGATECALL additionally
preserves the original caller and call value.  Termination is enforced by
a per-transaction step budget shared across all frames.

Memory offsets must be word-aligned (8 bytes); an unaligned access reverts
the frame.  This keeps the word-granular location model exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from xcfuzz.vm.opcodes import WORD_BYTES, WORD_MASK, Opcode, is_dup, is_push, is_swap
from xcfuzz.vm.state import ContractImage, FunctionDescriptor, WorldState
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
    selector_from_calldata,
)

MAX_CALL_DEPTH = 64


class InvalidTransaction(ValueError):
    """The transaction violates a precondition (missing target, bad value)."""


class _FrameRevert(Exception):
    """Internal: unwinds the current frame (REVERT, underflow, bad jump)."""


class _OutOfSteps(Exception):
    """Internal: unwinds the whole transaction when the budget is spent."""


@dataclass
class _TxContext:
    world: WorldState
    origin: int
    steps_left: int
    events: list[TraceEvent] = field(default_factory=list)
    transfers: list[tuple[int, int, int]] = field(default_factory=list)
    next_value_id: int = 0
    next_frame_id: int = 0
    next_activation_id: int = 0

    def fresh_value_id(self) -> int:
        vid = self.next_value_id
        self.next_value_id += 1
        return vid


@dataclass
class _RetSink:
    """Where an inner frame's RETURN data lands in the caller."""

    memory: dict[int, int]
    frame_id: int
    offset: int
    length: int
    call_event_index: int


def _aligned(offset: int) -> bool:
    return offset % WORD_BYTES == 0


def _region_words(offset: int, length: int) -> list[int]:
    """Aligned word offsets covering the byte range [offset, offset+length)."""
    if length <= 0:
        return []
    first = offset - (offset % WORD_BYTES)
    last = offset + length - 1
    last -= last % WORD_BYTES
    return list(range(first, last + 1, WORD_BYTES))


def _read_region(memory: dict[int, int], frame_id: int, offset: int,
                 length: int) -> tuple[bytes, set[Location]]:
    words = _region_words(offset, length)
    raw = b"".join(memory.get(w, 0).to_bytes(WORD_BYTES, "big") for w in words)
    start = offset - (words[0] if words else offset)
    data = raw[start:start + length]
    return data, {MemoryWord(frame_id, w) for w in words}


class _Frame:
    """One call frame: private stack and memory, SSA value ids."""

    def __init__(self, ctx: _TxContext, image: ContractImage, storage_addr: int,
                 msg_caller: int, msg_value: int, calldata: bytes, depth: int,
                 fn: FunctionDescriptor,
                 calldata_src: tuple[int, int, int] | None,
                 ret_sink: _RetSink | None):
        self.ctx = ctx
        self.image = image
        self.storage_addr = storage_addr
        self.msg_caller = msg_caller
        self.msg_value = msg_value
        self.calldata = calldata
        self.depth = depth
        self.fn = fn
        self.calldata_src = calldata_src
        self.ret_sink = ret_sink
        self.frame_id = ctx.next_frame_id
        ctx.next_frame_id += 1
        self.activation_id = ctx.next_activation_id
        ctx.next_activation_id += 1
        self.stack: list[tuple[int, int]] = []  # (value, value_id)
        self.memory: dict[int, int] = {}
        self.entry_map = {f.entry_pc: f for f in image.functions}

    # -- stack helpers -------------------------------------------------

    def push(self, value: int) -> int:
        vid = self.ctx.fresh_value_id()
        self.stack.append((value & WORD_MASK, vid))
        return vid

    def pop(self) -> tuple[int, int]:
        if not self.stack:
            raise _FrameRevert("stack underflow")
        return self.stack.pop()

    def emit(self, opcode: Opcode, pc: int, reads: set[Location],
             writes: set[Location], operands: list[tuple[int, int]]) -> TraceEvent:
        event = TraceEvent(
            index=len(self.ctx.events),
            opcode=opcode,
            pc=pc,
            contract_addr=self.image.address,
            frame_id=self.frame_id,
            function_selector=None if self.fn.is_fallback else self.fn.selector,
            activation_id=self.activation_id,
            reads=frozenset(reads),
            writes=frozenset(writes),
            operands=tuple(v for v, _ in operands),
            operand_value_ids=tuple(vid for _, vid in operands),
        )
        self.ctx.events.append(event)
        return event

    def calldata_read_locations(self, offset: int, length: int) -> set[Location]:
        """Locations backing calldata bytes [offset, offset+length).

        The entry frame reads the transaction environment; nested frames
        read the caller memory words the arguments were copied from.
        """
        if self.calldata_src is None:
            return {EnvInput("calldata")}
        src_frame, src_off, src_len = self.calldata_src
        lo = max(0, min(offset, src_len))
        hi = max(0, min(offset + length, src_len))
        return {MemoryWord(src_frame, src_off + w)
                for w in _region_words(lo, hi - lo)}


def _dispatch(world: WorldState, image: ContractImage,
              calldata: bytes) -> FunctionDescriptor | None:
    selector = selector_from_calldata(calldata)
    if selector is not None:
        fn = world.selectors.get((image.address, selector))
        if fn is not None:
            return fn
    return image.fallback()


def _call_into(ctx: _TxContext, code_addr: int, storage_addr: int, msg_caller: int,
               msg_value: int, calldata: bytes, depth: int,
               transfer: tuple[int, int, int] | None,
               calldata_src: tuple[int, int, int] | None,
               ret_sink: _RetSink | None) -> tuple[bool, bytes]:
    """Enter an account: transfer value, dispatch, run, roll back on failure."""
    world = ctx.world
    image = world.account(code_addr)
    if image is None or depth > MAX_CALL_DEPTH:
        return False, b""
    snap = world.snapshot()
    transfers_mark = len(ctx.transfers)
    if transfer is not None:
        src, dst, amount = transfer
        if world.balance_of(src) < amount:
            return False, b""
        if amount > 0:
            world.images[src].balance -= amount
            world.ensure_account(dst).balance += amount
            ctx.transfers.append((src, dst, amount))
    if not image.code:
        return True, b""
    fn = _dispatch(world, image, calldata)
    if fn is None:
        world.restore(snap)
        del ctx.transfers[transfers_mark:]
        return False, b""
    frame = _Frame(ctx, image, storage_addr, msg_caller, msg_value, calldata,
                   depth, fn, calldata_src, ret_sink)
    ok, data = _run_frame(frame)
    if not ok:
        world.restore(snap)
        del ctx.transfers[transfers_mark:]
    return ok, data


def _run_frame(frame: _Frame) -> tuple[bool, bytes]:
    try:
        return _execute(frame)
    except _FrameRevert:
        return False, b""


def _execute(frame: _Frame) -> tuple[bool, bytes]:
    ctx = frame.ctx
    world = ctx.world
    image = frame.image
    pc = frame.fn.entry_pc
    while True:
        instr = image.instructions.get(pc)
        if instr is None:
            if pc >= len(image.code):
                return True, b""  # ran off the end: implicit STOP
            raise _FrameRevert(f"pc {pc} is not an instruction start")
        if ctx.steps_left <= 0:
            raise _OutOfSteps()
        ctx.steps_left -= 1
        op = instr.opcode
        name = op.mnemonic
        next_pc = instr.next_pc

        if name == "STOP":
            frame.emit(op, pc, set(), set(), [])
            return True, b""

        elif is_push(op):
            vid = frame.push(instr.immediate)
            frame.emit(op, pc, set(), {StackValue(vid)}, [])

        elif is_dup(op):
            n = int(name[3:])
            if len(frame.stack) < n:
                raise _FrameRevert("stack underflow")
            value, vid = frame.stack[-n]
            new = frame.push(value)
            frame.emit(op, pc, {StackValue(vid)}, {StackValue(new)},
                       [(value, vid)])

        elif is_swap(op):
            n = int(name[4:])
            if len(frame.stack) < n + 1:
                raise _FrameRevert("stack underflow")
            top = frame.stack[-1]
            other = frame.stack[-n - 1]
            frame.stack[-1], frame.stack[-n - 1] = other, top
            frame.emit(op, pc,
                       {StackValue(top[1]), StackValue(other[1])}, set(),
                       [top, other])

        elif name in ("ADD", "MUL", "SUB", "DIV", "LT", "GT", "EQ", "AND", "OR"):
            a = frame.pop()
            b = frame.pop()
            x, y = a[0], b[0]
            result = {
                "ADD": (x + y) & WORD_MASK,
                "MUL": (x * y) & WORD_MASK,
                "SUB": (x - y) & WORD_MASK,
                "DIV": 0 if y == 0 else x // y,
                "LT": int(x < y),
                "GT": int(x > y),
                "EQ": int(x == y),
                "AND": x & y,
                "OR": x | y,
            }[name]
            vid = frame.push(result)
            frame.emit(op, pc, {StackValue(a[1]), StackValue(b[1])},
                       {StackValue(vid)}, [a, b])

        elif name in ("ISZERO", "NOT"):
            a = frame.pop()
            result = int(a[0] == 0) if name == "ISZERO" else (~a[0]) & WORD_MASK
            vid = frame.push(result)
            frame.emit(op, pc, {StackValue(a[1])}, {StackValue(vid)}, [a])

        elif name == "POP":
            a = frame.pop()
            frame.emit(op, pc, {StackValue(a[1])}, set(), [a])

        elif name == "MLOAD":
            a = frame.pop()
            if not _aligned(a[0]):
                raise _FrameRevert("unaligned MLOAD")
            value = frame.memory.get(a[0], 0)
            vid = frame.push(value)
            frame.emit(op, pc,
                       {StackValue(a[1]), MemoryWord(frame.frame_id, a[0])},
                       {StackValue(vid)}, [a])

        elif name == "MSTORE":
            a = frame.pop()
            v = frame.pop()
            if not _aligned(a[0]):
                raise _FrameRevert("unaligned MSTORE")
            frame.memory[a[0]] = v[0]
            frame.emit(op, pc, {StackValue(a[1]), StackValue(v[1])},
                       {MemoryWord(frame.frame_id, a[0])}, [a, v])

        elif name == "SLOAD":
            a = frame.pop()
            storage = world.images[frame.storage_addr].storage
            value = storage.get(a[0], 0)
            vid = frame.push(value)
            frame.emit(op, pc,
                       {StackValue(a[1]), StorageSlot(frame.storage_addr, a[0])},
                       {StackValue(vid)}, [a])

        elif name == "SSTORE":
            a = frame.pop()
            v = frame.pop()
            world.images[frame.storage_addr].storage[a[0]] = v[0]
            frame.emit(op, pc, {StackValue(a[1]), StackValue(v[1])},
                       {StorageSlot(frame.storage_addr, a[0])}, [a, v])

        elif name == "JUMP":
            a = frame.pop()
            frame.emit(op, pc, {StackValue(a[1])}, set(), [a])
            pc = _jump_target(frame, a[0])
            continue

        elif name == "JUMPI":
            dest = frame.pop()
            cond = frame.pop()
            frame.emit(op, pc, {StackValue(dest[1]), StackValue(cond[1])},
                       set(), [dest, cond])
            if cond[0] != 0:
                pc = _jump_target(frame, dest[0])
                continue

        elif name == "JUMPDEST":
            frame.emit(op, pc, set(), set(), [])

        elif name == "CALLER":
            vid = frame.push(frame.msg_caller)
            reads: set[Location] = {EnvInput("caller")} if frame.depth == 0 else set()
            frame.emit(op, pc, reads, {StackValue(vid)}, [])

        elif name == "ORIGIN":
            vid = frame.push(ctx.origin)
            frame.emit(op, pc, {EnvInput("origin")}, {StackValue(vid)}, [])

        elif name == "CALLVALUE":
            vid = frame.push(frame.msg_value)
            reads = {EnvInput("callvalue")} if frame.depth == 0 else set()
            frame.emit(op, pc, reads, {StackValue(vid)}, [])

        elif name == "CALLDATASIZE":
            vid = frame.push(len(frame.calldata))
            reads = {EnvInput("calldata")} if frame.calldata_src is None else set()
            frame.emit(op, pc, reads, {StackValue(vid)}, [])

        elif name == "CALLDATALOAD":
            a = frame.pop()
            chunk = frame.calldata[a[0]:a[0] + WORD_BYTES]
            value = int.from_bytes(chunk.ljust(WORD_BYTES, b"\x00"), "big")
            vid = frame.push(value)
            reads = {StackValue(a[1])}
            reads |= frame.calldata_read_locations(a[0], WORD_BYTES)
            frame.emit(op, pc, reads, {StackValue(vid)}, [a])

        elif name == "BALANCE":
            a = frame.pop()
            vid = frame.push(world.balance_of(a[0]))
            frame.emit(op, pc, {StackValue(a[1]), EnvInput("balance")},
                       {StackValue(vid)}, [a])

        elif name in ("CALL", "CALLCODE", "DELEGATECALL"):
            pc = _do_call(frame, instr, name)
            continue

        elif name == "RETURN":
            a = frame.pop()
            n = frame.pop()
            if n[0] > 0 and not _aligned(a[0]):
                raise _FrameRevert("unaligned RETURN")
            data, mem_locs = _read_region(frame.memory, frame.frame_id, a[0], n[0])
            writes: set[Location] = set()
            sink = frame.ret_sink
            if sink is not None:
                writes.add(CallReturn(sink.call_event_index))
                copy_len = min(len(data), sink.length)
                for i, w in enumerate(_region_words(sink.offset, copy_len)):
                    chunk = data[i * WORD_BYTES:(i + 1) * WORD_BYTES]
                    sink.memory[w] = int.from_bytes(chunk.ljust(WORD_BYTES, b"\x00"),
                                                    "big")
                    writes.add(MemoryWord(sink.frame_id, w))
            frame.emit(op, pc, {StackValue(a[1]), StackValue(n[1])} | mem_locs,
                       writes, [a, n])
            return True, data

        elif name == "REVERT":
            a = frame.pop()
            n = frame.pop()
            mem_locs: set[Location] = set()
            if n[0] > 0 and _aligned(a[0]):
                _, mem_locs = _read_region(frame.memory, frame.frame_id, a[0], n[0])
            frame.emit(op, pc, {StackValue(a[1]), StackValue(n[1])} | mem_locs,
                       set(), [a, n])
            return False, b""

        else:  # pragma: no cover - table and loop must stay in sync
            raise AssertionError(f"unhandled opcode {name}")

        pc = next_pc


def _jump_target(frame: _Frame, dest: int) -> int:
    instr = frame.image.instructions.get(dest)
    if instr is None or instr.opcode.mnemonic != "JUMPDEST":
        raise _FrameRevert(f"invalid jump target {dest}")
    fn = frame.entry_map.get(dest)
    if fn is not None and fn is not frame.fn:
        # direct jump into another function's entry: new activation
        frame.fn = fn
        frame.activation_id = frame.ctx.next_activation_id
        frame.ctx.next_activation_id += 1
    return dest


def _do_call(frame: _Frame, instr, name: str) -> int:
    """Execute a CALL-family opcode; returns the next pc."""
    ctx = frame.ctx
    if name == "DELEGATECALL":
        target = frame.pop()
        value_opnd = None
        args_off, args_len, ret_off, ret_len = (frame.pop(), frame.pop(),
                                                frame.pop(), frame.pop())
        operands = [target, args_off, args_len, ret_off, ret_len]
    else:
        target = frame.pop()
        value_opnd = frame.pop()
        args_off, args_len, ret_off, ret_len = (frame.pop(), frame.pop(),
                                                frame.pop(), frame.pop())
        operands = [target, value_opnd, args_off, args_len, ret_off, ret_len]

    if args_len[0] > 0 and not _aligned(args_off[0]):
        raise _FrameRevert("unaligned call args")
    if ret_len[0] > 0 and not _aligned(ret_off[0]):
        raise _FrameRevert("unaligned call return buffer")

    calldata, arg_locs = _read_region(frame.memory, frame.frame_id,
                                      args_off[0], args_len[0])
    success_vid = ctx.fresh_value_id()
    reads: set[Location] = {StackValue(v) for _, v in operands} | arg_locs
    event = frame.emit(instr.opcode, instr.pc, reads,
                       {StackValue(success_vid)}, operands)

    sink = _RetSink(frame.memory, frame.frame_id, ret_off[0], ret_len[0],
                    event.index)
    src = (frame.frame_id, args_off[0], args_len[0])
    self_addr = frame.storage_addr

    if name == "CALL":
        ok, _ = _call_into(ctx, target[0], target[0], self_addr, value_opnd[0],
                           calldata, frame.depth + 1,
                           (self_addr, target[0], value_opnd[0]), src, sink)
    elif name == "CALLCODE":
        ok, _ = _call_into(ctx, target[0], self_addr, self_addr, value_opnd[0],
                           calldata, frame.depth + 1, None, src, sink)
    else:  # DELEGATECALL
        ok, _ = _call_into(ctx, target[0], self_addr, frame.msg_caller,
                           frame.msg_value, calldata, frame.depth + 1,
                           None, src, sink)

    frame.stack.append((1 if ok else 0, success_vid))
    return instr.next_pc


def execute_transaction(world: WorldState, tx: TransactionRequest) -> ExecutionTrace:
    """Run one transaction to completion; deterministic for a given world."""
    if world.account(tx.target) is None:
        raise InvalidTransaction(f"target 0x{tx.target:016x} does not exist")
    caller = world.ensure_account(tx.caller)
    if tx.value > caller.balance:
        raise InvalidTransaction(
            f"value {tx.value} exceeds caller balance {caller.balance}")
    if tx.step_budget <= 0:
        raise InvalidTransaction("step budget must be positive")

    ctx = _TxContext(world=world, origin=tx.origin, steps_left=tx.step_budget)
    snap = world.snapshot()
    try:
        ok, data = _call_into(ctx, tx.target, tx.target, tx.caller, tx.value,
                              tx.calldata(), 0,
                              (tx.caller, tx.target, tx.value), None, None)
        outcome = Outcome.HALTED if ok else Outcome.REVERTED
    except _OutOfSteps:
        world.restore(snap)
        ctx.transfers.clear()
        outcome = Outcome.OUT_OF_STEPS
        data = b""

    touched = {e.contract_addr for e in ctx.events}
    return ExecutionTrace(events=ctx.events, outcome=outcome,
                          touched_contracts=touched,
                          value_transfers=list(ctx.transfers),
                          return_data=data)


__all__ = ["InvalidTransaction", "execute_transaction", "MAX_CALL_DEPTH"]
