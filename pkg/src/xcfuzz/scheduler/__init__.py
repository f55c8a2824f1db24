from xcfuzz.scheduler.priority import (
    BENIGN_FACTOR,
    SUSPICIOUS_FACTOR,
    PriorityScore,
    caller_priority,
    function_priority,
)
from xcfuzz.scheduler.paths import PrioritizedPath, enumerate_paths
from xcfuzz.scheduler.queue import FunctionEntry, WorkQueue, build_queue, prioritize

__all__ = [
    "BENIGN_FACTOR",
    "SUSPICIOUS_FACTOR",
    "PriorityScore",
    "caller_priority",
    "function_priority",
    "PrioritizedPath",
    "enumerate_paths",
    "FunctionEntry",
    "WorkQueue",
    "build_queue",
    "prioritize",
]
