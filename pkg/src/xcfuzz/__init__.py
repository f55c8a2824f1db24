"""xcfuzz: ML-guided cross-contract fuzzing on a compact 64-bit stack machine.

Subpackages:
  vm         deterministic multi-contract interpreter with full tracing
  analysis   CFGs, call graphs, dependency analysis, static features
  oracles    trace-based vulnerability detectors
  learner    opcode embedding, voters, imbalance-aware ensemble classifier
  scheduler  path enumeration and priority-scored work queues
  fuzzer     guided fuzzing campaigns with a reentrancy attack harness
  cli        corpus ingestion and the command-line surface
"""

__version__ = "0.1.0"
