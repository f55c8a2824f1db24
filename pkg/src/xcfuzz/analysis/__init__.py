from xcfuzz.analysis.cfg import BasicBlock, Cfg, CfgError, build_cfg
from xcfuzz.analysis.deps import (
    DependencyGraph,
    EdgeKind,
    PostDomTree,
    add_dynamic_control_edges,
    control_dependencies,
    control_source_pcs,
    data_dependencies,
    full_trace_dependencies,
    post_dominators,
)
from xcfuzz.analysis.callgraph import CallEdge, CallGraph, build_call_graph
from xcfuzz.analysis.features import (
    STATIC_FEATURE_NAMES,
    FunctionShape,
    StaticFeatures,
    extract_static_features,
    function_cfg,
    function_shape,
)

__all__ = [
    "BasicBlock",
    "Cfg",
    "CfgError",
    "build_cfg",
    "DependencyGraph",
    "EdgeKind",
    "PostDomTree",
    "add_dynamic_control_edges",
    "control_dependencies",
    "control_source_pcs",
    "data_dependencies",
    "full_trace_dependencies",
    "post_dominators",
    "CallEdge",
    "CallGraph",
    "build_call_graph",
    "STATIC_FEATURE_NAMES",
    "FunctionShape",
    "StaticFeatures",
    "extract_static_features",
    "function_cfg",
    "function_shape",
]
