"""Per-corpus analysis artifacts, computed once and shared read-only."""

from __future__ import annotations

from dataclasses import dataclass, field

from xcfuzz.analysis.callgraph import CallGraph, build_call_graph
from xcfuzz.analysis.cfg import Cfg
from xcfuzz.analysis.deps import control_source_pcs, post_dominators
from xcfuzz.analysis.features import (
    FunctionShape,
    StaticFeatures,
    extract_static_features,
    function_cfg,
    function_shape,
)
from xcfuzz.vm.state import ContractPackage, FunctionDescriptor


@dataclass
class CorpusAnalysis:
    packages: list[ContractPackage]
    call_graph: CallGraph
    cfgs: dict[tuple[str, str], Cfg] = field(default_factory=dict)
    shapes: dict[tuple[str, str], FunctionShape] = field(default_factory=dict)
    features: dict[tuple[str, str], StaticFeatures] = field(default_factory=dict)
    # (contract address, selector-or-None) -> pc -> controlling JUMPI pcs
    control_sources: dict[tuple[int, int | None], dict[int, set[int]]] = \
        field(default_factory=dict)

    def by_name(self, name: str) -> ContractPackage:
        for pkg in self.packages:
            if pkg.name == name:
                return pkg
        raise KeyError(name)

    def by_address(self, addr: int) -> ContractPackage | None:
        for pkg in self.packages:
            if pkg.address == addr:
                return pkg
        return None

    def functions(self) -> list[tuple[ContractPackage, FunctionDescriptor]]:
        return [(pkg, fn) for pkg in self.packages for fn in pkg.functions]


def analyze_corpus(packages: list[ContractPackage]) -> CorpusAnalysis:
    cg = build_call_graph(packages)
    analysis = CorpusAnalysis(packages=packages, call_graph=cg)
    for pkg in packages:
        for fn in pkg.functions:
            key = (pkg.name, fn.name)
            cfg = function_cfg(pkg, fn)
            analysis.cfgs[key] = cfg
            analysis.shapes[key] = function_shape(pkg, fn, cg)
            analysis.features[key] = extract_static_features(pkg, fn, cg)
            sources = control_source_pcs(cfg, post_dominators(cfg))
            sel = None if fn.is_fallback else fn.selector
            slot = analysis.control_sources.setdefault((pkg.address, sel), {})
            for pc, srcs in sources.items():
                slot.setdefault(pc, set()).update(srcs)
    return analysis


__all__ = ["CorpusAnalysis", "analyze_corpus"]
