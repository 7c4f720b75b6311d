"""Abstract planning: the maximal dependency DAG behind a requested product.

The abstract DAG ignores whether any file physically exists; pruning
against the replica catalog is the concrete planner's job.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Mapping

from .catalog import VirtualDataCatalog
from .errors import CycleDetected, UnknownTarget


@dataclass(frozen=True)
class AbstractDag:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str, str]]  # (producer, consumer, lfn)
    external_inputs: frozenset[tuple[str, str]]  # (lfn, consumer)
    target: str
    node_inputs: Mapping[str, frozenset[str]] = field(default_factory=dict, compare=True, hash=False)
    node_outputs: Mapping[str, frozenset[str]] = field(default_factory=dict, compare=True, hash=False)
    node_params: Mapping[str, Mapping[str, str]] = field(default_factory=dict, compare=True, hash=False)

    def parents(self, node: str) -> set[str]:
        return {p for p, c, _ in self.edges if c == node}

    def children(self, node: str) -> set[str]:
        return {c for p, c, _ in self.edges if p == node}


def resolve_request(catalog: VirtualDataCatalog, request: str) -> str:
    """Map a derivation name or an output file name to a derivation name."""
    if request in catalog.derivations:
        return request
    producer = catalog.find_producer(request)
    if producer is None:
        raise UnknownTarget(request)
    return producer.name


def plan_abstract(catalog: VirtualDataCatalog, request: str) -> AbstractDag:
    """Recursively collect every derivation the requested product depends on.

    Shared producers become a single node. Every input with a producer in the
    catalog yields an edge; inputs without one are recorded as external.
    """
    target = resolve_request(catalog, request)
    bindings = {}
    edges: set[tuple[str, str, str]] = set()
    external: set[tuple[str, str]] = set()
    on_path: list[str] = []
    on_path_set: set[str] = set()

    def visit(dv_name: str) -> None:
        if dv_name in on_path_set:
            start = on_path.index(dv_name)
            raise CycleDetected(on_path[start:] + [dv_name])
        if dv_name in bindings:
            return
        binding = catalog.bind(dv_name)
        on_path.append(dv_name)
        on_path_set.add(dv_name)
        for lfn in sorted(binding.inputs):
            producer = catalog.find_producer(lfn)
            if producer is None:
                external.add((lfn, dv_name))
            else:
                edges.add((producer.name, dv_name, lfn))
                visit(producer.name)
        on_path.pop()
        on_path_set.discard(dv_name)
        bindings[dv_name] = binding

    visit(target)
    return AbstractDag(
        nodes=frozenset(bindings),
        edges=frozenset(edges),
        external_inputs=frozenset(external),
        target=target,
        node_inputs={n: b.inputs for n, b in bindings.items()},
        node_outputs={n: b.outputs for n, b in bindings.items()},
        node_params={n: b.params for n, b in bindings.items()},
    )


def topo_order(dag: AbstractDag) -> list[str]:
    """Producers before consumers; ties broken by node name."""
    indegree = {n: 0 for n in dag.nodes}
    children: dict[str, set[str]] = {n: set() for n in dag.nodes}
    for p, c, _ in dag.edges:
        if c not in children[p]:
            children[p].add(c)
            indegree[c] += 1
    ready = [n for n, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for c in children[n]:
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != len(dag.nodes):
        raise CycleDetected(sorted(set(dag.nodes) - set(order)))
    return order


def dag_to_text(dag: AbstractDag) -> str:
    lines = sorted(f"NODE {n}" for n in dag.nodes)
    lines += sorted(f"EDGE {p} {c} {lfn}" for p, c, lfn in dag.edges)
    lines += sorted(f"EXT {lfn} {c}" for lfn, c in dag.external_inputs)
    lines.append(f"TARGET {dag.target}")
    return "\n".join(lines) + "\n"
