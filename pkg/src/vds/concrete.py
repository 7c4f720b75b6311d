"""Concrete planning: prune materialized work, then add data movement nodes.

An edge of the abstract DAG is superfluous when the file it carries already
has a replica. Superfluous edges are dropped, then every node that can no
longer reach the target is dropped. The target itself always runs unless
``skip_existing_target`` is set and all of its outputs already exist.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field, replace
from typing import Collection, Iterable, Union

from .abstract import AbstractDag, topo_order
from .errors import MissingReplica, UnknownSite, UnsatisfiableInput, VdsError
from .rls import ReplicaCatalog


def _has_replica(rls: ReplicaCatalog, lfn: str) -> bool:
    return bool(rls.lookup(lfn))


def surviving_nodes(dag: AbstractDag, rls: ReplicaCatalog, skip_existing_target: bool = False) -> set[str]:
    """Nodes still needed: reverse reachability from the target over edges whose file is not replicated."""
    if skip_existing_target and all(_has_replica(rls, lfn) for lfn in dag.node_outputs.get(dag.target, ())):
        return set()
    needed_edges: dict[str, set[str]] = {}
    for p, c, lfn in dag.edges:
        if not _has_replica(rls, lfn):
            needed_edges.setdefault(c, set()).add(p)
    keep = {dag.target}
    stack = [dag.target]
    while stack:
        n = stack.pop()
        for p in needed_edges.get(n, ()):
            if p not in keep:
                keep.add(p)
                stack.append(p)
    return keep


def prune(dag: AbstractDag, rls: ReplicaCatalog, skip_existing_target: bool = False) -> AbstractDag:
    """Drop work whose products already exist.

    Inputs whose producer was dropped become external inputs; edges between
    two surviving nodes are kept even if the file is replicated, since the
    producer runs anyway.
    """
    keep = surviving_nodes(dag, rls, skip_existing_target)
    edges = set()
    external = {(lfn, c) for lfn, c in dag.external_inputs if c in keep}
    for p, c, lfn in dag.edges:
        if c not in keep:
            continue
        if p in keep:
            edges.add((p, c, lfn))
        else:
            if not _has_replica(rls, lfn):
                raise UnsatisfiableInput(lfn, c)
            external.add((lfn, c))
    return AbstractDag(
        nodes=frozenset(keep),
        edges=frozenset(edges),
        external_inputs=frozenset(external),
        target=dag.target,
        node_inputs={n: v for n, v in dag.node_inputs.items() if n in keep},
        node_outputs={n: v for n, v in dag.node_outputs.items() if n in keep},
        node_params={n: v for n, v in dag.node_params.items() if n in keep},
    )


# -- concrete nodes --------------------------------------------------------


@dataclass(frozen=True)
class Execute:
    dv: str
    outputs: tuple[str, ...] = field(default=(), compare=False)
    params: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    @property
    def id(self) -> str:
        return f"exec:{self.dv}"

    def param(self, name: str, default: str | None = None) -> str | None:
        return dict(self.params).get(name, default)


@dataclass(frozen=True)
class StageIn:
    lfn: str
    src_site: str
    src_pfn: str
    dst_site: str

    @property
    def id(self) -> str:
        return f"in:{self.lfn}"


@dataclass(frozen=True)
class StageOut:
    lfn: str
    src_site: str
    dst_site: str
    dst_pfn: str

    @property
    def id(self) -> str:
        return f"out:{self.lfn}"


@dataclass(frozen=True)
class Register:
    lfn: str
    site: str
    pfn: str

    @property
    def id(self) -> str:
        return f"reg:{self.lfn}"


ConcreteNode = Union[Execute, StageIn, StageOut, Register]

KIND_NAMES = {Execute: "EXEC", StageIn: "STAGEIN", StageOut: "STAGEOUT", Register: "REGISTER"}


def node_kind(node: ConcreteNode) -> str:
    return KIND_NAMES[type(node)]


@dataclass
class ConcreteDag:
    site: str
    nodes: dict[str, ConcreteNode] = field(default_factory=dict)
    edges: set[tuple[str, str]] = field(default_factory=set)
    target: str | None = None

    def add(self, node: ConcreteNode) -> str:
        self.nodes[node.id] = node
        return node.id

    def parents(self, node_id: str) -> set[str]:
        return {p for p, c in self.edges if c == node_id}

    def executes(self) -> list[Execute]:
        return [n for n in self.nodes.values() if isinstance(n, Execute)]

    def topo_ids(self) -> list[str]:
        ts = graphlib.TopologicalSorter({n: set() for n in self.nodes})
        for p, c in self.edges:
            ts.add(c, p)
        return list(ts.static_order())


def choose_source(replicas: Iterable[tuple[str, str]], site: str, storage_site: str) -> tuple[str, str]:
    """Prefer the execution site, then the storage site, then the smallest site id."""
    replicas = sorted(replicas)
    for preferred in (site, storage_site):
        local = [r for r in replicas if r[0] == preferred]
        if local:
            return local[0]
    return replicas[0]


def plan_concrete(
    dag: AbstractDag,
    site: str,
    rls: ReplicaCatalog,
    storage: tuple[str, str],
    *,
    sites: Collection[str] | None = None,
    keep: Collection[str] | None = None,
    skip_existing_target: bool = False,
) -> ConcreteDag:
    """Resolve an abstract DAG onto ``site``.

    ``storage`` is ``(storage_site, path_prefix)``; every staged-out file
    lands at ``prefix + "/" + lfn`` there. With ``keep`` unset every output
    is staged out and registered. With a ``keep`` set, files consumed by a
    downstream Execute of the same DAG are staged out only if listed; final
    outputs and logs are always kept.
    """
    if sites is not None and site not in sites:
        raise UnknownSite(site)
    with rls.lock:
        return _plan_concrete(dag, site, rls, storage, keep, skip_existing_target)


def _plan_concrete(dag, site, rls, storage, keep, skip_existing_target) -> ConcreteDag:
    storage_site, prefix = storage
    pruned = prune(dag, rls, skip_existing_target)
    cdag = ConcreteDag(site=site, target=dag.target if pruned.nodes else None)
    if not pruned.nodes:
        return cdag

    consumed_inside = {lfn for _, _, lfn in pruned.edges}
    for dv in topo_order(pruned):
        outputs = tuple(sorted(pruned.node_outputs.get(dv, ())))
        params = tuple(sorted(pruned.node_params.get(dv, {}).items()))
        cdag.add(Execute(dv, outputs, params))

    for lfn, consumer in sorted(pruned.external_inputs):
        replicas = rls.lookup(lfn)
        if not replicas:
            raise MissingReplica(lfn)
        src_site, src_pfn = choose_source(replicas, site, storage_site)
        sid = cdag.add(StageIn(lfn, src_site, src_pfn, site))
        cdag.edges.add((sid, Execute(consumer).id))

    for p, c, _ in pruned.edges:
        cdag.edges.add((Execute(p).id, Execute(c).id))

    for ex in cdag.executes():
        for lfn in ex.outputs:
            if keep is not None and lfn in consumed_inside and lfn not in keep:
                continue
            pfn = f"{prefix.rstrip('/')}/{lfn}"
            out_id = cdag.add(StageOut(lfn, site, storage_site, pfn))
            reg_id = cdag.add(Register(lfn, storage_site, pfn))
            cdag.edges.add((ex.id, out_id))
            cdag.edges.add((out_id, reg_id))
    return cdag


# -- submit file -----------------------------------------------------------


def emit_dag_file(cdag: ConcreteDag) -> str:
    lines = [f"SITE {cdag.site}"]
    for nid in sorted(cdag.nodes):
        node = cdag.nodes[nid]
        if isinstance(node, Execute):
            lines.append(f"JOB {nid} EXEC {node.dv}")
        elif isinstance(node, StageIn):
            lines.append(f"JOB {nid} STAGEIN {node.lfn} FROM {node.src_site} {node.src_pfn} TO {node.dst_site}")
        elif isinstance(node, StageOut):
            lines.append(f"JOB {nid} STAGEOUT {node.lfn} FROM {node.src_site} TO {node.dst_site} {node.dst_pfn}")
        else:
            lines.append(f"JOB {nid} REGISTER {node.lfn} {node.site} {node.pfn}")
    for p, c in sorted(cdag.edges):
        lines.append(f"PARENT {p} CHILD {c}")
    return "\n".join(lines) + "\n"


class DagFileError(VdsError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def parse_dag_file(text: str) -> ConcreteDag:
    """Inverse of :func:`emit_dag_file`.

    Execute outputs are recovered from their StageOut children; the target is
    the Execute with no Execute children.
    """
    cdag: ConcreteDag | None = None
    for lineno, line in enumerate(text.splitlines(), 1):
        f = line.split()
        if not f:
            continue
        if f[0] == "SITE" and len(f) == 2 and cdag is None:
            cdag = ConcreteDag(site=f[1])
            continue
        if cdag is None:
            raise DagFileError(lineno, "file must start with a SITE line")
        if f[0] == "JOB" and len(f) >= 4:
            nid, kind = f[1], f[2]
            if kind == "EXEC" and len(f) == 4:
                node: ConcreteNode = Execute(f[3])
            elif kind == "STAGEIN" and len(f) == 9 and f[4] == "FROM" and f[7] == "TO":
                node = StageIn(f[3], f[5], f[6], f[8])
            elif kind == "STAGEOUT" and len(f) == 9 and f[4] == "FROM" and f[6] == "TO":
                node = StageOut(f[3], f[5], f[7], f[8])
            elif kind == "REGISTER" and len(f) == 6:
                node = Register(f[3], f[4], f[5])
            else:
                raise DagFileError(lineno, f"malformed JOB line: {line!r}")
            if node.id != nid:
                raise DagFileError(lineno, f"job id {nid!r} does not match node {node.id!r}")
            cdag.add(node)
        elif f[0] == "PARENT" and len(f) == 4 and f[2] == "CHILD":
            cdag.edges.add((f[1], f[3]))
        else:
            raise DagFileError(lineno, f"unrecognized line: {line!r}")
    if cdag is None:
        raise DagFileError(1, "empty submit file")
    for p, c in cdag.edges:
        if p not in cdag.nodes or c not in cdag.nodes:
            raise DagFileError(0, f"edge {p} -> {c} names an unknown job")

    outputs: dict[str, list[str]] = {}
    exec_children: dict[str, int] = {}
    for p, c in cdag.edges:
        child = cdag.nodes[c]
        if isinstance(child, StageOut):
            outputs.setdefault(p, []).append(child.lfn)
        elif isinstance(child, Execute):
            exec_children[p] = exec_children.get(p, 0) + 1
    for ex in cdag.executes():
        cdag.nodes[ex.id] = replace(ex, outputs=tuple(sorted(outputs.get(ex.id, ()))))
    sinks = sorted(ex.dv for ex in cdag.executes() if not exec_children.get(ex.id))
    cdag.target = sinks[0] if len(sinks) == 1 else None
    return cdag
