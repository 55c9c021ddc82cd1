"""Module decomposition, identical-module detection and modular placement."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from networkx.algorithms.isomorphism import DiGraphMatcher

from .model import (ComponentType, Link, SafetyConstraint, SensorPlacement, System,
                    natural_key)
from .place import (CoverSearch, PlacementResult, Placer, Unsat, join,
                    place_sensors_active)


class ModuleError(Exception):
    def __init__(self, message: str, module_index: int | None = None):
        self.module_index = module_index
        super().__init__(message)


@dataclass(frozen=True)
class ModulePartition:
    modules: tuple[frozenset[str], ...]
    boundary_edges: tuple[Link, ...] = ()
    quotient_edges: tuple[tuple[int, int], ...] = ()

    def module_of(self, comp: str) -> int:
        for i, m in enumerate(self.modules):
            if comp in m:
                return i
        raise KeyError(comp)

    def depths(self) -> list[int]:
        """Longest-path depth of each module in the quotient DAG; roots are 1."""
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.modules)))
        g.add_edges_from(self.quotient_edges)
        depth = [1] * len(self.modules)
        for v in nx.topological_sort(g):
            for u in g.predecessors(v):
                depth[v] = max(depth[v], depth[u] + 1)
        return depth

    def to_json(self) -> dict:
        return {"modules": [sorted(m, key=natural_key) for m in self.modules],
                "quotient_edges": [list(e) for e in self.quotient_edges]}


def _graph(system: System) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(system.components)
    g.add_edges_from((l.src, l.dst) for l in system.links)
    return g


def _finish(system: System, modules: list[set[str]]) -> ModulePartition:
    where = {c: i for i, m in enumerate(modules) for c in m}
    boundary = tuple(l for l in system.links if where[l.src] != where[l.dst])
    quotient = sorted({(where[l.src], where[l.dst]) for l in boundary})
    return ModulePartition(tuple(frozenset(m) for m in modules), boundary, tuple(quotient))


def find_modules(system: System) -> ModulePartition:
    """Fixpoint decomposition.

    Seeds are the strongly connected components with more than one member,
    ordered by their earliest declared component.  Each round, an unassigned
    component joins the lowest-numbered module it has an edge into.  When no
    seed can grow, the earliest declared unassigned component without
    unassigned successors starts a fresh module.  Modules caught in a
    quotient cycle are merged so that the quotient stays acyclic.
    """
    g = _graph(system)
    order = {c: i for i, c in enumerate(system.components)}
    sccs = [s for s in nx.strongly_connected_components(g) if len(s) > 1]
    sccs.sort(key=lambda s: min(order[c] for c in s))
    modules: list[set[str]] = [set(s) for s in sccs]
    where = {c: i for i, m in enumerate(modules) for c in m}

    while len(where) < len(order):
        changed = True
        while changed:
            changed = False
            grab: dict[str, int] = {}
            for v in system.components:
                if v in where:
                    continue
                targets = [where[w] for w in g.successors(v) if w in where]
                if targets:
                    grab[v] = min(targets)
            for v, j in grab.items():
                modules[j].add(v)
                where[v] = j
                changed = True
        rest = [v for v in system.components if v not in where]
        if not rest:
            break
        sink = next(v for v in rest if all(w in where for w in g.successors(v)))
        where[sink] = len(modules)
        modules.append({sink})

    return _acyclic(system, modules)


def _acyclic(system: System, modules: list[set[str]]) -> ModulePartition:
    where = {c: i for i, m in enumerate(modules) for c in m}
    q = nx.DiGraph()
    q.add_nodes_from(range(len(modules)))
    q.add_edges_from((where[l.src], where[l.dst]) for l in system.links
                     if where[l.src] != where[l.dst])
    merged = []
    for comp in nx.strongly_connected_components(q):
        merged.append(set().union(*[modules[i] for i in comp]))
    order = {c: i for i, c in enumerate(system.components)}
    merged.sort(key=lambda m: min(order[c] for c in m))
    return _finish(system, merged)


def validate_partition(system: System, partition: ModulePartition) -> list[str]:
    problems = []
    seen: dict[str, int] = {}
    for i, m in enumerate(partition.modules):
        if not m:
            problems.append(f"module {i} is empty")
        for c in m:
            if c in seen:
                problems.append(f"{c} is in modules {seen[c]} and {i}")
            seen[c] = i
    missing = set(system.components) - set(seen)
    if missing:
        problems.append(f"components in no module: {sorted(missing, key=natural_key)}")
    unknown = set(seen) - set(system.components)
    if unknown:
        problems.append(f"unknown components: {sorted(unknown, key=natural_key)}")
    if problems:
        return problems
    for scc in nx.strongly_connected_components(_graph(system)):
        if len({seen[c] for c in scc}) > 1:
            problems.append(f"strongly connected {sorted(scc, key=natural_key)} is split")
    q = nx.DiGraph()
    q.add_nodes_from(range(len(partition.modules)))
    q.add_edges_from((seen[l.src], seen[l.dst]) for l in system.links
                     if seen[l.src] != seen[l.dst])
    if not nx.is_directed_acyclic_graph(q):
        problems.append("module quotient graph has a cycle")
    return problems


def partition_from_groups(system: System, groups: Iterable[Iterable[str]]) -> ModulePartition:
    """A user-chosen partition, checked against the module invariants."""
    part = _finish(system, [set(g) for g in groups]) if _covers(system, groups) else \
        ModulePartition(tuple(frozenset(g) for g in groups))
    problems = validate_partition(system, part)
    if problems:
        raise ModuleError("; ".join(problems))
    return part


def _covers(system: System, groups) -> bool:
    flat = [c for g in groups for c in g]
    return sorted(flat) == sorted(system.components)


def merge_modules(system: System, partition: ModulePartition, i: int, j: int) -> ModulePartition:
    """Merge two modules, then any modules the merge puts on a quotient cycle."""
    if i == j:
        return partition
    mods = [set(m) for m in partition.modules]
    mods[min(i, j)] |= mods[max(i, j)]
    del mods[max(i, j)]
    return _acyclic(system, mods)


# ---------------------------------------------------------------- isomorphism

def _module_graph(system: System, members: Iterable[str]) -> nx.DiGraph:
    members = set(members)
    g = nx.DiGraph()
    for c in members:
        g.add_node(c, kind=system.components[c])
    for l in system.links:
        if l.src in members and l.dst in members:
            ports = g.edges[l.src, l.dst]["ports"] if g.has_edge(l.src, l.dst) else ()
            g.add_edge(l.src, l.dst, ports=tuple(sorted(ports + (l.port or "",))),
                       switched=system.switch_of(l) is not None)
    return g


def module_isomorphism(system: System, m1: Iterable[str], m2: Iterable[str]) -> dict[str, str] | None:
    """Type-, port- and switch-preserving isomorphism from m1 onto m2, if any."""
    g1, g2 = _module_graph(system, m1), _module_graph(system, m2)
    if g1.number_of_nodes() != g2.number_of_nodes() or g1.number_of_edges() != g2.number_of_edges():
        return None
    if sorted(d["kind"] for _, d in g1.nodes(data=True)) != \
            sorted(d["kind"] for _, d in g2.nodes(data=True)):
        return None
    matcher = DiGraphMatcher(g1, g2, node_match=lambda a, b: a["kind"] == b["kind"],
                             edge_match=lambda a, b: a == b)
    for mapping in matcher.isomorphisms_iter():
        return dict(mapping)
    return None


def modules_identical(system: System, m1: Iterable[str], m2: Iterable[str]) -> bool:
    return module_isomorphism(system, m1, m2) is not None


# ---------------------------------------------------------------- module subsystems

def module_system(system: System, members: Iterable[str],
                  constraints: Sequence[SafetyConstraint] = ()) -> tuple[System, list[SafetyConstraint]]:
    """A module as a stand-alone system.

    Components outside the module that feed it become rigid sources, assumed
    to behave as the healthy upstream would; module components that feed
    other modules become observable, as they would be once the downstream
    module is diagnosed.
    """
    members = set(members)
    feeders = sorted({l.src for l in system.links if l.dst in members and l.src not in members},
                     key=natural_key)
    outputs = sorted({l.src for l in system.links if l.src in members and l.dst not in members},
                     key=natural_key)
    given = [v for v in system.sources.values() if v is not None]
    default = max(set(given), key=given.count) if given else None

    types = dict(system.types)
    comps = {c: t for c, t in system.components.items() if c in members}
    sources = {s: v for s, v in system.sources.items() if s in members}
    for f in feeders:
        base = system.type_of(f)
        name = f"{base.name}_feed"
        types[name] = ComponentType(name, base.states, base.fault_value, (),
                                    base.default, faultable=False)
        comps[f] = name
        value = system.sources.get(f, default)
        sources[f] = value if value in base.states else None
    types = {n: t for n, t in types.items() if n in set(comps.values())}
    links = tuple(l for l in system.links if l.dst in members)
    switches = {n: l for n, l in system.switches.items() if l in set(links)}
    observables = {lab: c for lab, c in system.observables.items() if c in members}
    for o in outputs:
        if o not in observables.values():
            observables[o] = o
    sub = System(types=types, components=comps, links=links, switches=switches,
                 sources=sources, observables=observables,
                 always_healthy=frozenset(system.always_healthy & members),
                 healthy_groups=tuple(g for g in system.healthy_groups if g <= members))
    kept = []
    for c in constraints:
        if c.kind == "always":
            inside = tuple(t for t in c.targets if t in members)
            if inside:
                kept.append(replace(c, targets=inside))
        else:
            kept.append(c)
    return sub, kept


# ---------------------------------------------------------------- modular placement

@dataclass(frozen=True)
class ModularPlacementResult(PlacementResult):
    module_sensors: tuple[frozenset[str], ...] = ()
    module_schedules: tuple[int, ...] = ()
    depths: tuple[int, ...] = ()
    level_ends: tuple[int, ...] = field(default=())

    def to_json(self) -> dict:
        out = super().to_json()
        out["modules"] = [{"sensors": sorted(s, key=natural_key), "configurations": k,
                           "depth": d}
                          for s, k, d in zip(self.module_sensors, self.module_schedules,
                                             self.depths)]
        return out


def modular_place_sensors(system: System, rules, constraints: Sequence[SafetyConstraint],
                          partition: ModulePartition, m: int, k_prime: int,
                          **kw) -> ModularPlacementResult:
    """Place sensors module by module, then schedule and certify globally.

    Identical modules are solved once and the answer is carried over along
    the isomorphism.  The global schedule is built depth level by depth
    level, each level getting k' configurations to isolate the faults of its
    modules; a level that needs more borrows from the q*k' total.
    """
    problems = validate_partition(system, partition)
    if problems:
        raise ModuleError("; ".join(problems))
    q = len(partition.modules)
    solved: list[tuple[frozenset[str], PlacementResult]] = []
    per_module: list[frozenset[str]] = []
    per_k: list[int] = []
    for i, members in enumerate(partition.modules):
        got = None
        for prev_members, prev in solved:
            iso = module_isomorphism(system, prev_members, members)
            if iso is not None:
                got = (frozenset(iso[s] for s in prev.sensors.sensors), len(prev.configurations))
                break
        if got is None:
            sub, sub_constraints = module_system(system, members, constraints)
            res = place_sensors_active(sub, rules, sub_constraints, m_max=m, k_max=k_prime, **kw)
            if not res:
                raise ModuleError(f"module {i} has no placement with at most {m} sensors "
                                  f"and {k_prime} configurations", module_index=i)
            solved.append((frozenset(members), res))
            got = (res.sensors.sensors, len(res.configurations))
        per_module.append(got[0])
        per_k.append(got[1])

    sensors = frozenset().union(*per_module)
    placer = Placer(system, rules, constraints, **kw)
    configs, ends = _level_schedule(placer, partition, sorted(sensors, key=natural_key),
                                    k_prime, q * k_prime)
    if configs is None:
        raise ModuleError(f"no global schedule of at most {q * k_prime} configurations "
                          "for the union placement")
    cert = placer.certify(sensors, configs)
    if not cert:
        raise ModuleError(f"global certification failed: {cert}")
    return ModularPlacementResult(SensorPlacement(sensors), tuple(configs), True,
                                  placer.exhaustive, tuple(per_module), tuple(per_k),
                                  tuple(partition.depths()), tuple(ends))


def _level_schedule(placer: Placer, partition: ModulePartition, sensors: Sequence[str],
                    k_prime: int, budget: int):
    r = placer.readings
    probes = sorted(set(placer.observed) | set(sensors), key=natural_key)
    depth = partition.depths()
    row_depth = np.array([0] + [depth[partition.module_of(next(iter(s.faulty)))]
                                for s in placer.scenarios])
    labels = np.zeros(r.rows, dtype=np.int64)
    detected: set[str] = set()
    chosen = []
    ends = []
    for level in range(1, max(depth, default=0) + 1):
        targets = row_depth <= level
        allowance = k_prime
        while True:
            search = CoverSearch(r, probes, targets=targets, base=labels, detected=detected)
            room = min(allowance, budget - len(chosen))
            idx = search.search(room)
            if idx is not None or room >= budget - len(chosen):
                break
            allowance += k_prime
        if idx is None:
            return None, []
        for i in idx:
            chosen.append(i)
            opt = next(o for o in search.options if o.index == i)
            detected |= opt.detects
            labels = join(labels, opt.labels)
        ends.append(len(chosen))
    if not chosen:
        search = CoverSearch(r, probes)
        idx = search.search(1)
        if idx is None:
            return None, []
        chosen = idx
    return [r.configs[i] for i in chosen], ends
