"""Grounding, forward simulation and the consistency check.

Rule schemas are instantiated over a concrete system into propositional
``GroundRule`` objects.  Given a guess for the health of every component and
a configuration, the remaining program is stratified, so its stable model is
the least fixpoint of the ground rules followed by closed-world defaults.
``Program`` evaluates that fixpoint for a whole batch of health guesses at
once by keeping, for every atom and value, a bitmask over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import (NEIGHBOUR_SELECTORS, Configuration, Observation, RuleSchema,
                    System)


class EngineError(Exception):
    pass


class GroundingError(EngineError):
    pass


class ContradictionError(EngineError):
    """Two different values were derived for one atom."""

    def __init__(self, atom: str, first: list[str], second: list[str]):
        self.atom = atom
        self.first = first
        self.second = second
        lines = [f"contradictory values derived for {atom}:"]
        lines += ["  " + r for r in first]
        lines.append("  versus")
        lines += ["  " + r for r in second]
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class GroundRule:
    """``head = value`` if every guard holds, every listed component is
    healthy and the switch (if any) is on.  Copy rules (``value is None``)
    transfer whatever value ``copy_from`` has."""

    head: str
    value: str | None
    guards: tuple[tuple[str, frozenset[str]], ...] = ()
    healthy: tuple[str, ...] = ()
    switch: str | None = None
    copy_from: str | None = None
    allowed: frozenset[str] = frozenset()

    def __str__(self) -> str:
        body = [f"healthy({c})" for c in self.healthy]
        for atom, vals in self.guards:
            body.append(f"{atom} in {{{','.join(sorted(vals))}}}" if len(vals) > 1
                        else f"{atom} = {next(iter(vals))}")
        if self.switch is not None:
            body.append(f"on({self.switch})")
        if self.copy_from is not None:
            head = f"{self.head} = {self.copy_from}"
        elif self.value is None:
            head = f"{self.head} in {{{','.join(sorted(self.allowed))}}}"
        else:
            head = f"{self.head} = {self.value}"
        return head + (" <- " + ", ".join(body) if body else "")


@dataclass(frozen=True)
class HealthAssignment:
    """Total health assignment, stored as its faulty complement."""

    faulty: frozenset[str] = frozenset()

    @classmethod
    def from_healthy(cls, system: System, healthy: Iterable[str]) -> "HealthAssignment":
        healthy = set(healthy)
        return cls(frozenset(c for c in system.components if c not in healthy))

    def healthy(self, system: System) -> frozenset[str]:
        return frozenset(c for c in system.components if c not in self.faulty)


@dataclass(frozen=True)
class Valuation:
    values: Mapping[str, str]

    def __getitem__(self, atom: str) -> str:
        return self.values[atom]

    def get(self, atom: str, default=None):
        return self.values.get(atom, default)


def dump(rules: Sequence[GroundRule]) -> str:
    return "".join(f"{r}\n" for r in rules)


def _neighbour_links(system: System, comp: str, selector: str):
    for link in system.links:
        if link.dst != comp or link.port is not None:
            continue
        switched = system.switch_of(link) is not None
        if selector == "~any" or (selector == "~switched") == switched:
            yield link


def ground(system: System, rules: Sequence[RuleSchema]) -> list[GroundRule]:
    """Instantiate schemas over ``system``; port links become copy rules."""
    out: list[GroundRule] = []
    switch_names = {link: name for name, link in system.switches.items()}
    port_feed = {(l.dst, l.port): l for l in system.links if l.port is not None}

    for schema in rules:
        for comp, tname in system.components.items():
            ctype = system.types[tname]
            if schema.subject_type == "*":
                if not schema.consequent_states <= set(ctype.states):
                    continue
            elif schema.subject_type != tname:
                continue
            if comp in system.sources:
                continue
            out.extend(_ground_one(system, schema, comp, port_feed, switch_names))

    for link in system.links:
        if link.port is not None:
            out.append(GroundRule(head=f"{link.dst}.{link.port}", value=None,
                                  switch=switch_names.get(link), copy_from=link.src))
    return out


def _guard_atoms(system, schema, comp, selector, cond, port_feed, switch_names):
    """(atom, allowed values, switch) triples one selector expands to."""
    ctype = system.type_of(comp)
    if selector in NEIGHBOUR_SELECTORS:
        for link in _neighbour_links(system, comp, selector):
            ntype = system.type_of(link.src)
            if cond.types and ntype.name not in cond.types:
                continue
            vals = cond.states or frozenset(ntype.states)
            yield link.src, frozenset(vals), switch_names.get(link)
        return
    if selector not in ctype.ports:
        raise GroundingError(
            f"rule for {schema.subject_type} references port {selector!r} "
            f"absent from type {ctype.name}")
    feed = port_feed.get((comp, selector))
    if feed is not None and cond.types and system.components[feed.src] not in cond.types:
        return
    if feed is None and cond.types:
        return
    vals = cond.states or frozenset(ctype.states)
    yield f"{comp}.{selector}", frozenset(vals), None


def _ground_one(system, schema, comp, port_feed, switch_names):
    conj: list[tuple[str, frozenset[str]]] = []
    switches: list[str] = []
    for selector, cond in schema.conj_guards:
        expanded = list(_guard_atoms(system, schema, comp, selector, cond,
                                     port_feed, switch_names))
        if not expanded and selector not in NEIGHBOUR_SELECTORS:
            return []
        for atom, vals, sw in expanded:
            conj.append((atom, vals))
            if sw is not None:
                switches.append(sw)
    if len(set(switches)) > 1:
        # a conjunction over several switched links cannot carry one switch
        raise GroundingError(f"rule for {comp} needs several switches at once")

    disjuncts: list[tuple[tuple[str, frozenset[str]] | None, str | None]] = []
    if schema.disj_guards:
        for selector, cond in schema.disj_guards:
            for atom, vals, sw in _guard_atoms(system, schema, comp, selector, cond,
                                               port_feed, switch_names):
                disjuncts.append(((atom, vals), sw))
        if not disjuncts:
            return []
    else:
        disjuncts.append((None, None))

    single = len(schema.consequent_states) == 1
    value = next(iter(schema.consequent_states)) if single else None
    rules = []
    for extra, sw in disjuncts:
        guards = tuple(conj) + ((extra,) if extra else ())
        swn = sw if sw is not None else (switches[0] if switches else None)
        if sw is not None and switches and switches[0] != sw:
            raise GroundingError(f"rule for {comp} needs several switches at once")
        rules.append(GroundRule(head=comp, value=value, guards=guards, healthy=(comp,),
                                switch=swn,
                                allowed=frozenset() if single else schema.consequent_states))
    return rules


def resolve_inputs(system: System, config: Configuration | None,
                   inputs: Mapping[str, str] | None = None) -> dict[str, str]:
    merged = {s: v for s, v in system.sources.items() if v is not None}
    if config is not None:
        merged.update(config.input_map)
    if inputs:
        merged.update(inputs)
    missing = [s for s in system.sources if s not in merged]
    if missing:
        raise EngineError(f"no input value for sources {missing}")
    return merged


class Program:
    """A ground program compiled for repeated batch evaluation."""

    def __init__(self, system: System, rules: Sequence[GroundRule]):
        self.system = system
        self.rules = list(rules)
        atoms: dict[str, str] = {}
        for comp, tname in system.components.items():
            atoms[comp] = tname
            for port in system.types[tname].ports:
                atoms[f"{comp}.{port}"] = tname
        for r in self.rules:
            for a in [r.head, r.copy_from, *(g for g, _ in r.guards)]:
                if a is not None and a not in atoms:
                    raise EngineError(f"ground rule mentions unknown atom {a}")
        self.atom_type = atoms
        self.default = {a: system.types[t].default_value for a, t in atoms.items()}
        self._order_rules()

    def _order_rules(self):
        """Group rules into strongly connected layers of the atom dependency graph."""
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(self.atom_type)
        for r in self.rules:
            for a in ([r.copy_from] if r.copy_from else []) + [a for a, _ in r.guards]:
                g.add_edge(a, r.head)
        cond = nx.condensation(g)
        member = cond.graph["mapping"]
        by_head: dict[str, list[GroundRule]] = {}
        for r in self.rules:
            by_head.setdefault(r.head, []).append(r)
        self.layers: list[tuple[list[str], list[GroundRule]]] = []
        for node in nx.lexicographical_topological_sort(cond):
            atoms = sorted(cond.nodes[node]["members"])
            layer_rules = [r for a in atoms for r in by_head.get(a, [])]
            if len(atoms) > 1:
                for r in layer_rules:
                    for a, vals in r.guards:
                        if member[a] == node and self.default[a] in vals:
                            raise EngineError(
                                f"rule '{r}' depends on the default value of {a} "
                                "inside a cycle (not stratified)")
            self.layers.append((atoms, layer_rules))

    def run(self, faulty_sets: Sequence[Iterable[str]], config: Configuration | None = None,
            inputs: Mapping[str, str] | None = None) -> "BatchResult":
        system = self.system
        batch = len(faulty_sets)
        full = (1 << batch) - 1
        on = config.on if config is not None else frozenset()
        values = resolve_inputs(system, config, inputs)

        fault_mask: dict[str, int] = {}
        for i, fs in enumerate(faulty_sets):
            for c in fs:
                fault_mask[c] = fault_mask.get(c, 0) | (1 << i)

        vals: dict[str, dict[str, int]] = {a: {} for a in self.atom_type}
        known: dict[str, int] = dict.fromkeys(self.atom_type, 0)
        origin: dict[tuple[str, str], GroundRule | str] = {}

        def put(atom: str, value: str, mask: int, why) -> bool:
            slot = vals[atom]
            new = mask & ~slot.get(value, 0)
            if not new:
                return False
            clash = new & known[atom]
            if clash:
                other = next(v for v, m in slot.items() if m & clash)
                raise ContradictionError(atom, self._chain(atom, other, origin),
                                         self._chain(atom, value, origin, why))
            slot[value] = slot.get(value, 0) | new
            known[atom] |= new
            origin.setdefault((atom, value), why)
            return True

        for comp, fm in fault_mask.items():
            put(comp, system.type_of(comp).fault_value, fm, "faulty")
        for src, v in values.items():
            if v not in system.type_of(src).states:
                raise EngineError(f"input {v!r} not a state of source {src}")
            put(src, v, full & ~fault_mask.get(src, 0), "input")

        for atoms, rules in self.layers:
            active = [r for r in rules if r.switch is None or r.switch in on]
            changed = True
            while changed:
                changed = False
                for r in active:
                    m = full
                    for c in r.healthy:
                        m &= ~fault_mask.get(c, 0)
                    for a, allowed in r.guards:
                        if not m:
                            break
                        slot = vals[a]
                        m &= sum(slot.get(v, 0) for v in allowed)
                    if not m:
                        continue
                    if r.copy_from is not None:
                        for v, vm in list(vals[r.copy_from].items()):
                            if m & vm and put(r.head, v, m & vm, r):
                                changed = True
                    elif r.value is not None:
                        if put(r.head, r.value, m, r):
                            changed = True
            for a in atoms:
                missing = full & ~known[a]
                if missing:
                    put(a, self.default[a], missing, "default")
            for r in active:
                if r.value is None and r.copy_from is None:
                    self._check_allowed(r, vals, fault_mask, full)
        return BatchResult(batch, vals)

    def _check_allowed(self, r, vals, fault_mask, full):
        m = full
        for c in r.healthy:
            m &= ~fault_mask.get(c, 0)
        for a, allowed in r.guards:
            m &= sum(vals[a].get(v, 0) for v in allowed)
        if not m:
            return
        for v, vm in vals[r.head].items():
            if vm & m and v not in r.allowed:
                raise ContradictionError(r.head, [f"{r.head} = {v}"], [str(r)])

    def _chain(self, atom, value, origin, why=None, depth=0) -> list[str]:
        rule = why if why is not None else origin.get((atom, value))
        if not isinstance(rule, GroundRule):
            return [f"{atom} = {value} ({rule})"]
        lines = [f"{atom} = {value} by {rule}"]
        if depth < 4:
            deps = [rule.copy_from] if rule.copy_from else [a for a, _ in rule.guards]
            for a in deps:
                for (oa, ov), _ in origin.items():
                    if oa == a:
                        lines += ["  " + s for s in self._chain(oa, ov, origin, None, depth + 1)]
                        break
        return lines


class BatchResult:
    """Values of every atom for every health guess in a batch."""

    def __init__(self, size: int, vals: dict[str, dict[str, int]]):
        self.size = size
        self.vals = vals

    def value(self, atom: str, index: int) -> str:
        bit = 1 << index
        for v, m in self.vals[atom].items():
            if m & bit:
                return v
        raise KeyError(atom)

    def valuation(self, index: int) -> Valuation:
        return Valuation({a: self.value(a, index) for a in self.vals})

    def codes(self, atoms: Sequence[str], code: Mapping[str, int]) -> np.ndarray:
        """Matrix ``[batch, len(atoms)]`` of integer value codes."""
        out = np.zeros((self.size, len(atoms)), dtype=np.int16)
        nbytes = (self.size + 7) // 8
        for j, a in enumerate(atoms):
            for v, m in self.vals[a].items():
                bits = np.unpackbits(np.frombuffer(m.to_bytes(nbytes, "little"), np.uint8),
                                     bitorder="little")[: self.size]
                out[bits.astype(bool), j] = code[v]
        return out


def _faulty_of(health) -> frozenset[str]:
    if isinstance(health, HealthAssignment):
        return health.faulty
    return frozenset(health)


def simulate(system: System, ground_rules: Sequence[GroundRule], health,
             config: Configuration | None = None,
             inputs: Mapping[str, str] | None = None) -> Valuation:
    """Least-fixpoint valuation for one health assignment and configuration.

    ``health`` is a HealthAssignment or an iterable of faulty components.
    """
    prog = Program(system, ground_rules)
    return prog.run([_faulty_of(health)], config, inputs).valuation(0)


def probe_values(system: System, valuation: Valuation, labels: Iterable[str]) -> dict[str, str]:
    return {lab: valuation[system.probe(lab)] for lab in labels}


def consistent(system: System, ground_rules: Sequence[GroundRule], health,
               config: Configuration | None, inputs: Mapping[str, str] | None,
               obs: Observation) -> bool:
    """True iff the simulated values agree with every reading in ``obs``."""
    readings = obs.reading_map
    if not readings:
        return True
    val = simulate(system, ground_rules, health, config, inputs)
    return all(val[system.probe(lab)] == v for lab, v in readings.items())
