"""Core domain types: systems, rules, scenarios, configurations, observations.

Everything here is a frozen value object.  Algorithms live elsewhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

#: Selector prefix for guards over in-neighbours instead of named ports.
NEIGHBOUR_SELECTORS = ("~any", "~switched", "~plain")


@dataclass(frozen=True)
class ComponentType:
    name: str
    states: tuple[str, ...]
    fault_value: str
    ports: tuple[str, ...] = ()
    default: str | None = None
    faultable: bool = True

    @property
    def port_arity(self) -> int:
        return len(self.ports)

    @property
    def default_value(self) -> str:
        """Closed-world value of an atom no rule derives."""
        return self.default if self.default is not None else self.states[0]


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    port: str | None = None

    def __str__(self) -> str:
        if self.port is None:
            return f"{self.src} -> {self.dst}"
        return f"{self.src}.out -> {self.dst}.{self.port}"


@dataclass(frozen=True)
class System:
    """A typed directed component graph with named switches.

    ``components`` maps component id to type name; ``observables`` maps a
    probe label to the component it reads (``s -> n4`` lets the half-adder
    call the output of gate n4 "s").  ``sources`` maps each externally driven
    component to its default input value, or None when every configuration
    must supply it.
    """

    types: Mapping[str, ComponentType]
    components: Mapping[str, str]
    links: tuple[Link, ...] = ()
    switches: Mapping[str, Link] = field(default_factory=dict)
    sources: Mapping[str, str | None] = field(default_factory=dict)
    observables: Mapping[str, str] = field(default_factory=dict)
    always_healthy: frozenset[str] = frozenset()
    healthy_groups: tuple[frozenset[str], ...] = ()

    def type_of(self, comp: str) -> ComponentType:
        return self.types[self.components[comp]]

    @property
    def names(self) -> list[str]:
        return list(self.components)

    def faultable(self) -> list[str]:
        """Components that may be hypothesised faulty, in declaration order."""
        return [c for c in self.components
                if self.type_of(c).faultable and c not in self.always_healthy]

    def switch_of(self, link: Link) -> str | None:
        for name, sw in self.switches.items():
            if sw == link:
                return name
        return None

    def in_links(self, comp: str) -> list[Link]:
        return [l for l in self.links if l.dst == comp]

    def out_links(self, comp: str) -> list[Link]:
        return [l for l in self.links if l.src == comp]

    def successors(self) -> dict[str, set[str]]:
        succ: dict[str, set[str]] = {c: set() for c in self.components}
        for l in self.links:
            if l.src in succ:
                succ[l.src].add(l.dst)
        return succ

    def probe(self, label: str) -> str:
        """Component read by a probe label (observable alias or sensor)."""
        return self.observables.get(label, label)

    @property
    def port_based(self) -> bool:
        return any(l.port is not None for l in self.links)


@dataclass(frozen=True)
class Condition:
    """``type in types and value in states``; an empty side is unconstrained."""

    types: frozenset[str] = frozenset()
    states: frozenset[str] = frozenset()

    def holds(self, type_name: str, value: str | None) -> bool:
        if self.types and type_name not in self.types:
            return False
        if self.states and value not in self.states:
            return False
        return True


@dataclass(frozen=True)
class RuleSchema:
    """Guarded implication ``subject_type & all(conj) & any(disj) -> consequent``.

    Selectors are input port names of the subject type, or one of
    ``~any``/``~switched``/``~plain`` meaning every in-neighbour over that
    kind of link.  ``subject_type == "*"`` matches every type whose state set
    contains the consequent.
    """

    subject_type: str
    conj_guards: tuple[tuple[str, Condition], ...] = ()
    disj_guards: tuple[tuple[str, Condition], ...] = ()
    consequent_states: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SafetyConstraint:
    """One of the three closed safety forms.

    kind ``at_most_one_source``: targets are type names; no component of
    those types may receive ``value`` over two active links at once.
    kind ``always``: targets are components that must read ``value``.
    kind ``prior_health``: targets are type names; a switch touching a
    component of those types may only close once an earlier configuration
    would have exposed a fault of that component.
    """

    kind: str
    targets: tuple[str, ...]
    value: str | None = None

    KINDS = ("at_most_one_source", "always", "prior_health")


@dataclass(frozen=True)
class FaultScenario:
    faulty: frozenset[str]

    def __str__(self) -> str:
        return "{" + ",".join(sorted(self.faulty)) + "}"


NOMINAL = FaultScenario(frozenset())


@dataclass(frozen=True)
class Configuration:
    """Switch setting plus, for switchless domains, source values."""

    on: frozenset[str] = frozenset()
    inputs: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, on: Iterable[str] = (), inputs: Mapping[str, str] | None = None) -> "Configuration":
        return cls(frozenset(on), tuple(sorted((inputs or {}).items())))

    @property
    def input_map(self) -> dict[str, str]:
        return dict(self.inputs)

    def to_json(self, ident: int | None = None) -> dict:
        out: dict = {}
        if ident is not None:
            out["id"] = ident
        out["on"] = sorted(self.on, key=natural_key)
        if self.inputs:
            out["inputs"] = dict(self.inputs)
        return out


@dataclass(frozen=True)
class Observation:
    readings: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, readings: Mapping[str, str]) -> "Observation":
        return cls(tuple(sorted(readings.items())))

    @property
    def reading_map(self) -> dict[str, str]:
        return dict(self.readings)


@dataclass(frozen=True)
class Diagnosis:
    delta: frozenset[str]

    def sorted(self) -> list[str]:
        return sorted(self.delta, key=natural_key)


@dataclass(frozen=True)
class SensorPlacement:
    sensors: frozenset[str] = frozenset()

    def sorted(self) -> list[str]:
        return sorted(self.sensors, key=natural_key)


def natural_key(name: str):
    """Sort key treating digit runs numerically: C2 < C10."""
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def diag_key(delta: Iterable[str]):
    return [natural_key(c) for c in sorted(delta, key=natural_key)]


def validate(system: System) -> list[str]:
    """Return every invariant violation; empty when the system is well formed."""
    problems: list[str] = []
    try:
        comps = dict(system.components)
    except Exception as exc:  # arbitrary junk still must not abort
        return [f"components not a mapping: {exc!r}"]

    for name, tname in comps.items():
        if not isinstance(name, str) or not IDENT.match(name):
            problems.append(f"bad component identifier {name!r}")
        if tname not in system.types:
            problems.append(f"component {name} has unknown type {tname!r}")
    for tname, t in system.types.items():
        if not t.states:
            problems.append(f"type {tname} has no states")
        elif t.fault_value not in t.states:
            problems.append(f"type {tname} fault value {t.fault_value!r} not a state")
        if t.default is not None and t.default not in t.states:
            problems.append(f"type {tname} default {t.default!r} not a state")
        if len(set(t.ports)) != len(t.ports):
            problems.append(f"type {tname} repeats a port name")

    seen_ports: set[tuple[str, str]] = set()
    for link in system.links:
        for end in (link.src, link.dst):
            if end not in comps:
                problems.append(f"link {link} references unknown component {end}")
        if link.port is not None and link.dst in comps and comps[link.dst] in system.types:
            t = system.types[comps[link.dst]]
            if link.port not in t.ports:
                problems.append(f"link {link} targets missing port {link.port} of {link.dst}")
            key = (link.dst, link.port)
            if key in seen_ports:
                problems.append(f"port {link.dst}.{link.port} has more than one incoming link")
            seen_ports.add(key)

    link_set = set(system.links)
    for name, sw in system.switches.items():
        if sw not in link_set:
            problems.append(f"switch {name} ({sw}) is not a declared link")

    for src, value in system.sources.items():
        if src not in comps:
            problems.append(f"source {src} is not a component")
        elif value is not None and comps[src] in system.types \
                and value not in system.types[comps[src]].states:
            problems.append(f"source {src} default {value!r} not a state")
    for label, comp in system.observables.items():
        if comp not in comps:
            problems.append(f"observable {label} reads unknown component {comp}")
    for comp in system.always_healthy:
        if comp not in comps:
            problems.append(f"assumption names unknown component {comp}")
    for group in system.healthy_groups:
        for comp in group:
            if comp not in comps:
                problems.append(f"assumption names unknown component {comp}")
    return problems
