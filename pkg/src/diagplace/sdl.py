"""System-description language: parser, emitter and built-in rule libraries.

A ``.sdl`` file is line oriented.  Section headers are bare upper-case words;
``#`` starts a comment.  Example::

    COMPONENTS
    type nand states 0 1 fault 0 ports in1 in2
    type input states 0 1 fault 0 rigid
    component a b : input
    component n1 n2 : nand
    LINKS
    link a.out -> n1.in1
    SOURCES
    source a
    OBSERVABLES
    observe a
    observe s = n2
    RULES
    rule nand : in1 is 1, in2 is 1 => 0
    SAFETY
    always B5 B6 = on
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterator, NamedTuple, Sequence

from .model import (IDENT, NEIGHBOUR_SELECTORS, ComponentType, Condition, Link,
                    RuleSchema, SafetyConstraint, System, validate)

SECTIONS = ("COMPONENTS", "LINKS", "SWITCHES", "SOURCES", "OBSERVABLES",
            "ASSUMPTIONS", "RULES", "SAFETY")
VALUE = re.compile(r"[A-Za-z0-9_]+\Z")


class SDLError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)


class SDLValidationError(SDLError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid system: " + "; ".join(problems))


class ParsedSystem(NamedTuple):
    system: System
    rules: list[RuleSchema]
    constraints: list[SafetyConstraint]


@dataclass(frozen=True)
class TruthTable:
    type_name: str
    ports: tuple[str, ...]
    rows: tuple[tuple[tuple[str, ...], str], ...]
    states: tuple[str, ...] = ("0", "1")


# ---------------------------------------------------------------- parsing

class _Line:
    def __init__(self, number: int, text: str):
        self.number = number
        self.text = text
        self.tokens: list[tuple[str, int]] = [
            (m.group(), m.start() + 1) for m in re.finditer(r"->|=>|[^\s,:=]+|[,:=]", text)]

    def error(self, message: str, index: int | None = None) -> SDLError:
        col = self.tokens[index][1] if index is not None and index < len(self.tokens) else 1
        return SDLError(message, self.number, col)


def _lines(text: str) -> Iterator[_Line]:
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if body.strip():
            yield _Line(number, body)


def _ident(line: _Line, i: int) -> str:
    if i >= len(line.tokens):
        raise line.error("unexpected end of line", i)
    tok = line.tokens[i][0]
    if not IDENT.match(tok):
        raise line.error(f"bad identifier {tok!r}", i)
    return tok


def _value(line: _Line, i: int) -> str:
    if i >= len(line.tokens):
        raise line.error("unexpected end of line", i)
    tok = line.tokens[i][0]
    if not VALUE.match(tok):
        raise line.error(f"bad value {tok!r}", i)
    return tok


def _expect(line: _Line, i: int, tok: str) -> None:
    if i >= len(line.tokens) or line.tokens[i][0] != tok:
        raise line.error(f"expected {tok!r}", i)


def _endpoint(line: _Line, i: int) -> tuple[str, str | None]:
    tok = line.tokens[i][0] if i < len(line.tokens) else ""
    name, _, port = tok.partition(".")
    if not IDENT.match(name) or (port and not IDENT.match(port)):
        raise line.error(f"bad link endpoint {tok!r}", i)
    return name, port or None


def _parse_link(line: _Line, start: int) -> Link:
    src, sport = _endpoint(line, start)
    _expect(line, start + 1, "->")
    dst, dport = _endpoint(line, start + 2)
    if sport not in (None, "out"):
        raise line.error("links leave a component through its output 'out'", start)
    if len(line.tokens) > start + 3:
        raise line.error("trailing tokens after link", start + 3)
    return Link(src, dst, dport)


def _parse_condition(line: _Line, tok: str, i: int) -> Condition:
    types, sep, states = tok.rpartition("/")
    if not sep:
        types, states = "", tok

    def split(part: str, pattern) -> frozenset[str]:
        if part in ("", "*"):
            return frozenset()
        items = part.split("|")
        for item in items:
            if not pattern.match(item):
                raise line.error(f"bad condition {tok!r}", i)
        return frozenset(items)

    cond = Condition(split(types, IDENT), split(states, VALUE))
    if not cond.types and not cond.states:
        raise line.error("condition constrains neither type nor state", i)
    return cond


def _parse_rule(line: _Line, types: dict[str, ComponentType]) -> RuleSchema:
    toks = [t for t, _ in line.tokens]
    subject = toks[1] if len(toks) > 1 else ""
    if subject != "*":
        subject = _ident(line, 1)
        if subject not in types:
            raise line.error(f"unknown type {subject!r}", 1)
    _expect(line, 2, ":")
    try:
        arrow = toks.index("=>")
    except ValueError:
        raise line.error("rule needs '=>'", len(toks)) from None
    conj: list[tuple[str, Condition]] = []
    disj: list[tuple[str, Condition]] = []
    i = 3
    while i < arrow:
        some = toks[i] == "some"
        if some:
            i += 1
        sel = toks[i] if i < arrow else ""
        if sel not in NEIGHBOUR_SELECTORS and not IDENT.match(sel):
            raise line.error(f"bad selector {sel!r}", i)
        _expect(line, i + 1, "is")
        if i + 2 >= arrow:
            raise line.error("missing condition", i + 2)
        cond = _parse_condition(line, toks[i + 2], i + 2)
        (disj if some else conj).append((sel, cond))
        i += 3
        if i < arrow:
            _expect(line, i, ",")
            i += 1
    if arrow + 1 >= len(toks):
        raise line.error("rule needs consequent states", arrow + 1)
    if len(toks) > arrow + 2:
        raise line.error("separate consequent states with '|' and no spaces", arrow + 1)
    states = frozenset(s for tok in toks[arrow + 1:] for s in tok.split("|"))
    for s in states:
        if not VALUE.match(s):
            raise line.error(f"bad consequent state {s!r}", arrow + 1)
    if subject != "*" and not states <= set(types[subject].states):
        raise line.error(f"consequent {sorted(states)} not states of {subject}", arrow + 1)
    if {s for s, _ in conj} & {s for s, _ in disj}:
        raise line.error("a selector is used both conjunctively and disjunctively", 3)
    return RuleSchema(subject, tuple(conj), tuple(disj), states)


def _parse_type(line: _Line) -> ComponentType:
    toks = [t for t, _ in line.tokens]
    name = _ident(line, 1)
    fields: dict[str, list[str]] = {}
    key = None
    flags = set()
    for i in range(2, len(toks)):
        t = toks[i]
        if t in ("states", "fault", "default", "ports"):
            key = t
            if key in fields:
                raise line.error(f"repeated {key!r}", i)
            fields[key] = []
        elif t == "rigid":
            flags.add(t)
            key = None
        elif key is None:
            raise line.error(f"unexpected token {t!r}", i)
        else:
            (fields[key].append(_ident(line, i)) if key == "ports"
             else fields[key].append(_value(line, i)))
    if not fields.get("states"):
        raise line.error("type needs states", len(toks))
    if len(fields.get("fault", [])) != 1:
        raise line.error("type needs exactly one fault value", len(toks))
    if len(fields.get("default", [None])) != 1:
        raise line.error("type takes one default value", len(toks))
    return ComponentType(name=name, states=tuple(fields["states"]),
                         fault_value=fields["fault"][0],
                         ports=tuple(fields.get("ports", ())),
                         default=fields.get("default", [None])[0],
                         faultable="rigid" not in flags)


def parse_system(text: str) -> ParsedSystem:
    """Parse SDL text into a validated system, its rules and safety constraints."""
    types: dict[str, ComponentType] = {}
    comps: dict[str, str] = {}
    links: list[Link] = []
    switches: dict[str, Link] = {}
    sources: dict[str, str | None] = {}
    observables: dict[str, str] = {}
    healthy: set[str] = set()
    groups: list[frozenset[str]] = []
    rules: list[RuleSchema] = []
    constraints: list[SafetyConstraint] = []
    section = None
    deferred_rules: list[_Line] = []

    for line in _lines(text):
        head = line.tokens[0][0]
        if head in SECTIONS and len(line.tokens) == 1:
            section = head
            continue
        if section is None:
            raise line.error("statement outside any section", 0)
        toks = [t for t, _ in line.tokens]

        if section == "COMPONENTS":
            if head == "type":
                t = _parse_type(line)
                if t.name in types:
                    raise line.error(f"type {t.name} declared twice", 1)
                types[t.name] = t
            elif head == "component":
                try:
                    colon = toks.index(":")
                except ValueError:
                    raise line.error("component line needs ': type'", len(toks)) from None
                tname = _ident(line, colon + 1)
                if tname not in types:
                    raise line.error(f"unknown type {tname!r}", colon + 1)
                if colon == 1 or len(toks) != colon + 2:
                    raise line.error("expected 'component NAME... : TYPE'", colon)
                for i in range(1, colon):
                    name = _ident(line, i)
                    if name in comps:
                        raise line.error(f"component {name} declared twice", i)
                    comps[name] = tname
            else:
                raise line.error(f"unknown statement {head!r}", 0)
        elif section == "LINKS":
            if head != "link":
                raise line.error(f"unknown statement {head!r}", 0)
            links.append(_parse_link(line, 1))
        elif section == "SWITCHES":
            if head != "switch":
                raise line.error(f"unknown statement {head!r}", 0)
            name = _ident(line, 1)
            _expect(line, 2, ":")
            if name in switches:
                raise line.error(f"switch {name} declared twice", 1)
            switches[name] = _parse_link(line, 3)
        elif section == "SOURCES":
            if head != "source":
                raise line.error(f"unknown statement {head!r}", 0)
            name = _ident(line, 1)
            if len(toks) == 2:
                sources[name] = None
            else:
                _expect(line, 2, "=")
                sources[name] = _value(line, 3)
                if len(toks) > 4:
                    raise line.error("trailing tokens", 4)
        elif section == "OBSERVABLES":
            if head != "observe":
                raise line.error(f"unknown statement {head!r}", 0)
            if "=" in toks:
                _expect(line, 2, "=")
                if len(toks) != 4:
                    raise line.error("expected 'observe LABEL = COMPONENT'", 0)
                observables[_ident(line, 1)] = _ident(line, 3)
            else:
                for i in range(1, len(toks)):
                    name = _ident(line, i)
                    observables[name] = name
        elif section == "ASSUMPTIONS":
            names = [_ident(line, i) for i in range(1, len(toks))]
            if not names:
                raise line.error("assumption names no components", 1)
            if head == "healthy":
                healthy.update(names)
            elif head == "oneof":
                groups.append(frozenset(names))
            else:
                raise line.error(f"unknown assumption {head!r}", 0)
        elif section == "RULES":
            if head != "rule":
                raise line.error(f"unknown statement {head!r}", 0)
            deferred_rules.append(line)
        elif section == "SAFETY":
            constraints.append(_parse_safety(line))

    if not comps:
        raise SDLError("no components")
    for line in deferred_rules:
        rules.append(_parse_rule(line, types))

    system = System(types=types, components=comps, links=tuple(links), switches=switches,
                    sources=sources, observables=observables,
                    always_healthy=frozenset(healthy), healthy_groups=tuple(groups))
    problems = validate(system) + check_constraints(system, constraints)
    if problems:
        raise SDLValidationError(problems)
    return ParsedSystem(system, rules, constraints)


def _parse_safety(line: _Line) -> SafetyConstraint:
    toks = [t for t, _ in line.tokens]
    kind = toks[0]
    if kind not in SafetyConstraint.KINDS:
        raise line.error(f"unknown safety constraint {kind!r}", 0)
    value = None
    end = len(toks)
    if "=" in toks:
        end = toks.index("=")
        if end != len(toks) - 2:
            raise line.error("expected '= VALUE' at end", end)
        value = _value(line, end + 1)
    targets = tuple(_ident(line, i) for i in range(1, end))
    if not targets:
        raise line.error("constraint names nothing", 1)
    if kind in ("at_most_one_source", "always") and value is None:
        raise line.error(f"{kind} needs '= VALUE'", len(toks))
    if kind == "prior_health" and value is not None:
        raise line.error("prior_health takes no value", end)
    return SafetyConstraint(kind, targets, value)


def check_constraints(system: System, constraints: Sequence[SafetyConstraint]) -> list[str]:
    problems = []
    for c in constraints:
        pool = system.components if c.kind == "always" else system.types
        for t in c.targets:
            if t not in pool:
                problems.append(f"safety constraint {c.kind} names unknown {t}")
    return problems


# ---------------------------------------------------------------- emitting

def _cond_text(cond: Condition) -> str:
    states = "|".join(sorted(cond.states)) if cond.states else "*"
    if cond.types:
        return "|".join(sorted(cond.types)) + "/" + states
    return states


def rule_text(rule: RuleSchema) -> str:
    guards = [f"{sel} is {_cond_text(c)}" for sel, c in rule.conj_guards]
    guards += [f"some {sel} is {_cond_text(c)}" for sel, c in rule.disj_guards]
    return (f"rule {rule.subject_type} : {', '.join(guards)}"
            f"{' ' if guards else ''}=> {'|'.join(sorted(rule.consequent_states))}")


def _type_text(t: ComponentType) -> str:
    parts = [f"type {t.name} states {' '.join(t.states)} fault {t.fault_value}"]
    if t.default is not None:
        parts.append(f"default {t.default}")
    if t.ports:
        parts.append(f"ports {' '.join(t.ports)}")
    if not t.faultable:
        parts.append("rigid")
    return " ".join(parts)


def emit_system(system: System, rules: Sequence[RuleSchema] = (),
                constraints: Sequence[SafetyConstraint] = (), header: str = "") -> str:
    out: list[str] = [f"# {h}" for h in header.splitlines()]
    out.append("COMPONENTS")
    out += [_type_text(t) for t in system.types.values()]
    run: list[str] = []
    run_type = None
    for name, tname in list(system.components.items()) + [("", None)]:
        if tname != run_type and run:
            out.append(f"component {' '.join(run)} : {run_type}")
            run = []
        run_type = tname
        run.append(name)
    if system.links:
        out.append("LINKS")
        out += [f"link {l}" for l in system.links]
    if system.switches:
        out.append("SWITCHES")
        out += [f"switch {n} : {l}" for n, l in system.switches.items()]
    if system.sources:
        out.append("SOURCES")
        out += [f"source {s}" if v is None else f"source {s} = {v}"
                for s, v in system.sources.items()]
    if system.observables:
        out.append("OBSERVABLES")
        plain = [lab for lab, c in system.observables.items() if lab == c]
        if plain:
            out.append("observe " + " ".join(plain))
        out += [f"observe {lab} = {c}" for lab, c in system.observables.items() if lab != c]
    if system.always_healthy or system.healthy_groups:
        out.append("ASSUMPTIONS")
        if system.always_healthy:
            out.append("healthy " + " ".join(sorted(system.always_healthy)))
        out += ["oneof " + " ".join(sorted(g)) for g in system.healthy_groups]
    if rules:
        out.append("RULES")
        out += [rule_text(r) for r in rules]
    if constraints:
        out.append("SAFETY")
        for c in constraints:
            tail = f" = {c.value}" if c.value is not None else ""
            out.append(f"{c.kind} {' '.join(c.targets)}{tail}")
    return "\n".join(out) + "\n"


def system_to_json(system: System) -> str:
    doc = {
        "types": {n: {"states": list(t.states), "fault": t.fault_value,
                      "default": t.default_value, "ports": list(t.ports),
                      "faultable": t.faultable}
                  for n, t in system.types.items()},
        "components": dict(system.components),
        "links": [{"src": l.src, "dst": l.dst, "port": l.port} for l in system.links],
        "switches": {n: [l.src, l.dst] for n, l in system.switches.items()},
        "sources": dict(system.sources),
        "observables": dict(system.observables),
        "always_healthy": sorted(system.always_healthy),
        "healthy_groups": [sorted(g) for g in system.healthy_groups],
    }
    return json.dumps(doc, sort_keys=True, indent=2)


# ---------------------------------------------------------------- libraries

def gates_from_truth_table(tt: TruthTable) -> list[RuleSchema]:
    """One schema per row: each port bound to the row's input value."""
    arity = len(tt.ports)
    inputs = [row for row, _ in tt.rows]
    if len(set(inputs)) != len(inputs):
        raise ValueError(f"truth table {tt.type_name} repeats an input row")
    if len(inputs) != len(tt.states) ** arity or any(
            len(r) != arity or not set(r) <= set(tt.states) for r in inputs):
        raise ValueError(f"truth table {tt.type_name} is not exhaustive")
    schemas = []
    for row, out in tt.rows:
        guards = tuple((p, Condition(states=frozenset([v]))) for p, v in zip(tt.ports, row))
        schemas.append(RuleSchema(tt.type_name, guards, (), frozenset([out])))
    return schemas


def table_from_function(name: str, ports: Sequence[str], fn, states=("0", "1")) -> TruthTable:
    import itertools

    rows = tuple((row, fn(*row)) for row in itertools.product(states, repeat=len(ports)))
    return TruthTable(name, tuple(ports), rows, tuple(states))


def nand_table() -> TruthTable:
    return table_from_function("nand", ("in1", "in2"),
                               lambda a, b: "0" if a == b == "1" else "1")


def xor_table() -> TruthTable:
    return table_from_function("xor", ("in1", "in2"), lambda a, b: "1" if a != b else "0")


def identity_table(name: str = "buf") -> TruthTable:
    return table_from_function(name, ("in1",), lambda a: a)


def gate_type(tt: TruthTable) -> ComponentType:
    return ComponentType(tt.type_name, tt.states, "0", tt.ports)


EPS_STATES = ("off", "on", "fault_off", "fault_on")


def eps_type(name: str) -> ComponentType:
    """Four-state power component: healthy or faulty, powered or not.

    A faulty component cannot carry power, so it is pinned to ``fault_off``;
    a sensor on it therefore also reports its health.
    """
    return ComponentType(name, EPS_STATES, "fault_off", (), "off")


def power_rules(powered: str = "on") -> list[RuleSchema]:
    """Power crosses a closed switched link, or any switchless link."""
    cond = Condition(states=frozenset([powered]))
    return [RuleSchema("*", (), (("~switched", cond),), frozenset([powered])),
            RuleSchema("*", (), (("~plain", cond),), frozenset([powered]))]


# ---------------------------------------------------------------- fixtures

FIXTURES = ("half_adder", "full_adder", "adder3", "eps_small", "eps_large")


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; have {', '.join(FIXTURES)}")
    return resources.files("diagplace.fixtures").joinpath(f"{name}.sdl").read_text("utf-8")


def load_fixture(name: str) -> ParsedSystem:
    return parse_system(fixture_text(name))


def load(path) -> ParsedSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())
