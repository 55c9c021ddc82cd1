"""Shared fixtures and independent oracles.

The oracles here never call into the engine: gate circuits are evaluated
gate by gate in topological order and power networks by graph reachability.
"""

from __future__ import annotations

import itertools
import random
from functools import lru_cache

import networkx as nx
import pytest

from diagplace.model import ComponentType, Link, System
from diagplace.sdl import (eps_type, gate_type, gates_from_truth_table, load_fixture,
                           nand_table, power_rules, table_from_function, xor_table)

REFERENCE_TABLE = [
    ["C2", "C4"],
    ["C1", "C3", "C5", "C7"],
    ["C1", "C8"],
    ["C2", "C5", "C8"],
    ["C3", "C5", "C6", "C8"],
    ["C5", "C6", "C7", "C8"],
    ["C4", "C9", "C10"],
    ["C3", "C7", "C9", "C10"],
    ["C2", "C6", "C7", "C9", "C10"],
    ["C1", "C5", "C6", "C7", "C9", "C10"],
]


@lru_cache(maxsize=None)
def fixture(name):
    return load_fixture(name)


@pytest.fixture
def half_adder():
    return fixture("half_adder")


@pytest.fixture
def full_adder():
    return fixture("full_adder")


@pytest.fixture
def adder3():
    return fixture("adder3")


@pytest.fixture
def eps_small():
    return fixture("eps_small")


@pytest.fixture
def eps_large():
    return fixture("eps_large")


# ---------------------------------------------------------------- gate oracle

GATE_FUNCS = {
    "nand": lambda x, y: 1 - (x & y),
    "nor": lambda x, y: 1 - (x | y),
    "xor": lambda x, y: x ^ y,
    "and": lambda x, y: x & y,
}


def gate_tables():
    return {
        "nand": nand_table(),
        "xor": xor_table(),
        "nor": table_from_function("nor", ("in1", "in2"), lambda x, y: str(1 - (int(x) | int(y)))),
        "and": table_from_function("and", ("in1", "in2"), lambda x, y: str(int(x) & int(y))),
    }


def eval_gates(system: System, inputs: dict, faulty) -> dict:
    """Value of every component, computed without the engine."""
    feed = {(l.dst, l.port): l.src for l in system.links}
    g = nx.DiGraph()
    g.add_nodes_from(system.components)
    g.add_edges_from((l.src, l.dst) for l in system.links)
    val = {}
    for c in nx.topological_sort(g):
        t = system.components[c]
        if c in faulty:
            val[c] = system.type_of(c).fault_value
        elif c in system.sources:
            val[c] = inputs[c]
        else:
            x, y = (int(val[feed[(c, p)]]) for p in ("in1", "in2"))
            val[c] = str(GATE_FUNCS[t](x, y))
    return val


# ---------------------------------------------------------------- power oracle

def eval_power(system: System, on, faulty) -> dict:
    """Reachability from healthy sources over closed switches and plain links."""
    on = set(on)
    active = nx.DiGraph()
    active.add_nodes_from(system.components)
    for l in system.links:
        sw = next((n for n, s in system.switches.items() if s == l), None)
        if sw is None or sw in on:
            if l.src not in faulty and l.dst not in faulty:
                active.add_edge(l.src, l.dst)
    powered = set()
    for s, v in system.sources.items():
        if s not in faulty and v == "on":
            powered |= {s} | nx.descendants(active, s)
    out = {}
    for c in system.components:
        if c in faulty:
            out[c] = system.type_of(c).fault_value
        else:
            out[c] = "on" if c in powered else "off"
    return out


def oracle_values(system: System, config, faulty) -> dict:
    if system.switches or all(v == "on" for v in system.sources.values()):
        return eval_power(system, config.on, faulty)
    return eval_gates(system, config.input_map, faulty)


def brute_force_minimal(system: System, config, readings: dict, admissible=None):
    """Smallest consistent fault sets over all 2^n subsets of faultable components."""
    pool = system.faultable()
    hits = []
    for k in range(len(pool) + 1):
        for combo in itertools.combinations(pool, k):
            if admissible is not None and not admissible(system, combo):
                continue
            vals = oracle_values(system, config, set(combo))
            if all(vals[system.probe(lab)] == v for lab, v in readings.items()):
                hits.append(frozenset(combo))
        if hits:
            return k, hits
    return None, []


# ---------------------------------------------------------------- random systems

def random_gate_system(rng: random.Random, max_components: int = 12):
    n_in = rng.randint(1, 3)
    n_gates = rng.randint(1, max_components - n_in)
    tables = gate_tables()
    kinds = rng.sample(sorted(tables), rng.randint(1, len(tables)))
    types = {"input": ComponentType("input", ("0", "1"), "0", (), None, faultable=False)}
    comps, links, sources, observables = {}, [], {}, {}
    names = []
    for i in range(n_in):
        name = f"x{i}"
        comps[name] = "input"
        sources[name] = None
        observables[name] = name
        names.append(name)
    for i in range(n_gates):
        kind = rng.choice(kinds)
        types[kind] = gate_type(tables[kind])
        name = f"g{i}"
        comps[name] = kind
        a, b = rng.choice(names), rng.choice(names)
        links += [Link(a, name, "in1"), Link(b, name, "in2")]
        names.append(name)
    gates = [n for n in names if n.startswith("g")]
    for g in set(rng.sample(gates, rng.randint(1, len(gates)))) | {gates[-1]}:
        observables[g] = g
    rules = [r for k in sorted(set(comps.values()) - {"input"})
             for r in gates_from_truth_table(tables[k])]
    system = System(types=types, components=comps, links=tuple(links), sources=sources,
                    observables=observables)
    return system, rules


def random_power_system(rng: random.Random, max_components: int = 12):
    """Generators, buses and switch components in a random DAG."""
    types = {t: eps_type(t) for t in ("generator", "bus", "switch")}
    n_gen = rng.randint(1, 2)
    comps = {f"G{i}": "generator" for i in range(1, n_gen + 1)}
    links, switches = [], {}
    upstream = list(comps)
    n_sw = n_bus = 0
    while len(comps) < max_components - 1:
        n_bus += 1
        bus = f"B{n_bus}"
        for src in rng.sample(upstream, min(len(upstream), rng.randint(1, 2))):
            if len(comps) >= max_components - 1:
                break
            if rng.random() < 0.7:
                n_sw += 1
                sw = f"C{n_sw}"
                comps[sw] = "switch"
                links.append(Link(src, sw))
                switches[sw] = Link(sw, bus)
                links.append(switches[sw])
            else:
                links.append(Link(src, bus))
        comps[bus] = "bus"
        upstream.append(bus)
        if rng.random() < 0.3:
            break
    observed = {g: g for g in comps if g.startswith("G")}
    for b in rng.sample([c for c in comps if c.startswith("B")], 1):
        observed[b] = b
    system = System(types=types, components=comps, links=tuple(links), switches=switches,
                    sources={f"G{i}": "on" for i in range(1, n_gen + 1)},
                    observables=observed)
    return system, power_rules()


def random_system(seed: int):
    rng = random.Random(seed)
    if rng.random() < 0.5:
        return random_gate_system(rng)
    return random_power_system(rng)
