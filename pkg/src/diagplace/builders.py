"""Programmatic builders for the shipped fixtures.

The ``.sdl`` files under ``fixtures/`` are generated from these functions by
``python3 -m diagplace.builders``; tests check that the two never drift.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .model import ComponentType, Link, SafetyConstraint, System
from .sdl import eps_type, emit_system, gate_type, gates_from_truth_table, nand_table, power_rules

INPUT = ComponentType("input", ("0", "1"), "0", (), None, faultable=False)
NAND = gate_type(nand_table())


class _Netlist:
    def __init__(self):
        self.comps: dict[str, str] = {}
        self.links: list[Link] = []
        self.sources: dict[str, str | None] = {}
        self.observables: dict[str, str] = {}

    def inp(self, name):
        self.comps[name] = "input"
        self.sources[name] = None
        self.observables[name] = name
        return name

    def nand(self, name, x, y):
        self.comps[name] = "nand"
        self.links += [Link(x, name, "in1"), Link(y, name, "in2")]
        return name

    def system(self) -> System:
        return System(types={"input": INPUT, "nand": NAND}, components=self.comps,
                      links=tuple(self.links), sources=self.sources,
                      observables=self.observables)


def _half_adder(net: _Netlist, p: str, a: str, b: str) -> tuple[str, str]:
    n1 = net.nand(f"{p}n1", a, b)
    n2 = net.nand(f"{p}n2", a, n1)
    n3 = net.nand(f"{p}n3", b, n1)
    n4 = net.nand(f"{p}n4", n2, n3)
    n5 = net.nand(f"{p}n5", n1, n1)
    return n4, n5


def _full_adder(net: _Netlist, p: str, a: str, b: str, cin: str) -> tuple[str, str]:
    n1 = net.nand(f"{p}n1", a, b)
    n2 = net.nand(f"{p}n2", a, n1)
    n3 = net.nand(f"{p}n3", b, n1)
    n4 = net.nand(f"{p}n4", n2, n3)
    n5 = net.nand(f"{p}n5", n4, cin)
    n6 = net.nand(f"{p}n6", n4, n5)
    n7 = net.nand(f"{p}n7", cin, n5)
    n8 = net.nand(f"{p}n8", n6, n7)
    n9 = net.nand(f"{p}n9", n5, n1)
    return n8, n9


def half_adder():
    net = _Netlist()
    a, b = net.inp("a"), net.inp("b")
    s, c = _half_adder(net, "", a, b)
    net.observables.update(s=s, c=c)
    return net.system(), gates_from_truth_table(nand_table()), []


def full_adder():
    net = _Netlist()
    a, b, cin = net.inp("a"), net.inp("b"), net.inp("cin")
    s, c = _full_adder(net, "", a, b, cin)
    net.observables.update(s=s, cout=c)
    return net.system(), gates_from_truth_table(nand_table()), []


def adder3():
    net = _Netlist()
    for i in range(3):
        net.inp(f"a{i}")
        net.inp(f"b{i}")
    s0, c0 = _half_adder(net, "h_", "a0", "b0")
    s1, c1 = _full_adder(net, "f1_", "a1", "b1", c0)
    s2, c2 = _full_adder(net, "f2_", "a2", "b2", c1)
    net.observables.update(s0=s0, s1=s1, s2=s2, c2=c2)
    return net.system(), gates_from_truth_table(nand_table()), []


# Small power network.  Each switch component Ci sits on a feeder: the link
# into Ci is plain and the link out of Ci is the switch named Ci.
EPS_SMALL_FEEDERS = {
    # switch: (feeding component, fed component)
    "C1": ("G1", "B2"),
    "C2": ("B1", "B3"),
    "C3": ("G3", "B4"),
    "C4": ("G4", "B1"),
    "C5": ("G2", "B1"),
    "C6": ("B6", "B3"),
    "C7": ("B6", "R2"),
    "C8": ("B1", "B2"),
    "C9": ("G4", "R2"),
    "C10": ("B6", "B4"),
}
EPS_SMALL_PLAIN = [("B2", "R1"), ("B3", "R2"), ("R1", "B6"), ("R2", "B5")]


def eps_system(types, comps, feeders, plain, sources, always_healthy=(), groups=()):
    links = []
    switches = {}
    for sw, (x, y) in feeders.items():
        links.append(Link(x, sw))
        out = Link(sw, y)
        links.append(out)
        switches[sw] = out
    links += [Link(x, y) for x, y in plain]
    return System(types=types, components=comps, links=tuple(links), switches=switches,
                  sources={s: "on" for s in sources},
                  always_healthy=frozenset(always_healthy),
                  healthy_groups=tuple(frozenset(g) for g in groups))


def eps_small():
    types = {t: eps_type(t) for t in ("generator", "switch", "bus", "rectifier")}
    comps = {}
    comps.update({f"G{i}": "generator" for i in range(1, 5)})
    comps.update({f"C{i}": "switch" for i in range(1, 11)})
    comps.update({f"B{i}": "bus" for i in range(1, 7)})
    comps.update({"R1": "rectifier", "R2": "rectifier"})
    system = eps_system(types, comps, EPS_SMALL_FEEDERS, EPS_SMALL_PLAIN,
                        [f"G{i}" for i in range(1, 5)], ("B5", "B6"),
                        (("R1", "R2"), ("G1", "G2"), ("G3", "G4")))
    system = _observe_sources(system)
    constraints = [SafetyConstraint("at_most_one_source", ("bus",), "on"),
                   SafetyConstraint("prior_health", ("generator", "rectifier"))]
    return system, power_rules(), constraints


# Larger network in four blocks.  Each block has a bus tie closed in both
# directions, which makes the block strongly connected.
EPS_LARGE_FEEDERS = {
    # left AC
    "C1": ("G1", "B1"), "C2": ("G2", "B2"), "C3": ("B1", "B2"), "C4": ("B2", "B1"),
    # right AC
    "C5": ("G3", "B3"), "C6": ("G4", "B4"), "C7": ("B3", "B4"), "C8": ("B4", "B3"),
    # DC, fed through transformer-rectifier units
    "C9": ("T1", "B5"), "C10": ("T2", "B6"), "C11": ("B5", "B6"), "C12": ("B6", "B5"),
    # essential: AC through a transformer, DC through a rectifier
    "C13": ("A1", "B7"), "C14": ("R1", "B8"), "C15": ("B7", "B8"), "C16": ("B8", "B7"),
}
EPS_LARGE_PLAIN = [("B1", "T1"), ("B3", "T2"), ("B2", "A1"), ("B4", "R1")]
EPS_LARGE_MODULES = (
    ("G1", "G2", "C1", "C2", "C3", "C4", "B1", "B2"),
    ("G3", "G4", "C5", "C6", "C7", "C8", "B3", "B4"),
    ("T1", "T2", "C9", "C10", "C11", "C12", "B5", "B6"),
    ("A1", "R1", "C13", "C14", "C15", "C16", "B7", "B8"),
)


def eps_large():
    kinds = {"G": "generator", "C": "switch", "B": "bus", "T": "tru", "A": "act",
             "R": "rectifier"}
    types = {t: eps_type(t) for t in ("generator", "switch", "bus", "tru", "act", "rectifier")}
    comps = {c: kinds[c[0]] for block in EPS_LARGE_MODULES for c in block}
    system = eps_system(types, comps, EPS_LARGE_FEEDERS, EPS_LARGE_PLAIN,
                        [f"G{i}" for i in range(1, 5)], ("B7", "B8"),
                        (("G1", "G2"), ("G3", "G4")))
    system = _observe_sources(system)
    constraints = [SafetyConstraint("at_most_one_source", ("bus",), "on"),
                   SafetyConstraint("prior_health", ("generator", "rectifier", "tru"))]
    return system, power_rules(), constraints


def _observe_sources(system: System) -> System:
    from dataclasses import replace

    return replace(system, observables={s: s for s in system.sources})


BUILDERS = {"half_adder": half_adder, "full_adder": full_adder, "adder3": adder3,
            "eps_small": eps_small, "eps_large": eps_large}

HEADERS = {
    "half_adder": "Half-adder from five NAND gates; s = n4, c = n5.",
    "full_adder": "Full-adder from nine NAND gates; s = n8, cout = n9.",
    "adder3": "3-bit ripple-carry adder: one half-adder (h_) and two full-adders (f1_, f2_).",
    "eps_small": "Small power network: generators G1-G4, switches C1-C10, buses B1-B6,\n"
                 "rectifiers R1 R2.  Switch Ci is the link leaving component Ci.\n"
                 "Generators are system inputs and carry permanent sensors.",
    "eps_large": "Larger power network in four blocks (left AC, right AC, DC, essential).\n"
                 "Each block's buses are tied in both directions.  Switch Ci is the\n"
                 "link leaving component Ci; generators carry permanent sensors.",
}


def render(name: str) -> str:
    system, rules, constraints = BUILDERS[name]()
    return emit_system(system, rules, constraints, HEADERS.get(name, ""))


def main(argv=None) -> int:
    out = Path(__file__).with_name("fixtures")
    for name in (argv or sys.argv[1:]) or BUILDERS:
        (out / f"{name}.sdl").write_text(render(name), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
