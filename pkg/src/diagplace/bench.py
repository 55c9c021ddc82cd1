"""Random power networks and the scaling harness.

Topology of ``generate_random_eps(n, seed)``:

* about n/12 generators (at least two) are the sources and are observed;
* buses (one in six a rectifier) sit in ``LAYERS`` layers below them, and each
  is fed by ``FEEDS`` switch components (fewer only in tiny networks) hanging
  off distinct components of the layer above, preferring those with the
  fewest outlets so far;
* the last layer are load buses with permanent sensors;
* switch components are assumed healthy, so the faults to isolate are in
  buses and rectifiers;
* a leftover component budget goes into extra switched cross-links from one
  layer to a deeper one, so the system has exactly n components.

All links into buses and rectifiers are switched, so closing at most one
feed per component keeps every configuration single-sourced.
"""

from __future__ import annotations

import csv
import gc
import io
import random
import statistics
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import Link, SafetyConstraint, System, validate
from .place import Placer
from .sdl import eps_type, power_rules

FEEDS = 2
LAYERS = 4


@dataclass(frozen=True)
class BenchSpec:
    n_components: int
    m_sensors: int
    k_configs: int
    instances: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("n_components", "m_sensors", "k_configs", "instances"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


def generate_random_eps(n: int, seed: int = 0) -> System:
    if n < 4:
        raise ValueError("a random power network needs at least 4 components")
    rng = random.Random(f"eps-{n}-{seed}")
    types = {t: eps_type(t) for t in ("generator", "switch", "bus", "rectifier")}
    n_gen = max(2, n // 12)
    comps: dict[str, str] = {f"G{i}": "generator" for i in range(1, n_gen + 1)}
    outdeg = {g: 0 for g in comps}
    links: list[Link] = []
    switches: dict[str, Link] = {}
    counter = {"bus": 0, "rectifier": 0, "switch": 0}

    def new(kind: str) -> str:
        counter[kind] += 1
        name = {"bus": "B", "rectifier": "R", "switch": "C"}[kind] + str(counter[kind])
        comps[name] = kind
        return name

    def feed(src: str, dst: str) -> None:
        sw = new("switch")
        links.append(Link(src, sw))
        out = Link(sw, dst)
        links.append(out)
        switches[sw] = out
        outdeg[src] += 1

    n_bus = max(1, (n - n_gen) // (1 + FEEDS))
    sizes = [n_bus // LAYERS + (1 if i < n_bus % LAYERS else 0) for i in range(LAYERS)]
    sizes = [x for x in sizes if x]
    layers: list[list[str]] = [list(comps)]
    left = n_bus
    for size in sizes:
        above = layers[-1]
        layer = []
        for _ in range(size):
            node = new("rectifier" if rng.random() < 1 / 6 else "bus")
            left -= 1
            # every bus still to come needs room for itself and one feed
            room = n - len(comps) - 2 * left
            srcs = sorted(above, key=lambda u: (outdeg[u], rng.random()))[:min(FEEDS, room)]
            for src in srcs:
                feed(src, node)
            outdeg[node] = 0
            layer.append(node)
        layers.append(layer)
    depth = {u: i for i, layer in enumerate(layers) for u in layer}
    nodes = [u for layer in layers[1:] for u in layer]
    for _ in range(n - len(comps)):
        dst = rng.choice(nodes)
        fed_by = {l.src for l in links if l.dst in switches and switches[l.dst].dst == dst}
        srcs = ([u for u in depth if depth[u] < depth[dst] and u not in fed_by]
                or [u for u in depth if depth[u] < depth[dst]])
        feed(min(srcs, key=lambda u: (outdeg[u], rng.random())), dst)

    observed = {g: g for g in layers[0]}
    observed.update({u: u for u in layers[-1]})
    system = System(types=types, components=comps, links=tuple(links), switches=switches,
                    sources={g: "on" for g in layers[0]}, observables=observed,
                    always_healthy=frozenset(switches))
    problems = validate(system)
    if problems:
        raise AssertionError(f"generator produced an invalid system: {problems}")
    return system


def bench_constraints() -> list[SafetyConstraint]:
    return [SafetyConstraint("at_most_one_source", ("bus", "rectifier"), "on")]


def time_placement(system: System, m: int, k: int, pool_size: int = 128, seed: int = 0):
    """Seconds to place exactly m sensors with at most k configurations, and the result."""
    # collector pauses land on random runs and swamp the m/k effect, as in timeit
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter()
        placer = Placer(system, power_rules(), bench_constraints(), pool_size=pool_size,
                        seed=seed)
        result = placer.place(m, k)
        elapsed = time.perf_counter() - start
    finally:
        if was_enabled:
            gc.enable()
    return elapsed, result


def run_bench(ns: Sequence[int], ms: Sequence[int], ks: Sequence[int], instances: int = 3,
              seed: int = 0, pool_size: int = 128) -> list[dict]:
    rows = []
    for n in ns:
        systems = [generate_random_eps(n, seed + i) for i in range(instances)]
        for m in ms:
            for k in ks:
                times = []
                for i, system in enumerate(systems):
                    elapsed, _ = time_placement(system, m, k, pool_size, seed + i)
                    times.append(elapsed)
                rows.append({"n": n, "m": m, "k": k,
                             "mean_runtime": statistics.fmean(times),
                             "stddev": statistics.stdev(times) if len(times) > 1 else 0.0})
    return rows


def to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "k", "mean_runtime", "stddev"])
    for r in rows:
        w.writerow([r["n"], r["m"], r["k"], f"{r['mean_runtime']:.6f}", f"{r['stddev']:.6f}"])
    return buf.getvalue()
