"""Safety checking, configuration synthesis and sensor placement.

The search works on a precomputed reading tensor ``A[config, scenario, atom]``
holding the value code of every atom in every candidate configuration under
the healthy system (scenario 0) and each single-fault scenario.  A sensor set
plus a configuration schedule is sound when the rows of the tensor restricted
to those probes and configurations are pairwise distinct.

Placement proceeds in three stages for each sensor count m:

1. hitting-set search over sensor sets, using the relaxation "some candidate
   configuration tells this pair apart at one of the sensors";
2. a cover search choosing at most k configurations that separate every
   pair for that sensor set (greedy first, then exhaustive);
3. certification by re-simulating every scenario through active diagnosis.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .diagnose import (active_trace, admissible, candidates, compile_program,
                       expected_observations, single_fault_runs)
from .engine import Program
from .model import (NOMINAL, Configuration, FaultScenario, Observation, SafetyConstraint,
                    SensorPlacement, System, natural_key)

EXHAUSTIVE_SWITCHES = 14
EXHAUSTIVE_INPUTS = 4096


@dataclass(frozen=True)
class Unsat:
    """No answer within the budget.  ``exhaustive`` is False when the
    configuration pool was sampled, so the claim is relative to that pool."""

    reason: str
    exhaustive: bool = True

    def __bool__(self) -> bool:
        return False

    def to_json(self) -> dict:
        return {"unsat": True, "reason": self.reason, "exhaustive": self.exhaustive}


@dataclass(frozen=True)
class ScenarioSpace:
    scenarios: tuple[FaultScenario, ...]

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)


@dataclass(frozen=True)
class PlacementResult:
    sensors: SensorPlacement
    configurations: tuple[Configuration, ...]
    certified: bool
    exhaustive: bool = True

    def to_json(self) -> dict:
        return {"sensors": self.sensors.sorted(),
                "configurations": [c.to_json(i + 1) for i, c in enumerate(self.configurations)],
                "certified": self.certified}


@dataclass
class Certificate:
    ok: bool
    confused: list[tuple[str, str]] = field(default_factory=list)
    unsafe: list[tuple[int, str]] = field(default_factory=list)
    misdiagnosed: list[tuple[str, list[str]]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def enumerate_scenarios(system: System, env_assumptions: Iterable[str] | None = None) -> ScenarioSpace:
    """Single-fault scenarios, one per faultable component.

    ``env_assumptions`` optionally adds always-healthy components on top of
    those the system declares.  Groups of which one member is always healthy
    exclude nothing when only one component fails.
    """
    extra = set(env_assumptions or ())
    return ScenarioSpace(tuple(FaultScenario(frozenset([c])) for c in candidates(system)
                               if c not in extra and admissible(system, [c])))


# ---------------------------------------------------------------- safety

def _active_in_links(system: System, comp: str, config: Configuration):
    for link in system.in_links(comp):
        sw = system.switch_of(link)
        if sw is None or sw in config.on:
            yield link


def adjoining(system: System, switch: str) -> set[str]:
    """Components a switch touches: its link's ends and, when the switch is
    itself a component, that component's neighbours."""
    link = system.switches[switch]
    out = {link.src, link.dst}
    if switch in system.components:
        out |= {l.src for l in system.in_links(switch)}
        out |= {l.dst for l in system.out_links(switch)}
    return out


def guarded_components(system: System, constraints: Sequence[SafetyConstraint],
                       switch: str) -> frozenset[str]:
    """Components whose health must be established before ``switch`` closes.

    A component with a permanent sensor on it is checked from the start.
    """
    types = {t for c in constraints if c.kind == "prior_health" for t in c.targets}
    if not types:
        return frozenset()
    seen = set(observed_atoms(system))
    return frozenset(x for x in adjoining(system, switch)
                     if system.components[x] in types and admissible(system, [x])
                     and system.type_of(x).faultable and x not in seen)


def _state_violations(system: System, constraints, config: Configuration,
                      value_of) -> list[str]:
    problems = []
    for c in constraints:
        if c.kind == "at_most_one_source":
            for comp, tname in system.components.items():
                if tname not in c.targets:
                    continue
                feeds = [l.src for l in _active_in_links(system, comp, config)
                         if value_of(l.src) == c.value]
                if len(feeds) > 1:
                    problems.append(f"{comp} fed {c.value} by {', '.join(sorted(feeds))}")
        elif c.kind == "always":
            for comp in c.targets:
                if value_of(comp) != c.value:
                    problems.append(f"{comp} is not {c.value}")
    return problems


def safety_violations(system: System, constraints: Sequence[SafetyConstraint],
                      config: Configuration, health=frozenset(), rules=None,
                      inputs: Mapping[str, str] | None = None) -> list[str]:
    from .sdl import power_rules

    faulty = health.faulty if hasattr(health, "faulty") else frozenset(health)
    program = compile_program(system, power_rules() if rules is None else rules)
    res = program.run([faulty], config, inputs)
    problems = _state_violations(system, constraints, config, lambda a: res.value(a, 0))
    for sw in sorted(config.on, key=natural_key):
        if sw not in system.switches:
            problems.append(f"{sw} is not a switch")
            continue
        bad = guarded_components(system, constraints, sw) & faulty
        if bad:
            problems.append(f"switch {sw} closed next to faulty {', '.join(sorted(bad))}")
    return problems


def check_safety(system: System, constraints: Sequence[SafetyConstraint],
                 config: Configuration, health=frozenset(), rules=None,
                 inputs: Mapping[str, str] | None = None) -> bool:
    """True iff ``config`` meets every constraint under ``health``.

    ``rules`` defaults to the power-propagation schemas.
    """
    return not safety_violations(system, constraints, config, health, rules, inputs)


# ---------------------------------------------------------------- readings

def _seeded(seed):
    return random.Random(seed)


def config_pool(system: System, pool_size: int = 256, seed: int = 0) -> tuple[list[Configuration], bool]:
    """Candidate configurations and whether they are all of them.

    Small switch sets are enumerated completely, ordered by switch count.
    Larger ones are sampled: per fed component at most one switched feed is
    closed, so sampled configurations rarely double-feed anything.
    """
    switches = sorted(system.switches, key=natural_key)
    if switches:
        if len(switches) <= EXHAUSTIVE_SWITCHES:
            subsets = itertools.chain.from_iterable(
                itertools.combinations(switches, r) for r in range(len(switches) + 1))
            return [Configuration.of(s) for s in subsets], True
        rng = _seeded(seed)
        by_dst: dict[str, list[str]] = {}
        for sw in switches:
            by_dst.setdefault(system.switches[sw].dst, []).append(sw)
        groups = [by_dst[d] for d in sorted(by_dst, key=natural_key)]
        seen = {frozenset()}
        pool = [Configuration()]
        for _ in range(pool_size * 20):
            if len(pool) >= pool_size:
                break
            density = rng.uniform(0.2, 0.9)
            on = frozenset(rng.choice(g) for g in groups if rng.random() < density)
            if on not in seen:
                seen.add(on)
                pool.append(Configuration(on))
        pool.sort(key=lambda c: (len(c.on), sorted(c.on, key=natural_key)))
        return pool, False

    # sources with a fixed value are not inputs the schedule may choose
    free = [s for s in sorted(system.sources, key=natural_key) if system.sources[s] is None]
    domains = [system.type_of(s).states for s in free]
    total = 1
    for d in domains:
        total *= len(d)
    if total <= EXHAUSTIVE_INPUTS:
        return [Configuration.of((), dict(zip(free, combo)))
                for combo in itertools.product(*domains)], True
    rng = _seeded(seed)
    seen = set()
    pool = []
    while len(pool) < pool_size:
        combo = tuple(rng.choice(d) for d in domains)
        if combo not in seen:
            seen.add(combo)
            pool.append(Configuration.of((), dict(zip(free, combo))))
    return pool, False


class Readings:
    """Simulated probe values for every pool configuration and scenario."""

    def __init__(self, system: System, program: Program, scenarios: ScenarioSpace,
                 configs: Sequence[Configuration], constraints: Sequence[SafetyConstraint] = ()):
        self.system = system
        self.scenarios = scenarios
        self.atoms = list(system.components)
        self.index = {a: i for i, a in enumerate(self.atoms)}
        values = sorted({v for t in system.types.values() for v in t.states})
        self.code = {v: i for i, v in enumerate(values)}
        batch = [NOMINAL.faulty] + [s.faulty for s in scenarios]
        kept: list[Configuration] = []
        tensors = []
        self.unsafe: list[tuple[Configuration, list[str]]] = []
        for cfg in configs:
            res = program.run(batch, cfg)
            problems = _state_violations(system, constraints, cfg, lambda a: res.value(a, 0))
            if problems:
                self.unsafe.append((cfg, problems))
                continue
            kept.append(cfg)
            tensors.append(res.codes(self.atoms, self.code))
        self.configs = kept
        self.A = (np.stack(tensors) if tensors
                  else np.zeros((0, len(batch), len(self.atoms)), dtype=np.int16))
        self.guards = [frozenset().union(*[guarded_components(system, constraints, sw)
                                            for sw in cfg.on]) if cfg.on else frozenset()
                       for cfg in kept]

    @property
    def rows(self) -> int:
        return self.A.shape[1]

    def labels(self, columns: np.ndarray) -> np.ndarray:
        """Row partition of a ``[rows, *]`` matrix as integer class ids."""
        if columns.shape[1] == 0:
            return np.zeros(columns.shape[0], dtype=np.int64)
        return join(*columns.T)

    def probe_columns(self, probes: Sequence[str]) -> list[int]:
        return [self.index[p] for p in probes]

    def config_labels(self, c: int, probes: Sequence[str]) -> np.ndarray:
        return self.labels(self.A[c][:, self.probe_columns(probes)])

    def all_config_labels(self, probes: Sequence[str]) -> np.ndarray:
        """``config_labels`` for every configuration at once, shape [configs, rows]."""
        out = np.zeros(self.A.shape[:2], dtype=np.int64)
        radix = len(self.code)
        for col in self.probe_columns(probes):
            out = out * radix + self.A[:, :, col]
            if out.size and int(out.max()) >= 1 << 40:
                out = _dense_rank(out)
        return _first_seen(out) if out.size else out

    def sensor_labels(self, probe: str) -> np.ndarray:
        """Partition of scenarios by this probe across the whole pool."""
        rows = self.A[:, :, self.index[probe]].T
        if rows.shape[1] == 0:
            return np.zeros(rows.shape[0], dtype=np.int64)
        return np.unique(rows, axis=0, return_inverse=True)[1].reshape(-1).astype(np.int64)


def join(*labels: np.ndarray) -> np.ndarray:
    if not labels:
        raise ValueError("nothing to join")
    out = np.asarray(labels[0], dtype=np.int64)
    if len(labels) == 1:
        return out
    for lab in labels[1:]:
        lab = np.asarray(lab, dtype=np.int64)
        _, out = np.unique(out * (int(lab.max()) + 1) + lab, return_inverse=True)
    return out.reshape(-1)


def _dense_rank(values: np.ndarray) -> np.ndarray:
    """Per-row ranks of distinct values, so each row's labels are 0..d-1."""
    order = np.argsort(values, axis=1, kind="stable")
    ordered = np.take_along_axis(values, order, axis=1)
    step = np.zeros(values.shape, dtype=np.int64)
    step[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    ranks = np.empty_like(step)
    np.put_along_axis(ranks, order, np.cumsum(step, axis=1), axis=1)
    return ranks


def _first_seen(values: np.ndarray) -> np.ndarray:
    """Per-row labels numbered by first occurrence, a canonical form of the partition."""
    order = np.argsort(values, axis=1, kind="stable")
    ordered = np.take_along_axis(values, order, axis=1)
    start = np.ones(values.shape, dtype=bool)
    start[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    # position of each group's first member, carried along the group
    cols = np.broadcast_to(np.arange(values.shape[1]), values.shape)
    lead = np.maximum.accumulate(np.where(start, cols, 0), axis=1)
    group_first = np.take_along_axis(order, lead, axis=1)
    first = np.empty_like(order)
    np.put_along_axis(first, order, group_first, axis=1)
    return _dense_rank(first)


def injective(labels: np.ndarray) -> bool:
    return len(np.unique(labels)) == len(labels)


def observed_atoms(system: System) -> list[str]:
    return sorted({system.probe(l) for l in system.observables}, key=natural_key)


# ---------------------------------------------------------------- cover search

@dataclass(eq=False)
class _Option:
    index: int
    labels: np.ndarray
    guards: frozenset[str]
    detects: frozenset[str]
    size: int


class CoverSearch:
    """Choose at most k configurations that isolate every target row.

    Rows are the healthy case (row 0) and the single-fault scenarios.  With
    no ``targets`` every row must end up with a signature of its own.
    ``base`` and ``detected`` describe configurations already scheduled.
    """

    def __init__(self, readings: Readings, probes: Sequence[str], node_limit: int | None = None,
                 targets: np.ndarray | None = None, base: np.ndarray | None = None,
                 detected: Iterable[str] = ()):
        self.r = readings
        self.probes = list(probes)
        self.node_limit = node_limit
        self.nodes = 0
        self.targets = (np.ones(readings.rows, dtype=bool) if targets is None
                        else np.asarray(targets, dtype=bool))
        self.base = np.zeros(readings.rows, dtype=np.int64) if base is None else base
        self.detected0 = frozenset(detected)
        names = ["~nominal"] + [next(iter(s.faulty)) for s in readings.scenarios]
        self.names = names
        seen: set = set()
        options: list[_Option] = []
        all_labels = readings.all_config_labels(self.probes)
        for c in range(len(readings.configs)):
            lab = all_labels[c]
            detects = frozenset(names[i + 1] for i in np.flatnonzero(lab[1:] != lab[0]))
            key = (lab.tobytes(), readings.guards[c])
            if key in seen:
                continue
            seen.add(key)
            options.append(_Option(c, lab, readings.guards[c], detects,
                                   len(readings.configs[c].on)))
        self.options = options

    def isolated(self, labels: np.ndarray) -> int:
        counts = np.bincount(labels)
        return int(np.sum((counts[labels] == 1) & self.targets))

    def done(self, labels: np.ndarray) -> bool:
        return self.isolated(labels) == int(self.targets.sum())

    def _first_pair(self, labels: np.ndarray) -> tuple[int, int]:
        counts = np.bincount(labels)
        for i in np.flatnonzero(self.targets & (counts[labels] > 1)):
            j = next(int(x) for x in np.flatnonzero(labels == labels[i]) if x != i)
            return int(i), j
        raise ValueError("every target is isolated")

    def greedy(self, k: int) -> list[_Option] | None:
        labels = self.base
        chosen: list[_Option] = []
        detected = set(self.detected0)
        while not self.done(labels):
            if len(chosen) >= k:
                return None
            best = None
            best_score = None
            now = (self.isolated(labels), len(np.unique(labels)))
            for o in self.options:
                if any(o is c for c in chosen) or not o.guards <= detected:
                    continue
                joint = join(labels, o.labels)
                key = (self.isolated(joint), len(np.unique(joint)), -o.size)
                if best_score is None or key > best_score:
                    best, best_score = o, key
            if best is None or best_score[:2] == now:
                unlock = [o for o in self.options
                          if not any(o is c for c in chosen) and o.guards <= detected
                          and o.detects - detected]
                if not unlock:
                    return None
                best = max(unlock, key=lambda o: (len(o.detects - detected), -o.size))
            chosen.append(best)
            detected |= best.detects
            labels = join(labels, best.labels)
        return chosen

    def _reachable(self, labels: np.ndarray, detected: set[str],
                   skip: set[int]) -> bool:
        """Whether every option that can ever become eligible could finish the job."""
        detected = set(detected)
        usable: list[_Option] = []
        rest = [o for o in self.options if id(o) not in skip]
        while True:
            ready = [o for o in rest if o.guards <= detected]
            if not ready:
                break
            usable += ready
            rest = [o for o in rest if not o.guards <= detected]
            for o in ready:
                detected |= o.detects
        return self.done(join(labels, *[o.labels for o in usable]))

    def exact(self, k: int) -> list[_Option] | None:
        """Depth-first search over schedules in execution order.

        Each step takes an eligible option that either separates the first
        confused target pair or detects something new.  Any schedule can be
        reordered into that shape, because an option that does neither can be
        postponed without losing eligibility.
        """
        failed: dict[tuple, int] = {}

        def dfs(chosen: list[_Option], labels: np.ndarray, detected: set[str]):
            self.nodes += 1
            if self.node_limit is not None and self.nodes > self.node_limit:
                raise _Budget()
            if self.done(labels):
                return chosen
            left = k - len(chosen)
            if left <= 0:
                return None
            key = (tuple(_canonical(labels)), frozenset(detected))
            if failed.get(key, -1) >= left:
                return None
            ids = {id(o) for o in chosen}
            if not self._reachable(labels, detected, ids):
                failed[key] = k
                return None
            i, j = self._first_pair(labels)
            split, unlock = [], []
            for o in self.options:
                if id(o) in ids or not o.guards <= detected:
                    continue
                if o.labels[i] != o.labels[j]:
                    split.append(o)
                elif o.detects - detected:
                    unlock.append(o)
            split.sort(key=lambda o: (-self.isolated(join(labels, o.labels)),
                                      -len(np.unique(join(labels, o.labels))), o.size))
            unlock.sort(key=lambda o: (-len(o.detects - detected), o.size))
            for o in split + unlock:
                got = dfs(chosen + [o], join(labels, o.labels), detected | o.detects)
                if got is not None:
                    return got
            failed[key] = max(failed.get(key, -1), left)
            return None

        return dfs([], self.base, set(self.detected0))

    def search(self, k: int) -> list[int] | None:
        if self.done(self.base):
            if self.r.rows > 1:
                return []
            opts = [o for o in self.options if o.guards <= self.detected0][:1]
            return [o.index for o in opts] if opts else None
        if k == 1:
            for o in self.options:
                if o.guards <= self.detected0 and self.done(join(self.base, o.labels)):
                    return [o.index]
            return None
        found = self.greedy(k)
        if found is None:
            found = self.exact(k)
        return None if found is None else [o.index for o in found]


class _Budget(Exception):
    pass


def _canonical(labels: np.ndarray) -> list[int]:
    remap: dict[int, int] = {}
    return [remap.setdefault(int(x), len(remap)) for x in labels]


# ---------------------------------------------------------------- certification

def certify(system: System, rules, constraints: Sequence[SafetyConstraint],
            sensors: Iterable[str], configs: Sequence[Configuration],
            scenarios: ScenarioSpace | None = None) -> Certificate:
    """Replay every single-fault scenario through active diagnosis.

    Independent of the search: observations come from fresh simulations and
    the verdict from ``active_trace``.  Also checks every configuration for
    safety under the healthy system and the prior-health schedule order.
    """
    program = compile_program(system, rules)
    placement = SensorPlacement(frozenset(sensors))
    scenarios = scenarios or enumerate_scenarios(system)
    cert = Certificate(ok=True)
    if not configs:
        cert.ok = False
        cert.unsafe.append((0, "empty schedule"))
        return cert

    everyone = [NOMINAL, *scenarios]
    replay: list[list[Observation]] = []
    detected: set[str] = set()
    for i, cfg in enumerate(configs):
        res = program.run([NOMINAL.faulty], cfg)
        for p in _state_violations(system, constraints, cfg, lambda a: res.value(a, 0)):
            cert.unsafe.append((i + 1, p))
        for sw in cfg.on:
            if sw not in system.switches:
                cert.unsafe.append((i + 1, f"{sw} is not a switch"))
                continue
            missing = guarded_components(system, constraints, sw) - detected
            if missing:
                cert.unsafe.append((i + 1, f"switch {sw} closed before "
                                           f"{', '.join(sorted(missing, key=natural_key))} was checked"))
        replay.append(expected_observations(system, program, everyone, cfg, None, placement))
        for s, o in zip(scenarios, replay[-1][1:]):
            if o != replay[-1][0]:
                detected |= s.faulty

    runs = single_fault_runs(system, program, configs)
    signatures: dict[tuple, str] = {}
    for row, s in enumerate(everyone):
        obs = [per_config[row] for per_config in replay]
        name = ",".join(sorted(s.faulty)) or "~nominal"
        sig = tuple(o.readings for o in obs)
        if sig in signatures:
            cert.confused.append((signatures[sig], name))
        signatures.setdefault(sig, name)
        trace = active_trace(system, program, configs, obs, runs=runs)
        if trace.delta != s.faulty:
            cert.misdiagnosed.append((name, sorted(trace.delta, key=natural_key)))
    cert.ok = not (cert.confused or cert.unsafe or cert.misdiagnosed)
    return cert


# ---------------------------------------------------------------- placement

class Placer:
    """Shared state for placement runs over one system."""

    def __init__(self, system: System, rules, constraints: Sequence[SafetyConstraint] = (),
                 pool: Sequence[Configuration] | None = None, pool_size: int = 256,
                 seed: int = 0, scenarios: ScenarioSpace | None = None,
                 sensor_candidates: Iterable[str] | None = None):
        self.system = system
        self.constraints = list(constraints)
        self.program = compile_program(system, rules)
        self.scenarios = scenarios if scenarios is not None else enumerate_scenarios(system)
        if pool is None:
            pool, self.exhaustive = config_pool(system, pool_size, seed)
        else:
            self.exhaustive = False
        self.readings = Readings(system, self.program, self.scenarios, pool, self.constraints)
        self.observed = observed_atoms(system)
        fan_in = {c: 0 for c in system.components}
        for l in system.links:
            fan_in[l.dst] += 1
        pool_names = sensor_candidates if sensor_candidates is not None else system.components
        # a sensor on an observed component adds nothing, so those only pad
        seen = set(self.observed)
        self.sensor_candidates = sorted(
            pool_names, key=lambda c: (c in seen, -fan_in[c], natural_key(c)))
        self._k = 1

    def relaxed_sets(self, m: int):
        """Sensor sets of size m that separate every pair of rows somewhere in the pool.

        Branches on sensors that split the first pair the current choice
        still confuses, so each separating core is produced once.  Cores
        smaller than m are padded; a padding branch is cut as soon as even
        every remaining candidate together cannot be scheduled.
        """
        r = self.readings
        cand = self.sensor_candidates
        if len(r.configs) == 0 or m > len(cand):
            return
        base = (join(*[r.sensor_labels(p) for p in self.observed]) if self.observed
                else np.zeros(r.rows, dtype=np.int64))
        sens = {c: r.sensor_labels(c) for c in cand}
        seen: set[frozenset[str]] = set()

        def cores(chosen: list[str], banned: set[str], labels: np.ndarray):
            if injective(labels):
                yield chosen
                return
            if len(chosen) == m:
                return
            allowed = [c for c in cand if c not in banned and c not in chosen]
            if not injective(join(labels, *[sens[c] for c in allowed])):
                return
            counts = np.bincount(labels)
            i = int(np.flatnonzero(counts[labels] > 1)[0])
            j = next(int(x) for x in np.flatnonzero(labels == labels[i]) if x != i)
            split = [c for c in allowed if sens[c][i] != sens[c][j]]
            split.sort(key=lambda c: -len(np.unique(join(labels, sens[c]))))
            banned = set(banned)
            for c in split:
                yield from cores(chosen + [c], banned, join(labels, sens[c]))
                banned.add(c)

        def pad(core: list[str], start: int, bounded: bool):
            if len(core) == m:
                key = frozenset(core)
                if key not in seen:
                    seen.add(key)
                    yield core
                return
            rest = [c for c in cand[start:] if c not in core]
            if len(rest) < m - len(core):
                return
            if not bounded and len(core) < m - 1 and self.schedule(core + rest, self._k) is None:
                return
            first = True
            for idx in range(start, len(cand)):
                c = cand[idx]
                if c in core:
                    continue
                # the first child keeps every remaining candidate in reach
                yield from pad(core + [c], idx + 1, first)
                first = False

        for core in cores([], set(), base):
            yield from pad(list(core), 0, False)

    def schedule(self, sensors: Sequence[str], k: int, node_limit: int | None = None) -> list[Configuration] | None:
        probes = sorted(set(self.observed) | set(sensors), key=natural_key)
        search = CoverSearch(self.readings, probes, node_limit)
        try:
            idx = search.search(k)
        except _Budget:
            return None
        return None if idx is None else [self.readings.configs[i] for i in idx]

    def certify(self, sensors, configs) -> Certificate:
        return certify(self.system, self.program, self.constraints, sensors, configs,
                       self.scenarios)

    def place(self, m: int, k: int) -> PlacementResult | None:
        self._k = k
        for sensors in self.relaxed_sets(m):
            configs = self.schedule(sensors, k)
            if configs is None:
                continue
            cert = self.certify(sensors, configs)
            if not cert:
                raise AssertionError(f"search produced an uncertified schedule: {cert}")
            return PlacementResult(SensorPlacement(frozenset(sensors)), tuple(configs),
                                   True, self.exhaustive)
        return None


def synthesize_configs(system: System, rules, constraints: Sequence[SafetyConstraint],
                       placement: SensorPlacement, k_max: int, **kw) -> list[Configuration] | Unsat:
    placer = Placer(system, rules, constraints, **kw)
    configs = placer.schedule(placement.sorted(), k_max)
    if configs is None:
        return Unsat(f"no schedule of at most {k_max} configurations", placer.exhaustive)
    if not placer.certify(placement.sensors, configs):
        raise AssertionError("search produced an uncertified schedule")
    return configs


def place_sensors_basic(system: System, rules, m: int,
                        constraints: Sequence[SafetyConstraint] = (), **kw) -> SensorPlacement | Unsat:
    """Exactly m sensors that isolate every single fault from one configuration."""
    placer = Placer(system, rules, constraints, **kw)
    got = placer.place(m, 1)
    if got is None:
        return Unsat(f"no placement of {m} sensors works with a single configuration",
                     placer.exhaustive)
    return got.sensors


def place_sensors_active(system: System, rules, constraints: Sequence[SafetyConstraint] = (),
                         m_max: int = 5, k_max: int = 10, **kw) -> PlacementResult | Unsat:
    """Fewest sensors (up to m_max) with a safe schedule of at most k_max configurations."""
    placer = Placer(system, rules, constraints, **kw)
    for m in range(1, m_max + 1):
        if m > len(placer.sensor_candidates):
            break
        got = placer.place(m, k_max)
        if got is not None:
            return got
    return Unsat(f"no placement with at most {m_max} sensors and {k_max} configurations",
                 placer.exhaustive)
