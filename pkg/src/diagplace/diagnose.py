"""Minimal diagnosis from one observation, and active diagnosis over several."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .engine import Program, ground
from .model import (NOMINAL, Configuration, Diagnosis, FaultScenario, Observation,
                    RuleSchema, SensorPlacement, System, diag_key, natural_key)

BATCH = 2048


class DiagnosisError(Exception):
    def __init__(self, message: str, config_index: int | None = None):
        self.config_index = config_index
        super().__init__(message)


@dataclass(frozen=True)
class DiagnosisResult:
    diagnoses: tuple[Diagnosis, ...]
    cardinality: int

    def to_json(self) -> dict:
        return {"cardinality": self.cardinality,
                "diagnoses": [d.sorted() for d in self.diagnoses]}


def compile_program(system: System, rules) -> Program:
    """Accept schemas, ground rules or an already compiled program."""
    if isinstance(rules, Program):
        return rules
    rules = list(rules)
    if rules and isinstance(rules[0], RuleSchema):
        rules = ground(system, rules)
    return Program(system, rules)


def admissible(system: System, faulty: Iterable[str]) -> bool:
    """Environment assumptions: no always-healthy component and no whole group faulty."""
    faulty = set(faulty)
    if faulty & system.always_healthy:
        return False
    return not any(g <= faulty for g in system.healthy_groups)


def candidates(system: System) -> list[str]:
    return sorted(system.faultable(), key=natural_key)


def _match_mask(result, system: System, readings: Mapping[str, str], full: int) -> int:
    mask = full
    for label, value in readings.items():
        mask &= result.vals[system.probe(label)].get(value, 0)
        if not mask:
            break
    return mask


def consistent_sets(system: System, program: Program, sets: Sequence[frozenset[str]],
                    config: Configuration | None, inputs: Mapping[str, str] | None,
                    readings: Mapping[str, str]) -> list[frozenset[str]]:
    """Members of ``sets`` whose simulation agrees with ``readings``."""
    out = []
    for start in range(0, len(sets), BATCH):
        chunk = sets[start:start + BATCH]
        res = program.run(chunk, config, inputs)
        mask = _match_mask(res, system, readings, (1 << len(chunk)) - 1)
        out += [s for i, s in enumerate(chunk) if mask >> i & 1]
    return out


def basic_diagnose(system: System, rules, config: Configuration | None = None,
                   inputs: Mapping[str, str] | None = None,
                   obs: Observation | Mapping[str, str] = Observation(),
                   size_cap: int | None = None, minimal: bool = True) -> DiagnosisResult:
    """Smallest fault sets consistent with ``obs``, by iterative deepening.

    With ``minimal=False`` every consistent set up to ``size_cap`` is
    returned, ordered by size then name; ``cardinality`` is still the
    smallest size found.  Nothing consistent gives ``size_cap + 1``.
    """
    readings = obs.reading_map if isinstance(obs, Observation) else dict(obs)
    program = compile_program(system, rules)
    pool = candidates(system)
    cap = len(pool) if size_cap is None else min(size_cap, len(pool))
    found: list[frozenset[str]] = []
    best = None
    for k in range(cap + 1):
        sets = [frozenset(c) for c in itertools.combinations(pool, k)]
        sets = [s for s in sets if admissible(system, s)]
        hits = consistent_sets(system, program, sets, config, inputs, readings)
        if hits:
            if best is None:
                best = k
            found += hits
            if minimal:
                break
    if best is None:
        return DiagnosisResult((), (size_cap if size_cap is not None else len(pool)) + 1)
    found.sort(key=lambda d: (len(d), diag_key(d)))
    return DiagnosisResult(tuple(Diagnosis(d) for d in found), best)


def expected_observation(system: System, rules, scenario: FaultScenario,
                         config: Configuration | None = None,
                         inputs: Mapping[str, str] | None = None,
                         placement: SensorPlacement = SensorPlacement()) -> Observation:
    return expected_observations(system, rules, [scenario], config, inputs, placement)[0]


def expected_observations(system: System, rules, scenarios: Sequence[FaultScenario],
                          config: Configuration | None = None,
                          inputs: Mapping[str, str] | None = None,
                          placement: SensorPlacement = SensorPlacement()) -> list[Observation]:
    """``expected_observation`` for many scenarios in one batched run."""
    program = compile_program(system, rules)
    res = program.run([s.faulty for s in scenarios], config, inputs)
    labels = list(system.observables) + [s for s in placement.sorted()
                                         if s not in system.observables]
    atoms = [system.probe(lab) for lab in labels]
    return [Observation.of({lab: res.value(a, i) for lab, a in zip(labels, atoms)})
            for i in range(len(scenarios))]


@dataclass
class ActiveTrace:
    """Per-configuration single-fault candidates and their running intersection."""

    per_config: list[frozenset[str]] = field(default_factory=list)
    nominal: list[bool] = field(default_factory=list)
    running: list[frozenset[str]] = field(default_factory=list)
    delta: frozenset[str] = frozenset()

    @property
    def isolated_at(self) -> int | None:
        """1-based index of the first configuration after which the
        diagnosis no longer changes, or None if nothing was ever seen."""
        if not self.delta:
            return None
        for i, r in enumerate(self.running):
            if r == self.delta and not all(self.nominal[: i + 1]):
                return i + 1
        return None

    def to_json(self) -> dict:
        return {"diagnoses": [sorted(self.delta, key=natural_key)],
                "cardinality": len(self.delta),
                "per_config": [sorted(c, key=natural_key) for c in self.per_config]}


def _singles(system: System) -> list[frozenset[str]]:
    return [frozenset([c]) for c in candidates(system) if admissible(system, [c])]


def single_fault_runs(system: System, rules, configs: Sequence[Configuration],
                      inputs_per_config: Sequence[Mapping[str, str] | None] | None = None) -> list:
    """Simulations of the healthy system and every single fault, one batch per configuration.

    Pass the result to ``active_trace`` when replaying many observations
    against the same schedule.
    """
    program = compile_program(system, rules)
    inputs_per_config = inputs_per_config or [None] * len(configs)
    batch = [NOMINAL.faulty] + _singles(system)
    return [program.run(batch, cfg, inp) for cfg, inp in zip(configs, inputs_per_config)]


def active_trace(system: System, rules, configs: Sequence[Configuration],
                 obs_per_config: Sequence[Observation | Mapping[str, str]],
                 inputs_per_config: Sequence[Mapping[str, str] | None] | None = None,
                 runs: Sequence | None = None) -> ActiveTrace:
    if not configs:
        raise DiagnosisError("active diagnosis needs at least one configuration")
    if len(obs_per_config) != len(configs):
        raise DiagnosisError("need exactly one observation per configuration")
    singles = _singles(system)
    if runs is None:
        runs = single_fault_runs(system, rules, configs, inputs_per_config)
    trace = ActiveTrace()
    seen_fault = False
    current: frozenset[str] | None = None
    for i, (obs, res) in enumerate(zip(obs_per_config, runs)):
        readings = obs.reading_map if isinstance(obs, Observation) else dict(obs)
        mask = _match_mask(res, system, readings, (1 << (len(singles) + 1)) - 1)
        nominal_ok = bool(mask & 1)
        here = frozenset(next(iter(s)) for j, s in enumerate(singles) if mask >> (j + 1) & 1)
        if not nominal_ok and not here:
            raise DiagnosisError(
                f"observation {i + 1} is explained by no single fault", config_index=i)
        trace.per_config.append(here)
        trace.nominal.append(nominal_ok)
        current = here if current is None else current & here
        seen_fault = seen_fault or not nominal_ok
        trace.running.append(current if seen_fault else frozenset())
    trace.delta = trace.running[-1]
    return trace


def active_diagnose(system: System, rules, configs: Sequence[Configuration],
                    inputs_per_config: Sequence[Mapping[str, str] | None] | None,
                    obs_per_config: Sequence[Observation | Mapping[str, str]]) -> Diagnosis:
    """Intersect per-configuration single-fault candidates.

    A configuration whose observation the healthy system also produces still
    narrows the candidates to the faults it cannot see.  If every
    observation looks healthy the result is the empty diagnosis.
    """
    trace = active_trace(system, rules, configs, obs_per_config, inputs_per_config)
    return Diagnosis(trace.delta)
