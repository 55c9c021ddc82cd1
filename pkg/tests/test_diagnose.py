import itertools

import pytest

from diagplace.diagnose import (DiagnosisError, active_diagnose, active_trace, admissible,
                                basic_diagnose, expected_observation)
from diagplace.engine import consistent, ground
from diagplace.model import (Configuration, FaultScenario, Observation, SensorPlacement)

from conftest import REFERENCE_TABLE, brute_force_minimal, eval_power, fixture, oracle_values

AB11 = {"a": "1", "b": "1"}


def test_half_adder_single_fault(half_adder):
    res = basic_diagnose(half_adder.system, half_adder.rules, None, AB11, {"s": "0", "c": "0"})
    assert res.cardinality == 1
    assert [d.sorted() for d in res.diagnoses] == [["n5"]]


def test_half_adder_healthy_reading(half_adder):
    res = basic_diagnose(half_adder.system, half_adder.rules, None, AB11, {"s": "0", "c": "1"})
    assert res.cardinality == 0
    assert [d.sorted() for d in res.diagnoses] == [[]]


def test_relaxed_listing_includes_pairs(half_adder):
    res = basic_diagnose(half_adder.system, half_adder.rules, None, AB11,
                         {"s": "0", "c": "0"}, size_cap=2, minimal=False)
    got = [d.sorted() for d in res.diagnoses]
    assert res.cardinality == 1
    assert ["n1", "n5"] in got
    assert got == sorted(got, key=lambda d: (len(d), d))


def test_nothing_consistent_gives_sentinel(half_adder):
    # with a=b=0, s=1 and c=1 together need two faults
    readings = {"a": "0", "b": "0", "s": "1", "c": "1"}
    cfg = Configuration.of((), {"a": "0", "b": "0"})
    res = basic_diagnose(half_adder.system, half_adder.rules, cfg, None, readings, size_cap=1)
    assert res.diagnoses == () and res.cardinality == 2
    assert brute_force_minimal(half_adder.system, cfg, readings)[0] == 2


def _readings(system, config, faulty, labels=None):
    vals = oracle_values(system, config, set(faulty))
    labels = list(system.observables) if labels is None else labels
    return {lab: vals[system.probe(lab)] for lab in labels}


@pytest.mark.parametrize("name", ["half_adder", "full_adder"])
def test_matches_brute_force_on_adders(name):
    p = fixture(name)
    s = p.system
    gates = s.faultable()
    free = sorted(s.sources)
    for bits in itertools.product("01", repeat=len(free)):
        cfg = Configuration.of((), dict(zip(free, bits)))
        for injected in list(itertools.combinations(gates, 1)) + [gates[:2], gates[-2:]]:
            readings = _readings(s, cfg, injected)
            res = basic_diagnose(s, p.rules, cfg, None, readings)
            k, hits = brute_force_minimal(s, cfg, readings, admissible)
            assert res.cardinality == k
            assert {d.delta for d in res.diagnoses} == set(hits)


def test_sound_and_minimal(full_adder):
    s = full_adder.system
    rules = ground(s, full_adder.rules)
    cfg = Configuration.of((), {"a": "1", "b": "1", "cin": "0"})
    readings = _readings(s, cfg, {"n2", "n7"})
    res = basic_diagnose(s, rules, cfg, None, readings, size_cap=3, minimal=False)
    obs = Observation.of(readings)
    assert res.diagnoses
    for d in res.diagnoses:
        assert consistent(s, rules, d.delta, cfg, None, obs)
    for d in res.diagnoses:
        if len(d.delta) == res.cardinality:
            for k in range(len(d.delta)):
                for sub in itertools.combinations(d.delta, k):
                    assert not consistent(s, rules, set(sub), cfg, None, obs)


def test_eps_respects_assumptions(eps_small):
    s = eps_small.system
    cfg = Configuration.of(REFERENCE_TABLE[3])
    readings = _readings(s, cfg, {"B1"}, ["B2", "B4", "B5"])
    res = basic_diagnose(s, eps_small.rules, cfg, None, readings, size_cap=2)
    for d in res.diagnoses:
        assert admissible(s, d.delta)
        assert "B5" not in d.delta


def test_active_half_adder_isolates_n5(half_adder):
    s = half_adder.system
    configs = [Configuration.of((), AB11), Configuration.of((), {"a": "1", "b": "0"})]
    obs = [_readings(s, c, {"n5"}) for c in configs]
    assert obs[0] == {"a": "1", "b": "1", "s": "0", "c": "0"}
    d = active_diagnose(s, half_adder.rules, configs, None, obs)
    assert d.sorted() == ["n5"]


def test_active_rejects_unexplained(half_adder):
    s = half_adder.system
    configs = [Configuration.of((), AB11), Configuration.of((), {"a": "1", "b": "0"})]
    obs = [{"a": "1", "b": "1", "s": "0", "c": "0"}, {"a": "1", "b": "0", "s": "1", "c": "1"}]
    with pytest.raises(DiagnosisError) as exc:
        active_diagnose(s, half_adder.rules, configs, None, obs)
    assert exc.value.config_index == 1


def test_active_healthy_is_empty(half_adder):
    s = half_adder.system
    cfg = Configuration.of((), AB11)
    d = active_diagnose(s, half_adder.rules, [cfg], None, [_readings(s, cfg, ())])
    assert d.delta == frozenset()


def test_active_argument_errors(half_adder):
    with pytest.raises(DiagnosisError):
        active_diagnose(half_adder.system, half_adder.rules, [], None, [])
    with pytest.raises(DiagnosisError):
        active_diagnose(half_adder.system, half_adder.rules,
                        [Configuration.of((), AB11)], None, [{}, {}])


def test_active_eps_reference_schedule(eps_small):
    s = eps_small.system
    configs = [Configuration.of(row) for row in REFERENCE_TABLE]
    labels = list(s.observables) + ["B2", "B4", "B5"]
    obs = [_readings(s, c, {"G1"}, labels) for c in configs]
    assert active_diagnose(s, eps_small.rules, configs, None, obs).sorted() == ["G1"]
    # no other single fault reproduces all ten observation vectors
    for other in s.faultable():
        if other != "G1":
            assert [_readings(s, c, {other}, labels) for c in configs] != obs


def test_trace_records_per_config(eps_small):
    s = eps_small.system
    configs = [Configuration.of(row) for row in REFERENCE_TABLE]
    labels = list(s.observables) + ["B2", "B4", "B5"]
    obs = [_readings(s, c, {"C8"}, labels) for c in configs]
    trace = active_trace(s, eps_small.rules, configs, obs)
    assert trace.delta == {"C8"}
    assert len(trace.per_config) == 10
    assert all("C8" in c for c in trace.per_config)
    assert trace.isolated_at is not None and 1 <= trace.isolated_at <= 10
    assert trace.to_json()["diagnoses"] == [["C8"]]


def test_expected_observation_with_sensor(half_adder):
    s = half_adder.system
    obs = expected_observation(s, half_adder.rules, FaultScenario(frozenset({"n5"})),
                               None, AB11, SensorPlacement(frozenset({"n1"})))
    assert obs.reading_map == {"a": "1", "b": "1", "s": "0", "c": "0", "n1": "0"}
    bare = expected_observation(s, half_adder.rules, FaultScenario(frozenset()), None, AB11)
    assert set(bare.reading_map) == {"a", "b", "s", "c"}


def test_expected_observation_eps(eps_small):
    s = eps_small.system
    cfg = Configuration.of(["C1", "C8"])
    obs = expected_observation(s, eps_small.rules, FaultScenario(frozenset({"R1"})), cfg,
                               None, SensorPlacement(frozenset({"B2", "B4", "B5"})))
    truth = eval_power(s, cfg.on, {"R1"})
    assert {k: obs.reading_map[k] for k in ("B2", "B4", "B5")} == \
        {k: truth[k] for k in ("B2", "B4", "B5")}
