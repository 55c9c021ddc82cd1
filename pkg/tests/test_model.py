from dataclasses import replace

import pytest

from diagplace.model import (Configuration, Link, Observation, System, diag_key, natural_key,
                             validate)
from diagplace.sdl import eps_type

from conftest import fixture


@pytest.mark.parametrize("name", ["half_adder", "full_adder", "adder3", "eps_small", "eps_large"])
def test_fixtures_are_valid(name):
    assert validate(fixture(name).system) == []


def test_natural_order():
    assert sorted(["C10", "C2", "C1"], key=natural_key) == ["C1", "C2", "C10"]
    assert diag_key({"n3", "n1"}) < diag_key({"n1", "n5"})


def test_configuration_and_observation_are_canonical():
    assert Configuration.of(["C2", "C1"]) == Configuration.of(["C1", "C2"])
    assert Configuration.of((), {"b": "1", "a": "0"}).inputs == (("a", "0"), ("b", "1"))
    assert Observation.of({"s": "0", "c": "1"}) == Observation.of({"c": "1", "s": "0"})
    assert Configuration.of(["C10", "C2"]).to_json(3) == {"id": 3, "on": ["C2", "C10"]}


def test_probe_follows_alias(half_adder):
    s = half_adder.system
    assert s.probe("s") == "n4"
    assert s.probe("n1") == "n1"


def test_faultable_skips_rigid_and_healthy(half_adder, eps_small):
    assert half_adder.system.faultable() == ["n1", "n2", "n3", "n4", "n5"]
    assert "B5" not in eps_small.system.faultable()
    assert len(eps_small.system.faultable()) == 20


def _tiny():
    t = eps_type("bus")
    return System(types={"bus": t}, components={"A": "bus", "B": "bus"},
                  links=(Link("A", "B"),), switches={"S": Link("A", "B")},
                  sources={"A": "on"})


def test_validate_accepts_tiny():
    assert validate(_tiny()) == []


@pytest.mark.parametrize("change, fragment", [
    (dict(links=(Link("A", "Z"),), switches={}), "unknown component Z"),
    (dict(switches={"S": Link("B", "A")}), "not a declared link"),
    (dict(sources={"Q": "on"}), "source Q"),
    (dict(sources={"A": "purple"}), "not a state"),
    (dict(observables={"x": "Q"}), "unknown component Q"),
    (dict(always_healthy=frozenset({"Q"})), "unknown component Q"),
    (dict(components={"A": "bus", "B": "nope"}), "unknown type"),
    (dict(components={"A": "bus", "B": "bus", "1x": "bus"}), "bad component identifier"),
])
def test_validate_reports(change, fragment):
    problems = validate(replace(_tiny(), **change))
    assert any(fragment in p for p in problems), problems


def test_validate_port_rules(half_adder):
    s = half_adder.system
    doubled = replace(s, links=s.links + (Link("a", "n1", "in1"),))
    assert any("more than one incoming" in p for p in validate(doubled))
    missing = replace(s, links=s.links + (Link("a", "n5", "in9"),))
    assert any("missing port" in p for p in validate(missing))


def test_validate_never_raises_on_junk():
    assert validate(replace(_tiny(), components=None))
