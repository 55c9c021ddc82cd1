"""Command-line front end.

Every command prints JSON on stdout (``--pretty`` prints a table instead).
Exit status: 0 success, 1 no answer (UNSAT or no consistent diagnosis),
2 bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from .diagnose import DiagnosisError, active_trace, basic_diagnose
from .engine import EngineError
from .model import Configuration, Observation, natural_key
from .modular import ModuleError, find_modules, modular_place_sensors, partition_from_groups
from .place import certify, place_sensors_active, place_sensors_basic
from .sdl import FIXTURES, ParsedSystem, SDLError, fixture_text, parse_system

OK, UNSAT, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load(path: str) -> ParsedSystem:
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return parse_system(fh.read())
    stem = os.path.basename(path)
    stem = stem[:-4] if stem.endswith(".sdl") else stem
    if stem in FIXTURES:
        return parse_system(fixture_text(stem))
    raise InputError(f"no such file or fixture: {path}")


def _pairs(text: str | None) -> dict[str, str]:
    out: dict[str, str] = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep or not key or not value:
            raise InputError(f"expected name=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _names(text: str | None) -> list[str]:
    return [x.strip() for x in (text or "").split(",") if x.strip()]


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _schedule(doc) -> list[Configuration]:
    rows = doc["configurations"] if isinstance(doc, dict) else doc
    return [Configuration.of(r.get("on", ()), r.get("inputs")) for r in rows]


def _emit(payload: dict, pretty: bool, table=None) -> None:
    if pretty and table is not None:
        print(table())
    else:
        print(json.dumps(payload, sort_keys=False))


def _config_table(configs) -> str:
    lines = ["Configuration id  Switches that are on / inputs"]
    for i, c in enumerate(configs, 1):
        parts = sorted(c.on, key=natural_key) + [f"{k}={v}" for k, v in c.inputs]
        lines.append(f"{i:>16}  {', '.join(parts) or '-'}")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands

def cmd_diagnose(args) -> int:
    parsed = _load(args.system)
    system = parsed.system
    obs = _pairs(args.obs)
    inputs = {s: obs[lab] for lab, s in system.observables.items()
              if s in system.sources and lab in obs}
    inputs.update(_pairs(args.inputs))
    config = Configuration.of(_names(args.on), inputs)
    res = basic_diagnose(system, parsed.rules, config, None, Observation.of(obs),
                         size_cap=args.size_cap, minimal=not args.all)
    payload = res.to_json()
    _emit(payload, args.pretty, lambda: "\n".join(
        [f"cardinality {res.cardinality}"] + ["  {" + ", ".join(d.sorted()) + "}"
                                              for d in res.diagnoses]))
    return OK if res.diagnoses else UNSAT


def cmd_active(args) -> int:
    parsed = _load(args.system)
    doc = _read_json(args.observations)
    rows = doc["configurations"] if isinstance(doc, dict) else doc
    configs = [Configuration.of(r.get("on", ()), r.get("inputs")) for r in rows]
    obs = [Observation.of(r.get("obs", {})) for r in rows]
    trace = active_trace(parsed.system, parsed.rules, configs, obs)
    payload = trace.to_json()
    _emit(payload, args.pretty, lambda: "\n".join(
        [f"diagnosis {{{', '.join(payload['diagnoses'][0])}}}"] +
        [f"  config {i}: {{{', '.join(c)}}}" for i, c in enumerate(payload["per_config"], 1)]))
    return OK


def cmd_place(args) -> int:
    parsed = _load(args.system)
    kw = {"pool_size": args.pool_size, "seed": args.seed}
    if args.basic:
        res = place_sensors_basic(parsed.system, parsed.rules, args.m_max,
                                  parsed.constraints, **kw)
        if not res:
            _emit(res.to_json(), False)
            return UNSAT
        payload = {"sensors": res.sorted()}
        _emit(payload, args.pretty, lambda: "sensors: " + ", ".join(res.sorted()))
        return OK
    res = place_sensors_active(parsed.system, parsed.rules, parsed.constraints,
                               m_max=args.m_max, k_max=args.k_max, **kw)
    if not res:
        _emit(res.to_json(), False)
        return UNSAT
    _emit(res.to_json(), args.pretty, lambda: "sensors: " + ", ".join(res.sensors.sorted())
          + "\n" + _config_table(res.configurations))
    return OK


def cmd_certify(args) -> int:
    parsed = _load(args.system)
    configs = _schedule(_read_json(args.schedule))
    cert = certify(parsed.system, parsed.rules, parsed.constraints, _names(args.sensors), configs)
    payload = {"certified": cert.ok, "confused": [list(p) for p in cert.confused],
               "unsafe": [list(u) for u in cert.unsafe],
               "misdiagnosed": [[s, d] for s, d in cert.misdiagnosed]}
    _emit(payload, args.pretty, lambda: "certified" if cert.ok else json.dumps(payload, indent=2))
    return OK if cert.ok else UNSAT


def _partition(parsed: ParsedSystem, groups_path: str | None):
    if groups_path:
        doc = _read_json(groups_path)
        return partition_from_groups(parsed.system, doc["modules"] if isinstance(doc, dict) else doc)
    return find_modules(parsed.system)


def cmd_modules(args) -> int:
    parsed = _load(args.system)
    part = _partition(parsed, args.groups)
    payload = part.to_json()
    _emit(payload, args.pretty, lambda: "\n".join(
        f"module {i} (depth {d}): {', '.join(m)}"
        for i, (m, d) in enumerate(zip(payload["modules"], part.depths()))))
    return OK


def cmd_modular_place(args) -> int:
    parsed = _load(args.system)
    part = _partition(parsed, args.groups)
    res = modular_place_sensors(parsed.system, parsed.rules, parsed.constraints, part,
                                args.m, args.k_prime, pool_size=args.pool_size, seed=args.seed)
    _emit(res.to_json(), args.pretty, lambda: "sensors: " + ", ".join(res.sensors.sorted())
          + "\n" + _config_table(res.configurations))
    return OK


def cmd_bench(args) -> int:
    from .bench import run_bench, to_csv

    rows = run_bench([int(x) for x in _names(args.n)], [int(x) for x in _names(args.m)],
                     [int(x) for x in _names(args.k)], args.instances, args.seed, args.pool_size)
    sys.stdout.write(to_csv(rows))
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diagplace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--pretty", action="store_true", help="human-readable output")
        return sp

    d = add("diagnose", cmd_diagnose, "minimal diagnoses for one observation")
    d.add_argument("system", help=".sdl file or fixture name")
    d.add_argument("--obs", required=True, help="readings as name=value,...")
    d.add_argument("--inputs", help="source values; defaults to observed source readings")
    d.add_argument("--on", help="closed switches, comma separated")
    d.add_argument("--size-cap", type=int, default=3)
    d.add_argument("--all", action="store_true", help="every consistent set up to the cap")

    a = add("active", cmd_active, "active diagnosis over several configurations")
    a.add_argument("system")
    a.add_argument("observations", help='JSON: {"configurations": [{"on": [], "inputs": {}, "obs": {}}]}')

    for name, fn, help_ in (("place", cmd_place, "minimal sensor placement"),):
        pl = add(name, fn, help_)
        pl.add_argument("system")
        pl.add_argument("--m-max", type=int, default=5)
        pl.add_argument("--k-max", type=int, default=10)
        pl.add_argument("--basic", action="store_true", help="exactly --m-max sensors, one configuration")
        pl.add_argument("--pool-size", type=int, default=256)
        pl.add_argument("--seed", type=int, default=0)

    c = add("certify", cmd_certify, "check a sensor set and schedule")
    c.add_argument("system")
    c.add_argument("--sensors", required=True)
    c.add_argument("--schedule", required=True, help="JSON list of configurations")

    mo = add("modules", cmd_modules, "module decomposition")
    mo.add_argument("system")
    mo.add_argument("--groups", help="JSON list of component groups to use instead")

    mp = add("modular-place", cmd_modular_place, "module-by-module placement")
    mp.add_argument("system")
    mp.add_argument("--m", type=int, default=4, help="sensors per module")
    mp.add_argument("--k-prime", type=int, default=5, help="configurations per module")
    mp.add_argument("--groups")
    mp.add_argument("--pool-size", type=int, default=256)
    mp.add_argument("--seed", type=int, default=0)

    b = add("bench", cmd_bench, "scaling benchmark, CSV on stdout")
    b.add_argument("--n", default="50,100,150,200")
    b.add_argument("--m", default="10")
    b.add_argument("--k", default="5")
    b.add_argument("--instances", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--pool-size", type=int, default=128)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SDLError as exc:
        print(json.dumps({"error": str(exc), "line": exc.line, "column": exc.col}))
        return BAD_INPUT
    except DiagnosisError as exc:
        print(json.dumps({"error": str(exc), "config_index": exc.config_index}))
        return UNSAT
    except ModuleError as exc:
        print(json.dumps({"error": str(exc), "module_index": exc.module_index}))
        return UNSAT
    except (InputError, EngineError, KeyError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}))
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
