"""JSON fan files: fan, decorations, named divisors and named orders."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .fans import Fan, FanError, FanQuadruple, TorusDivisor
from .subdivision import PLFunction, ResolutionChain, Step


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FanFile:
    quadruple: FanQuadruple
    divisors: dict = field(default_factory=dict)  # name -> TorusDivisor
    orders: dict = field(default_factory=dict)  # name -> tuple of ray vectors

    @property
    def fan(self) -> Fan:
        return self.quadruple.fan


def _rational(text, where: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, TypeError, ZeroDivisionError):
        raise SchemaError(f"{where}: expected a rational 'p/q', got {text!r}") from None


def _indices(data, key: str, nrays: int) -> list[int]:
    value = data.get(key, [])
    if not isinstance(value, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in value):
        raise SchemaError(f"field {key!r}: expected a list of ray indices")
    for i in value:
        if not 0 <= i < nrays:
            raise SchemaError(f"field {key!r}: ray index {i} out of range")
    return value


def parse_fan_data(data: dict) -> FanFile:
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    for key in ("lattice_rank", "rays", "maximal_cones"):
        if key not in data:
            raise SchemaError(f"missing field {key!r}")
    n = data["lattice_rank"]
    if not isinstance(n, int) or n < 1:
        raise SchemaError("field 'lattice_rank': expected a positive integer")
    rays = data["rays"]
    if not isinstance(rays, list):
        raise SchemaError("field 'rays': expected a list")
    for k, r in enumerate(rays):
        if not isinstance(r, list) or len(r) != n or not all(isinstance(x, int) for x in r):
            raise SchemaError(f"field 'rays[{k}]': expected {n} integers")
    cones = data["maximal_cones"]
    if not isinstance(cones, list):
        raise SchemaError("field 'maximal_cones': expected a list")
    for k, c in enumerate(cones):
        if not isinstance(c, list) or not all(isinstance(i, int) and 0 <= i < len(rays) for i in c):
            raise SchemaError(f"field 'maximal_cones[{k}]': expected ray indices")
    try:
        fan = Fan(n, tuple(tuple(r) for r in rays), tuple(frozenset(c) for c in cones))
        vec = fan.rays
        B = [vec[i] for i in _indices(data, "B", len(vec))]
        C = [vec[i] for i in _indices(data, "C", len(vec))]
        H = [vec[i] for i in _indices(data, "H", len(vec))]
        raw_h = data.get("h", {})
        if not isinstance(raw_h, dict):
            raise SchemaError("field 'h': expected an object")
        h = {}
        for key, value in raw_h.items():
            if not key.isdigit() or int(key) >= len(vec):
                raise SchemaError(f"field 'h': bad ray index {key!r}")
            h[vec[int(key)]] = _rational(value, f"h[{key}]")
        quad = FanQuadruple(fan, frozenset(B), frozenset(C), frozenset(H), h)
    except FanError as exc:
        raise SchemaError(str(exc)) from None
    divisors = {}
    for name, coeffs in data.get("divisors", {}).items():
        if not isinstance(coeffs, list) or len(coeffs) != len(vec):
            raise SchemaError(f"divisor {name!r}: expected one coefficient per ray")
        divisors[name] = TorusDivisor(tuple((r, _rational(c, f"divisors[{name}]")) for r, c in zip(vec, coeffs)))
    orders = {}
    for name in data.get("orders", {}):
        idx = _indices(data["orders"], name, len(vec))
        if len(set(idx)) != len(idx):
            raise SchemaError(f"order {name!r}: repeated ray")
        orders[name] = tuple(vec[i] for i in idx)
    return FanFile(quad, divisors, orders)


def load_fan_file(path: str | Path) -> FanFile:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_fan_data(data)


def fan_to_data(q: FanQuadruple, divisors: dict | None = None, orders: dict | None = None) -> dict:
    fan = q.fan
    data = {
        "lattice_rank": fan.ambient_rank,
        "rays": [list(r) for r in fan.rays],
        "maximal_cones": [sorted(c) for c in fan.maximal_cones],
        "B": sorted(fan.index[r] for r in q.B),
        "C": sorted(fan.index[r] for r in q.C),
    }
    if q.H:
        data["H"] = sorted(fan.index[r] for r in q.H)
        data["h"] = {str(fan.index[r]): str(v) for r, v in q.h}
    if divisors:
        data["divisors"] = {k: [str(d.get(r)) for r in fan.rays] for k, d in divisors.items()}
    if orders:
        data["orders"] = {k: [fan.index[r] for r in o] for k, o in orders.items()}
    return data


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


FIXTURES = ("FIX-Q", "FIX-QC", "QC-SPLIT", "FIX-R65", "P1", "P1-B", "P1-BC")


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("torofan") / "fixtures" / f"{name}.json"))


def load_fixture(name: str) -> FanFile:
    return load_fan_file(fixture_path(name))


def _pl_from_data(data: dict, fan: Fan):
    base = frozenset(tuple(r) for r in data["base"])
    pieces = tuple(
        (fan.vectors(p["rays"]), tuple(_rational(x, "psi") for x in p["psi"])) for p in data["pieces"]
    )
    return PLFunction(base, pieces)


def chain_to_data(chain) -> dict:
    steps = []
    for s in chain.steps:
        entry = {
            "kind": s.kind,
            "datum": None if s.datum is None else list(s.datum),
            "before": fan_to_data(s.before),
            "after": fan_to_data(s.after),
        }
        if s.certificates is not None:
            entry["certificates"] = [
                {"base": sorted(s.before.fan.index[r] for r in b), "psi": psi.to_json(s.after.fan)}
                for b, psi in s.certificates
            ]
        steps.append(entry)
    return {
        "source": fan_to_data(chain.source),
        "order": [list(r) for r in chain.order],
        "steps": steps,
    }


def chain_from_data(data: dict):
    try:
        source = parse_fan_data(data["source"]).quadruple
        steps = []
        for entry in data["steps"]:
            before = parse_fan_data(entry["before"]).quadruple
            after = parse_fan_data(entry["after"]).quadruple
            certs = None
            if "certificates" in entry:
                certs = tuple(
                    (before.fan.vectors(c["base"]), _pl_from_data(c["psi"], after.fan)) for c in entry["certificates"]
                )
            datum = None if entry["datum"] is None else tuple(entry["datum"])
            steps.append(Step(entry["kind"], datum, before, after, certs))
        order = tuple(tuple(r) for r in data.get("order", []))
    except (KeyError, TypeError, IndexError) as exc:
        raise SchemaError(f"malformed chain file: {exc}") from None
    return ResolutionChain(source, tuple(steps), order)


def load_chain(path: str | Path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return chain_from_data(data)
