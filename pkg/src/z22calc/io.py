"""Versioned JSON formats for transforms and functions.

Transform file::

    {"schema": "z22calc.transform/1",
     "entries": {"fV": "1 + y", "gV": {"poly": {"0,0": 1}}, ...}}

Missing entries default to the identity; ``"generic": true`` gives one free
atom per entry.  An entry is a number, an expression string in ``x`` and
``y`` or a coefficient table ``{"poly": {"i,j": c}}`` for ``c x**i y**j``.

Function file::

    {"schema": "z22calc.function/1", "form": "series",
     "laurentDepth": 1, "trunc": 3,
     "components": {"1,1,1": {"bump": {"center": 0, "halfWidth": 1, "poly": [1]}},
                    "0,0,0": "x**2", "2,0,0": "symbol"}}

``form`` is ``"series"`` (keys ``"k,a,b"``, coefficients in ``u`` written as
``x``) or ``"slots"`` (keys are the eight slot names, coefficients in
``(u, w)`` written as ``(x, y)``; bumps take ``{"bump2": {"u": ..., "w": ...,
"scale": s}}``).  ``"symbol"`` is a free component atom and
``"generic": true`` fills the whole window with them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import sympy as sp

from .graded import Monomial
from .numeric import BindingEnv, BumpFunction, BumpProduct
from .scalar import all_atoms, x, y
from .superfunction import SLOTS, SuperFunction, component_atom, generic_function, slot_atoms
from .transform import NAMES, CoordinateChange

TRANSFORM_SCHEMA = "z22calc.transform/1"
FUNCTION_SCHEMA = "z22calc.function/1"


class InvalidInput(ValueError):
    pass


@dataclass
class ParsedFunction:
    function: SuperFunction
    env: BindingEnv

    @property
    def numeric(self) -> bool:
        """Whether every component atom has a numeric binding."""
        bases = {a.base for c in self.function.terms.values() for a in all_atoms(c)}
        return bases <= set(self.env)


def _load(source: str | Path | Mapping) -> dict:
    if isinstance(source, Mapping):
        return dict(source)
    try:
        return json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {source}: {exc}") from exc


def _check_schema(data: dict, schema: str) -> None:
    if data.get("schema") != schema:
        raise InvalidInput(f"expected schema {schema!r}, got {data.get('schema')!r}")


def parse_expr(entry: Any, variables=(x, y)) -> sp.Expr:
    """A number, an expression string or a ``{"poly": {"i,j": c}}`` table."""
    if isinstance(entry, bool):
        raise InvalidInput(f"not an expression: {entry!r}")
    if isinstance(entry, (int, float)):
        return sp.nsimplify(entry)
    if isinstance(entry, str):
        try:
            e = sp.sympify(entry, locals={v.name: v for v in variables}, rational=True)
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise InvalidInput(f"cannot parse {entry!r}") from exc
        stray = e.free_symbols - set(variables)
        if stray:
            raise InvalidInput(f"unknown symbols {sorted(map(str, stray))} in {entry!r}")
        return e
    if isinstance(entry, Mapping) and set(entry) == {"poly"}:
        terms = []
        for key, c in entry["poly"].items():
            try:
                powers = [int(p) for p in key.split(",")]
            except ValueError as exc:
                raise InvalidInput(f"bad exponent key {key!r}") from exc
            if len(powers) != len(variables) or min(powers) < 0:
                raise InvalidInput(f"bad exponent key {key!r}")
            terms.append(parse_expr(c) * sp.Mul(*[v**p for v, p in zip(variables, powers)]))
        return sp.Add(*terms)
    raise InvalidInput(f"unsupported coefficient descriptor {entry!r}")


def load_transform(source: str | Path | Mapping) -> CoordinateChange:
    if source == "generic":
        return CoordinateChange.generic()
    if source == "identity":
        return CoordinateChange.identity()
    data = _load(source)
    _check_schema(data, TRANSFORM_SCHEMA)
    if data.get("generic"):
        return CoordinateChange.generic()
    entries = data.get("entries", {})
    unknown = set(entries) - set(NAMES)
    if unknown:
        raise InvalidInput(f"unknown transform entries {sorted(unknown)}")
    return CoordinateChange.from_mapping({k: parse_expr(v) for k, v in entries.items()})


def _bump(desc: Mapping) -> BumpFunction:
    try:
        return BumpFunction(float(desc["center"]), float(desc["halfWidth"]), tuple(desc.get("poly", (1.0,))))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"bad bump descriptor {desc!r}") from exc


def _parse_key(key: str) -> Monomial:
    try:
        k, a, b = (int(p) for p in key.split(","))
    except ValueError as exc:
        raise InvalidInput(f"bad component key {key!r}") from exc
    if a not in (0, 1) or b not in (0, 1):
        raise InvalidInput(f"fermion exponents must be 0 or 1 in {key!r}")
    return Monomial(k, a, b)


def load_function(source: str | Path | Mapping, *, trunc: int | None = None, laurent_depth: int | None = None) -> ParsedFunction:
    """Read a function file; ``trunc`` and ``laurent_depth`` override the file."""
    if source == "generic":
        data = {"schema": FUNCTION_SCHEMA, "generic": True}
    else:
        data = _load(source)
    _check_schema(data, FUNCTION_SCHEMA)
    form = data.get("form", "series")
    env = BindingEnv()
    if form == "slots":
        return _load_slots(data, env)
    if form != "series":
        raise InvalidInput(f"unknown function form {form!r}")
    M = laurent_depth if laurent_depth is not None else int(data.get("laurentDepth", 0))
    K = trunc if trunc is not None else int(data.get("trunc", 8))
    if M < 0 or K < 0:
        raise InvalidInput("laurentDepth and trunc must be non-negative")
    if data.get("generic"):
        return ParsedFunction(generic_function(K, laurent_depth=M), env)
    terms = {}
    for key, desc in data.get("components", {}).items():
        m = _parse_key(key)
        if not -M <= m.z <= K:
            raise InvalidInput(f"component {key} lies outside the window [-{M}, {K}]")
        if desc == "symbol" or isinstance(desc, Mapping) and "bump" in desc:
            atom = component_atom(m.z, m.xi, m.eta)
            terms[m] = atom
            if desc != "symbol":
                env[atom.base] = _bump(desc["bump"])
        else:
            terms[m] = parse_expr(desc, (x,))
    return ParsedFunction(SuperFunction(terms, laurent_depth=M, trunc=K), env)


def _load_slots(data: dict, env: BindingEnv) -> ParsedFunction:
    atoms = slot_atoms()
    terms = {}
    slots = data.get("slots", {})
    unknown = set(slots) - set(SLOTS)
    if unknown:
        raise InvalidInput(f"unknown slots {sorted(unknown)}")
    for name, desc in slots.items():
        mono = SLOTS[name]
        atom = getattr(atoms, name)
        if desc == "symbol":
            terms[mono] = atom
        elif isinstance(desc, Mapping) and "bump2" in desc:
            d = desc["bump2"]
            try:
                env[atom.base] = BumpProduct(_bump(d["u"]), _bump(d["w"]), float(d.get("scale", 1.0)))
            except (KeyError, TypeError) as exc:
                raise InvalidInput(f"bad bump2 descriptor for {name}") from exc
            terms[mono] = atom
        else:
            terms[mono] = parse_expr(desc)
    return ParsedFunction(SuperFunction(terms, reduced=True), env)


def dumps(report: Mapping) -> str:
    """Stable JSON text (sorted keys) for reports."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
