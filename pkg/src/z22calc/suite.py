"""Randomized invariance checks: the same integral computed in new and in old coordinates."""

from __future__ import annotations

import functools
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from .integrate import (
    Def3Evaluator,
    component_index,
    constraints_def1,
    def1_coefficient,
    def2_coefficient,
    integrate_def2,
    integrate_def3,
    slot_bindings,
)
from .numeric import (
    OLD_DOMAIN,
    SUPPORT_BOX,
    BindingEnv,
    ZeroFunction,
    quad1d,
    sample_function,
    sample_slots,
    sample_transform,
)
from .scalar import NonFiniteValue, all_atoms, evaluate
from .superfunction import generic_function
from .transform import ATOM_NAMES, CoordinateChange

X_RANGE = OLD_DOMAIN[:2]


@dataclass(frozen=True)
class TrialResult:
    index: int
    passed: bool
    rel_error: float
    new_value: float
    old_value: float
    obstructions: tuple[str, ...] = ()


@dataclass
class SuiteReport:
    def_id: int
    trials: int
    seed: int
    tol: float
    params: dict
    results: list[TrialResult] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.results)

    @property
    def all_passed(self) -> bool:
        return self.passed == len(self.results)

    @property
    def max_rel_error(self) -> float:
        return max((r.rel_error for r in self.results), default=0.0)

    def obstruction_sets(self) -> list[list[str]]:
        return sorted({r.obstructions for r in self.results if r.obstructions}, key=lambda t: (len(t), t))

    def as_dict(self) -> dict:
        return {
            "def": self.def_id,
            "trials": self.trials,
            "seed": self.seed,
            "tol": self.tol,
            "params": dict(self.params),
            "passed": self.passed,
            "maxRelError": self.max_rel_error,
            "obstructionSets": [list(t) for t in self.obstruction_sets()],
            "results": [
                {**asdict(r), "obstructions": list(r.obstructions)}
                for r in sorted(self.results, key=lambda r: r.index)
            ],
        }


def _rel(new: float, old: float) -> float:
    return abs(new - old) / max(abs(new), 1e-300)


@functools.lru_cache(maxsize=None)
def _generic_coefficient(def_id: int, ell: int, depth: int) -> sp.Expr:
    T = CoordinateChange.generic()
    if def_id == 1:
        return def1_coefficient(generic_function(ell + 1), T, ell)
    return def2_coefficient(generic_function(max(1 - ell, 0), laurent_depth=depth), T, ell)


def _series_trial(def_id, index, seed, tol, ell, depth, restrict, eps) -> TrialResult:
    anchored = not (def_id == 2 and ell == 1)
    T = sample_transform(eps, seed * 100_003 + index, anchored=anchored)
    window = (0, ell + 1) if def_id == 1 else (depth, max(1 - ell, 0))
    S = sample_function(seed * 100_003 + index, window, restrict=restrict, density=1.0)
    k = ell if def_id == 1 else -ell
    target = S.components.get((k, 1, 1))

    coeff = _generic_coefficient(def_id, ell, depth)
    env = BindingEnv.for_transform(T)
    env.update(S.env)
    for base in _component_bases(coeff):
        env.setdefault(base, ZeroFunction(1))
    old = quad1d(lambda s: evaluate(coeff, env, s, np.zeros_like(s)), *X_RANGE)
    new = quad1d(target, *X_RANGE) if target is not None else 0.0

    live = set(S.env)
    keys = tuple(sorted(o for o in _obstruction_keys(def_id, ell, depth) if o in live))
    err = _rel(new, old) if new else abs(old)
    return TrialResult(index, bool(err <= tol), float(err), float(new), float(old), keys)


@functools.lru_cache(maxsize=None)
def _obstruction_keys(def_id: int, ell: int, depth: int) -> frozenset[str]:
    if def_id == 1:
        return constraints_def1(ell).vanishing
    res = integrate_def2(generic_function(max(1 - ell, 0), laurent_depth=depth), CoordinateChange.generic(), ell)
    return frozenset(res.obstruction_keys())


def _component_bases(coeff: sp.Expr) -> set[str]:
    return {a.base for a in all_atoms(coeff)} - set(ATOM_NAMES.values())


def invariance_suite(
    def_id: int,
    trials: int,
    seed: int,
    tol: float = 1e-6,
    *,
    ell: int = 0,
    laurent_depth: int = 1,
    restrict: Sequence[tuple[int, int, int]] | bool = (),
    functions_per_trial: int = 5,
    eps: float = 0.1,
    only: Sequence[str] | None = None,
    keep_a11: bool = False,
    order: int = 32,
    panels: int = 16,
) -> SuiteReport:
    """Run ``trials`` random comparisons for one definition.

    Definitions 1 and 2 compare ``int g_{+-ell,11}(u) du`` with the quadrature
    of the extracted ``z**+-ell`` coefficient in ``x``; transforms have
    ``fV(x, 0) = 1`` except for the exceptional case ``M = ell = 1``.
    ``restrict=True`` zeroes the components listed by the constraint set.
    Definition 3 draws ``functions_per_trial`` eight-slot functions per
    transform; ``only`` and ``keep_a11`` select the slots and the variant.
    Every trial is seeded from ``(seed, index)`` so reports are reproducible.
    """
    if def_id not in (1, 2, 3):
        raise ValueError("def_id must be 1, 2 or 3")
    params: dict = {"eps": eps}
    results = []
    if def_id in (1, 2):
        if restrict is True:
            restrict = _restriction(def_id, ell, laurent_depth)
        restrict = tuple(sorted(tuple(r) for r in (restrict or ())))
        params.update(ell=ell, restrict=[list(r) for r in restrict])
        if def_id == 2:
            params["laurentDepth"] = laurent_depth
        for i in range(trials):
            results.append(_series_trial(def_id, i, seed, tol, ell, laurent_depth, restrict, eps))
    else:
        params.update(
            functionsPerTrial=functions_per_trial,
            only=sorted(only) if only is not None else None,
            keepA11=keep_a11,
            order=order,
            panels=panels,
        )
        for i in range(trials):
            results.append(_def3_trial(i, seed, tol, eps, functions_per_trial, only, keep_a11, order, panels))
    return SuiteReport(def_id, trials, seed, tol, params, results)


def _restriction(def_id: int, ell: int, depth: int) -> tuple[tuple[int, int, int], ...]:
    return tuple(sorted(component_index(c) for c in _obstruction_keys(def_id, ell, depth)))


def _def3_trial(index, seed, tol, eps, count, only, keep_a11, order, panels) -> TrialResult:
    T = sample_transform(eps, seed * 100_003 + index)
    ev = Def3Evaluator(T, order=order, panels=panels, domain=SUPPORT_BOX)
    worst, new_at, old_at = 0.0, 0.0, 0.0
    try:
        for j in range(count):
            S = sample_slots(seed * 100_003 + index * 1_000 + j, only=only)
            new = integrate_def3(
                S.function, S.env, domain=SUPPORT_BOX, keep_a11=keep_a11, order=order, panels=panels
            ).numeric_value
            old = ev.integral(slot_bindings(S.function, S.env), keep_a11)
            err = _rel(new, old)
            if err >= worst:
                worst, new_at, old_at = err, new, old
    except NonFiniteValue:
        return TrialResult(index, False, float("inf"), new_at, old_at)
    return TrialResult(index, bool(worst <= tol), float(worst), float(new_at), float(old_at))
