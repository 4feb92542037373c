"""Sorting functions and sortedness classification of fan quadruples."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .fans import FanError, FanQuadruple, restrict
from .lp import feasible_point
from .parallel import parallel_map


@dataclass(frozen=True)
class LinearFunctional:
    covector: tuple

    def __call__(self, v: Sequence) -> Fraction:
        return sum((Fraction(a) * b for a, b in zip(self.covector, v)), Fraction(0))


@dataclass(frozen=True)
class SortednessMode:
    b_sharp: frozenset
    c_flat: frozenset
    h_sharp: frozenset

    @classmethod
    def well(cls, q: FanQuadruple) -> "SortednessMode":
        return cls(q.B, q.C, q.H)

    @classmethod
    def partial(cls, q: FanQuadruple) -> "SortednessMode":
        return cls(frozenset(), q.C, frozenset())


@dataclass(frozen=True)
class SortednessCertificate:
    mode: SortednessMode
    cones: tuple  # ((frozenset of ray vectors, LinearFunctional), ...)


@dataclass(frozen=True)
class Counterexample:
    mode: SortednessMode
    cone: frozenset  # ray vectors of the first cone without a strict sorting function


def sorting_constraints(q: FanQuadruple, strict: Iterable[Sequence]) -> tuple[list, list, list, list]:
    """Rows (a_ub, b_ub, a_eq, b_eq) on the covector ρ encoding the sorting conditions."""
    strict = {tuple(r) for r in strict}
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for r in q.fan.rays:
        role = q.role(r)
        if role == "B":
            a_ub.append([-x for x in r])
            b_ub.append(0)
        elif role == "C":
            a_ub.append(list(r))
            b_ub.append(-1 if r in strict else 0)
        elif role == "A":
            a_eq.append(list(r))
            b_eq.append(0)
    return a_ub, b_ub, a_eq, b_eq


def find_sorting_function(q: FanQuadruple, strict: Iterable[Sequence] = ()) -> LinearFunctional | None:
    """A linear ρ with ρ ≥ 0 on B-rays, ρ ≤ 0 on C-rays, ρ = 0 on A-rays and ρ ≤ -1 on strict rays.

    H-rays are left unconstrained.  Returns the basic solution reached by the simplex.
    """
    if not q.is_affine():
        raise FanError("sorting functions are searched on affine quadruples")
    strict = [tuple(r) for r in strict]
    if any(r not in q.C for r in strict):
        raise FanError("strict rays must be C-rays")
    a_ub, b_ub, a_eq, b_eq = sorting_constraints(q, strict)
    x = feasible_point(a_ub, b_ub, a_eq, b_eq, nvars=q.fan.ambient_rank)
    return None if x is None else LinearFunctional(tuple(x))


def unsettled_cones(q: FanQuadruple, settling: Iterable[Sequence]) -> list[frozenset]:
    """Cones (as ray-index sets) containing no ray from `settling`."""
    marks = q.fan.indices(r for r in settling if tuple(r) in q.fan.index)
    return [c for c in q.fan.all_cones if not c & marks]


def _check_mode(q: FanQuadruple, mode: SortednessMode) -> None:
    if not mode.b_sharp <= q.B or not mode.c_flat <= q.C or not mode.h_sharp <= q.H:
        raise FanError("mode sets must be subsets of B, C, H respectively")


def classify_sorted(q: FanQuadruple, mode: SortednessMode) -> SortednessCertificate | Counterexample:
    _check_mode(q, mode)
    b_flat = q.B - mode.b_sharp
    h_flat = q.H - mode.h_sharp
    cones = unsettled_cones(q, b_flat | h_flat)

    def solve(c):
        local = restrict(q, c)
        strict = mode.c_flat & q.fan.vectors(c)
        return find_sorting_function(local, sorted(strict))

    results = parallel_map(solve, cones)
    found = []
    for c, rho in zip(cones, results):
        if rho is None:
            return Counterexample(mode, q.fan.vectors(c))
        found.append((q.fan.vectors(c), rho))
    return SortednessCertificate(mode, tuple(found))


def is_well_sorted(q: FanQuadruple) -> bool:
    return isinstance(classify_sorted(q, SortednessMode.well(q)), SortednessCertificate)


def is_partially_sorted(q: FanQuadruple) -> bool:
    return isinstance(classify_sorted(q, SortednessMode.partial(q)), SortednessCertificate)


def verify_sortedness_certificate(q: FanQuadruple, cert: SortednessCertificate) -> list[str]:
    """Independent re-check with plain integer/rational arithmetic; returns a list of failures."""
    problems = []
    mode = cert.mode
    settle = (q.B - mode.b_sharp) | (q.H - mode.h_sharp)
    expected = {frozenset(q.fan.vectors(c)) for c in q.fan.all_cones if not (q.fan.vectors(c) & settle)}
    given = {rays for rays, _ in cert.cones}
    if given != expected:
        problems.append("certificate does not cover exactly the unsettled cones")
    for rays, rho in cert.cones:
        cov = [Fraction(x) for x in rho.covector]
        for r in rays:
            val = sum(a * b for a, b in zip(cov, r))
            if r in q.B and val < 0:
                problems.append(f"negative on B-ray {r}")
            elif r in q.C and (val > 0 or (r in mode.c_flat and val >= 0)):
                problems.append(f"sign violated on C-ray {r}")
            elif r not in q.marked and val != 0:
                problems.append(f"nonzero on A-ray {r}")
    return problems


@dataclass(frozen=True)
class GeometricVerdict:
    ok: bool
    distinguished: tuple  # ((cone ray vectors, face ray vectors), ...) or the failing cone alone


def geometric_partial_check(q: FanQuadruple) -> GeometricVerdict:
    """Every (B ∪ H)-unsettled cone has a face whose rays are exactly its A-rays."""
    faces_found = []
    for c in unsettled_cones(q, q.B | q.H):
        a_rays = frozenset(i for i in c if q.fan.rays[i] in q.A)
        if a_rays not in set(q.fan.faces_of(c)):
            return GeometricVerdict(False, ((q.fan.vectors(c), None),))
        faces_found.append((q.fan.vectors(c), q.fan.vectors(a_rays)))
    return GeometricVerdict(True, tuple(faces_found))


def certificate_to_json(cert: SortednessCertificate, q: FanQuadruple) -> dict:
    def idx(rays):
        return sorted(q.fan.index[r] for r in rays)

    return {
        "mode": {"B_sharp": idx(cert.mode.b_sharp), "C_flat": idx(cert.mode.c_flat), "H_sharp": idx(cert.mode.h_sharp)},
        "cones": [{"rays": idx(rays), "rho": [str(x) for x in rho.covector]} for rays, rho in cert.cones],
    }
