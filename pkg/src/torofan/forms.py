"""Logarithmic forms on toric triples: the subspace map φ, graded pieces and their verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from math import comb
from typing import Iterable, Sequence

from .cones import Cone
from .fans import (
    FanError,
    FanQuadruple,
    TorusDivisor,
    _ray,
    orbit_closure_triple,
    restrict,
    xi_face,
)
from .linalg import (
    DifferentialError,
    Subspace,
    dot,
    exterior_product_matrix,
    intersect_all,
    mat_vec,
    nullspace,
    wedge_power,
)
from .parallel import parallel_map


class FormError(ValueError):
    pass


@dataclass(frozen=True)
class FormSpec:
    triple: FanQuadruple
    p: int
    twist: TorusDivisor | None = None

    def __post_init__(self):
        n = self.triple.fan.ambient_rank
        if self.triple.H:
            raise FormError("forms are defined on triples (H must be empty)")
        if not 0 <= self.p <= n:
            raise FormError(f"form degree {self.p} outside [0, {n}]")
        if self.twist is not None and not self.twist.is_integral():
            raise FormError("twist divisor must have integral coefficients")

    @property
    def rank(self) -> int:
        return self.triple.fan.ambient_rank

    def coefficient(self, ray: Sequence) -> int:
        return 0 if self.twist is None else int(self.twist.get(ray))

    def with_p(self, p: int) -> "FormSpec":
        return FormSpec(self.triple, p, self.twist)


@dataclass(frozen=True)
class GradedPiece:
    degree: tuple
    value: Subspace

    @property
    def dim(self) -> int:
        return self.value.dim


@dataclass(frozen=True)
class HilbertTable:
    bound: int
    dims: dict  # degree -> dimension

    def to_json(self) -> dict:
        return {"bound": self.bound, "dims": [{"m": list(m), "dim": d} for m, d in sorted(self.dims.items())]}


def _as_vectors(q: FanQuadruple, zeta: Iterable) -> frozenset:
    zeta = list(zeta)
    if all(isinstance(z, int) for z in zeta):
        return q.fan.vectors(zeta)
    return frozenset(_ray(z) for z in zeta)


def _chart_containing(q: FanQuadruple, zeta: frozenset) -> frozenset:
    idx = q.fan.indices(zeta) if zeta else frozenset()
    for c in q.fan.maximal_cones:
        if idx <= c and idx in set(q.fan.faces_of(c)):
            return c
    raise FanError(f"{sorted(zeta)} is not a cone of the fan")


def hyperplane(v: Sequence) -> Subspace:
    return Subspace.span(nullspace([list(v)], len(v)), len(v))


@lru_cache(maxsize=None)
def _orthogonal_face_span(tau: Cone, ray: tuple) -> Subspace:
    sigma = tau.dual
    gens = [d for d in sigma.rays if dot(d, ray) == 0] + list(sigma.lineality.basis)
    return Subspace.span(gens, tau.ambient_rank)


@lru_cache(maxsize=None)
def _phi(q: FanQuadruple, zeta: frozenset) -> Subspace:
    n = q.fan.ambient_rank
    if zeta & q.B:
        return Subspace.zero(n)
    tau = q.fan.cone(_chart_containing(q, zeta))
    spans = [_orthogonal_face_span(tau, nu) for nu in sorted(zeta & q.A)]
    return intersect_all(spans, n)


def phi(q: FanQuadruple, zeta: Iterable) -> Subspace:
    """Subspace of M_Q attached to a cone: {0} on the star of B, else ⋂ Span(σ ∩ ν^⊥) over A-rays ν.

    The cone is given by ray vectors or by ray indices of q.fan.
    """
    zeta = _as_vectors(q, zeta)
    if q.H:
        raise FormError("φ is defined on triples")
    _chart_containing(q, zeta)
    return _phi(q, zeta)


def _require_affine(spec: FormSpec) -> Cone:
    q = spec.triple
    if not q.is_affine():
        raise FormError("graded pieces are computed on affine charts")
    return q.fan.cone(q.fan.maximal_cones[0])


@lru_cache(maxsize=None)
def _wedge(space: Subspace, p: int) -> Subspace:
    return wedge_power(space, p)


def graded_piece(spec: FormSpec, m: Sequence) -> GradedPiece:
    """Weight-m piece via the smallest face Γ(m) of σ and its dual face of τ."""
    if spec.twist is not None:
        raise FormError("use twisted_graded_piece for twisted sheaves")
    tau = _require_affine(spec)
    q = spec.triple
    n = spec.rank
    m = tuple(m)
    zero = Subspace.zero(comb(n, spec.p))
    sigma = tau.dual
    if not sigma.contains(m):
        return GradedPiece(m, zero)
    if any(dot(m, b) == 0 for b in q.B):
        return GradedPiece(m, zero)
    face = sigma.smallest_face_containing(m)
    normals = list(face.rays) + list(face.lineality.basis)
    dual_face = frozenset(r for r in q.fan.rays if all(dot(g, r) == 0 for g in normals))
    return GradedPiece(m, _wedge(_phi(q, dual_face), spec.p))


@lru_cache(maxsize=None)
def _piece_from_vanishing(n: int, p: int, vanishing: frozenset) -> Subspace:
    return _wedge(intersect_all([hyperplane(v) for v in sorted(vanishing)], n), p)


def chart_piece(spec: FormSpec, chart_rays: Iterable[Sequence], m: Sequence) -> Subspace:
    """Weight-m piece on the chart spanned by `chart_rays`, by the per-ray sign rule on t = ⟨m,v⟩ + a_v."""
    q = spec.triple
    n = spec.rank
    vanishing = []
    for v in chart_rays:
        t = dot(m, v) + spec.coefficient(v)
        if t < 0:
            return Subspace.zero(comb(n, spec.p))
        if t == 0:
            role = q.role(v)
            if role == "B":
                return Subspace.zero(comb(n, spec.p))
            if role == "A":
                vanishing.append(_ray(v))
    return _piece_from_vanishing(n, spec.p, frozenset(vanishing))


def piece_from_signs(q: FanQuadruple, p: int, chart_rays: Iterable[Sequence], signs: dict) -> Subspace:
    """Same rule as chart_piece, from the sign of t per ray instead of a degree."""
    n = q.fan.ambient_rank
    vanishing = []
    for v in chart_rays:
        s = signs[_ray(v)]
        if s < 0 or (s == 0 and q.role(v) == "B"):
            return Subspace.zero(comb(n, p))
        if s == 0 and q.role(v) == "A":
            vanishing.append(_ray(v))
    return _piece_from_vanishing(n, p, frozenset(vanishing))


def twisted_graded_piece(spec: FormSpec, m: Sequence) -> GradedPiece:
    _require_affine(spec)
    return GradedPiece(tuple(m), chart_piece(spec, spec.triple.fan.rays, m))


def any_graded_piece(spec: FormSpec, m: Sequence) -> GradedPiece:
    return graded_piece(spec, m) if spec.twist is None else twisted_graded_piece(spec, m)


def window(n: int, bound: int) -> list[tuple]:
    rng = range(-bound, bound + 1)
    return list(product(rng, repeat=n))


def hilbert_table(spec: FormSpec, bound: int) -> HilbertTable:
    """Dimensions over the ambient box |m_i| ≤ bound (zero outside the support)."""
    degrees = window(spec.rank, bound)
    dims = parallel_map(lambda m: any_graded_piece(spec, m).dim, degrees)
    return HilbertTable(bound, dict(zip(degrees, dims)))


def de_rham_differential(spec: FormSpec, m: Sequence) -> tuple:
    """Matrix of ω ↦ m∧ω, checked to map the p-piece into the (p+1)-piece."""
    if spec.twist is not None:
        raise FormError("the de Rham differential is only provided for untwisted sheaves")
    if spec.p >= spec.rank:
        raise FormError("no differential out of top-degree forms")
    mat = exterior_product_matrix(tuple(m), spec.p)
    source = graded_piece(spec, m).value
    target = graded_piece(spec.with_p(spec.p + 1), m).value
    for b in source.basis:
        if not target.contains(mat_vec(mat, b)):
            raise DifferentialError(spec.p, f"m∧ω leaves the target piece at m={tuple(m)}")
    return mat


# ---------------------------------------------------------------- verifiers


@dataclass
class Report:
    name: str
    ok: bool = True
    checked: int = 0
    mismatches: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def fail(self, item) -> None:
        self.ok = False
        self.mismatches.append(item)

    def to_json(self) -> dict:
        return {
            "check": self.name,
            "ok": self.ok,
            "checked": self.checked,
            "mismatches": [_jsonable(x) for x in self.mismatches],
            "notes": _jsonable(self.notes),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, frozenset, set)):
        items = [_jsonable(v) for v in x]
        return sorted(items, key=repr) if isinstance(x, (set, frozenset)) else items
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    return str(x)


def _ps(spec_rank: int, ps: Iterable[int] | None) -> list[int]:
    return list(range(spec_rank + 1)) if ps is None else list(ps)


def verify_reflexive_intersection(q: FanQuadruple, bound: int, ps: Iterable[int] | None = None) -> Report:
    """Piece on τ versus the intersection of the pieces on the half-space charts of its rays.

    A non-affine fan is checked chart by chart.
    """
    if not q.is_affine():
        report = Report("reflexive-intersection", notes={"bound": bound, "charts": len(q.fan.maximal_cones)})
        for sigma in q.fan.maximal_cones:
            local = verify_reflexive_intersection(restrict(q, sigma), bound, ps)
            report.checked += local.checked
            for item in local.mismatches:
                report.fail({"chart": sorted(sigma), **item})
        return report
    n = q.fan.ambient_rank
    tau = q.fan.cone(q.fan.maximal_cones[0])
    if tau.dim != n:
        raise FormError("reflexive check needs a full-dimensional cone")
    halves = [restrict(q, frozenset({i})) for i in range(len(q.fan.rays))]
    report = Report("reflexive-intersection", notes={"bound": bound, "charts": len(halves)})
    for p in _ps(n, ps):
        degrees = window(n, bound)

        def compare(m, p=p):
            lhs = graded_piece(FormSpec(q, p), m).value
            rhs = intersect_all([graded_piece(FormSpec(h, p), m).value for h in halves], comb(n, p))
            return lhs == rhs

        for m, same in zip(degrees, parallel_map(compare, degrees)):
            report.checked += 1
            if not same:
                report.fail({"p": p, "m": m})
    return report


def pushforward_hypotheses(base: FanQuadruple, model: FanQuadruple) -> list[str]:
    """Toric form of the four conditions relating decorations upstairs and downstairs."""
    problems = []
    image = {r: base.fan.vectors(base.fan.smallest_cone_containing(r)) for r in model.fan.rays}
    base_rays = set(base.fan.rays)
    for r in model.fan.rays:
        img = image[r]
        if r in model.B and not img & base.B:
            problems.append(f"B-ray {r} does not map into B")
        if r in model.C and not img & base.C and r in base_rays:
            problems.append(f"C-ray {r} is neither over C nor exceptional")
        if img & base.C and not img & base.B and r not in model.C:
            problems.append(f"ray {r} lies over C away from B but is not in C'")
    for b in base.B:
        if b not in model.B:
            problems.append(f"B-ray {b} has no dominating B'-component")
    return problems


def verify_pushforward(
    base: FanQuadruple, model: FanQuadruple, bound: int, ps: Iterable[int] | None = None
) -> Report:
    """Degreewise and cone-wise comparison of forms on an affine base and on a subdivision of it."""
    if not base.is_affine():
        raise FormError("pushforward is checked over an affine base")
    n = base.fan.ambient_rank
    report = Report("pushforward", notes={"bound": bound})
    hyp = pushforward_hypotheses(base, model)
    report.notes["hypotheses"] = hyp or "satisfied"
    if hyp:
        report.ok = False
    charts = [restrict(model, c) for c in model.fan.maximal_cones]
    report.notes["charts"] = len(charts)
    for p in _ps(n, ps):
        degrees = window(n, bound)

        def compare(m, p=p):
            lhs = graded_piece(FormSpec(base, p), m).value
            rhs = intersect_all([chart_piece(FormSpec(model, p), ch.fan.rays, m) for ch in charts], comb(n, p))
            return lhs == rhs

        for m, same in zip(degrees, parallel_map(compare, degrees)):
            report.checked += 1
            if not same:
                report.fail({"p": p, "m": m})
    cone_failures = []
    for zeta in base.fan.all_cones:
        lhs = phi(base, zeta)
        parts = []
        for c, ch in zip(model.fan.maximal_cones, charts):
            face = xi_face(base.fan, zeta, model.fan, c)
            parts.append(phi(ch, model.fan.vectors(face)))
        report.checked += 1
        if lhs != intersect_all(parts, n):
            cone_failures.append(sorted(zeta))
    for z in cone_failures:
        report.fail({"cone": z})
    return report


# ---------------------------------------------------------------- short exact sequences


def _minimal_cone(fan, rays: frozenset) -> frozenset | None:
    containing = [c for c in fan.all_cones if rays <= c]
    return min(containing, key=len) if containing else None


def ses_hypotheses(q: FanQuadruple, xi: Sequence, mode: str) -> dict:
    """Mechanical check of the conditions for the two sequences; keys name each condition."""
    fan = q.fan
    xi = _ray(xi)
    if xi not in fan.index:
        raise FanError(f"{xi} is not a ray of the fan")
    x = fan.index[xi]
    out: dict = {}
    out["not_marked"] = [] if xi in q.A else [list(xi)]
    bad_div = []
    for r in sorted(q.B | q.C):
        eta = _minimal_cone(fan, frozenset({x, fan.index[r]}))
        if eta is not None and fan.cone_dim(eta) != 2:
            bad_div.append(list(r))
    out["restrictions_are_divisors"] = bad_div
    bad_extra = []
    for i, r in enumerate(fan.rays):
        if i == x or r in q.C:
            continue
        eta = _minimal_cone(fan, frozenset({x, i}))
        if eta is None:
            continue
        vecs = fan.vectors(eta)
        if vecs & q.C and not vecs & q.B:
            bad_extra.append(list(r))
    out["c_divisor_condition"] = bad_extra
    if mode == "addC":
        others = sorted(fan.index[a] for a in q.A if a != xi)
        failing_all, failing_minimal = [], []
        sets = []
        for k in range(1, len(others) + 1):
            for s in combinations(others, k):
                eta = _minimal_cone(fan, frozenset(s))
                if eta is not None:
                    sets.append((frozenset(s), eta))
        for s, eta in sets:
            if x in eta:
                failing_all.append(sorted(s))
                if not any(s < t for t, _ in sets):
                    failing_minimal.append(sorted(s))
        out["intersection_condition"] = failing_all
        out["intersection_condition_minimal_reading"] = failing_minimal
    elif mode != "addB":
        raise FormError("mode must be 'addB' or 'addC'")
    return out


@dataclass
class SesReport:
    mode: str
    ray: tuple
    hypotheses: dict
    eligible: bool
    identity_holds: bool
    checked: list
    failures: list

    def to_json(self) -> dict:
        return _jsonable(
            {
                "mode": self.mode,
                "ray": list(self.ray),
                "eligible": self.eligible,
                "identity_holds": self.identity_holds,
                "hypotheses": self.hypotheses,
                "checked_cones": self.checked,
                "failures": self.failures,
            }
        )


def verify_phi_ses_identities(q: FanQuadruple, xi: Sequence, mode: str) -> SesReport:
    """Check the φ-level identities behind the sequences adding E = D_ξ to B or to C.

    Hypotheses are reported; the identities are evaluated regardless, except for an
    already marked ray, where the sequences are undefined.
    """
    hyp = ses_hypotheses(q, xi, mode)
    eligible = not any(v for k, v in hyp.items() if k != "intersection_condition_minimal_reading")
    fan = q.fan
    xi = _ray(xi)
    if q.role(xi) != "A":
        return SesReport(mode, xi, hyp, False, False, [], [{"ray": list(xi), "reason": "already marked"}])
    x = fan.index[xi]
    checked, failures = [], []
    if mode == "addB":
        e_triple, star = orbit_closure_triple(q, xi)
        back = {orig: img for img, orig in star.lift.items()}
        for zeta in fan.all_cones:
            if x not in zeta or fan.vectors(zeta) & q.B:
                continue
            lhs = phi(q, zeta)
            images = frozenset(back[fan.rays[i]] for i in zeta if i != x and fan.rays[i] in back)
            rhs = star.to_ambient(phi(e_triple, images))
            checked.append(sorted(zeta))
            if lhs != rhs:
                failures.append({"cone": sorted(zeta), "lhs_dim": lhs.dim, "rhs_dim": rhs.dim})
    else:
        widened = FanQuadruple(fan, q.B, q.C | {xi})
        for zeta in fan.all_cones:
            if x not in zeta or fan.vectors(zeta) & q.B:
                continue
            before, after = phi(q, zeta).dim, phi(widened, zeta).dim
            checked.append(sorted(zeta))
            if after != before + 1:
                failures.append({"cone": sorted(zeta), "dim_before": before, "dim_after": after})
    return SesReport(mode, xi, hyp, eligible, not failures, checked, failures)
