"""Star subdivisions, extensions, good sorting functions, convexity and log-simplicial resolution."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .cones import Cone, intersect_cones
from .fans import (
    Fan,
    FanQuadruple,
    c_before_b,
    order_is_valid,
    restrict,
    subfan_inside,
)
from .linalg import dot, primitive, solve
from .lp import feasible_point
from .parallel import parallel_map
from .sortedness import find_sorting_function, is_well_sorted


class SubdivisionError(ValueError):
    pass


def _ray(v) -> tuple:
    return tuple(int(x) for x in v)


def star_subdivision(fan: Fan, nu: Sequence) -> Fan:
    nu = primitive(nu)
    if not fan.support_contains(nu):
        raise SubdivisionError(f"ray {nu} lies outside the support")
    cones = []
    for sigma in fan.maximal_cones:
        cone = fan.cone(sigma)
        if not cone.contains(nu):
            cones.append(fan.vectors(sigma))
            continue
        for facet in fan.codim_one_faces(sigma):
            if not fan.cone(facet).contains(nu):
                cones.append(fan.vectors(facet) | {nu})
    order = list(fan.rays) + ([nu] if nu not in fan.index else [])
    return Fan.from_vector_cones(fan.ambient_rank, cones, order)


def ext(sub: Fan, tau_rays: Iterable[Sequence], nu: Sequence) -> Fan:
    """Extension of a subdivision of Cone(tau_rays) by the ray nu."""
    n = sub.ambient_rank
    tau_rays = [_ray(r) for r in tau_rays]
    nu = _ray(nu)
    tau = Cone.from_generators(tau_rays, n)
    if tau.contains(nu):
        raise SubdivisionError("the extending ray lies in the cone")
    big = Cone.from_generators(tau_rays + [nu], n)
    cones = [sub.vectors(c) for c in sub.maximal_cones]
    if big.dim == tau.dim + 1:
        cones += [sub.vectors(c) | {nu} for c in sub.maximal_cones]
    else:
        separating = [nv for nv in tau.facet_normals if dot(nv, nu) < 0]
        for c in sub.all_cones:
            if sub.cone_dim(c) != tau.dim - 1:
                continue
            if any(all(dot(nv, sub.rays[i]) == 0 for i in c) for nv in separating):
                cones.append(sub.vectors(c) | {nu})
    return Fan.from_vector_cones(n, cones, list(sub.rays) + [nu])


@dataclass(frozen=True)
class PLFunction:
    """Piecewise-linear function on a base cone: one covector per maximal piece."""

    base: frozenset  # ray vectors of the base cone
    pieces: tuple  # ((frozenset of ray vectors, covector), ...)

    def value(self, ray: Sequence) -> Fraction:
        ray = _ray(ray)
        for rays, cov in self.pieces:
            if ray in rays:
                return dot(cov, ray)
        raise KeyError(ray)

    def covector(self, rays: frozenset) -> tuple:
        return dict(self.pieces)[rays]

    def to_json(self, fan: Fan) -> dict:
        return {
            "base": sorted(list(r) for r in self.base),
            "pieces": [
                {"rays": sorted(fan.index[r] for r in rays), "psi": [str(x) for x in cov]}
                for rays, cov in self.pieces
            ],
        }


def _pieces_over(sub: Fan, base: Cone) -> list[frozenset]:
    local = subfan_inside(sub, base)
    pieces = [local.vectors(c) for c in local.maximal_cones if local.cone_dim(c) == base.dim]
    return sorted(pieces, key=lambda s: sorted(s))


def find_good_sorting_function(
    sub: Fan,
    base_rays: Iterable[Sequence],
    quad: FanQuadruple,
    coarse: Fan | None = None,
) -> PLFunction | None:
    """One exact LP over all piece covectors.

    Continuity on shared rays, a gap of at least 1 across every wall interior to the
    base (or to a cone of `coarse` when given), and the sorting signs of `quad`.
    """
    n = sub.ambient_rank
    base_rays = frozenset(_ray(r) for r in base_rays)
    base = Cone.from_generators(sorted(base_rays), n)
    pieces = _pieces_over(sub, base)
    if not pieces:
        raise SubdivisionError("the subdivision has no full pieces over the base cone")
    covered = set().union(*pieces)
    nv = n * len(pieces)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []

    def row(terms):
        out = [Fraction(0)] * nv
        for k, vec, sign in terms:
            for j in range(n):
                out[k * n + j] += sign * vec[j]
        return out

    holders = {r: [k for k, p in enumerate(pieces) if r in p] for r in sorted(covered)}
    for r, ks in holders.items():
        for k in ks[1:]:
            a_eq.append(row([(ks[0], r, 1), (k, r, -1)]))
            b_eq.append(0)
    coarse_cones = None
    if coarse is not None:
        coarse_cones = [coarse.cone(c) for c in coarse.maximal_cones]
    dim = base.dim
    for k1 in range(len(pieces)):
        for k2 in range(k1 + 1, len(pieces)):
            wall = pieces[k1] & pieces[k2]
            if not wall or Cone.from_generators(sorted(wall), n).dim != dim - 1:
                continue
            if coarse_cones is not None:
                both = pieces[k1] | pieces[k2]
                if not any(all(c.contains(r) for r in both) for c in coarse_cones):
                    continue
            for a, b in ((k1, k2), (k2, k1)):
                for g in sorted(pieces[b] - pieces[a]):
                    # <psi_a, g> - <psi_b, g> >= 1
                    a_ub.append(row([(a, g, -1), (b, g, 1)]))
                    b_ub.append(-1)
    for r, ks in holders.items():
        role = quad.role(r) if r in quad.fan.index else "A"
        k = ks[0]
        if role == "B":
            a_ub.append(row([(k, r, -1)]))
            b_ub.append(0)
        elif role == "C":
            a_ub.append(row([(k, r, 1)]))
            b_ub.append(0)
        elif role == "A":
            a_eq.append(row([(k, r, 1)]))
            b_eq.append(0)
    x = feasible_point(a_ub, b_ub, a_eq, b_eq, nvars=nv)
    if x is None:
        return None
    return PLFunction(base_rays, tuple((p, tuple(x[k * n:(k + 1) * n])) for k, p in enumerate(pieces)))


def verify_good_sorting_function(sub: Fan, psi: PLFunction, quad: FanQuadruple) -> list[str]:
    """Independent check: ψ is the minimum of its pieces, strictly off each piece, with sorting signs.

    Uses only inner products and the list of pieces, not the wall structure used by the LP.
    """
    n = sub.ambient_rank
    problems = []
    base = Cone.from_generators(sorted(psi.base), n)
    expected = {frozenset(p) for p in _pieces_over(sub, base)}
    given = [rays for rays, _ in psi.pieces]
    if set(given) != expected or len(given) != len(expected):
        problems.append("pieces are not the maximal cones over the base")
    rays = sorted(set().union(*given)) if given else []
    values = {}
    for g in rays:
        vals = {sum((Fraction(c) * x for c, x in zip(cov, g)), Fraction(0)) for p, cov in psi.pieces if g in p}
        if len(vals) != 1:
            problems.append(f"discontinuous at ray {g}")
        values[g] = min(vals)
    for p, cov in psi.pieces:
        for g in rays:
            if g in p:
                continue
            val = sum((Fraction(c) * x for c, x in zip(cov, g)), Fraction(0))
            if not val > values[g]:
                problems.append(f"piece {sorted(p)} is not strictly above the function at ray {g}")
    for g, v in values.items():
        role = quad.role(g) if g in quad.fan.index else "A"
        if (role == "B" and v < 0) or (role == "C" and v > 0) or (role == "A" and v != 0):
            problems.append(f"sorting sign violated at ray {g} ({role}, value {v})")
    return problems


def is_locally_convex(base: Fan, quad: FanQuadruple) -> tuple | None:
    """Good sorting functions over every maximal cone of `base` for the subdivision `quad.fan`."""

    def one(sigma):
        return find_good_sorting_function(quad.fan, base.vectors(sigma), quad)

    found = parallel_map(one, base.maximal_cones)
    if any(psi is None for psi in found):
        return None
    return tuple((base.vectors(s), psi) for s, psi in zip(base.maximal_cones, found))


@dataclass(frozen=True)
class Step:
    kind: str  # "star" or "ext"
    datum: tuple | None  # the ray starred or used for the extension
    before: FanQuadruple
    after: FanQuadruple
    certificates: tuple | None = None  # ((base ray vectors, PLFunction), ...)


@dataclass(frozen=True)
class ResolutionChain:
    source: FanQuadruple
    steps: tuple
    order: tuple = ()

    @property
    def final(self) -> FanQuadruple:
        return self.steps[-1].after if self.steps else self.source

    def is_efficient(self) -> bool:
        return set(self.final.fan.rays) == set(self.source.fan.rays)


def sequential_star(q: FanQuadruple, rays: Iterable[Sequence], order: Sequence[Sequence]) -> ResolutionChain:
    """Stars at the rays of `order`, applied from last to first."""
    rays = {_ray(r) for r in rays}
    order = [_ray(r) for r in order]
    if not order_is_valid(order, rays):
        raise SubdivisionError("the order must list exactly the chosen rays")
    if not rays <= q.marked:
        raise SubdivisionError("sequential stars use decorated rays only")
    steps = []
    current = q
    for nu in reversed(order):
        fan = star_subdivision(current.fan, nu)
        after = current.on(fan)
        steps.append(Step("star", nu, current, after))
        current = after
    return ResolutionChain(q, tuple(steps), tuple(order))


def is_sequentially_convex(chain: ResolutionChain) -> tuple[bool, tuple]:
    """Per step, convexity over every cone of the source left unsettled by the earlier stars."""
    if any(s.kind != "star" for s in chain.steps):
        raise SubdivisionError("sequential convexity is defined for chains of stars")
    source = chain.source.fan
    done: set = set()
    report = []
    ok = True
    for step in chain.steps:
        marks = source.indices(r for r in done if r in source.index)
        unsettled = [c for c in source.all_cones if not c & marks and c]
        certs = []
        for zeta in unsettled:
            psi = find_good_sorting_function(step.after.fan, source.vectors(zeta), step.after)
            certs.append((source.vectors(zeta), psi))
            if psi is None:
                ok = False
        report.append(tuple(certs))
        done.add(step.datum)
    return ok, tuple(report)


def certify_chain(chain: ResolutionChain) -> ResolutionChain:
    steps = tuple(
        Step(s.kind, s.datum, s.before, s.after, is_locally_convex(s.before.fan, s.after)) for s in chain.steps
    )
    return ResolutionChain(chain.source, steps, chain.order)


def verify_chain(chain: ResolutionChain) -> list[str]:
    """Independent re-check of every certificate of every step."""
    problems = []
    for k, s in enumerate(chain.steps):
        if s.certificates is None:
            problems.append(f"step {k}: no certificate")
            continue
        bases = {s.before.fan.vectors(c) for c in s.before.fan.maximal_cones}
        if {b for b, _ in s.certificates} != bases:
            problems.append(f"step {k}: certificates do not cover the base cones")
        for _, psi in s.certificates:
            problems += [f"step {k}: {p}" for p in verify_good_sorting_function(s.after.fan, psi, s.after)]
    return problems


def _resolve_affine(q: FanQuadruple, order: Sequence[tuple]) -> Fan:
    n = q.fan.ambient_rank
    order = [r for r in order if r in q.B or r in q.C]
    if not q.B:
        tau = [r for r in q.fan.rays if r in q.A]
        current = Fan.affine(n, tau) if tau else Fan(n, (), (frozenset(),))
        for nu in order:
            current = ext(current, tau, nu)
            tau.append(nu)
        return Fan.from_vector_cones(n, [current.vectors(c) for c in current.maximal_cones], q.fan.rays)
    beta = order[-1]
    starred = star_subdivision(q.fan, beta)
    b_index = starred.index[beta]
    cones = []
    for sigma in starred.maximal_cones:
        zeta = sigma - {b_index}
        face = q.on(starred.face_fan(zeta))
        local = _resolve_affine(face, order)
        extended = ext(local, starred.vectors(zeta), beta)
        cones += [extended.vectors(c) for c in extended.maximal_cones]
    return Fan.from_vector_cones(n, cones, q.fan.rays)


def resolve_final_fan(q: FanQuadruple, order: Sequence[Sequence]) -> Fan:
    order = [_ray(r) for r in order]
    if q.is_affine():
        return _resolve_affine(q, order)
    cones = []
    for sigma in q.fan.maximal_cones:
        local = _resolve_affine(restrict(q, sigma), order)
        cones += [local.vectors(c) for c in local.maximal_cones]
    return Fan.from_vector_cones(q.fan.ambient_rank, cones, q.fan.rays)


def _check_order(q: FanQuadruple, order: Sequence[tuple]) -> None:
    if q.H:
        raise SubdivisionError("resolution is implemented for triples only")
    if not order_is_valid(order, q.B | q.C):
        raise SubdivisionError("the order must list every B- and C-ray exactly once")
    if not c_before_b(order, q):
        raise SubdivisionError("the order must place every C-ray before every B-ray (C ≺ B)")


def resolve_log_simplicial(q: FanQuadruple, order: Sequence[Sequence], certify: bool = True) -> ResolutionChain:
    order = tuple(_ray(r) for r in order)
    _check_order(q, order)
    steps = []
    current = q
    if q.is_affine() and q.B:
        beta = order[-1]
        starred = q.on(star_subdivision(q.fan, beta))
        if not starred.fan.same_as(current.fan):
            steps.append(Step("star", beta, current, starred))
            current = starred
        final = q.on(_resolve_affine(q, order))
        datum = beta
    else:
        final = q.on(resolve_final_fan(q, order))
        datum = None
    if not final.fan.same_as(current.fan):
        steps.append(Step("ext", datum, current, final))
    chain = ResolutionChain(q, tuple(steps), order)
    return certify_chain(chain) if certify else chain


def canonicity_failures(q: FanQuadruple, order: Sequence[Sequence], final: Fan) -> list[tuple]:
    """Cones ξ where resolving the restriction differs from restricting the resolution."""
    bad = []
    for xi in q.fan.all_cones:
        if not xi:
            continue
        local = resolve_final_fan(restrict(q, xi), order)
        there = subfan_inside(final, q.fan.cone(xi))
        if not local.same_as(there):
            bad.append(tuple(sorted(q.fan.vectors(xi))))
    return bad


def star_quadruple(q: FanQuadruple, nu: Sequence, role: str = "B") -> FanQuadruple:
    """The star at nu with decorations carried over; a new ray gets the given role."""
    nu = primitive(nu)
    fan = star_subdivision(q.fan, nu)
    if nu in q.fan.index:
        return q.on(fan)
    return q.on(fan, **{role: {nu}})


def star_convexity_function(fan: Fan, nu: Sequence) -> PLFunction:
    """Positive at nu, zero on every other ray, for the star of an affine fan at nu."""
    nu = primitive(nu)
    (sigma,) = fan.maximal_cones
    base = fan.vectors(sigma)
    star = star_subdivision(fan, nu)
    n = fan.ambient_rank
    pieces = []
    tau = fan.cone(sigma)
    for p in _pieces_over(star, tau):
        others = sorted(p - {nu})
        rows = [list(r) for r in others] + [list(nu)]
        rhs = [0] * len(others) + [1]
        cov = solve(rows, rhs, n)
        if cov is None:
            raise SubdivisionError("piece is not of the form Cone(facet, nu)")
        pieces.append((p, cov))
    return PLFunction(base, tuple(pieces))


def star_at_c_witness(q: FanQuadruple, nu: Sequence) -> tuple[PLFunction, Fraction] | None:
    """ψ + αρ for a ν-strict sorting function ρ, with α making the value at ν zero."""
    nu = _ray(nu)
    if nu not in q.C:
        raise SubdivisionError("the witness is for a C-ray")
    rho = find_sorting_function(q, [nu])
    if rho is None:
        return None
    psi = star_convexity_function(q.fan, nu)
    alpha = psi.value(nu) / -rho(nu)
    pieces = tuple((p, tuple(a + alpha * b for a, b in zip(cov, rho.covector))) for p, cov in psi.pieces)
    return PLFunction(psi.base, pieces), alpha


def composition_witness(
    psi0: PLFunction, middle: Fan, psi1: PLFunction, final: FanQuadruple, max_halvings: int = 64
) -> tuple[PLFunction, Fraction] | None:
    """ψ0 + εψ1 with ε the largest power of 1/2 giving a verified good sorting function."""
    outer = {}
    for p, cov in psi1.pieces:
        host = [c for c, _ in psi0.pieces if p <= _hull_rays(middle, c, p)]
        if not host:
            return None
        outer[p] = dict(psi0.pieces)[host[0]]
    eps = Fraction(1)
    for _ in range(max_halvings):
        pieces = tuple(
            (p, tuple(a + eps * b for a, b in zip(outer[p], cov))) for p, cov in psi1.pieces
        )
        candidate = PLFunction(psi0.base, pieces)
        if not verify_good_sorting_function(final.fan, candidate, final):
            return candidate, eps
        eps /= 2
    return None


def _hull_rays(middle: Fan, coarse_piece: frozenset, fine_piece: frozenset) -> frozenset:
    cone = Cone.from_generators(sorted(coarse_piece), middle.ambient_rank)
    return frozenset(r for r in fine_piece if cone.contains(r))


@dataclass(frozen=True)
class SeparatingRay:
    ray: tuple
    b_plus: frozenset
    c_plus: frozenset


def find_separating_ray(q: FanQuadruple) -> SeparatingRay:
    if not q.is_affine():
        raise SubdivisionError("the separating ray is defined for affine triples")
    if is_well_sorted(q):
        raise SubdivisionError("well-sorted input: no separating ray exists")
    (sigma,) = q.fan.maximal_cones
    n = q.fan.ambient_rank
    tau = q.fan.cone(sigma)
    if len(tau.rays) != tau.dim + 1:
        raise SubdivisionError("the cone must have exactly dim + 1 rays")
    for face in q.fan.all_cones:
        if face != sigma and q.fan.cone_dim(face) != len(face):
            raise SubdivisionError("every proper face must be simplicial")
    a_rays = sorted(q.A)
    b_bar = sorted(q.B | q.A)
    c_bar = sorted(q.C | q.A)
    b_cone = Cone.from_generators(b_bar, n)
    c_cone = Cone.from_generators(c_bar, n)
    xi = intersect_cones(b_cone, c_cone)
    a_cone = Cone.from_generators(a_rays, n)
    candidates = sorted(r for r in xi.rays if not a_cone.contains(r))
    if not candidates:
        raise SubdivisionError("no ray of the intersection lies outside Cone(A)")
    nu = tuple(int(x) for x in candidates[0])
    b_plus = frozenset(b_cone.rays[i] for i in b_cone.smallest_face_ray_set(nu))
    c_plus = frozenset(c_cone.rays[i] for i in c_cone.smallest_face_ray_set(nu))
    b_plus = frozenset(_ray(r) for r in b_plus)
    c_plus = frozenset(_ray(r) for r in c_plus)
    all_rays = set(q.fan.rays)
    meet = intersect_cones(Cone.from_generators(sorted(b_plus), n), Cone.from_generators(sorted(c_plus), n))
    if not (
        q.B <= b_plus
        and q.C <= c_plus
        and not b_plus & c_plus
        and b_plus | c_plus == all_rays
        and [_ray(r) for r in meet.rays] == [nu]
        and meet.lineality.dim == 0
    ):
        raise SubdivisionError("separating-ray postconditions failed")
    return SeparatingRay(nu, b_plus, c_plus)
