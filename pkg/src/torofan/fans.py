"""Fans, decorated fans (triples/quadruples), subdivision maps and torus-invariant divisors."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .cones import Cone, intersect_cones
from .linalg import Subspace, dot, primitive, rank, solve, to_fraction
from .lp import lexmin_point


class FanError(ValueError):
    pass


def _ray(v: Sequence) -> tuple:
    return tuple(int(x) for x in v)


@dataclass(frozen=True)
class Fan:
    """Rays are primitive integer tuples; cones are frozensets of ray indices."""

    ambient_rank: int
    rays: tuple
    maximal_cones: tuple

    def __post_init__(self):
        rays = tuple(_ray(r) for r in self.rays)
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "maximal_cones", tuple(frozenset(c) for c in self.maximal_cones))
        if len(set(rays)) != len(rays):
            raise FanError("duplicate rays")
        for r in rays:
            if len(r) != self.ambient_rank:
                raise FanError(f"ray {r} has wrong length")
            if not any(r) or primitive(r) != r:
                raise FanError(f"ray {r} is not a primitive nonzero vector")
        for c in self.maximal_cones:
            if any(not 0 <= i < len(rays) for i in c):
                raise FanError("cone refers to a missing ray")

    @classmethod
    def build(cls, n: int, rays: Iterable[Sequence], cones: Iterable[Iterable[int]]) -> "Fan":
        """Fan from arbitrary cone list: keeps only inclusion-maximal cones, sorted."""
        cones = {frozenset(c) for c in cones}
        maximal = [c for c in cones if not any(c < d for d in cones)]
        return cls(n, tuple(rays), tuple(sorted(maximal, key=lambda c: sorted(c))))

    @classmethod
    def from_vector_cones(cls, n: int, cones: Iterable[Iterable[Sequence]], ray_order: Sequence[Sequence] = ()) -> "Fan":
        """Fan from cones given by ray vectors; rays ordered by `ray_order` first, then lexicographically."""
        cones = [frozenset(_ray(r) for r in c) for c in cones]
        seen = [_ray(r) for r in ray_order]
        extra = sorted({r for c in cones for r in c} - set(seen))
        used = {r for c in cones for r in c}
        rays = [r for r in seen if r in used] + extra
        index = {r: i for i, r in enumerate(rays)}
        return cls.build(n, rays, [[index[r] for r in c] for c in cones])

    @classmethod
    def affine(cls, n: int, rays: Iterable[Sequence]) -> "Fan":
        rays = tuple(_ray(r) for r in rays)
        return cls(n, rays, (frozenset(range(len(rays))),))

    @cached_property
    def index(self) -> dict:
        return {r: i for i, r in enumerate(self.rays)}

    def vectors(self, cone: Iterable[int]) -> frozenset:
        return frozenset(self.rays[i] for i in cone)

    def indices(self, vectors: Iterable[Sequence]) -> frozenset:
        return frozenset(self.index[_ray(v)] for v in vectors)

    @cached_property
    def _cone_cache(self) -> dict:
        return {}

    def cone(self, s: Iterable[int]) -> Cone:
        s = frozenset(s)
        cache = self._cone_cache
        if s not in cache:
            cache[s] = Cone.from_generators([self.rays[i] for i in sorted(s)], self.ambient_rank)
        return cache[s]

    def faces_of(self, s: Iterable[int]) -> list[frozenset]:
        s = frozenset(s)
        c = self.cone(s)
        pos = {r: i for i, r in enumerate(self.rays)}
        out = []
        for fs in c.face_ray_sets:
            out.append(frozenset(pos[c.rays[j]] for j in fs))
        return out

    @cached_property
    def all_cones(self) -> tuple:
        found = set()
        for m in self.maximal_cones:
            found.update(self.faces_of(m))
        return tuple(sorted(found, key=lambda s: (self.cone_dim(s), sorted(s))))

    def cone_dim(self, s: Iterable[int]) -> int:
        s = frozenset(s)
        if not s:
            return 0
        return rank([self.rays[i] for i in s], self.ambient_rank)

    @property
    def dim(self) -> int:
        return max((self.cone_dim(c) for c in self.maximal_cones), default=0)

    def is_simplicial(self) -> bool:
        return all(self.cone_dim(c) == len(c) for c in self.all_cones)

    def is_simplicial_over(self, rays: Iterable[Sequence]) -> bool:
        """Every cone containing a ray ν of the set is Cone(ζ, ν) with ζ a face of one less dimension."""
        marked = {self.index[_ray(r)] for r in rays if _ray(r) in self.index}
        cones = set(self.all_cones)
        for c in self.all_cones:
            for i in c & marked:
                rest = c - {i}
                if rest not in cones or self.cone_dim(rest) != self.cone_dim(c) - 1:
                    return False
        return True

    def cones_containing_point(self, x: Sequence) -> list[frozenset]:
        return [c for c in self.maximal_cones if self.cone(c).contains(x)]

    def support_contains(self, x: Sequence) -> bool:
        return bool(self.cones_containing_point(x))

    def smallest_cone_containing(self, x: Sequence) -> frozenset:
        for c in self.maximal_cones:
            cone = self.cone(c)
            if cone.contains(x):
                local = cone.smallest_face_ray_set(x)
                return frozenset(self.index[cone.rays[j]] for j in local)
        raise FanError(f"point {tuple(x)} is outside the support")

    def ray_in_cone(self, ray: Sequence, s: Iterable[int]) -> bool:
        return self.cone(s).contains(ray)

    def codim_one_faces(self, s: frozenset) -> list[frozenset]:
        d = self.cone_dim(s)
        return [f for f in self.faces_of(s) if self.cone_dim(f) == d - 1]

    def is_complete(self) -> bool:
        n = self.ambient_rank
        if any(self.cone_dim(c) != n for c in self.maximal_cones) or not self.maximal_cones:
            return n == 0
        count: dict = {}
        for c in self.maximal_cones:
            for f in self.codim_one_faces(c):
                count[f] = count.get(f, 0) + 1
        return all(v == 2 for v in count.values())

    def key(self) -> tuple:
        """Canonical comparison key: set of maximal cones as sets of ray vectors."""
        return (self.ambient_rank, frozenset(self.vectors(c) for c in self.maximal_cones))

    def same_as(self, other: "Fan") -> bool:
        return self.key() == other.key()

    def normalized(self) -> "Fan":
        """Same fan with maximal cones sorted; ray order kept."""
        return Fan(self.ambient_rank, self.rays, tuple(sorted(self.maximal_cones, key=lambda c: sorted(c))))

    def canonical(self) -> "Fan":
        """Rays sorted lexicographically, cones reindexed and sorted."""
        rays = sorted(self.rays)
        return Fan.from_vector_cones(self.ambient_rank, [self.vectors(c) for c in self.maximal_cones], rays)

    def face_fan(self, s: Iterable[int]) -> "Fan":
        s = sorted(frozenset(s))
        return Fan.affine(self.ambient_rank, [self.rays[i] for i in s]) if s else Fan(self.ambient_rank, (), (frozenset(),))

    def subfan(self, cones: Iterable[Iterable[int]]) -> "Fan":
        """Fan generated by the given cones (and their faces), with rays restricted to those used."""
        return Fan.from_vector_cones(self.ambient_rank, [self.vectors(c) for c in cones], self.rays)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


def fan_validate(fan: Fan) -> ValidationReport:
    problems = []
    for c in fan.maximal_cones:
        cone = fan.cone(c)
        if not cone.is_pointed():
            problems.append(f"cone {sorted(c)} is not strongly convex")
            continue
        listed = fan.vectors(c)
        if set(cone.rays) != set(listed):
            problems.append(f"cone {sorted(c)} lists rays that are not extreme")
    if problems:
        return ValidationReport(False, tuple(problems))
    for c1, c2 in combinations(fan.maximal_cones, 2):
        common = c1 & c2
        meet = intersect_cones(fan.cone(c1), fan.cone(c2))
        expected = fan.cone(common) if common else Cone.zero(fan.ambient_rank)
        ok = meet.rays == expected.rays and meet.lineality == expected.lineality
        if ok:
            ok = common in set(fan.faces_of(c1)) and common in set(fan.faces_of(c2))
        if not ok:
            problems.append(f"cones {sorted(c1)} and {sorted(c2)} do not meet in a common face")
    return ValidationReport(not problems, tuple(problems))


def _frac_items(h) -> tuple:
    if isinstance(h, Mapping):
        h = h.items()
    return tuple(sorted((_ray(r), to_fraction(v)) for r, v in h))


@dataclass(frozen=True)
class FanQuadruple:
    """A fan with disjoint marked ray sets B ("!"), C ("*"), H ("!*" with weights h in (0,1)).

    Marked sets hold ray vectors, so decorations survive re-indexing and subdivision.
    A triple is the special case H = ∅.
    """

    fan: Fan
    B: frozenset = frozenset()
    C: frozenset = frozenset()
    H: frozenset = frozenset()
    h: tuple = ()

    def __post_init__(self):
        for name in "BCH":
            object.__setattr__(self, name, frozenset(_ray(r) for r in getattr(self, name)))
        object.__setattr__(self, "h", _frac_items(self.h))
        rays = set(self.fan.rays)
        for name in "BCH":
            missing = getattr(self, name) - rays
            if missing:
                raise FanError(f"{name} refers to rays not in the fan: {sorted(missing)}")
        if self.B & self.C or self.B & self.H or self.C & self.H:
            raise FanError("B, C, H must be pairwise disjoint")
        if {r for r, _ in self.h} != set(self.H):
            raise FanError("h must be given exactly on H")
        if any(not 0 < v < 1 for _, v in self.h):
            raise FanError("h values must lie strictly between 0 and 1")

    @property
    def A(self) -> frozenset:
        return frozenset(self.fan.rays) - self.B - self.C - self.H

    @property
    def h_map(self) -> dict:
        return dict(self.h)

    @property
    def marked(self) -> frozenset:
        return self.B | self.C | self.H

    def is_affine(self) -> bool:
        return len(self.fan.maximal_cones) == 1

    def role(self, ray: Sequence) -> str:
        r = _ray(ray)
        if r in self.B:
            return "B"
        if r in self.C:
            return "C"
        if r in self.H:
            return "H"
        return "A"

    def on(self, fan: Fan, **extra) -> "FanQuadruple":
        """Decorations carried to another fan (rays missing from it are dropped)."""
        rays = set(fan.rays)
        B = (self.B | frozenset(extra.get("B", ()))) & rays
        C = (self.C | frozenset(extra.get("C", ()))) & rays
        H = (self.H | frozenset(extra.get("H", ()))) & rays
        h = {r: v for r, v in list(self.h) + list(_frac_items(extra.get("h", ()))) if r in H}
        return FanQuadruple(fan, B, C, H, h)

    def is_log_simplicial(self) -> bool:
        return self.fan.is_simplicial_over(self.B | self.C)

    def is_plenary(self) -> bool:
        return not self.A


FanTriple = FanQuadruple


def fan_triple(fan: Fan, B: Iterable = (), C: Iterable = ()) -> FanQuadruple:
    return FanQuadruple(fan, frozenset(B), frozenset(C))


def restrict(q: FanQuadruple, xi: Iterable[int]) -> FanQuadruple:
    xi = frozenset(xi)
    if xi not in set(q.fan.all_cones):
        raise FanError(f"{sorted(xi)} is not a cone of the fan")
    return q.on(q.fan.face_fan(xi))


def star_closure(fan: Fan, rays: Iterable[Sequence]) -> list[frozenset]:
    idx = fan.indices(rays)
    return [c for c in fan.all_cones if c & idx]


@dataclass(frozen=True)
class SubdivisionMap:
    source: Fan
    target: Fan
    assignment: tuple  # ((source cone, target cone), ...)
    is_efficient: bool

    def image(self, cone: Iterable[int]) -> frozenset:
        return dict(self.assignment)[frozenset(cone)]


def _pieces_cover(target: Fan, tau: frozenset, source: Fan) -> str | None:
    cone = target.cone(tau)
    d = cone.dim
    inside = [c for c in source.all_cones if source.cone_dim(c) == d and all(cone.contains(source.rays[i]) for i in c)]
    if not inside:
        return f"target cone {sorted(tau)} is not covered"
    count: dict = {}
    for c in inside:
        for f in source.codim_one_faces(c):
            count[f] = count.get(f, 0) + 1
    for f, k in count.items():
        on_boundary = any(all(dot(nv, source.rays[i]) == 0 for i in f) for nv in cone.facet_normals)
        if k != (1 if on_boundary else 2):
            return f"target cone {sorted(tau)} is not exactly covered near {sorted(f)}"
    return None


def subdivision_map(source: Fan, target: Fan) -> SubdivisionMap:
    if source.ambient_rank != target.ambient_rank:
        raise FanError("ambient ranks differ")
    for c in source.maximal_cones:
        if not any(all(target.cone(t).contains(source.rays[i]) for i in c) for t in target.maximal_cones):
            raise FanError(f"support mismatch: source cone {sorted(c)} is not inside a target cone")
    for t in target.maximal_cones:
        problem = _pieces_cover(target, t, source)
        if problem:
            raise FanError(f"support mismatch: {problem}")
    assignment = []
    for c in source.all_cones:
        x = source.cone(c).interior_point() if c else (0,) * source.ambient_rank
        assignment.append((c, target.smallest_cone_containing(x)))
    efficient = set(source.rays) == set(target.rays)
    return SubdivisionMap(source, target, tuple(assignment), efficient)


def xi_face(target: Fan, zeta: Iterable[int], source: Fan, tau_i: Iterable[int]) -> frozenset:
    """Largest face of the source cone tau_i whose support lies in the target cone zeta."""
    zeta = frozenset(zeta)
    tau_i = frozenset(tau_i)
    if not zeta:
        return frozenset()
    cz = target.cone(zeta)
    inside = frozenset(i for i in tau_i if cz.contains(source.rays[i]))
    if inside not in set(source.faces_of(tau_i)):
        raise FanError("ray set inside zeta is not a face; source does not subdivide target")
    return inside


@dataclass(frozen=True)
class TorusDivisor:
    coeffs: tuple  # sorted (ray, Fraction) pairs, zero coefficients dropped

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(p for p in _frac_items(self.coeffs) if p[1] != 0))

    @classmethod
    def of(cls, coeffs) -> "TorusDivisor":
        return cls(_frac_items(coeffs))

    def get(self, ray: Sequence) -> Fraction:
        return dict(self.coeffs).get(_ray(ray), Fraction(0))

    def __add__(self, other: "TorusDivisor") -> "TorusDivisor":
        keys = {r for r, _ in self.coeffs} | {r for r, _ in other.coeffs}
        return TorusDivisor(tuple((r, self.get(r) + other.get(r)) for r in keys))

    def __neg__(self) -> "TorusDivisor":
        return TorusDivisor(tuple((r, -v) for r, v in self.coeffs))

    def __sub__(self, other: "TorusDivisor") -> "TorusDivisor":
        return self + (-other)

    def scale(self, k) -> "TorusDivisor":
        k = to_fraction(k)
        return TorusDivisor(tuple((r, k * v) for r, v in self.coeffs))

    def is_integral(self) -> bool:
        return all(v.denominator == 1 for _, v in self.coeffs)

    @property
    def support(self) -> frozenset:
        return frozenset(r for r, _ in self.coeffs)


def character_divisor(fan: Fan, m: Sequence) -> TorusDivisor:
    return TorusDivisor(tuple((r, dot(m, r)) for r in fan.rays))


def character_of(fan: Fan, divisor: TorusDivisor) -> tuple | None:
    """m with divisor = div(x^m), if the divisor is principal over Q."""
    for r in divisor.support:
        if r not in fan.index:
            return None
    rows = [list(r) for r in fan.rays]
    rhs = [divisor.get(r) for r in fan.rays]
    return solve(rows, rhs, fan.ambient_rank)


def q_linearly_equivalent(fan: Fan, d1: TorusDivisor, d2: TorusDivisor) -> bool:
    return character_of(fan, d1 - d2) is not None


@dataclass(frozen=True)
class CompatibilityWitness:
    b: tuple  # ((ray, Fraction), ...) over B in fan order
    c: tuple
    m: tuple


def compatibility_witness(L: TorusDivisor, t: FanQuadruple) -> CompatibilityWitness | None:
    """Solve L = bB - cC + div(x^m), b, c in [0,1].

    A witness with m = 0 is preferred when one exists; otherwise the lexicographic
    minimum over (b, c, m) in fan order is returned.
    """
    fan = t.fan
    n = fan.ambient_rank
    b_rays = [r for r in fan.rays if r in t.B]
    c_rays = [r for r in fan.rays if r in t.C]
    nb, nc = len(b_rays), len(c_rays)
    nvars = nb + nc + n
    if any(r not in fan.index for r in L.support):
        return None

    def rows(with_m: bool):
        a_eq, b_eq = [], []
        for r in fan.rays:
            row = [Fraction(0)] * nvars
            if r in t.B:
                row[b_rays.index(r)] = Fraction(1)
            if r in t.C:
                row[nb + c_rays.index(r)] = Fraction(-1)
            if with_m:
                for j in range(n):
                    row[nb + nc + j] = Fraction(r[j])
            a_eq.append(row)
            b_eq.append(L.get(r))
        if not with_m:
            for j in range(n):
                row = [0] * nvars
                row[nb + nc + j] = 1
                a_eq.append(row)
                b_eq.append(0)
        return a_eq, b_eq

    bounds = [(0, 1)] * (nb + nc) + [(None, None)] * n
    order = list(range(nvars))
    for with_m in (False, True):
        a_eq, b_eq = rows(with_m)
        x = lexmin_point(nvars, order, a_eq=a_eq, b_eq=b_eq, bounds=bounds)
        if x is not None:
            return CompatibilityWitness(
                tuple(zip(b_rays, x[:nb])), tuple(zip(c_rays, x[nb:nb + nc])), tuple(x[nb + nc:])
            )
    return None


def induced_quadruple(t: FanQuadruple, L: TorusDivisor, b, c) -> FanQuadruple:
    """The re-marking (F, G, h H) induced by a compatible divisor and its coefficients."""
    if t.H:
        raise FanError("induced quadruples start from a triple")
    b = dict(_frac_items(b))
    c = dict(_frac_items(c))
    if set(b) != set(t.B) or set(c) != set(t.C):
        raise FanError("witness must give one coefficient per B and C ray")
    if any(not 0 <= v <= 1 for v in list(b.values()) + list(c.values())):
        raise FanError("witness coefficients must lie in [0, 1]")
    fan = t.fan
    bc = TorusDivisor(tuple(b.items())) - TorusDivisor(tuple(c.items()))
    if not q_linearly_equivalent(fan, L, bc):
        raise FanError("invalid witness: L is not Q-linearly equivalent to bB - cC")
    F = {r for r, v in b.items() if v == 0} | {r for r, v in c.items() if v == 1}
    G = {r for r, v in b.items() if v == 1} | {r for r, v in c.items() if v == 0}
    h = {r: v for r, v in b.items() if 0 < v < 1}
    h.update({r: 1 - v for r, v in c.items() if 0 < v < 1})
    G_div = TorusDivisor(tuple((r, 1) for r in G)) + TorusDivisor(tuple(h.items()))
    C_div = TorusDivisor(tuple((r, 1) for r in t.C))
    if not q_linearly_equivalent(fan, G_div, C_div + L):
        raise FanError("internal error: h does not solve G + hH ~ C + L")
    return FanQuadruple(fan, frozenset(F), frozenset(G), frozenset(h), h)


def order_is_valid(order: Sequence[Sequence], rays: Iterable[Sequence]) -> bool:
    order = [_ray(r) for r in order]
    return len(set(order)) == len(order) and set(order) == {_ray(r) for r in rays}


def c_before_b(order: Sequence[Sequence], t: FanQuadruple) -> bool:
    roles = [t.role(r) for r in order]
    return "B" not in roles or "C" not in roles[roles.index("B"):]


def quotient_basis(v: Sequence[int]) -> list[list[int]]:
    """Unimodular integer matrix U with U v = e_1 (v primitive)."""
    n = len(v)
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    w = [int(x) for x in v]
    for i in range(n - 1, 0, -1):
        a, b = w[i - 1], w[i]
        if b == 0:
            continue
        g, s, t = _xgcd(a, b)
        ri, rj = u[i - 1], u[i]
        u[i - 1] = [s * x + t * y for x, y in zip(ri, rj)]
        u[i] = [(-b // g) * x + (a // g) * y for x, y in zip(ri, rj)]
        w[i - 1], w[i] = g, 0
    if w[0] == -1:
        u[0] = [-x for x in u[0]]
        w[0] = 1
    if w[0] != 1:
        raise FanError("vector is not primitive")
    return u


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@dataclass(frozen=True)
class QuotientStar:
    """Star of a ray projected to N / Z·ray, with the dual embedding M_E -> M."""

    fan: Fan
    lift: dict  # projected ray -> original ray
    embedding: tuple  # rows of U after the first: a basis of ray^⊥ in M

    def to_ambient(self, w: Subspace) -> Subspace:
        n = len(self.embedding[0]) if self.embedding else 0
        gens = [
            [sum((to_fraction(c) * self.embedding[k][j] for k, c in enumerate(vec)), Fraction(0)) for j in range(n)]
            for vec in w.basis
        ]
        return Subspace.span(gens, n)


def quotient_star(fan: Fan, ray: Sequence) -> QuotientStar:
    """The fan of the orbit closure of a ray: cones containing it, projected along it."""
    ray = _ray(ray)
    i0 = fan.index[ray]
    u = quotient_basis(ray)
    proj = {}
    for r in fan.rays:
        if r == ray:
            continue
        p = tuple(sum(u[k][j] * r[j] for j in range(len(r))) for k in range(1, len(u)))
        proj[r] = p
    cones = []
    lift = {}
    for c in fan.all_cones:
        if i0 not in c:
            continue
        images = []
        for i in c - {i0}:
            if frozenset({i0, i}) in set(fan.all_cones):
                pr = primitive(proj[fan.rays[i]])
                images.append(pr)
                lift[pr] = fan.rays[i]
        cones.append(images)
    n = fan.ambient_rank - 1
    qfan = Fan.from_vector_cones(n, cones, sorted(lift))
    return QuotientStar(qfan, lift, tuple(tuple(row) for row in u[1:]))


def cones_inside(fan: Fan, cone: Cone) -> list[frozenset]:
    """Cones of `fan` whose rays all lie in `cone`."""
    inside = frozenset(i for i, r in enumerate(fan.rays) if cone.contains(r))
    return [c for c in fan.all_cones if c <= inside]


def subfan_inside(fan: Fan, cone: Cone) -> Fan:
    """The part of a subdivision lying over a cone of the base."""
    cones = cones_inside(fan, cone)
    if not cones:
        return Fan(fan.ambient_rank, (), (frozenset(),))
    return fan.subfan(cones)


def orbit_closure_triple(q: FanQuadruple, ray: Sequence) -> tuple[FanQuadruple, QuotientStar]:
    """The triple on the orbit closure of a ray: B and C rays adjacent to it, projected."""
    star = quotient_star(q.fan, ray)
    B = {r for r, orig in star.lift.items() if orig in q.B}
    C = {r for r, orig in star.lift.items() if orig in q.C}
    return FanQuadruple(star.fan, frozenset(B), frozenset(C)), star
