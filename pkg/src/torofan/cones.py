"""Rational polyhedral cones: double description, duals, face lattices, windows."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

from .linalg import Subspace, dot, nullspace, primitive, rank, solve, to_fraction


class ConeError(ValueError):
    pass


def project_out(v: Sequence, lineality: Subspace) -> tuple:
    """Orthogonal projection of v onto the complement of `lineality`."""
    v = tuple(to_fraction(x) for x in v)
    if lineality.dim == 0:
        return v
    basis = lineality.basis
    gram = [[dot(a, b) for b in basis] for a in basis]
    rhs = [dot(a, v) for a in basis]
    coeffs = solve(gram, rhs, len(basis))
    return tuple(x - sum((c * b[j] for c, b in zip(coeffs, basis)), Fraction(0)) for j, x in enumerate(v))


def _canonical_rays(rays: Iterable[Sequence], lineality: Subspace) -> tuple:
    out = set()
    for r in rays:
        p = project_out(r, lineality)
        if any(x != 0 for x in p):
            out.add(primitive(p))
    return tuple(sorted(out))


def double_description(rows: Iterable[Sequence], n: int) -> tuple[tuple, Subspace]:
    """Extreme rays and lineality space of {x : <a, x> >= 0 for every row a}.

    Incremental double description (Motzkin): one inequality at a time, with the
    algebraic adjacency test on the rows processed so far.
    """
    ineqs = []
    for r in rows:
        if len(r) != n:
            raise ConeError("inequality of wrong length")
        if any(to_fraction(x) != 0 for x in r):
            ineqs.append(primitive(r))
    lin = [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    rays: list[tuple] = []
    done: list[tuple] = []
    for a in ineqs:
        vals = [dot(a, l) for l in lin]
        k = next((i for i, v in enumerate(vals) if v != 0), None)
        if k is not None:
            l0, v0 = lin[k], vals[k]
            if v0 < 0:
                l0 = tuple(-x for x in l0)
                v0 = -v0
            new_lin = []
            for i, l in enumerate(lin):
                if i == k:
                    continue
                c = vals[i] / v0
                new_lin.append(tuple(x - c * y for x, y in zip(l, l0)))
            new_rays = []
            for r in rays:
                c = dot(a, r) / v0
                new_rays.append(tuple(x - c * y for x, y in zip(r, l0)))
            new_rays.append(l0)
            lin = new_lin
            rays = [tuple(Fraction(x) for x in primitive(r)) for r in new_rays if any(r)]
        else:
            full_rank = n - len(lin)
            pos, zero, neg = [], [], []
            for r in rays:
                s = dot(a, r)
                (pos if s > 0 else neg if s < 0 else zero).append((r, s))
            new = []
            for p, sp in pos:
                for q, sq in neg:
                    active = [row for row in done if dot(row, p) == 0 and dot(row, q) == 0]
                    if rank(active, n) == full_rank - 2:
                        comb_ = tuple(sp * y - sq * x for x, y in zip(p, q))
                        if any(comb_):
                            new.append(tuple(Fraction(x) for x in primitive(comb_)))
            rays = [r for r, _ in pos] + [r for r, _ in zero] + new
        done.append(a)
    lineality = Subspace.span(lin, n)
    return _canonical_rays(rays, lineality), lineality


@dataclass(frozen=True)
class Cone:
    """A rational polyhedral cone: primitive rays (reduced mod lineality) plus a lineality space."""

    ambient_rank: int
    rays: tuple
    lineality: Subspace

    @classmethod
    def from_generators(cls, gens: Iterable[Sequence], n: int, lineality_gens: Iterable[Sequence] = ()) -> "Cone":
        gens = [tuple(g) for g in gens]
        lin_gens = [tuple(g) for g in lineality_gens]
        rows = gens + lin_gens + [tuple(-x for x in g) for g in lin_gens]
        for g in rows:
            if len(g) != n:
                raise ConeError("generator of wrong length")
        dual_rays, dual_lin = double_description(rows, n)
        normals = list(dual_rays) + list(dual_lin.basis)
        lineality = Subspace.span(nullspace(normals, n) if normals else _identity(n), n)
        full = rank(normals, n) if normals else 0
        candidates = _canonical_rays(rows, lineality)
        keep = []
        for g in candidates:
            active = [nv for nv in normals if dot(nv, g) == 0]
            if rank(active, n) == full - 1:
                keep.append(g)
        cone = cls(n, tuple(keep), lineality)
        dual = cls(n, dual_rays, dual_lin)
        cone.__dict__["dual"] = dual
        dual.__dict__["dual"] = cone
        return cone

    @classmethod
    def from_inequalities(cls, rows: Iterable[Sequence], n: int) -> "Cone":
        rays, lin = double_description(rows, n)
        return cls(n, rays, lin)

    @classmethod
    def zero(cls, n: int) -> "Cone":
        return cls(n, (), Subspace.zero(n))

    @cached_property
    def dual(self) -> "Cone":
        rows = list(self.rays) + list(self.lineality.basis) + [tuple(-x for x in b) for b in self.lineality.basis]
        rays, lin = double_description(rows, self.ambient_rank)
        d = Cone(self.ambient_rank, rays, lin)
        d.__dict__["dual"] = self
        return d

    @property
    def generators(self) -> tuple:
        lin = [primitive(b) for b in self.lineality.basis]
        return tuple(self.rays) + tuple(lin) + tuple(tuple(-x for x in b) for b in lin)

    @cached_property
    def facet_normals(self) -> tuple:
        """Inner normals: rays of the dual cone, reduced modulo the orthogonal complement of the span."""
        return self.dual.rays

    @cached_property
    def span(self) -> Subspace:
        return Subspace.span(list(self.rays) + list(self.lineality.basis), self.ambient_rank)

    @property
    def dim(self) -> int:
        return self.span.dim

    @property
    def lineality_dim(self) -> int:
        return self.lineality.dim

    def is_pointed(self) -> bool:
        return self.lineality.dim == 0

    def is_simplicial(self) -> bool:
        return len(self.rays) == self.dim - self.lineality_dim

    def contains(self, x: Sequence) -> bool:
        if len(x) != self.ambient_rank:
            raise ConeError("point of wrong length")
        d = self.dual
        if any(dot(l, x) != 0 for l in d.lineality.basis):
            return False
        return all(dot(nv, x) >= 0 for nv in d.rays)

    def in_relative_interior(self, x: Sequence) -> bool:
        return self.contains(x) and all(dot(nv, x) > 0 for nv in self.facet_normals)

    def interior_point(self) -> tuple:
        n = self.ambient_rank
        return tuple(sum((Fraction(r[j]) for r in self.rays), Fraction(0)) for j in range(n))

    @cached_property
    def _facet_ray_sets(self) -> tuple:
        return tuple(
            frozenset(i for i, r in enumerate(self.rays) if dot(nv, r) == 0) for nv in self.facet_normals
        )

    def face(self, ray_indices: Iterable[int]) -> "Cone":
        return Cone(self.ambient_rank, tuple(self.rays[i] for i in sorted(ray_indices)), self.lineality)

    @cached_property
    def face_ray_sets(self) -> tuple:
        """All faces as sets of ray indices, ordered by dimension then lexicographically."""
        full = frozenset(range(len(self.rays)))
        seen = {full}
        frontier = [full]
        while frontier:
            nxt = []
            for f in frontier:
                for z in self._facet_ray_sets:
                    g = f & z
                    if g not in seen:
                        seen.add(g)
                        nxt.append(g)
            frontier = nxt
        return tuple(sorted(seen, key=lambda s: (len(s), sorted(s))))

    def faces(self) -> "FaceLattice":
        sets = self.face_ray_sets
        cones = [self.face(s) for s in sets]
        dims = [c.dim for c in cones]
        incidence = []
        for i, s in enumerate(sets):
            for j, t in enumerate(sets):
                if s < t and dims[i] == dims[j] - 1:
                    incidence.append((i, j))
        return FaceLattice(tuple(cones), tuple(sets), tuple(incidence))

    def smallest_face_ray_set(self, x: Sequence) -> frozenset:
        if not self.contains(x):
            raise ConeError("point is not in the cone")
        s = frozenset(range(len(self.rays)))
        for nv, z in zip(self.facet_normals, self._facet_ray_sets):
            if dot(nv, x) == 0:
                s &= z
        return s

    def smallest_face_containing(self, x: Sequence) -> "Cone":
        return self.face(self.smallest_face_ray_set(x))

    def __repr__(self) -> str:
        lin = f", lineality={self.lineality_dim}" if self.lineality_dim else ""
        return f"Cone({list(self.rays)}{lin})"


def _identity(n: int) -> list[tuple]:
    return [tuple(int(i == j) for j in range(n)) for i in range(n)]


@dataclass(frozen=True)
class FaceLattice:
    faces: tuple
    ray_sets: tuple
    incidence: tuple  # (child index, parent index) cover relations

    def __len__(self) -> int:
        return len(self.faces)


def dual_cone(c: Cone) -> Cone:
    return c.dual


def faces(c: Cone) -> FaceLattice:
    return c.faces()


def smallest_face_containing(c: Cone, x: Sequence) -> Cone:
    return c.smallest_face_containing(x)


def halfspace_rows(c: Cone) -> list[tuple]:
    d = c.dual
    rows = list(d.rays)
    for b in d.lineality.basis:
        rows.append(tuple(b))
        rows.append(tuple(-x for x in b))
    return rows


def intersect_cones(c1: Cone, c2: Cone) -> Cone:
    if c1.ambient_rank != c2.ambient_rank:
        raise ConeError("ambient ranks differ")
    return Cone.from_inequalities(halfspace_rows(c1) + halfspace_rows(c2), c1.ambient_rank)


def cone_of(rays: Iterable[Sequence], n: int) -> Cone:
    return Cone.from_generators(rays, n)


def lattice_points_window(c: Cone, bound: int) -> list[tuple]:
    if bound < 0:
        raise ConeError("bound must be nonnegative")
    rng = range(-bound, bound + 1)
    return [p for p in product(rng, repeat=c.ambient_rank) if c.contains(p)]
