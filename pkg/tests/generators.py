"""Random small fans and quadruples for property tests and the acceptance sweep."""

from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import assume
from hypothesis import strategies as st

from torofan.cones import Cone
from torofan.fans import Fan, FanQuadruple
from torofan.subdivision import star_subdivision

ROLES = "ABCH"


def _pointed_rays(n: int, gens) -> tuple:
    # Generators with positive last coordinate span a pointed cone.
    return Cone.from_generators(gens, n).rays


def build_quadruple(n: int, gens, roles, subdivide: bool) -> FanQuadruple | None:
    rays = _pointed_rays(n, gens)
    if not rays:
        return None
    fan = Fan.affine(n, rays)
    if subdivide and len(rays) < 7 and fan.dim > 1:
        nu = tuple(sum(col) for col in zip(*rays))
        g = 0
        for x in nu:
            g = _gcd(g, x)
        nu = tuple(x // g for x in nu)
        if nu not in fan.index:
            fan = star_subdivision(fan, nu)
    marks = {r: roles[i % len(roles)] for i, r in enumerate(fan.rays)}
    H = [r for r, m in marks.items() if m == "H"]
    return FanQuadruple(
        fan,
        frozenset(r for r, m in marks.items() if m == "B"),
        frozenset(r for r, m in marks.items() if m == "C"),
        frozenset(H),
        {r: Fraction(1, 2) for r in H},
    )


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def random_quadruple(rng: random.Random, max_rank: int = 4, max_rays: int = 7) -> FanQuadruple:
    while True:
        n = rng.randint(2, max_rank)
        k = rng.randint(n, max_rays - 1)
        gens = [tuple(rng.randint(-2, 2) for _ in range(n - 1)) + (rng.randint(1, 2),) for _ in range(k)]
        roles = [rng.choice(ROLES) for _ in range(max_rays)]
        q = build_quadruple(n, gens, roles, subdivide=rng.random() < 0.4)
        if q is not None and len(q.fan.rays) <= max_rays:
            return q


@st.composite
def quadruples(draw, max_rank: int = 4, max_rays: int = 7, simplicial: bool = False, roles: str = ROLES):
    n = draw(st.integers(2, max_rank))
    if simplicial:
        gens = _independent(draw, n)
    else:
        k = draw(st.integers(n, max_rays - 1))
        coord = st.integers(-2, 2)
        gens = [tuple(draw(coord) for _ in range(n - 1)) + (draw(st.integers(1, 2)),) for _ in range(k)]
    marks = draw(st.lists(st.sampled_from(roles), min_size=max_rays, max_size=max_rays))
    q = build_quadruple(n, gens, marks, subdivide=not simplicial and draw(st.booleans()))
    assume(q is not None and len(q.fan.rays) <= max_rays)
    return q


def _independent(draw, n: int):
    # Unimodular-ish: identity plus a random upper-triangular shear keeps the rays independent.
    shear = [[draw(st.integers(-2, 2)) if j > i else int(i == j) for j in range(n)] for i in range(n)]
    k = draw(st.integers(1, n))
    return [tuple(shear[i]) for i in range(k)]
