"""Hypothesis property suites for the structural invariants of every module."""

from fractions import Fraction
from itertools import combinations
from math import comb

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from generators import quadruples
from oracles import in_cone_of, same_span
from sorting_oracle import partially_sorted
from torofan.cech import CechSetup, cech_complex_at_degree, higher_direct_image_check
from torofan.cones import Cone, intersect_cones
from torofan.fans import (
    FanQuadruple,
    TorusDivisor,
    character_divisor,
    compatibility_witness,
    fan_validate,
    induced_quadruple,
    q_linearly_equivalent,
    restrict,
    subdivision_map,
    xi_face,
)
from torofan.forms import FormSpec, graded_piece, phi, pushforward_hypotheses, twisted_graded_piece, window
from torofan.linalg import (
    CochainComplex,
    Subspace,
    cohomology_dims,
    exterior_product_matrix,
    nullspace,
    primitive,
    subspace_intersect,
    wedge_power,
)
from torofan.sortedness import (
    SortednessCertificate,
    SortednessMode,
    classify_sorted,
    geometric_partial_check,
    is_partially_sorted,
    is_well_sorted,
    unsettled_cones,
    verify_sortedness_certificate,
)
from torofan.subdivision import (
    ext,
    find_good_sorting_function,
    find_sorting_function,
    resolve_log_simplicial,
    star_at_c_witness,
    star_quadruple,
    star_subdivision,
    verify_chain,
    verify_good_sorting_function,
)

small = st.integers(-3, 3)


def vectors(n, min_size=0, max_size=4):
    return st.lists(st.tuples(*[small] * n), min_size=min_size, max_size=max_size)


@st.composite
def subspaces(draw, n=None):
    n = n if n is not None else draw(st.integers(1, 4))
    return Subspace.span(draw(vectors(n)), n)


@st.composite
def subspace_triples(draw):
    n = draw(st.integers(1, 4))
    return tuple(Subspace.span(draw(vectors(n)), n) for _ in range(3))


@st.composite
def pointed_cones(draw, max_rank=5, max_gens=6):
    n = draw(st.integers(1, max_rank))
    k = draw(st.integers(1, max_gens))
    gens = [tuple(draw(st.integers(-2, 2)) for _ in range(n - 1)) + (draw(st.integers(1, 2)),) for _ in range(k)]
    return Cone.from_generators(gens, n)


@st.composite
def any_cones(draw, n, max_gens=5):
    gens = draw(vectors(n, 1, max_gens))
    return Cone.from_generators(gens, n)


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def is_rref(space):
    pivots = []
    for row in space.basis:
        lead = next(j for j, x in enumerate(row) if x != 0)
        if row[lead] != 1:
            return False
        pivots.append(lead)
    ok = pivots == sorted(set(pivots))
    return ok and all(other[p] == 0 for p, row in zip(pivots, space.basis) for other in space.basis if other is not row)


# ------------------------------------------------------------------ exact linear algebra


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), vectors(n, 1, 4), st.lists(st.lists(small, min_size=4, max_size=4), min_size=1, max_size=3))))
def test_canonical_form_ignores_generators(data):
    n, gens, mixes = data
    extra = [tuple(sum(c * g[j] for c, g in zip(mix, gens)) for j in range(n)) for mix in mixes]
    a = Subspace.span(gens, n)
    b = Subspace.span(list(reversed(gens)) + extra, n)
    assert a == b and is_rref(a)
    assert same_span(a.basis, gens) if any(any(g) for g in gens) else a.dim == 0


@given(subspace_triples())
def test_intersection_laws(spaces):
    a, b, c = spaces
    ab = subspace_intersect(a, b)
    assert ab == subspace_intersect(b, a)
    assert subspace_intersect(ab, c) == subspace_intersect(a, subspace_intersect(b, c))
    assert subspace_intersect(a, a) == a
    assert all(a.contains(v) and b.contains(v) for v in ab.basis)


@given(subspaces(), subspaces(), st.integers(0, 4))
def test_wedge_dimension_and_monotonicity(w, extra, p):
    n = w.ambient_dim
    assume(p <= n)
    assert wedge_power(w, p).dim == comb(w.dim, p)
    if extra.ambient_dim == n:
        bigger = Subspace.span(list(w.basis) + list(extra.basis), n)
        big = wedge_power(bigger, p)
        assert all(big.contains(v) for v in wedge_power(w, p).basis)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.data())
def test_euler_characteristic_of_random_complexes(a0, a1, a2, data):
    d1 = [[data.draw(small) for _ in range(a1)] for _ in range(a2)]
    kernel = nullspace(d1, a1)
    cols = []
    for _ in range(a0):
        coeffs = [data.draw(small) for _ in kernel]
        cols.append([sum((c * v[i] for c, v in zip(coeffs, kernel)), Fraction(0)) for i in range(a1)])
    d0 = [[cols[j][i] for j in range(a0)] for i in range(a1)]
    c = CochainComplex((Subspace.full(a0), Subspace.full(a1), Subspace.full(a2)), (tuple(map(tuple, d0)), tuple(map(tuple, d1))))
    dims = cohomology_dims(c)
    assert dims[0] - dims[1] + dims[2] == a0 - a1 + a2


# ------------------------------------------------------------------ cones


@settings(max_examples=40)
@given(pointed_cones())
def test_dual_of_dual(cone):
    again = Cone.from_inequalities(list(cone.dual.rays) + [tuple(b) for b in cone.dual.lineality.basis] + [tuple(-x for x in b) for b in cone.dual.lineality.basis], cone.ambient_rank)
    assert again.dual.dual == cone.dual.dual == cone
    assert set(again.rays) == set(cone.rays) and again.lineality == cone.lineality


@settings(max_examples=30)
@given(pointed_cones(max_rank=4))
def test_faces_are_closed_under_intersection(cone):
    lattice = cone.faces()
    sets = set(lattice.ray_sets)
    for a, b in combinations(lattice.ray_sets, 2):
        assert a & b in sets
    if cone.is_simplicial():
        facets = [s for s in lattice.ray_sets if cone.face(s).dim == cone.dim - 1]
        assert len(facets) == cone.dim
    assert cone.is_simplicial() == (len(cone.rays) == cone.dim - cone.lineality_dim)


@settings(max_examples=30)
@given(pointed_cones(max_rank=4), st.data())
def test_smallest_face_is_meet_of_containing_faces(cone, data):
    weights = [data.draw(st.integers(0, 2)) for _ in cone.rays]
    x = tuple(sum(w * r[j] for w, r in zip(weights, cone.rays)) for j in range(cone.ambient_rank))
    containing = [s for s in cone.faces().ray_sets if cone.face(s).contains(x)]
    meet = frozenset.intersection(*containing)
    assert cone.smallest_face_ray_set(x) == meet
    assert meet == frozenset(i for i, w in enumerate(weights) if w) or cone.face(meet).contains(x)


@settings(max_examples=40)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(any_cones(n), any_cones(n), any_cones(n))))
def test_cone_intersection(cones):
    a, b, c = cones
    ab = intersect_cones(a, b)
    assert all(a.contains(r) and b.contains(r) for r in ab.rays)
    assert all(a.contains(v) and b.contains(v) for v in ab.lineality.basis)
    assert intersect_cones(ab, c) == intersect_cones(a, intersect_cones(b, c))


@settings(max_examples=40)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(any_cones(n), st.tuples(*[st.integers(-2, 2)] * n))))
def test_cone_membership_matches_fourier_motzkin(data):
    cone, x = data
    gens = list(cone.rays) + list(cone.lineality.basis) + [tuple(-v for v in b) for b in cone.lineality.basis]
    assert cone.contains(x) == in_cone_of(x, gens)


# ------------------------------------------------------------------ fans


@settings(max_examples=30)
@given(quadruples(), st.tuples(small, small, small, small), st.tuples(small, small, small, small), small)
def test_character_divisor_is_linear(q, m1, m2, k):
    n = q.fan.ambient_rank
    m1, m2 = m1[:n], m2[:n]
    total = tuple(a + b for a, b in zip(m1, m2))
    fan = q.fan
    assert character_divisor(fan, total) == character_divisor(fan, m1) + character_divisor(fan, m2)
    assert character_divisor(fan, tuple(k * a for a in m1)) == character_divisor(fan, m1).scale(k)


@settings(max_examples=30)
@given(quadruples(), st.data())
def test_linear_equivalence_is_an_equivalence(q, data):
    fan = q.fan
    n = fan.ambient_rank

    def divisor():
        return TorusDivisor(tuple((r, Fraction(data.draw(small))) for r in fan.rays))

    def shift(d):
        m = tuple(data.draw(small) for _ in range(n))
        return d + character_divisor(fan, m)

    d1 = divisor()
    d2 = shift(d1)
    d3 = shift(d2)
    assert q_linearly_equivalent(fan, d1, d1)
    assert q_linearly_equivalent(fan, d1, d2) and q_linearly_equivalent(fan, d2, d1)
    assert q_linearly_equivalent(fan, d1, d3)
    other = divisor()
    assert q_linearly_equivalent(fan, d1, other) == q_linearly_equivalent(fan, other, d1)


@settings(max_examples=20)
@given(quadruples(max_rank=3, max_rays=5), st.data())
def test_subdivision_maps_compose(q, data):
    fan = q.fan
    assume(q.is_affine() and fan.dim == fan.ambient_rank)
    first = tuple(sum(col) for col in zip(*fan.rays))
    middle = star_subdivision(fan, first)
    piece = data.draw(st.sampled_from(sorted(middle.maximal_cones, key=sorted)))
    second = tuple(sum(col) for col in zip(*middle.vectors(piece)))
    final = star_subdivision(middle, second)
    to_middle, to_base = subdivision_map(final, middle), subdivision_map(middle, fan)
    direct = subdivision_map(final, fan)
    for c in final.all_cones:
        assert direct.image(c) == to_base.image(to_middle.image(c))


@settings(max_examples=20)
@given(quadruples(max_rank=3, max_rays=5))
def test_xi_face_is_largest_face_inside(q):
    fan = q.fan
    assume(q.is_affine() and fan.dim == fan.ambient_rank)
    star = star_subdivision(fan, tuple(sum(col) for col in zip(*fan.rays)))
    for zeta in fan.all_cones:
        cz = fan.cone(zeta)
        for tau in star.maximal_cones:
            face = xi_face(fan, zeta, star, tau)
            assert all(cz.contains(star.rays[i]) for i in face)
            assert face == frozenset(i for i in tau if cz.contains(star.rays[i]))


@settings(max_examples=25)
@given(quadruples(max_rank=3, max_rays=5, roles="ABC"), st.data())
def test_twist_by_compatible_divisor_matches_induced_triple(q, data):
    # (Ω ⊗ O(bB - cC + div x^m))^∨∨ at u equals the induced triple's piece at u + m.
    assume(q.is_affine() and q.fan.dim == q.fan.ambient_rank)
    n = q.fan.ambient_rank
    b = {r: data.draw(st.sampled_from([0, 1])) for r in sorted(q.B)}
    c = {r: data.draw(st.sampled_from([0, 1])) for r in sorted(q.C)}
    m = tuple(data.draw(st.integers(-1, 1)) for _ in range(n))
    L = TorusDivisor.of(b) - TorusDivisor.of(c) + character_divisor(q.fan, m)
    witnesses = [(b, c, m)]
    w = compatibility_witness(L, q)
    assert w is not None
    if all(v.denominator == 1 for _, v in w.b + w.c):
        witnesses.append((dict(w.b), dict(w.c), tuple(w.m)))
    p = data.draw(st.integers(0, n))
    spec = FormSpec(q, p, L)
    for bb, cc, mm in witnesses:
        induced = induced_quadruple(q, L, bb, cc)
        for u in window(n, 1):
            shifted = tuple(x + y for x, y in zip(u, mm))
            assert twisted_graded_piece(spec, u).value == graded_piece(FormSpec(induced, p), shifted).value


# ------------------------------------------------------------------ sortedness


@settings(max_examples=50)
@given(quadruples())
def test_geometric_criterion_agrees_with_lp(q):
    lp = is_partially_sorted(q)
    assert geometric_partial_check(q).ok == lp == partially_sorted(q)


@st.composite
def quadruples_with_modes(draw):
    q = draw(quadruples())
    pick = lambda s: frozenset(r for r in sorted(s) if draw(st.booleans()))  # noqa: E731
    return q, SortednessMode(pick(q.B), pick(q.C), pick(q.H))


@settings(max_examples=50)
@given(quadruples_with_modes())
def test_returned_certificates_verify(data):
    q, mode = data
    result = classify_sorted(q, mode)
    if isinstance(result, SortednessCertificate):
        assert verify_sortedness_certificate(q, result) == []


@settings(max_examples=40)
@given(quadruples(simplicial=True))
def test_simplicial_is_well_sorted(q):
    assert is_well_sorted(q)


@settings(max_examples=40)
@given(quadruples_with_modes(), st.data())
def test_additivity_of_sorting_functions(data, draw):
    q, mode = data
    other = frozenset(r for r in sorted(q.C) if draw.draw(st.booleans()))
    first = classify_sorted(q, mode)
    second = classify_sorted(q, SortednessMode(mode.b_sharp, other, mode.h_sharp))
    assume(isinstance(first, SortednessCertificate) and isinstance(second, SortednessCertificate))
    by_cone = dict(second.cones)
    summed = tuple(
        (rays, type(rho)(tuple(a + b for a, b in zip(rho.covector, by_cone[rays].covector))))
        for rays, rho in first.cones
    )
    union = SortednessMode(mode.b_sharp, mode.c_flat | other, mode.h_sharp)
    assert verify_sortedness_certificate(q, SortednessCertificate(union, summed)) == []


@settings(max_examples=40)
@given(quadruples_with_modes(), st.data())
def test_adding_boundary_preserves_sortedness(data, draw):
    q, mode = data
    cert = classify_sorted(q, mode)
    assume(isinstance(cert, SortednessCertificate))
    B, C, H = set(q.B), set(q.C), set(q.H)
    for r in sorted(q.A):
        target = draw.draw(st.sampled_from("ABCH"))
        {"B": B, "C": C, "H": H}.get(target, set()).add(r)
    for r in sorted(q.B - mode.b_sharp):
        if draw.draw(st.booleans()):
            B.discard(r), H.add(r)
    for r in sorted(q.C - mode.c_flat):
        if draw.draw(st.booleans()):
            C.discard(r), H.add(r)
    bigger = FanQuadruple(q.fan, B, C, H, {r: Fraction(1, 2) for r in H})
    keep = {bigger.fan.vectors(c) for c in unsettled_cones(bigger, (bigger.B - mode.b_sharp) | (bigger.H - mode.h_sharp))}
    moved = SortednessCertificate(mode, tuple((rays, rho) for rays, rho in cert.cones if rays in keep))
    assert verify_sortedness_certificate(bigger, moved) == []
    assert isinstance(classify_sorted(bigger, mode), SortednessCertificate)


# ------------------------------------------------------------------ subdivisions


@settings(max_examples=25)
@given(quadruples(max_rank=3, max_rays=5, roles="ABC"))
def test_star_functions_verify(q):
    assume(q.is_affine() and q.fan.dim == q.fan.ambient_rank)
    nu = tuple(sum(col) for col in zip(*q.fan.rays))
    quad = star_quadruple(q, nu, "B")
    psi = find_good_sorting_function(quad.fan, q.fan.rays, quad)
    if psi is not None:
        assert verify_good_sorting_function(quad.fan, psi, quad) == []


@settings(max_examples=30)
@given(quadruples(max_rank=3, max_rays=5), st.tuples(small, small, small))
def test_ext_is_a_fan_and_keeps_simpliciality(q, nu):
    assume(q.is_affine())
    tau = q.fan.cone(q.fan.maximal_cones[0])
    nu = nu[: q.fan.ambient_rank]
    assume(any(nu))
    nu = primitive(nu)
    assume( not tau.contains(nu) and not tau.contains(tuple(-x for x in nu)))
    assume(not Cone.from_generators(list(q.fan.rays) + [nu], len(nu)).lineality_dim)
    out = ext(q.fan, q.fan.rays, nu)
    assert fan_validate(out)
    marked = [r for r in q.fan.rays if q.role(r) != "A"]
    if q.fan.is_simplicial_over(marked):
        assert out.is_simplicial_over(marked + [tuple(nu)])


@settings(max_examples=25)
@given(quadruples(max_rank=3, max_rays=5, roles="ABC"), st.data())
def test_resolution_invariants(q, data):
    assume(q.B or q.C)
    order = data.draw(st.permutations(sorted(q.C))) + data.draw(st.permutations(sorted(q.B)))
    chain = resolve_log_simplicial(q, order)
    assert chain.is_efficient()
    assert chain.final.is_log_simplicial()
    if is_partially_sorted(q):
        assert verify_chain(chain) == []


@settings(max_examples=30)
@given(quadruples(max_rank=3, max_rays=5, roles="ABC"))
def test_star_at_c_ray_convexity(q):
    assume(q.is_affine())
    for nu in sorted(q.C):
        if find_sorting_function(q, [nu]) is None:
            continue
        psi, alpha = star_at_c_witness(q, nu)
        starred = q.on(star_subdivision(q.fan, nu))
        assert alpha > 0 and psi.value(nu) == 0
        assert verify_good_sorting_function(starred.fan, psi, starred) == []


# ------------------------------------------------------------------ forms


def dual_face_span(q, zeta):
    tau = q.fan.cone(next(c for c in q.fan.maximal_cones if q.fan.indices(zeta) <= c))
    sigma = tau.dual
    gens = [d for d in sigma.rays if all(dot(d, r) == 0 for r in zeta)] + list(sigma.lineality.basis)
    return Subspace.span(gens, q.fan.ambient_rank)


@settings(max_examples=30)
@given(quadruples(max_rank=4, max_rays=6, roles="ABC"))
def test_phi_is_decreasing_and_contains_dual_span(q):
    fan = q.fan
    for small_cone in fan.all_cones:
        for big in fan.all_cones:
            if small_cone < big and big in set(fan.faces_of(max((c for c in fan.maximal_cones if big <= c), key=len))):
                lo, hi = phi(q, small_cone), phi(q, big)
                assert all(lo.contains(v) for v in hi.basis)
        value = phi(q, small_cone)
        if value.dim:
            span = dual_face_span(q, fan.vectors(small_cone))
            assert all(value.contains(v) for v in span.basis)


@settings(max_examples=30)
@given(quadruples(max_rank=4, max_rays=6, roles="ABC"))
def test_phi_restricts_to_faces(q):
    fan = q.fan
    for xi in fan.all_cones:
        local = restrict(q, xi)
        for zeta in local.fan.all_cones:
            assert phi(local, local.fan.vectors(zeta)) == phi(q, local.fan.vectors(zeta))


@settings(max_examples=20)
@given(quadruples(max_rank=3, max_rays=5, roles="ABC"))
def test_de_rham_complex_at_each_degree(q):
    assume(q.is_affine())
    n = q.fan.ambient_rank
    for m in window(n, 1):
        pieces = [graded_piece(FormSpec(q, p), m).value for p in range(n + 1)]
        maps = tuple(exterior_product_matrix(m, p) for p in range(n))
        dims = cohomology_dims(CochainComplex(tuple(pieces), maps))
        assert sum((-1) ** k * d for k, d in enumerate(dims)) == sum((-1) ** p * w.dim for p, w in enumerate(pieces))


# ------------------------------------------------------------------ Čech


@settings(max_examples=15)
@given(quadruples(max_rank=3, max_rays=5, roles="ABC"), st.data())
def test_relative_h0_is_base_piece(q, data):
    assume(q.is_affine() and q.fan.dim == q.fan.ambient_rank)
    nu = tuple(sum(col) for col in zip(*q.fan.rays))
    model = star_quadruple(q, nu, data.draw(st.sampled_from("BC")))
    assume(not pushforward_hypotheses(q, model))
    p = data.draw(st.integers(0, q.fan.ambient_rank))
    report = higher_direct_image_check(CechSetup(FormSpec(model, p), q), [p], bound=1)
    assert not report.h0_mismatches


@settings(max_examples=20)
@given(quadruples(max_rank=3, max_rays=6, roles="ABC"), st.data())
def test_cech_differential_squares_to_zero(q, data):
    p = data.draw(st.integers(0, q.fan.ambient_rank))
    m = tuple(data.draw(st.integers(-2, 2)) for _ in range(q.fan.ambient_rank))
    cech_complex_at_degree(CechSetup(FormSpec(q, p)), m).check()
