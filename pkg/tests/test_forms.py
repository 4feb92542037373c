from math import comb

import pytest

from oracles import bareiss_rank, same_span
from ses_oracle import eligible as ses_eligible
from torofan.fans import Fan, FanError, FanQuadruple, TorusDivisor, fan_triple
from torofan.forms import (
    FormError,
    FormSpec,
    de_rham_differential,
    graded_piece,
    hilbert_table,
    phi,
    pushforward_hypotheses,
    ses_hypotheses,
    twisted_graded_piece,
    verify_phi_ses_identities,
    verify_pushforward,
    verify_reflexive_intersection,
    window,
)
from torofan.linalg import Subspace, mat_vec, wedge_indices
from torofan.subdivision import resolve_log_simplicial, star_quadruple

V1, V2, V3, V4 = (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


@pytest.fixture
def qc(fixtures):
    return fixtures["FIX-QC"].quadruple


def in_sigma_minus_b(q, m):
    return all(dot(m, v) >= 0 for v in q.fan.rays) and all(dot(m, b) > 0 for b in q.B)


# ------------------------------------------------------------------ φ


def test_phi_of_origin_is_everything(qc):
    assert phi(qc, []) == Subspace.full(3)


def test_phi_on_rays(qc):
    assert phi(qc, [V1]) == Subspace.zero(3)
    assert phi(qc, [V2]) == Subspace.full(3)


def test_phi_on_a_face(qc):
    line = phi(qc, [V3, V4])
    # v3^⊥ ∩ v4^⊥ solved by hand: (0, 1, -1).
    assert line.dim == 1 and same_span(line.basis, [(0, 1, -1)])


def test_phi_accepts_indices(qc):
    assert phi(qc, [2, 3]) == phi(qc, [V3, V4])


def test_phi_rejects_non_cones(qc):
    with pytest.raises(FanError):
        phi(qc, [V1, V3])


# ------------------------------------------------------------------ graded pieces


def test_degree_zero_functions_match_ideal_of_b(qc):
    for m in window(3, 2):
        assert graded_piece(FormSpec(qc, 0), m).dim == int(in_sigma_minus_b(qc, m))


def test_square_piece_at_origin_vanishes(qc):
    assert all(graded_piece(FormSpec(qc, p), (0, 0, 0)).dim == 0 for p in range(4))


def test_interior_degree_gives_full_exterior_power(qc):
    m = (0, 0, 1)
    assert all(dot(m, v) > 0 for v in qc.fan.rays)
    assert [graded_piece(FormSpec(qc, p), m).dim for p in range(4)] == [comb(3, p) for p in range(4)]


@pytest.mark.parametrize("name", ["FIX-Q", "FIX-QC", "QC-SPLIT"])
def test_top_forms_match_sign_oracle(fixtures, name):
    # A top form survives at m exactly when m pairs positively with every A- and B-ray
    # and nonnegatively with every C-ray.
    q = fixtures[name].quadruple
    n = q.fan.ambient_rank
    for m in window(n, 2):
        expected = all(dot(m, v) > 0 if q.role(v) in "AB" else dot(m, v) >= 0 for v in q.fan.rays)
        assert graded_piece(FormSpec(q, n), m).dim == int(expected)


def test_smooth_chart_dims_match_binomial_oracle(fixtures):
    q = fixtures["FIX-Q"].quadruple
    for m in window(2, 3):
        if not in_sigma_minus_b(q, m):
            expected = [0, 0, 0]
        else:
            zero_a = [v for v in q.fan.rays if q.role(v) == "A" and dot(m, v) == 0]
            k = bareiss_rank(zero_a) if zero_a else 0
            expected = [comb(2 - k, p) for p in range(3)]
        assert [graded_piece(FormSpec(q, p), m).dim for p in range(3)] == expected


def test_form_spec_validation(qc):
    with pytest.raises(FormError):
        FormSpec(qc, 4)
    with pytest.raises(FormError):
        FormSpec(qc, 1, TorusDivisor.of({V1: "1/2"}))
    quad = FanQuadruple(qc.fan, H={V3}, h={V3: "1/2"})
    with pytest.raises(FormError):
        FormSpec(quad, 0)


# ------------------------------------------------------------------ twisting


def test_zero_twist_matches_untwisted(qc):
    for p in range(4):
        plain, twisted = FormSpec(qc, p), FormSpec(qc, p, TorusDivisor(()))
        for m in window(3, 2):
            assert twisted_graded_piece(twisted, m).value == graded_piece(plain, m).value


def test_rank_one_twist():
    t = fan_triple(Fan.affine(1, [(1,)]), B=[(1,)])
    spec = FormSpec(t, 0, TorusDivisor.of({(1,): 1}))
    dims = {m: twisted_graded_piece(spec, (m,)).dim for m in range(-3, 4)}
    assert dims == {-3: 0, -2: 0, -1: 0, 0: 1, 1: 1, 2: 1, 3: 1}


def test_square_twisted_by_boundary(qc, fixtures):
    spec = FormSpec(qc, 0, fixtures["FIX-QC"].divisors["D1"])
    for m in window(3, 2):
        t = {v: dot(m, v) + spec.coefficient(v) for v in qc.fan.rays}
        expected = all(x >= 0 for x in t.values()) and t[V1] > 0
        assert twisted_graded_piece(spec, m).dim == int(expected)
        assert expected == all(dot(m, v) >= 0 for v in qc.fan.rays)


# ------------------------------------------------------------------ tables


def test_table_without_marks_is_indicator_of_sigma(qc):
    plain = FanQuadruple(qc.fan)
    table = hilbert_table(FormSpec(plain, 0), 1)
    assert table.dims == {m: int(all(dot(m, v) >= 0 for v in qc.fan.rays)) for m in window(3, 1)}


def test_quadrant_table_vanishes_on_b_facet(fixtures):
    q = fixtures["FIX-Q"].quadruple
    table = hilbert_table(FormSpec(q, 1), 2)
    assert len(table.dims) == 25
    assert all(d == 0 for m, d in table.dims.items() if m[0] == 0)
    assert table.to_json()["dims"][0] == {"m": [-2, -2], "dim": 0}


def test_top_degree_table_is_at_most_one(qc):
    assert max(hilbert_table(FormSpec(qc, 3), 2).dims.values()) == 1


# ------------------------------------------------------------------ differential


def test_differential_at_zero_is_zero(qc):
    assert all(x == 0 for row in de_rham_differential(FormSpec(qc, 1), (0, 0, 0)) for x in row)


def test_rank_one_differential():
    t = fan_triple(Fan.affine(1, [(1,)]))
    for k in range(1, 4):
        assert de_rham_differential(FormSpec(t, 0), (k,)) == ((k,),)


def test_interior_differential_squares_to_zero(qc):
    m = (1, 2, 5)
    assert all(dot(m, v) > 0 for v in qc.fan.rays)
    d0 = de_rham_differential(FormSpec(qc, 0), m)
    d1 = de_rham_differential(FormSpec(qc, 1), m)
    d2 = de_rham_differential(FormSpec(qc, 2), m)
    for first, second in ((d0, d1), (d1, d2)):
        for col in range(len(first[0])):
            assert all(x == 0 for x in mat_vec(second, [row[col] for row in first]))
    assert d0 == tuple((x,) for x in m)


def test_differential_of_top_forms_is_refused(qc):
    with pytest.raises(FormError):
        de_rham_differential(FormSpec(qc, 3), (0, 0, 1))


def test_wedge_coordinates_are_lexicographic():
    assert wedge_indices(3, 2) == [(0, 1), (0, 2), (1, 2)]


# ------------------------------------------------------------------ reflexive intersection


@pytest.mark.parametrize("name", ["FIX-Q", "FIX-QC", "QC-SPLIT"])
def test_reflexive_intersection(fixtures, name):
    report = verify_reflexive_intersection(fixtures[name].quadruple, 3)
    assert report.ok and report.checked > 0


def test_reflexive_intersection_on_two_charts(fixtures):
    report = verify_reflexive_intersection(fixtures["P1-BC"].quadruple, 2)
    assert report.ok and report.notes["charts"] == 2


# ------------------------------------------------------------------ pushforward


def test_identity_model(qc):
    assert pushforward_hypotheses(qc, qc) == []
    assert verify_pushforward(qc, qc, 2).ok


def test_square_pushforward_from_resolution(fixtures):
    ff = fixtures["FIX-QC"]
    model = resolve_log_simplicial(ff.quadruple, ff.orders["c_first"], certify=False).final
    report = verify_pushforward(ff.quadruple, model, 3)
    assert report.ok and report.notes["hypotheses"] == "satisfied"


def test_r65_pushforward_from_star(fixtures):
    q = fixtures["FIX-R65"].quadruple
    b1 = next(r for r in q.fan.rays if r in q.B)
    report = verify_pushforward(q, star_quadruple(q, b1), 2)
    assert report.ok


def test_hypothesis_violation_is_reported(qc):
    bad = FanQuadruple(qc.fan, frozenset(), qc.C)
    report = verify_pushforward(qc, bad, 1)
    assert not report.ok
    assert any("no dominating" in h for h in report.notes["hypotheses"])


# ------------------------------------------------------------------ short exact sequences


def test_square_add_b_along_v3(qc):
    report = verify_phi_ses_identities(qc, V3, "addB")
    assert report.identity_holds
    assert [2] in report.checked and [1, 2] in report.checked and [2, 3] in report.checked
    assert report.eligible == ses_eligible(qc, V3, "addB")


def test_square_add_c_along_v4(qc):
    report = verify_phi_ses_identities(qc, V4, "addC")
    assert report.identity_holds and report.checked
    assert report.eligible == ses_eligible(qc, V4, "addC")


def test_log_simplicial_model_all_divisors(fixtures):
    ff = fixtures["FIX-QC"]
    model = resolve_log_simplicial(ff.quadruple, ff.orders["c_first"], certify=False).final
    for xi in sorted(model.A):
        for mode in ("addB", "addC"):
            report = verify_phi_ses_identities(model, xi, mode)
            assert report.eligible == ses_eligible(model, xi, mode)
            assert report.identity_holds, (xi, mode)


def test_ses_rejects_unknown_mode_and_ray(qc):
    with pytest.raises(FormError):
        ses_hypotheses(qc, V3, "addA")
    with pytest.raises(FanError):
        ses_hypotheses(qc, (5, 5, 1), "addB")


def test_marked_ray_is_ineligible(qc):
    report = verify_phi_ses_identities(qc, V1, "addB")
    assert not report.eligible and report.hypotheses["not_marked"]


def test_marked_ray_has_no_sequence(qc):
    report = verify_phi_ses_identities(qc, V2, "addB")
    assert not report.eligible and not report.identity_holds
    assert report.failures[0]["reason"] == "already marked"
