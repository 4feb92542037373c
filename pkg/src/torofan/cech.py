"""Degreewise Čech complexes of form sheaves, relative vanishing, total cohomology and E1 checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, product
from math import ceil, comb, floor
from typing import Iterable, Sequence

from .cones import Cone
from .fans import FanQuadruple, _ray, orbit_closure_triple
from .forms import FormSpec, chart_piece, graded_piece, piece_from_signs, twisted_graded_piece, window
from .linalg import CochainComplex, Subspace, cohomology_dims, dot, exterior_product_matrix, intersect_all
from .lp import linprog
from .parallel import parallel_map


class CechError(ValueError):
    pass


@dataclass(frozen=True)
class CechSetup:
    """Cover of a fan by its maximal cones (in list order), with a form sheaf and an optional affine base."""

    sheaf: FormSpec
    base: FanQuadruple | None = None

    def __post_init__(self):
        if self.base is not None:
            if not self.base.is_affine():
                raise CechError("the base must be affine")
            if self.base.fan.ambient_rank != self.fan.ambient_rank:
                raise CechError("the base and the fan live in different lattices")
            tau = self.base.fan.cone(self.base.fan.maximal_cones[0])
            if not all(tau.contains(r) for r in self.fan.rays):
                raise CechError("the fan does not lie over the base cone")

    @property
    def triple(self) -> FanQuadruple:
        return self.sheaf.triple

    @property
    def fan(self):
        return self.sheaf.triple.fan

    @property
    def rank(self) -> int:
        return self.fan.ambient_rank

    @cached_property
    def nerve(self) -> tuple:
        """nerve[k] = ((chart tuple, ray vectors of the common face), ...) for (k+1)-fold intersections."""
        charts = self.fan.maximal_cones
        levels = []
        for k in range(len(charts)):
            level = []
            for combo in combinations(range(len(charts)), k + 1):
                common = frozenset.intersection(*(charts[i] for i in combo))
                level.append((combo, tuple(sorted(self.fan.vectors(common)))))
            levels.append(tuple(level))
        return tuple(levels)

    def with_p(self, p: int) -> "CechSetup":
        return CechSetup(self.sheaf.with_p(p), self.base)


def _block_subspace(pieces: Sequence[Subspace], width: int) -> Subspace:
    # block-diagonal rref bases stay in rref when concatenated in block order
    rows = []
    zero = Fraction(0)
    for j, piece in enumerate(pieces):
        for b in piece.basis:
            row = [zero] * (width * len(pieces))
            row[j * width:(j + 1) * width] = b
            rows.append(tuple(row))
    return Subspace(width * len(pieces), tuple(rows))


def _coboundary(nerve: tuple, k: int, width: int) -> tuple:
    """Alternating sum of restrictions from level k to level k+1, as a matrix."""
    src = {combo: j for j, (combo, _) in enumerate(nerve[k])}
    tgt = nerve[k + 1]
    mat = [[0] * (width * len(src)) for _ in range(width * len(tgt))]
    for t, (combo, _) in enumerate(tgt):
        for pos in range(len(combo)):
            s = src[combo[:pos] + combo[pos + 1:]]
            sign = -1 if pos % 2 else 1
            for x in range(width):
                mat[t * width + x][s * width + x] += sign
    return tuple(tuple(r) for r in mat)


def _complex_from(nerve: tuple, width: int, piece_of) -> CochainComplex:
    terms = tuple(_block_subspace([piece_of(face) for _, face in level], width) for level in nerve)
    maps = tuple(_coboundary(nerve, k, width) for k in range(len(nerve) - 1))
    return CochainComplex(terms, maps)


def cech_complex_at_degree(setup: CechSetup, m: Sequence) -> CochainComplex:
    width = comb(setup.rank, setup.sheaf.p)
    return _complex_from(setup.nerve, width, lambda face: chart_piece(setup.sheaf, face, m))


def degree_signs(setup: CechSetup, m: Sequence) -> dict:
    out = {}
    for r in setup.fan.rays:
        t = dot(m, r) + setup.sheaf.coefficient(r)
        out[r] = (t > 0) - (t < 0)
    return out


_DIMS_CACHE: dict = {}


def cech_dims_from_signs(setup: CechSetup, signs: dict) -> tuple:
    """Čech cohomology dimensions; they depend on m only through the signs of t per ray."""
    key = (setup.triple, setup.sheaf.p, tuple(signs[r] for r in setup.fan.rays))
    if key not in _DIMS_CACHE:
        width = comb(setup.rank, setup.sheaf.p)
        cx = _complex_from(setup.nerve, width, lambda face: piece_from_signs(setup.triple, setup.sheaf.p, face, signs))
        _DIMS_CACHE[key] = tuple(cohomology_dims(cx))
    return _DIMS_CACHE[key]


def cech_dims_at_degree(setup: CechSetup, m: Sequence) -> tuple:
    return cech_dims_from_signs(setup, degree_signs(setup, m))


# ---------------------------------------------------------------- relative vanishing


@dataclass
class DirectImageReport:
    ok: bool
    bound: int
    checked: int
    nonzero_higher: list = field(default_factory=list)  # (p, m, k, dim)
    h0_mismatches: list = field(default_factory=list)  # (p, m)
    shell_nonzero_higher: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "bound": self.bound,
            "checked": self.checked,
            "nonzero_higher": [{"p": p, "m": list(m), "k": k, "dim": d} for p, m, k, d in self.nonzero_higher],
            "h0_mismatches": [{"p": p, "m": list(m)} for p, m in self.h0_mismatches],
            "shell": {"bound": self.bound + 1, "nonzero_higher": len(self.shell_nonzero_higher)},
        }


def _base_piece(setup: CechSetup, m) -> Subspace:
    spec = FormSpec(setup.base, setup.sheaf.p, setup.sheaf.twist)
    if spec.twist is None:
        return graded_piece(spec, m).value
    return twisted_graded_piece(spec, m).value


def higher_direct_image_check(setup: CechSetup, ps: Iterable[int] | None = None, bound: int = 3) -> DirectImageReport:
    """H^k (k ≥ 1) of the cover at each window degree, and H^0 against the base piece.

    The shell |m|_∞ = bound + 1 is swept as well and reported separately.
    """
    if setup.base is None:
        raise CechError("relative check needs a base")
    ps = range(setup.rank + 1) if ps is None else ps
    report = DirectImageReport(True, bound, 0)
    inner = window(setup.rank, bound)
    shell = [m for m in window(setup.rank, bound + 1) if max(map(abs, m), default=0) == bound + 1]
    for p in ps:
        local = setup.with_p(p)
        charts = [face for _, face in local.nerve[0]]
        width = comb(local.rank, p)

        def run(m):
            dims = cech_dims_at_degree(local, m)
            h0 = intersect_all([chart_piece(local.sheaf, face, m) for face in charts], width)
            return dims, h0 == _base_piece(local, m)

        for m, (dims, same) in zip(inner, parallel_map(run, inner)):
            report.checked += 1
            for k, d in enumerate(dims[1:], start=1):
                if d:
                    report.nonzero_higher.append((p, m, k, d))
            if not same:
                report.h0_mismatches.append((p, m))
        for m in shell:
            dims = cech_dims_at_degree(local, m)
            for k, d in enumerate(dims[1:], start=1):
                if d:
                    report.shell_nonzero_higher.append((p, m, k, d))
    report.ok = not report.nonzero_higher and not report.h0_mismatches
    return report


# ---------------------------------------------------------------- chambers


@dataclass(frozen=True)
class Chamber:
    signs: tuple  # one of -1, 0, 1 per hyperplane
    point: tuple
    bounded: bool
    lattice_points: tuple  # only for bounded chambers


@dataclass(frozen=True)
class ChamberDecomposition:
    rank: int
    hyperplanes: tuple  # ((normal, offset), ...): ⟨m, normal⟩ + offset
    chambers: tuple

    def to_json(self) -> list:
        return [
            {
                "signs": list(c.signs),
                "point": [str(x) for x in c.point],
                "bounded": c.bounded,
                "lattice_points": len(c.lattice_points),
            }
            for c in self.chambers
        ]


def _normalize(normal: tuple, offset: int) -> tuple[tuple, int, int]:
    lead = next(x for x in normal if x != 0)
    s = 1 if lead > 0 else -1
    return tuple(s * x for x in normal), s * offset, s


def _cell_rows(hyperplanes, signs):
    """Homogeneous rows (normal, offset) with row·(m, 1) ≥ 0 / = 0 describing the closed cell."""
    ineq, eq = [], []
    for (v, c), s in zip(hyperplanes, signs):
        if s == 0:
            eq.append((v, c))
        else:
            ineq.append((tuple(s * x for x in v), s * c))
    return ineq, eq


def _cell_point(n: int, hyperplanes, signs) -> tuple | None:
    """A point strictly inside the cell (margin δ > 0), or None if the cell is empty."""
    ineq, eq = _cell_rows(hyperplanes, signs)
    a_ub = [[-x for x in v] + [1] for v, _ in ineq]
    b_ub = [c for _, c in ineq]
    a_eq = [list(v) + [0] for v, _ in eq]
    b_eq = [-c for _, c in eq]
    bounds = [(None, None)] * n + [(None, 1)]
    res = linprog([0] * n + [-1], a_ub, b_ub, a_eq, b_eq, bounds, n + 1)
    if res.status != "optimal":
        return None
    if ineq and res.x[n] <= 0:
        return None
    return tuple(res.x[:n])


def _bounded(n: int, hyperplanes, signs) -> bool:
    ineq, eq = _cell_rows(hyperplanes, signs)
    rows = [v for v, _ in ineq] + [v for v, _ in eq] + [tuple(-x for x in v) for v, _ in eq]
    if not rows:
        return n == 0
    rec = Cone.from_inequalities(rows, n)
    return not rec.rays and rec.lineality.dim == 0


def _lattice_points(n: int, hyperplanes, signs) -> tuple:
    ineq, eq = _cell_rows(hyperplanes, signs)
    rows = [tuple(v) + (c,) for v, c in ineq]
    rows += [tuple(v) + (c,) for v, c in eq] + [tuple(-x for x in v) + (-c,) for v, c in eq]
    rows.append((0,) * n + (1,))
    hom = Cone.from_inequalities(rows, n + 1)
    verts = [tuple(Fraction(x) / r[n] for x in r[:n]) for r in hom.rays if r[n] > 0]
    if not verts:
        return ()
    lo = [ceil(min(v[j] for v in verts)) for j in range(n)]
    hi = [floor(max(v[j] for v in verts)) for j in range(n)]
    found = []
    for m in product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        vals = [dot(m, v) + c for v, c in hyperplanes]
        if all((x > 0) - (x < 0) == s for x, s in zip(vals, signs)):
            found.append(m)
    return tuple(found)


def chamber_decomposition(n: int, hyperplanes: Sequence[tuple]) -> ChamberDecomposition:
    """All nonempty relatively open cells of an affine hyperplane arrangement, by LP-pruned search."""
    hyperplanes = tuple((tuple(v), c) for v, c in hyperplanes)
    chambers = []

    def search(prefix):
        if _cell_point(n, hyperplanes[: len(prefix)], prefix) is None:
            return
        if len(prefix) == len(hyperplanes):
            point = _cell_point(n, hyperplanes, prefix)
            bounded = _bounded(n, hyperplanes, prefix)
            pts = _lattice_points(n, hyperplanes, prefix) if bounded else ()
            chambers.append(Chamber(tuple(prefix), point, bounded, pts))
            return
        for s in (-1, 0, 1):
            search(prefix + (s,))

    search(())
    return ChamberDecomposition(n, hyperplanes, tuple(chambers))


def _arrangement(setup: CechSetup, with_zero: bool):
    hyperplanes: list = []
    where = {}

    def add(v, c):
        key = _normalize(v, c)
        h = key[:2]
        if h not in hyperplanes:
            hyperplanes.append(h)
        return hyperplanes.index(h), key[2]

    for r in setup.fan.rays:
        where[r] = add(r, setup.sheaf.coefficient(r))
        if with_zero:
            add(r, 0)
    return hyperplanes, where


def _ray_signs(where: dict, chamber: Chamber) -> dict:
    return {r: s * chamber.signs[h] for r, (h, s) in where.items()}


@dataclass
class CohomologyTable:
    rank: int
    dims: dict  # (p, q) -> dim
    chambers: ChamberDecomposition

    def total(self) -> int:
        return sum(self.dims.values())

    def to_json(self) -> dict:
        return {
            "rows": [{"p": p, "q": q, "dim": d} for (p, q), d in sorted(self.dims.items())],
            "total": self.total(),
            "chambers": self.chambers.to_json(),
        }


def _require_complete(setup: CechSetup) -> None:
    if not setup.fan.is_complete():
        raise CechError("total cohomology needs a complete fan")


def _hodge_table(setup: CechSetup, dec: ChamberDecomposition, where: dict) -> dict:
    n = setup.rank
    dims = {(p, q): 0 for p in range(n + 1) for q in range(n + 1)}
    for ch in dec.chambers:
        signs = _ray_signs(where, ch)
        for p in range(n + 1):
            local = cech_dims_from_signs(setup.with_p(p), signs)
            if not ch.bounded:
                if any(local):
                    raise CechError(f"nonzero cohomology on an unbounded chamber {ch.signs} (p={p})")
                continue
            for q, d in enumerate(local):
                if q <= n:
                    dims[(p, q)] += d * len(ch.lattice_points)
    return dims


def complete_cohomology_dims(setup: CechSetup) -> CohomologyTable:
    """h^q of every form sheaf Ω^p on a complete fan, summed over the cells of the threshold arrangement."""
    _require_complete(setup)
    hyperplanes, where = _arrangement(setup, with_zero=False)
    dec = chamber_decomposition(setup.rank, hyperplanes)
    return CohomologyTable(setup.rank, _hodge_table(setup, dec, where), dec)


# ---------------------------------------------------------------- Čech–de Rham


def double_complex_at_degree(setup: CechSetup, m: Sequence) -> CochainComplex:
    """Total complex of C^q(Ω^p)_m with D = δ + (-1)^q m∧."""
    n = setup.rank
    nerve = setup.nerve
    qmax = len(nerve) - 1
    specs = [setup.sheaf.with_p(p) for p in range(n + 1)]
    blocks = {}
    for p in range(n + 1):
        width = comb(n, p)
        for q in range(qmax + 1):
            blocks[(p, q)] = _block_subspace([chart_piece(specs[p], face, m) for _, face in nerve[q]], width)
    layout = []
    for k in range(n + qmax + 1):
        parts = [(p, k - p) for p in range(n + 1) if 0 <= k - p <= qmax]
        offsets, pos = {}, 0
        for pq in parts:
            offsets[pq] = pos
            pos += blocks[pq].ambient_dim
        layout.append((offsets, pos))
    terms = []
    for offsets, size in layout:
        rows = []
        for pq, off in offsets.items():
            for b in blocks[pq].basis:
                row = [Fraction(0)] * size
                row[off:off + len(b)] = b
                rows.append(row)
        terms.append(Subspace.span(rows, size))
    maps = []
    wedge = [exterior_product_matrix(tuple(m), p) for p in range(n)]
    for k in range(len(layout) - 1):
        (src, ssize), (tgt, tsize) = layout[k], layout[k + 1]
        mat = [[Fraction(0)] * ssize for _ in range(tsize)]
        for (p, q), so in src.items():
            width = comb(n, p)
            if (p, q + 1) in tgt:
                d = _coboundary(nerve, q, width)
                to = tgt[(p, q + 1)]
                for i, row in enumerate(d):
                    for j, x in enumerate(row):
                        if x:
                            mat[to + i][so + j] += x
            if (p + 1, q) in tgt:
                to = tgt[(p + 1, q)]
                sign = -1 if q % 2 else 1
                w = wedge[p]
                tw = comb(n, p + 1)
                for c in range(len(nerve[q])):
                    for i, row in enumerate(w):
                        for j, x in enumerate(row):
                            if x:
                                mat[to + c * tw + i][so + c * width + j] += sign * x
        maps.append(tuple(tuple(r) for r in mat))
    return CochainComplex(tuple(terms), tuple(maps))


@dataclass
class E1Report:
    ok: bool
    hyper: list  # dim ℍ^k
    hodge_sums: list  # Σ_{p+q=k} h^q(Ω^p)
    hodge: dict
    euler_double: int
    euler_hodge: int

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "hypercohomology": self.hyper,
            "hodge_sums": self.hodge_sums,
            "hodge": [{"p": p, "q": q, "dim": d} for (p, q), d in sorted(self.hodge.items())],
            "euler_double": self.euler_double,
            "euler_hodge": self.euler_hodge,
        }


def e1_degeneration_check(setup: CechSetup) -> E1Report:
    """Compare dim ℍ^k of the Čech–de Rham total complex with Σ_{p+q=k} h^q(Ω^p)."""
    _require_complete(setup)
    if setup.sheaf.twist is not None:
        raise CechError("the de Rham check is provided for untwisted triples")
    n = setup.rank
    hyperplanes, where = _arrangement(setup, with_zero=True)
    dec = chamber_decomposition(n, hyperplanes)
    hodge = _hodge_table(setup, dec, where)
    coarse = complete_cohomology_dims(setup).dims
    if hodge != coarse:
        raise CechError("refined and coarse chamber sums disagree")
    qmax = len(setup.nerve) - 1
    top = n + qmax
    hyper = [0] * (top + 1)
    points = [m for ch in dec.chambers if ch.bounded for m in ch.lattice_points]
    for dims in parallel_map(lambda m: cohomology_dims(double_complex_at_degree(setup, m)), points):
        for k, d in enumerate(dims):
            hyper[k] += d
    sums = [sum(hodge.get((p, k - p), 0) for p in range(n + 1)) for k in range(top + 1)]
    euler_hodge = sum((-1) ** (p + q) * d for (p, q), d in hodge.items())
    euler_double = sum((-1) ** k * d for k, d in enumerate(hyper))
    return E1Report(hyper == sums, hyper, sums, hodge, euler_double, euler_hodge)


def exceptional_surface_setup(q: FanQuadruple, ray: Sequence, p: int = 0) -> CechSetup:
    triple, _ = orbit_closure_triple(q, _ray(ray))
    return CechSetup(FormSpec(triple, p))
