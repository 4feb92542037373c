"""Exact rational linear algebra: canonical subspaces, wedge powers, cochain complexes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from itertools import combinations
from math import comb, gcd
from typing import Iterable, Sequence

Vector = tuple
Matrix = tuple


class DimensionError(ValueError):
    pass


class DifferentialError(ValueError):
    """Raised when a complex fails d∘d = 0 or a map escapes its target term."""

    def __init__(self, index: int, message: str):
        super().__init__(f"{message} (index {index})")
        self.index = index


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def vec(values: Iterable) -> tuple:
    return tuple(to_fraction(x) for x in values)


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def primitive(v: Sequence) -> tuple:
    """Smallest positive integer multiple of a nonzero rational vector, direction kept."""
    fr = [to_fraction(x) for x in v]
    den = 1
    for x in fr:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        raise ValueError("zero vector has no primitive generator")
    return tuple(x // g for x in ints)


def rref(rows: Iterable[Sequence], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    mat = [[to_fraction(x) for x in r] for r in rows]
    for r in mat:
        if len(r) != ncols:
            raise DimensionError(f"row of length {len(r)} in a {ncols}-column matrix")
    pivots = []
    row = 0
    for col in range(ncols):
        pivot = next((i for i in range(row, len(mat)) if mat[i][col] != 0), None)
        if pivot is None:
            continue
        mat[row], mat[pivot] = mat[pivot], mat[row]
        lead = mat[row][col]
        if lead != 1:
            mat[row] = [x / lead for x in mat[row]]
        prow = mat[row]
        nz = [j for j in range(col, ncols) if prow[j] != 0]
        for i in range(len(mat)):
            if i != row:
                f = mat[i][col]
                if f != 0:
                    r = mat[i]
                    for j in nz:
                        r[j] -= f * prow[j]
        pivots.append(col)
        row += 1
        if row == len(mat):
            break
    return mat[:row], pivots


def rank(rows: Iterable[Sequence], ncols: int | None = None) -> int:
    rows = list(rows)
    if not rows:
        return 0
    if ncols is None:
        ncols = len(rows[0])
    return len(rref(rows, ncols)[1])


def nullspace(rows: Iterable[Sequence], ncols: int) -> list[tuple]:
    """Basis of {x : A x = 0}, one vector per free column."""
    reduced, pivots = rref(rows, ncols)
    free = [j for j in range(ncols) if j not in set(pivots)]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for r, p in zip(reduced, pivots):
            x[p] = -r[f]
        basis.append(tuple(x))
    return basis


def solve(rows: Sequence[Sequence], rhs: Sequence, ncols: int) -> tuple | None:
    """One solution of A x = b (free variables set to zero), or None."""
    aug = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    reduced, pivots = rref(aug, ncols + 1)
    if pivots and pivots[-1] == ncols:
        return None
    x = [Fraction(0)] * ncols
    for r, p in zip(reduced, pivots):
        x[p] = r[ncols]
    return tuple(x)


def mat_vec(matrix: Sequence[Sequence], v: Sequence) -> tuple:
    return tuple(dot(row, v) for row in matrix)


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence], inner: int | None = None) -> tuple:
    if not a:
        return ()
    cols = len(b[0]) if b else 0
    inner = len(b) if inner is None else inner
    return tuple(
        tuple(sum((row[k] * b[k][j] for k in range(inner) if row[k]), Fraction(0)) for j in range(cols))
        for row in a
    )


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of Q^n stored by its reduced row-echelon basis."""

    ambient_dim: int
    basis: tuple

    @classmethod
    def span(cls, vectors: Iterable[Sequence], ambient_dim: int) -> "Subspace":
        reduced, _ = rref(vectors, ambient_dim)
        return cls(ambient_dim, tuple(tuple(r) for r in reduced))

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ())

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls.span(
            [[int(i == j) for j in range(ambient_dim)] for i in range(ambient_dim)], ambient_dim
        )

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v: Sequence) -> bool:
        if len(v) != self.ambient_dim:
            raise DimensionError("vector length does not match ambient dimension")
        return rank(list(self.basis) + [list(v)], self.ambient_dim) == self.dim

    def __le__(self, other: "Subspace") -> bool:
        _check_same(self, other)
        return all(other.contains(b) for b in self.basis)

    def __ge__(self, other: "Subspace") -> bool:
        return other <= self

    def __and__(self, other: "Subspace") -> "Subspace":
        return subspace_intersect(self, other)

    def __add__(self, other: "Subspace") -> "Subspace":
        _check_same(self, other)
        return Subspace.span(list(self.basis) + list(other.basis), self.ambient_dim)

    def annihilator(self) -> "Subspace":
        """The orthogonal complement under the standard pairing."""
        if not self.basis:
            return Subspace.full(self.ambient_dim)
        return Subspace.span(nullspace(self.basis, self.ambient_dim), self.ambient_dim)

    def coordinates(self, v: Sequence) -> tuple:
        """Coefficients of v in the canonical basis (v must lie in the subspace)."""
        pivots = [next(j for j, x in enumerate(row) if x != 0) for row in self.basis]
        coeffs = tuple(to_fraction(v[p]) for p in pivots)
        recon = [sum((c * row[j] for c, row in zip(coeffs, self.basis)), Fraction(0)) for j in range(self.ambient_dim)]
        if any(recon[j] != to_fraction(v[j]) for j in range(self.ambient_dim)):
            raise ValueError("vector is not in the subspace")
        return coeffs

    def __repr__(self) -> str:
        rows = ", ".join("(" + ",".join(str(x) for x in r) + ")" for r in self.basis)
        return f"Subspace({self.ambient_dim}; [{rows}])"


def _check_same(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionError(f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}")


def subspace_intersect(a: Subspace, b: Subspace) -> Subspace:
    _check_same(a, b)
    if a.dim == a.ambient_dim:
        return b
    if b.dim == b.ambient_dim:
        return a
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(a.ambient_dim)
    constraints = list(a.annihilator().basis) + list(b.annihilator().basis)
    return Subspace.span(nullspace(constraints, a.ambient_dim), a.ambient_dim)


def intersect_all(spaces: Iterable[Subspace], ambient_dim: int) -> Subspace:
    result = Subspace.full(ambient_dim)
    for s in spaces:
        result = subspace_intersect(result, s)
    return result


def wedge_indices(n: int, p: int) -> list[tuple[int, ...]]:
    return list(combinations(range(n), p))


def wedge_of(vectors: Sequence[Sequence], n: int) -> tuple:
    """Lex coordinates of v_1 ∧ ... ∧ v_p: the p×p minors on each column set."""
    p = len(vectors)
    return tuple(_det([[to_fraction(v[j]) for j in cols] for v in vectors]) for cols in wedge_indices(n, p))


def _det(m: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in m]
    n = len(m)
    result = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            result = -result
        result *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for j in range(c, n):
                    m[r][j] -= f * m[c][j]
    return result


def wedge_power(w: Subspace, p: int) -> Subspace:
    n = w.ambient_dim
    if not 0 <= p <= n:
        raise DimensionError(f"wedge degree {p} outside [0, {n}]")
    target = comb(n, p)
    if p == 0:
        return Subspace.full(1)
    if w.dim == n:
        return Subspace.full(target)
    gens = [wedge_of([w.basis[i] for i in idx], n) for idx in combinations(range(w.dim), p)]
    return Subspace.span(gens, target)


def exterior_product_matrix(m: Sequence, p: int) -> tuple:
    """Matrix of ω ↦ m ∧ ω from ∧^p Q^n to ∧^{p+1} Q^n in lex coordinates."""
    n = len(m)
    rows_idx = wedge_indices(n, p + 1)
    cols_idx = {c: j for j, c in enumerate(wedge_indices(n, p))}
    mat = [[Fraction(0)] * len(cols_idx) for _ in rows_idx]
    for i, big in enumerate(rows_idx):
        for pos, k in enumerate(big):
            if m[k] == 0:
                continue
            rest = big[:pos] + big[pos + 1:]
            mat[i][cols_idx[rest]] += (-1) ** pos * to_fraction(m[k])
    return tuple(tuple(r) for r in mat)


@dataclass(frozen=True)
class CochainComplex:
    """terms[k] ⊆ Q^{a_k}; maps[k] is an a_{k+1} × a_k matrix acting on columns."""

    terms: tuple
    maps: tuple

    def __post_init__(self):
        if len(self.maps) != max(len(self.terms) - 1, 0):
            raise DimensionError("need exactly one map between consecutive terms")

    @cached_property
    def _sparse(self) -> tuple:
        return tuple(tuple(tuple((j, x) for j, x in enumerate(row) if x) for row in mat) for mat in self.maps)

    def apply(self, k: int, v: Sequence) -> tuple:
        zero = Fraction(0)
        return tuple(sum((x * v[j] for j, x in row if v[j]), zero) for row in self._sparse[k])

    def images(self, k: int) -> list[tuple]:
        if k < 0 or k >= len(self.maps):
            return []
        return [self.apply(k, b) for b in self.terms[k].basis]

    def check(self) -> None:
        for k in range(len(self.maps)):
            target = self.terms[k + 1]
            for img in self.images(k):
                if not target.contains(img):
                    raise DifferentialError(k, "map sends a basis vector outside the next term")
            if k + 1 < len(self.maps):
                for img in self.images(k):
                    if any(x != 0 for x in self.apply(k + 1, img)):
                        raise DifferentialError(k, "d∘d is nonzero")


def cohomology_dims(c: CochainComplex, check: bool = True) -> list[int]:
    if check:
        c.check()
    ranks = []
    for k in range(len(c.terms)):
        imgs = c.images(k)
        ranks.append(rank(imgs, c.terms[k + 1].ambient_dim) if imgs else 0)
    dims = []
    for k, term in enumerate(c.terms):
        kernel = term.dim - ranks[k]
        dims.append(kernel - (ranks[k - 1] if k > 0 else 0))
    return dims
