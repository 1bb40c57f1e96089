"""Exact convex-polyhedral kernel.

Polyhedra are closed convex sets in Q^d held in two representations:

* H-rep: finite list of inequalities ``n . x >= o`` (equalities appear as
  opposite pairs),
* V-rep: points + rays, ``P = conv(points) + cone(rays)`` (a lineality
  direction contributes both ``r`` and ``-r`` to the rays).

Conversion both ways runs through one primitive: the double description of a
cone given by inequality normals.  All vectors are reduced to primitive
integer tuples (content removed, sign kept), which makes the canonical forms
set-intrinsic: two descriptions of the same set canonicalize to byte-identical
data.  The insertion order of the double description is the lexicographic
order of the primitive normals, and new rays are generated only from adjacent
pairs (rank test on the common tight set), so intermediate generator lists
stay irredundant.
"""

from __future__ import annotations

import json
from fractions import Fraction
from math import ceil, floor, gcd
from typing import Iterable, Sequence

from .rational import Rat, Vec, fmt_rat, parse_rat

IVec = tuple[int, ...]


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# integer / rational vector helpers


def _primitive(v: Iterable[int]) -> IVec:
    """Divide an integer vector by the gcd of its entries (sign preserved)."""
    t = tuple(int(x) for x in v)
    g = 0
    for x in t:
        g = gcd(g, abs(x))
        if g == 1:
            return t
    if g <= 1:
        return t
    return tuple(x // g for x in t)


def _clear_denominators(v: Sequence[Fraction]) -> IVec:
    """Scale a rational vector by a positive rational to a primitive integer vector."""
    lcm = 1
    for x in v:
        d = x.denominator
        lcm = lcm // gcd(lcm, d) * d
    return _primitive(int(x * lcm) for x in v)


def _idot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def _fdot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot column indices)."""
    mat = [row[:] for row in rows]
    nrows = len(mat)
    ncols = len(mat[0]) if mat else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = next((i for i in range(r, nrows) if mat[i][c] != 0), None)
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(nrows):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return mat[:r], pivots


def _int_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix (Gaussian elimination with primitive reduction)."""
    mat = [_primitive(r) for r in rows if any(r)]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for c in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        pr = mat[rank]
        for i in range(rank + 1, len(mat)):
            if mat[i][c] != 0:
                a, b = pr[c], mat[i][c]
                mat[i] = _primitive(a * mat[i][k] - b * pr[k] for k in range(ncols))
        rank += 1
        if rank == len(mat):
            break
    return rank


def _kernel_basis(rref_rows: list[list[Fraction]], pivots: list[int], dim: int) -> list[IVec]:
    """Canonical primitive basis of the null space from an RREF."""
    free = [c for c in range(dim) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * dim
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -rref_rows[i][f]
        basis.append(_clear_denominators(v))
    return basis


def _solve_square(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Solve a nonsingular square system by Gaussian elimination."""
    n = len(mat)
    a = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for c in range(n):
        pivot = next(i for i in range(c, n) if a[i][c] != 0)
        a[c], a[pivot] = a[pivot], a[c]
        inv = 1 / a[c][c]
        a[c] = [x * inv for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [a[i][n] for i in range(n)]


# ---------------------------------------------------------------------------
# double description


def dual_rays(normals: Sequence[Sequence[int]], dim: int) -> tuple[list[IVec], list[IVec]]:
    """Lineality basis and extreme rays of ``{x : n . x >= 0 for all n}``.

    Both lists consist of primitive integer vectors and are canonical for the
    cone as a set (lineality from the RREF of the normals' row space; extreme
    rays are unique representatives in the orthogonal complement of the
    lineality, sorted lexicographically).
    """
    uniq = sorted({_primitive(n) for n in normals if any(n)})
    if not uniq:
        ident = [tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim)]
        return ident, []

    frows = [[Fraction(x) for x in n] for n in uniq]
    rref_rows, pivots = _rref(frows)
    k = len(pivots)
    lineality = _kernel_basis(rref_rows, pivots, dim)

    # Quotient coordinates: t_i = rref_i . x; a normal a (in the row space)
    # becomes (a[p_1], ..., a[p_k]) because the RREF rows are delta at pivots.
    proj = sorted({_primitive(tuple(n[p] for p in pivots)) for n in uniq})

    qrays = _pointed_dual_rays(proj, k)

    if not qrays:
        return lineality, []

    # Lift t back to R^d via x = P^T (P P^T)^{-1} t  (the representative in
    # the orthogonal complement of the lineality).
    gram = [[_fdot(ri, rj) for rj in rref_rows] for ri in rref_rows]
    lifted = []
    for t in qrays:
        coeff = _solve_square(gram, [Fraction(x) for x in t])
        x = [sum((coeff[i] * rref_rows[i][j] for i in range(k)), Fraction(0)) for j in range(dim)]
        lifted.append(_clear_denominators(x))
    return lineality, sorted(set(lifted))


def _pointed_dual_rays(normals: list[IVec], dim: int) -> list[IVec]:
    """Extreme rays of a pointed, full-rank cone ``{t : c . t >= 0}`` in R^dim.

    Requires the normals to span R^dim (guaranteed by the quotient
    construction in `dual_rays`).  Incremental double description: start from
    a simplicial subcone (greedy full-rank prefix in lexicographic order),
    insert the remaining constraints in order, build new rays only from
    adjacent (+,-) pairs.
    """
    if dim == 0:
        return []
    # Greedy full-rank initial subset in sorted order.
    init_idx: list[int] = []
    chosen: list[list[Fraction]] = []
    for i, n in enumerate(normals):
        trial = chosen + [[Fraction(x) for x in n]]
        if len(_rref(trial)[1]) > len(chosen):
            init_idx.append(i)
            chosen.append([Fraction(x) for x in n])
            if len(chosen) == dim:
                break
    if len(chosen) < dim:
        raise GeometryError("internal: quotient normals do not span")

    # Initial rays: columns of M^{-1} where M rows are the chosen normals.
    rays: list[IVec] = []
    for j in range(dim):
        e = [Fraction(1) if i == j else Fraction(0) for i in range(dim)]
        col = _solve_square(chosen, e)
        rays.append(_clear_denominators(col))

    processed: list[IVec] = [normals[i] for i in init_idx]
    remaining = [n for i, n in enumerate(normals) if i not in set(init_idx)]

    def tight_mask(ray: IVec) -> int:
        m = 0
        for bit, n in enumerate(processed):
            if _idot(n, ray) == 0:
                m |= 1 << bit
        return m

    masks = [tight_mask(r) for r in rays]

    for c in remaining:
        vals = [_idot(c, r) for r in rays]
        if all(v >= 0 for v in vals):
            processed.append(c)
            bit = 1 << (len(processed) - 1)
            masks = [m | bit if v == 0 else m for m, v in zip(masks, vals)]
            continue
        pos = [i for i, v in enumerate(vals) if v > 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        new_rays: list[IVec] = []
        for ip in pos:
            for im in neg:
                common = masks[ip] & masks[im]
                if common.bit_count() < dim - 2:
                    continue
                if dim > 2:
                    tight = [processed[b] for b in range(len(processed)) if common >> b & 1]
                    if _int_rank(tight) != dim - 2:
                        continue
                combo = tuple(
                    vals[ip] * rays[im][k] - vals[im] * rays[ip][k] for k in range(dim)
                )
                new_rays.append(_primitive(combo))
        kept = [rays[i] for i in pos + zero]
        rays = kept + [r for r in dict.fromkeys(new_rays) if r not in set(kept)]
        processed.append(c)
        masks = [tight_mask(r) for r in rays]

    return sorted(set(rays))


# ---------------------------------------------------------------------------
# Polyhedron


def _norm_ineq(normal: Sequence[Fraction], offset: Fraction) -> tuple[IVec, int] | None:
    """Jointly primitive integer form of ``n.x >= o``; None if trivial; raises if infeasible constant."""
    joint = _clear_denominators(list(normal) + [offset])
    n, o = joint[:-1], joint[-1]
    if not any(n):
        if o > 0:
            raise _TriviallyEmpty()
        return None
    return n, o


class _TriviallyEmpty(Exception):
    pass


class Polyhedron:
    """Closed convex polyhedron with exact dual representations.

    Instances are immutable after construction.  `canonical()` returns an
    equivalent polyhedron whose H- and V-reps are minimal and sorted; two
    polyhedra describe the same set iff their canonical data are equal.
    """

    __slots__ = ("dim", "_ineqs", "_points", "_rays", "_empty", "_is_canonical")

    def __init__(self) -> None:
        raise TypeError("use the from_* constructors")

    @classmethod
    def _new(cls, dim: int, ineqs, points, rays, empty, canonical) -> "Polyhedron":
        self = object.__new__(cls)
        self.dim = dim
        self._ineqs = ineqs
        self._points = points
        self._rays = rays
        self._empty = empty
        self._is_canonical = canonical
        return self

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_hrep(cls, dim: int, ineqs: Iterable[tuple[Sequence[object], object]]) -> "Polyhedron":
        norm: list[tuple[IVec, int]] = []
        try:
            for normal, offset in ineqs:
                nvec = tuple(parse_rat(x) for x in normal)
                if len(nvec) != dim:
                    raise GeometryError(f"normal of length {len(nvec)} in dimension {dim}")
                item = _norm_ineq(nvec, parse_rat(offset))
                if item is not None:
                    norm.append(item)
        except _TriviallyEmpty:
            return cls.empty(dim)
        return cls._new(dim, sorted(set(norm)), None, None, None, False)

    @classmethod
    def from_vrep(
        cls,
        dim: int,
        points: Iterable[Sequence[object]] = (),
        rays: Iterable[Sequence[object]] = (),
    ) -> "Polyhedron":
        pts = []
        for p in points:
            v = tuple(parse_rat(x) for x in p)
            if len(v) != dim:
                raise GeometryError(f"point of length {len(v)} in dimension {dim}")
            pts.append(v)
        rys = []
        for r in rays:
            v = tuple(parse_rat(x) for x in r)
            if len(v) != dim:
                raise GeometryError(f"ray of length {len(v)} in dimension {dim}")
            iv = _clear_denominators(v)
            if any(iv):
                rys.append(iv)
        if not pts:
            return cls.empty(dim)
        return cls._new(dim, None, sorted(set(pts)), sorted(set(rys)), False, False)

    @classmethod
    def empty(cls, dim: int) -> "Polyhedron":
        one = (tuple([0] * dim), 1)  # 0.x >= 1, kept so the H-rep is explicit
        return cls._new(dim, [one], [], [], True, True)

    @classmethod
    def cone_from_rays(cls, dim: int, rays: Iterable[Sequence[object]]) -> "Polyhedron":
        return cls.from_vrep(dim, points=[[0] * dim], rays=rays)

    @classmethod
    def cone_from_normals(cls, dim: int, normals: Iterable[Sequence[object]]) -> "Polyhedron":
        return cls.from_hrep(dim, [(n, 0) for n in normals])

    # -- representation access ---------------------------------------------

    def hrep(self) -> list[tuple[Vec, Rat]]:
        """Inequalities ``n . x >= o`` (exact, primitive integer data)."""
        self._need_hrep()
        return [(tuple(Fraction(x) for x in n), Fraction(o)) for n, o in self._ineqs]

    def vrep(self) -> tuple[list[Vec], list[Vec]]:
        self._need_vrep()
        pts = [tuple(p) for p in self._points]
        rys = [tuple(Fraction(x) for x in r) for r in self._rays]
        return pts, rys

    @property
    def is_empty(self) -> bool:
        if self._empty is None:
            self._need_vrep()
        return self._empty

    def is_cone(self) -> bool:
        c = self.canonical()
        zero = tuple(Fraction(0) for _ in range(self.dim))
        return not c.is_empty and c._points == [zero]

    def is_bounded(self) -> bool:
        c = self.canonical()
        return not c._rays

    # -- canonicalization ----------------------------------------------------

    def canonical(self) -> "Polyhedron":
        if self._is_canonical:
            return self
        if self._ineqs is not None:
            # The homogenization cone is intrinsic to the set, so one pass
            # each way yields canonical data on both sides.
            points, rays, nonempty = _h_to_v(self.dim, self._ineqs)
            if not nonempty:
                return Polyhedron.empty(self.dim)
            ineqs = _v_to_h(self.dim, points, rays)
            return Polyhedron._new(self.dim, ineqs, points, rays, False, True)
        points, rays = self._points, self._rays
        ineqs = _v_to_h(self.dim, points, rays)
        points, rays, nonempty = _h_to_v(self.dim, ineqs)
        if not nonempty:
            raise GeometryError("internal: V-rep polyhedron cannot be empty")
        return Polyhedron._new(self.dim, ineqs, points, rays, False, True)

    def _need_hrep(self) -> None:
        if self._ineqs is None:
            c = self.canonical()
            self._ineqs = c._ineqs
            self._points, self._rays, self._empty = c._points, c._rays, c._empty
            self._is_canonical = True

    def _need_vrep(self) -> None:
        if self._points is None:
            c = self.canonical()
            self._ineqs = c._ineqs
            self._points, self._rays, self._empty = c._points, c._rays, c._empty
            self._is_canonical = True

    def canonical_key(self):
        c = self.canonical()
        return (c.dim, c._empty, tuple(c._ineqs), tuple(c._points), tuple(c._rays))

    # -- predicates ----------------------------------------------------------

    def member(self, x: Sequence[object]) -> bool:
        v = tuple(parse_rat(t) for t in x)
        if len(v) != self.dim:
            raise GeometryError(f"point of length {len(v)} in dimension {self.dim}")
        self._need_hrep()
        return all(_fdot([Fraction(c) for c in n], v) >= o for n, o in self._ineqs)

    def contains(self, other: "Polyhedron") -> bool:
        """Set inclusion other ⊆ self."""
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        other._need_vrep()
        self._need_hrep()
        for p in other._points:
            if not self.member(p):
                return False
        for r in other._rays:
            if any(_idot(n, r) < 0 for n, _ in self._ineqs):
                return False
        return True

    def set_eq(self, other: "Polyhedron") -> bool:
        return self.canonical_key() == other.canonical_key()

    # -- operations ----------------------------------------------------------

    def intersect(self, *others: "Polyhedron") -> "Polyhedron":
        dims = {self.dim} | {o.dim for o in others}
        if len(dims) != 1:
            raise GeometryError("dimension mismatch in intersection")
        parts = (self,) + others
        ineqs: list[tuple[IVec, int]] = []
        for p in parts:
            p._need_hrep()
            if p._empty:
                return Polyhedron.empty(self.dim)
            ineqs.extend(p._ineqs)
        return Polyhedron._new(self.dim, sorted(set(ineqs)), None, None, None, False).canonical()

    def minkowski_sum(self, other: "Polyhedron") -> "Polyhedron":
        if self.dim != other.dim:
            raise GeometryError("dimension mismatch in Minkowski sum")
        if self.is_empty or other.is_empty:
            return Polyhedron.empty(self.dim)
        self._need_vrep()
        other._need_vrep()
        points = [tuple(a + b for a, b in zip(p, q)) for p in self._points for q in other._points]
        rays = list(self._rays) + list(other._rays)
        return Polyhedron.from_vrep(self.dim, points, rays).canonical()

    def convex_hull_closed(self, other: "Polyhedron") -> "Polyhedron":
        """Closure of conv(self ∪ other)."""
        if self.dim != other.dim:
            raise GeometryError("dimension mismatch in convex hull")
        if self.is_empty:
            return other.canonical()
        if other.is_empty:
            return self.canonical()
        self._need_vrep()
        other._need_vrep()
        return Polyhedron.from_vrep(
            self.dim, list(self._points) + list(other._points), list(self._rays) + list(other._rays)
        ).canonical()

    def translate(self, v: Sequence[object]) -> "Polyhedron":
        shift = tuple(parse_rat(x) for x in v)
        if len(shift) != self.dim:
            raise GeometryError("translation vector dimension mismatch")
        if self.is_empty:
            return self
        ineqs = points = rays = None
        if self._ineqs is not None:
            ineqs = []
            for n, o in self._ineqs:
                nf = [Fraction(c) for c in n]
                item = _norm_ineq(nf, Fraction(o) + _fdot(nf, shift))
                if item is not None:
                    ineqs.append(item)
            ineqs = sorted(set(ineqs))
        if self._points is not None:
            points = sorted(tuple(a + b for a, b in zip(p, shift)) for p in self._points)
            rays = self._rays
        return Polyhedron._new(self.dim, ineqs, points, rays, self._empty, self._is_canonical)

    def negate(self) -> "Polyhedron":
        """The reflection {-x : x in self}."""
        if self.is_empty:
            return self
        ineqs = points = rays = None
        if self._ineqs is not None:
            ineqs = sorted((tuple(-c for c in n), o) for n, o in self._ineqs)
        if self._points is not None:
            points = sorted(tuple(-a for a in p) for p in self._points)
            rays = sorted(tuple(-a for a in r) for r in self._rays)
        return Polyhedron._new(self.dim, ineqs, points, rays, self._empty, self._is_canonical)

    def polar(self) -> "Polyhedron":
        """For a cone C, the dual cone {y : y . x >= 0 for all x in C}."""
        if not self.is_cone():
            raise GeometryError("polar is defined for cones containing the origin")
        c = self.canonical()
        return Polyhedron.cone_from_normals(self.dim, [list(r) for r in c._rays]).canonical()

    def recession_cone(self) -> "Polyhedron":
        if self.is_empty:
            raise GeometryError("recession cone of the empty set")
        c = self.canonical()
        return Polyhedron.cone_from_rays(self.dim, [list(r) for r in c._rays]).canonical()

    def _grid_rounded(self, decimals: int, rounder) -> "Polyhedron":
        if self.is_empty:
            return self
        c = self.canonical()
        rec = Polyhedron.cone_from_rays(self.dim, [list(r) for r in c._rays])
        for i in range(self.dim):
            axis = [0] * self.dim
            axis[i] = 1
            if not rec.member(axis):
                raise GeometryError(
                    "grid rounding needs every coordinate axis as a recession "
                    "direction (free disposal)"
                )
        scale = 10**decimals
        points = [tuple(Fraction(rounder(x * scale), scale) for x in p) for p in c._points]
        return Polyhedron.from_vrep(self.dim, points, [list(r) for r in c._rays])

    def rounded_inside(self, decimals: int) -> "Polyhedron":
        """A subset whose vertices lie on the 10**-decimals coordinate grid.

        Every vertex moves up componentwise (free disposal keeps it in the
        set) and the rays are kept exact, so the result is provably contained
        in the set and has the same recession cone.  This caps the coefficient
        growth of iterated polyhedral operations at a guaranteed loss of at
        most one grid step per vertex coordinate.
        """
        return self._grid_rounded(decimals, ceil)

    def rounded_outside(self, decimals: int) -> "Polyhedron":
        """A superset whose vertices lie on the 10**-decimals coordinate grid.

        Every vertex moves down componentwise, and whatever was cut away is
        recovered by the recession cone (which contains the nonnegative
        orthant), so the result provably contains the set and has the same
        recession cone.  Counterpart of :meth:`rounded_inside`.
        """
        return self._grid_rounded(decimals, floor)

    def vertex_selected_inside(
        self, directions: Iterable[Sequence[object]], decimals: int
    ) -> "Polyhedron":
        """Inner approximation keeping one support-attaining vertex per direction.

        For every direction along which the set is bounded below, the vertex
        attaining the minimum is kept, so the lower support values along all
        given directions survive exactly (up to one upward grid step from
        :meth:`rounded_inside`-style rounding, which again requires every
        coordinate axis as a recession direction).  Dropping the remaining
        vertices caps the combinatorial growth of iterated operations.
        """
        if self.is_empty:
            return self
        c = self.canonical()
        rays = [[Fraction(x) for x in r] for r in c._rays]
        keep: set[int] = set()
        for s in directions:
            sv = tuple(parse_rat(x) for x in s)
            if any(_fdot(sv, r) < 0 for r in rays):
                continue
            arg = min(range(len(c._points)), key=lambda i: _fdot(sv, c._points[i]))
            keep.add(arg)
        if not keep:
            keep = set(range(len(c._points)))
        selected = Polyhedron.from_vrep(
            self.dim, [c._points[i] for i in sorted(keep)], [list(r) for r in c._rays]
        )
        return selected._grid_rounded(decimals, ceil)

    def support_rounded_outside(
        self, directions: Iterable[Sequence[object]], decimals: int
    ) -> "Polyhedron":
        """Outer approximation by supporting halfspaces along the directions.

        Directions along which the set is unbounded below are skipped; each
        kept halfspace uses the exact lower support value rounded down one
        grid step, so it provably contains the set.  The result's recession
        cone is the polar of the kept directions: include the polar rays of
        the desired recession cone among ``directions`` to pin it exactly.
        No free-disposal assumption is needed here.
        """
        if self.is_empty:
            return self
        c = self.canonical()
        rays = [[Fraction(x) for x in r] for r in c._rays]
        scale = 10**decimals
        ineqs: list[tuple[tuple[Fraction, ...], Fraction]] = []
        for s in directions:
            sv = tuple(parse_rat(x) for x in s)
            if any(_fdot(sv, r) < 0 for r in rays):
                continue
            lo = min(_fdot(sv, p) for p in c._points)
            ineqs.append((sv, Fraction(floor(lo * scale), scale)))
        return Polyhedron.from_hrep(self.dim, ineqs)

    def support_eval(self, y: Sequence[object]) -> tuple[Rat, Vec] | None:
        """max ``y . x`` over the set with a maximizing point, or None if unbounded.

        (Support function of the set in direction y.)  Raises on empty sets.
        """
        yv = tuple(parse_rat(t) for t in y)
        if self.is_empty:
            raise GeometryError("support of the empty set")
        c = self.canonical()
        for r in c._rays:
            if _fdot(yv, [Fraction(x) for x in r]) > 0:
                return None
        best = None
        arg = None
        for p in c._points:
            val = _fdot(yv, p)
            if best is None or val > best:
                best, arg = val, p
        return best, tuple(arg)

    def axis_interval(self, j: int) -> tuple[Rat | None, Rat | None]:
        """Exact interval {t : t * e_j in self} as (lo, hi); None means unbounded.

        Raises GeometryError if the intersection with the axis is empty.
        """
        if not 1 <= j <= self.dim:
            raise GeometryError(f"currency index {j} out of range 1..{self.dim}")
        self._need_hrep()
        lo: Rat | None = None
        hi: Rat | None = None
        for n, o in self._ineqs:
            c = n[j - 1]
            if c > 0:
                b = Fraction(o, c)
                lo = b if lo is None or b > lo else lo
            elif c < 0:
                b = Fraction(o, c)
                hi = b if hi is None or b < hi else hi
            elif o > 0:
                raise GeometryError("the coordinate axis misses the polyhedron")
        if lo is not None and hi is not None and lo > hi:
            raise GeometryError("the coordinate axis misses the polyhedron")
        return lo, hi

    def sigma_slice(self, j: int) -> "Polyhedron":
        """Intersection with the hyperplane ``x_j = 1`` (1-based j)."""
        if not 1 <= j <= self.dim:
            raise GeometryError(f"currency index {j} out of range 1..{self.dim}")
        e = [0] * self.dim
        e[j - 1] = 1
        extra = Polyhedron.from_hrep(self.dim, [(e, 1), ([-c for c in e], -1)])
        return self.intersect(extra)

    # -- misc -----------------------------------------------------------------

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self._empty:
            return f"Polyhedron(dim={self.dim}, empty)"
        if self._ineqs is not None:
            return f"Polyhedron(dim={self.dim}, {len(self._ineqs)} ineqs)"
        return f"Polyhedron(dim={self.dim}, {len(self._points)} pts, {len(self._rays)} rays)"


def _h_to_v(dim: int, ineqs: list[tuple[IVec, int]]) -> tuple[list[Vec], list[IVec], bool]:
    """Canonical V-rep of ``{x : n.x >= o}`` via the homogenization cone.

    Returns (points, rays, nonempty).  The homogenization lives in R^{dim+1}
    with last coordinate w >= 0; generators with w > 0 dehomogenize to points.
    """
    normals = [n + (-o,) for n, o in ineqs]
    normals.append(tuple([0] * dim + [1]))
    lineality, rays = dual_rays(normals, dim + 1)
    points: list[Vec] = []
    dirs: list[IVec] = []
    for l in lineality:
        if l[dim] != 0:
            raise GeometryError("internal: lineality with positive homogenizing coordinate")
        d = _primitive(l[:dim])
        dirs.append(d)
        dirs.append(tuple(-x for x in d))
    for r in rays:
        w = r[dim]
        if w > 0:
            points.append(tuple(Fraction(x, w) for x in r[:dim]))
        elif w == 0:
            dirs.append(_primitive(r[:dim]))
        else:
            raise GeometryError("internal: homogenization ray with w < 0")
    if not points:
        return [], [], False
    return sorted(set(points)), sorted(set(dirs)), True


def _v_to_h(dim: int, points: list[Vec], rays: list[IVec]) -> list[tuple[IVec, int]]:
    """Canonical minimal H-rep of conv(points) + cone(rays) (nonempty input)."""
    gens: list[IVec] = [_clear_denominators(list(p) + [Fraction(1)]) for p in points]
    gens.extend(r + (0,) for r in rays)
    lineality, prays = dual_rays(gens, dim + 1)
    out: list[tuple[IVec, int]] = []

    def add(vec: IVec) -> None:
        n, c = vec[:dim], vec[dim]
        if not any(n):
            if c < 0:
                raise GeometryError("internal: polar separates the whole space")
            return  # 0.x >= -c with c >= 0 is trivial
        out.append((n, -c))

    for l in lineality:
        add(l)
        add(tuple(-x for x in l))
    for r in prays:
        add(r)
    return sorted(set(out))


# ---------------------------------------------------------------------------
# JSON

def poly_to_json(poly: Polyhedron) -> dict:
    c = poly.canonical()
    pts, rays = c.vrep()
    return {
        "dim": c.dim,
        "empty": c.is_empty,
        "hrep": [
            {"normal": [fmt_rat(x) for x in n], "offset": fmt_rat(o)} for n, o in c.hrep()
        ],
        "vrep": {
            "points": [[fmt_rat(x) for x in p] for p in pts],
            "rays": [[fmt_rat(x) for x in r] for r in rays],
        },
    }


def poly_from_json(doc: dict) -> Polyhedron:
    if not isinstance(doc, dict) or "dim" not in doc:
        raise GeometryError("polyhedron document must be an object with a 'dim' field")
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise GeometryError("'dim' must be a positive integer")
    if doc.get("empty"):
        return Polyhedron.empty(dim)
    if "hrep" in doc and doc["hrep"] is not None:
        ineqs = [(item["normal"], item.get("offset", 0)) for item in doc["hrep"]]
        return Polyhedron.from_hrep(dim, ineqs)
    if "vrep" in doc and doc["vrep"] is not None:
        v = doc["vrep"]
        return Polyhedron.from_vrep(dim, v.get("points", []), v.get("rays", []))
    raise GeometryError("polyhedron document needs 'hrep' or 'vrep'")


def poly_dumps(poly: Polyhedron) -> str:
    return json.dumps(poly_to_json(poly), sort_keys=True, indent=2) + "\n"
