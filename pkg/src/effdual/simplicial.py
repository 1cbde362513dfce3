"""Finite abstract simplicial complexes and integral simplicial (co)homology.

Conventions (these fix all signs and bases):
  * simplices are stored as sorted tuples of vertex labels;
  * the boundary of (v_0, ..., v_d) is sum_k (-1)^k (v_0, ..., ^v_k, ..., v_d);
  * chains and cochains are integer row vectors over the sorted simplex list;
  * the coboundary matrix in degree d is the exact transpose of the boundary
    matrix in degree d+1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .abelian import FgAbInvariants, IntMatrix, QuotientStructure, RowSolver


@dataclass(frozen=True)
class SimplicialComplex:
    vertices: tuple
    simplices: frozenset  # of sorted tuples, closed under faces

    @staticmethod
    def from_maximal(maximal, vertices=None):
        """Build the downward closure of the given simplices."""
        closure = set()
        verts = set(vertices or ())
        for s in maximal:
            s = tuple(sorted(set(s)))
            verts.update(s)
            for k in range(1, len(s) + 1):
                closure.update(combinations(s, k))
        for v in verts:
            closure.add((v,))
        return SimplicialComplex(tuple(sorted(verts)), frozenset(closure))

    def __post_init__(self):
        for s in self.simplices:
            if tuple(sorted(s)) != s:
                raise ValueError(f"simplex {s} not sorted")
            for v in s:
                if (v,) not in self.simplices:
                    raise ValueError(f"vertex {v} missing as a 0-simplex")
            if len(s) > 1:
                for face in combinations(s, len(s) - 1):
                    if face not in self.simplices:
                        raise ValueError(f"face {face} of {s} missing")

    def has_simplex(self, s):
        return tuple(sorted(set(s))) in self.simplices

    def simplices_of_dim(self, d):
        return sorted(s for s in self.simplices if len(s) == d + 1)

    def dimension(self):
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def boundary_matrix(self, d):
        """Rows = d-simplices, cols = (d-1)-simplices; row s = boundary of s."""
        top = self.simplices_of_dim(d)
        if d <= 0:
            return IntMatrix.from_rows([() for _ in top], cols=0)
        bottom = self.simplices_of_dim(d - 1)
        index = {s: j for j, s in enumerate(bottom)}
        rows = []
        for s in top:
            row = [0] * len(bottom)
            for k in range(len(s)):
                face = s[:k] + s[k + 1:]
                row[index[face]] += (-1) ** k
            rows.append(row)
        return IntMatrix.from_rows(rows, cols=len(bottom))

    def coboundary_matrix(self, d):
        """Matrix of d^d: A^d -> A^{d+1} acting on cochain row vectors."""
        return self.boundary_matrix(d + 1).transpose()

    def to_json(self):
        maximal = [list(s) for s in sorted(self.simplices)
                   if not any(set(s) < set(t) for t in self.simplices)]
        return {"vertices": list(self.vertices), "maximal_simplices": maximal}

    @staticmethod
    def from_json(data):
        return SimplicialComplex.from_maximal(
            [tuple(s) for s in data["maximal_simplices"]],
            vertices=tuple(data["vertices"]))


@dataclass(frozen=True)
class CochainData:
    """The cochain complex of a complex around one degree, with d.d = 0 checked."""

    dimension: int
    d_below: IntMatrix  # d^{dim-1}: A^{dim-1} -> A^{dim}
    d_here: IntMatrix   # d^{dim}:   A^{dim}   -> A^{dim+1}

    def __post_init__(self):
        if self.d_below.rows and self.d_here.cols:
            comp = self.d_below.mul(self.d_here)
            if any(x != 0 for r in comp.entries for x in r):
                raise ValueError("coboundary composition is nonzero")


def _subquotient(ambient_dim, kernel_basis: IntMatrix, image_gens: IntMatrix):
    """Structure of rowspan(kernel_basis)/rowspan(image_gens) inside Z^ambient."""
    solver = RowSolver(kernel_basis)
    coords_rows = []
    for i in range(image_gens.rows):
        y = solver.solve(image_gens.row(i))
        if y is None:
            raise ValueError("image generator outside the kernel")
        coords_rows.append(y)
    M = IntMatrix.from_rows(coords_rows, cols=kernel_basis.rows)
    return QuotientStructure(kernel_basis.rows, M), solver


class CohomologyGroup:
    """H^d of a complex: invariants plus explicit aligned cocycle generators."""

    def __init__(self, complex_: SimplicialComplex, d: int, *, homology=False):
        from .abelian import left_kernel
        self.complex = complex_
        self.degree = d
        n = len(complex_.simplices_of_dim(d))
        if homology:
            kernel_of = complex_.boundary_matrix(d)       # (n_d x n_{d-1})
            image_mat = complex_.boundary_matrix(d + 1)   # rows span Im in Z^{n_d}
        else:
            kernel_of = complex_.coboundary_matrix(d)     # (n_d x n_{d+1})
            image_mat = complex_.coboundary_matrix(d - 1)
        self.kernel_basis = left_kernel(kernel_of)
        self.structure, self._solver = _subquotient(n, self.kernel_basis, image_mat)

    @property
    def invariants(self) -> FgAbInvariants:
        return self.structure.invariants

    def generator_cochains(self) -> IntMatrix:
        """Rows = aligned (co)cycle representatives of the canonical generators."""
        rows = []
        for i in range(len(self.structure.kept)):
            y = self.structure.generator_lift(i)
            rows.append(self.kernel_basis.apply_row(y))
        return IntMatrix.from_rows(rows, cols=self.kernel_basis.cols)

    def coords(self, cochain) -> tuple:
        y = self._solver.solve(cochain)
        if y is None:
            raise ValueError("vector is not a (co)cycle")
        return self.structure.coords(y)

    def class_is_zero(self, cochain) -> bool:
        return all(x == 0 for x in self.coords(cochain))


def cohomology(K: SimplicialComplex, d: int) -> CohomologyGroup:
    if not K.simplices:
        raise ValueError("empty complex")
    return CohomologyGroup(K, d)


def homology(K: SimplicialComplex, d: int) -> CohomologyGroup:
    if not K.simplices:
        raise ValueError("empty complex")
    return CohomologyGroup(K, d, homology=True)


@dataclass(frozen=True)
class SimplicialMap:
    src: SimplicialComplex
    dst: SimplicialComplex
    vertex_map: dict = field(hash=False)

    def __post_init__(self):
        for v in self.src.vertices:
            if v not in self.vertex_map:
                raise ValueError(f"vertex {v} has no image")
            if (self.vertex_map[v],) not in self.dst.simplices:
                raise ValueError(f"image of {v} is not a vertex of dst")
        for s in self.src.simplices:
            if not self.dst.has_simplex(self.image(s)):
                raise ValueError(f"image of simplex {s} is not a simplex")

    def image(self, simplex):
        return tuple(sorted({self.vertex_map[v] for v in simplex}))

    def compose(self, inner: "SimplicialMap") -> "SimplicialMap":
        """self . inner (inner applied first)."""
        if inner.dst is not self.src and inner.dst != self.src:
            raise ValueError("composition mismatch")
        return SimplicialMap(inner.src, self.dst,
                             {v: self.vertex_map[w] for v, w in inner.vertex_map.items()})


def are_contiguous(f: SimplicialMap, g: SimplicialMap) -> bool:
    if f.src != g.src or f.dst != g.dst:
        raise ValueError("maps must share source and target")
    for s in f.src.simplices:
        union = tuple(sorted({f.vertex_map[v] for v in s} | {g.vertex_map[v] for v in s}))
        if union not in f.dst.simplices:
            return False
    return True


def _perm_sign(seq):
    sign = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def cochain_pullback_matrix(f: SimplicialMap, d: int) -> IntMatrix:
    """Matrix P of f^#: A^d(dst) -> A^d(src) on row cochains (phi |-> phi @ P).

    P has rows indexed by dst d-simplices and cols by src d-simplices.
    """
    src_s = f.src.simplices_of_dim(d)
    dst_s = f.dst.simplices_of_dim(d)
    dst_index = {s: i for i, s in enumerate(dst_s)}
    cols = []
    for s in src_s:
        images = [f.vertex_map[v] for v in s]
        if len(set(images)) < len(images):
            cols.append((None, 0))
            continue
        tau = tuple(sorted(images))
        cols.append((dst_index[tau], _perm_sign(images)))
    rows = []
    for i in range(len(dst_s)):
        rows.append([sign if idx == i else 0 for idx, sign in cols])
    return IntMatrix.from_rows(rows, cols=len(src_s))


def induced_cohomology_map(f: SimplicialMap, d: int,
                           src_coh: CohomologyGroup | None = None,
                           dst_coh: CohomologyGroup | None = None) -> IntMatrix:
    """Matrix of H^d(dst) -> H^d(src) on the canonical aligned generators.

    Column convention: image of dst generator j is sum_i out[i][j] * src gen i,
    so for f: K -> L, g: L -> M we get induced(g.f) = induced(f) @ induced(g).
    """
    src_coh = src_coh or cohomology(f.src, d)
    dst_coh = dst_coh or cohomology(f.dst, d)
    P = cochain_pullback_matrix(f, d)
    gens = dst_coh.generator_cochains()
    cols = []
    for j in range(gens.rows):
        pulled = P.apply_row(gens.row(j))
        cols.append(src_coh.coords(pulled))
    n_src = len(src_coh.structure.kept)
    n_dst = gens.rows
    return IntMatrix(n_src, n_dst,
                     tuple(tuple(cols[j][i] for j in range(n_dst)) for i in range(n_src)))
