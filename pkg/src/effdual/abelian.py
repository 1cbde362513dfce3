"""Exact integer-matrix algebra and invariants of finitely generated abelian groups.

Everything here is over plain Python ints (arbitrary precision), no floats.
Matrices are immutable; row vectors are tuples of ints.  Subgroups of Z^n are
handled as row spans.  The Smith normal form drives all invariant and
membership computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd


# ---------------------------------------------------------------------------
# vectors

def vec_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(k, a):
    return tuple(k * x for x in a)


def vec_is_zero(a):
    return all(x == 0 for x in a)


def vec_dot(a, b):
    return sum(x * y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class IntMatrix:
    """Dense integer matrix, row-major, immutable."""

    rows: int
    cols: int
    entries: tuple

    @staticmethod
    def from_rows(rows, cols=None):
        rows = [tuple(int(x) for x in r) for r in rows]
        if rows:
            c = len(rows[0])
            if any(len(r) != c for r in rows):
                raise ValueError("ragged rows")
        else:
            c = 0 if cols is None else cols
        return IntMatrix(len(rows), c if cols is None else cols, tuple(rows))

    @staticmethod
    def identity(n):
        return IntMatrix(n, n, tuple(tuple(1 if i == j else 0 for j in range(n))
                                     for i in range(n)))

    @staticmethod
    def zeros(r, c):
        return IntMatrix(r, c, tuple(tuple(0 for _ in range(c)) for _ in range(r)))

    def __post_init__(self):
        if len(self.entries) != self.rows:
            raise ValueError("row count mismatch")
        for r in self.entries:
            if len(r) != self.cols:
                raise ValueError("col count mismatch")

    def __getitem__(self, rc):
        i, j = rc
        return self.entries[i][j]

    def row(self, i):
        return self.entries[i]

    def col(self, j):
        return tuple(r[j] for r in self.entries)

    def transpose(self):
        return IntMatrix(self.cols, self.rows,
                         tuple(tuple(self.entries[i][j] for i in range(self.rows))
                               for j in range(self.cols)))

    def mul(self, other):
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in product")
        ot = other.transpose()
        return IntMatrix(self.rows, other.cols,
                         tuple(tuple(vec_dot(r, c) for c in ot.entries)
                               for r in self.entries))

    def __matmul__(self, other):
        return self.mul(other)

    def apply_row(self, v):
        """v @ self for a row vector v of length self.rows."""
        if len(v) != self.rows:
            raise ValueError("vector length mismatch")
        return tuple(sum(v[i] * self.entries[i][j] for i in range(self.rows))
                     for j in range(self.cols))

    def stack(self, other):
        if other.rows == 0:
            return self
        if self.rows == 0:
            return other
        if self.cols != other.cols:
            raise ValueError("column mismatch in stack")
        return IntMatrix(self.rows + other.rows, self.cols, self.entries + other.entries)

    def is_diagonal(self):
        return all(self.entries[i][j] == 0
                   for i in range(self.rows) for j in range(self.cols) if i != j)

    def diagonal(self):
        return tuple(self.entries[i][i] for i in range(min(self.rows, self.cols)))

    def det(self):
        """Exact determinant (Bareiss fraction-free elimination)."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        m = [list(r) for r in self.entries]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                for i in range(k + 1, n):
                    if m[i][k] != 0:
                        m[k], m[i] = m[i], m[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
                m[i][k] = 0
            prev = m[k][k]
        return sign * m[n - 1][n - 1]

    def to_json(self):
        return [[str(x) for x in r] for r in self.entries]

    @staticmethod
    def from_json(data, cols=None):
        return IntMatrix.from_rows([[int(x) for x in r] for r in data], cols=cols)


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SnfDecomposition:
    """U @ M @ V = S with U, V unimodular and S in Smith normal form.

    u_inv and v_inv are the exact inverses, tracked during elimination.
    """

    U: IntMatrix
    S: IntMatrix
    V: IntMatrix
    u_inv: IntMatrix
    v_inv: IntMatrix

    def diagonal(self):
        return self.S.diagonal()

    def verify(self, M):
        if self.U.mul(M).mul(self.V).entries != self.S.entries:
            return False
        if abs(self.U.det()) != 1 or abs(self.V.det()) != 1:
            return False
        if not self.S.is_diagonal():
            return False
        d = [x for x in self.S.diagonal()]
        for a, b in zip(d, d[1:]):
            if a < 0 or b < 0:
                return False
            if a != 0 and b % a != 0:
                return False
            if a == 0 and b != 0:
                return False
        return True


class _SparseMat:
    """dict-of-rows workspace with a column index, used inside eliminations."""

    def __init__(self, M):
        self.rows = M.rows
        self.cols = M.cols
        self.data = {}
        self.colidx = {}  # col -> set of rows with a nonzero there
        for i, r in enumerate(M.entries):
            d = {j: x for j, x in enumerate(r) if x != 0}
            if d:
                self.data[i] = d
                for j in d:
                    self.colidx.setdefault(j, set()).add(i)

    def get(self, i, j):
        return self.data.get(i, {}).get(j, 0)

    def _set(self, i, j, v):
        if v == 0:
            row = self.data.get(i)
            if row and j in row:
                del row[j]
                self.colidx[j].discard(i)
                if not row:
                    del self.data[i]
        else:
            self.data.setdefault(i, {})[j] = v
            self.colidx.setdefault(j, set()).add(i)

    def swap_rows(self, a, b):
        if a == b:
            return
        ra, rb = self.data.get(a), self.data.get(b)
        cols = set(ra or ()) | set(rb or ())
        for j in cols:
            s = self.colidx[j]
            ina, inb = a in s, b in s
            if ina != inb:
                if ina:
                    s.discard(a)
                    s.add(b)
                else:
                    s.discard(b)
                    s.add(a)
        self.data.pop(a, None)
        self.data.pop(b, None)
        if rb is not None:
            self.data[a] = rb
        if ra is not None:
            self.data[b] = ra

    def swap_cols(self, a, b):
        if a == b:
            return
        rows = self.colidx.get(a, set()) | self.colidx.get(b, set())
        for i in rows:
            r = self.data[i]
            va, vb = r.pop(a, None), r.pop(b, None)
            if vb is not None:
                r[a] = vb
            if va is not None:
                r[b] = va
        self.colidx[a], self.colidx[b] = (self.colidx.get(b, set()),
                                          self.colidx.get(a, set()))

    def add_row(self, src, dst, k):
        """row dst += k * row src"""
        if k == 0 or src not in self.data:
            return
        for j, v in list(self.data[src].items()):
            cur = self.data.get(dst, {}).get(j, 0)
            self._set(dst, j, cur + k * v)

    def add_col(self, src, dst, k):
        """col dst += k * col src"""
        if k == 0:
            return
        for i in list(self.colidx.get(src, ())):
            v = self.data[i][src]
            cur = self.data[i].get(dst, 0)
            self._set(i, dst, cur + k * v)

    def scale_row(self, i, k):
        if i in self.data:
            for j in list(self.data[i]):
                self.data[i][j] *= k

    def scale_col(self, j, k):
        for i in self.colidx.get(j, ()):
            self.data[i][j] *= k

    def row_vector(self, i):
        r = self.data.get(i, {})
        return tuple(r.get(j, 0) for j in range(self.cols))

    def to_matrix(self):
        return IntMatrix(self.rows, self.cols,
                         tuple(self.row_vector(i) for i in range(self.rows)))


class _SnfEngine:
    """Shared elimination; transforms are tracked only when requested."""

    def __init__(self, M: IntMatrix, track=("U", "V", "Uinv", "Vinv")):
        self.M = M
        self.w = _SparseMat(M)
        self.U = _SparseMat(IntMatrix.identity(M.rows)) if "U" in track else None
        self.Uinv = _SparseMat(IntMatrix.identity(M.rows)) if "Uinv" in track else None
        self.V = _SparseMat(IntMatrix.identity(M.cols)) if "V" in track else None
        self.Vinv = _SparseMat(IntMatrix.identity(M.cols)) if "Vinv" in track else None
        self._run()

    def _row_op(self, src, dst, k):
        self.w.add_row(src, dst, k)
        if self.U is not None:
            self.U.add_row(src, dst, k)
        if self.Uinv is not None:
            self.Uinv.add_col(dst, src, -k)

    def _col_op(self, src, dst, k):
        self.w.add_col(src, dst, k)
        if self.V is not None:
            self.V.add_col(src, dst, k)
        if self.Vinv is not None:
            self.Vinv.add_row(dst, src, -k)

    def _swap_r(self, a, b):
        self.w.swap_rows(a, b)
        if self.U is not None:
            self.U.swap_rows(a, b)
        if self.Uinv is not None:
            self.Uinv.swap_cols(a, b)

    def _swap_c(self, a, b):
        self.w.swap_cols(a, b)
        if self.V is not None:
            self.V.swap_cols(a, b)
        if self.Vinv is not None:
            self.Vinv.swap_rows(a, b)

    def _negate_row(self, i):
        self.w.scale_row(i, -1)
        if self.U is not None:
            self.U.scale_row(i, -1)
        if self.Uinv is not None:
            self.Uinv.scale_col(i, -1)

    def _find_pivot(self, k):
        """Min |value| among remaining entries, ties by (row, col); early exit
        on the first absolute value 1 met in (row, col) order."""
        w = self.w
        best = None
        for i in sorted(w.data):
            if i < k:
                continue
            row = w.data[i]
            for j in sorted(row):
                if j < k:
                    continue
                v = abs(row[j])
                if v == 1:
                    return (1, i, j)
                if best is None or v < best[0] or (v == best[0] and (i, j) < best[1:]):
                    best = (v, i, j)
        return best

    def _run(self):
        w = self.w
        n = min(self.M.rows, self.M.cols)
        k = 0
        while k < n:
            best = self._find_pivot(k)
            if best is None:
                break
            _, pi, pj = best
            if pi != k:
                self._swap_r(pi, k)
            if pj != k:
                self._swap_c(pj, k)
            if w.get(k, k) < 0:
                self._negate_row(k)

            # clear the cross; remainders may force re-pivoting
            while True:
                p = w.get(k, k)
                for i in list(w.colidx.get(k, ())):
                    if i > k:
                        self._row_op(k, i, -(w.data[i][k] // p))
                for j, v in list(w.data.get(k, {}).items()):
                    if j > k:
                        self._col_op(k, j, -(v // p))
                leftovers = [(abs(w.data[i][k]), i, k)
                             for i in w.colidx.get(k, ()) if i > k]
                leftovers += [(abs(v), k, j)
                              for j, v in w.data.get(k, {}).items() if j > k]
                if not leftovers:
                    break
                _, li, lj = min(leftovers)
                if li != k:
                    self._swap_r(li, k)
                if lj != k:
                    self._swap_c(lj, k)
                if w.get(k, k) < 0:
                    self._negate_row(k)

            p = w.get(k, k)
            if p != 1:
                # divisibility: pivot must divide every remaining entry
                offender = None
                for i in sorted(w.data):
                    if i <= k:
                        continue
                    for j in sorted(w.data[i]):
                        if j <= k:
                            continue
                        if w.data[i][j] % p != 0:
                            offender = i
                            break
                    if offender is not None:
                        break
                if offender is not None:
                    self._row_op(offender, k, 1)
                    continue  # redo pivot k with the folded-in row
            k += 1
        self.rank = sum(1 for i in range(n) if self.w.get(i, i) != 0)

    def diagonal(self):
        return tuple(self.w.get(i, i) for i in range(min(self.M.rows, self.M.cols)))


def smith_normal_form(M: IntMatrix) -> SnfDecomposition:
    """Smith normal form with transforms.

    Deterministic pivot rule: smallest absolute value among the remaining
    nonzero entries, ties broken by (row, col).
    """
    e = _SnfEngine(M)
    return SnfDecomposition(e.U.to_matrix(), e.w.to_matrix(), e.V.to_matrix(),
                            e.Uinv.to_matrix(), e.Vinv.to_matrix())


def invariant_factor_diagonal(M: IntMatrix):
    """The full SNF diagonal d_1 | d_2 | ... (including 1s and trailing 0s)."""
    return smith_normal_form(M).diagonal()


# ---------------------------------------------------------------------------
# lattice (row-span) computations


class RowSolver:
    """Solve x @ A = b repeatedly against a fixed A (one elimination)."""

    def __init__(self, A: IntMatrix):
        self.A = A
        self.engine = _SnfEngine(A, track=("U", "V"))
        self.diag = self.engine.diagonal()

    def solve(self, b):
        if len(b) != self.A.cols:
            raise ValueError("vector length mismatch")
        V = self.engine.V
        c = [0] * self.A.cols
        for i, bi in enumerate(b):
            if bi == 0:
                continue
            row = V.data.get(i)
            if row:
                for j, v in row.items():
                    c[j] += bi * v
        y = [0] * self.A.rows
        for j in range(self.A.cols):
            d = self.diag[j] if j < len(self.diag) else 0
            if d == 0:
                if c[j] != 0:
                    return None
            else:
                if c[j] % d != 0:
                    return None
                if j < self.A.rows:
                    y[j] = c[j] // d
        U = self.engine.U
        x = [0] * self.A.rows
        for i, yi in enumerate(y):
            if yi == 0:
                continue
            row = U.data.get(i)
            if row:
                for j, v in row.items():
                    x[j] += yi * v
        return tuple(x)


def solve_left(A: IntMatrix, b) -> tuple | None:
    """An integer row vector x with x @ A = b, or None if none exists."""
    return RowSolver(A).solve(b)


def in_rowspan(A: IntMatrix, b) -> bool:
    return solve_left(A, b) is not None


def left_kernel(A: IntMatrix) -> IntMatrix:
    """Basis (rows) of { x : x @ A = 0 }: rational kernel, then saturated."""
    from fractions import Fraction
    n = A.rows
    if A.cols == 0 or not any(x != 0 for r in A.entries for x in r):
        return IntMatrix.identity(n)
    # sparse Gaussian elimination on the constraints (columns of A)
    pivots = {}   # var -> {var: Fraction} meaning x_var = sum coeff * x_free
    order = []
    for j in range(A.cols):
        expr = {}
        for i in range(n):
            v = A.entries[i][j]
            if v:
                expr[i] = expr.get(i, Fraction(0)) + v
        # substitute known pivot expressions
        changed = True
        while changed:
            changed = False
            for var in list(expr):
                if var in pivots and expr[var]:
                    coeff = expr.pop(var)
                    for fv, fc in pivots[var].items():
                        nv = expr.get(fv, Fraction(0)) + coeff * fc
                        if nv:
                            expr[fv] = nv
                        else:
                            expr.pop(fv, None)
                    changed = True
        expr = {v: c for v, c in expr.items() if c}
        if not expr:
            continue
        # pivot: prefer unit coefficient, then largest index (deterministic)
        cand = sorted(expr, key=lambda v: (abs(expr[v]) != 1, -v))
        pv = cand[0]
        pc = expr.pop(pv)
        pivots[pv] = {v: -c / pc for v, c in expr.items()}
        order.append(pv)
    free = [i for i in range(n) if i not in pivots]
    # fully reduce pivot expressions to free variables (reverse order)
    for pv in reversed(order):
        expr = pivots[pv]
        while any(v in pivots for v in expr):
            for v in list(expr):
                if v in pivots and v != pv:
                    coeff = expr.pop(v)
                    for fv, fc in pivots[v].items():
                        nv = expr.get(fv, Fraction(0)) + coeff * fc
                        if nv:
                            expr[fv] = nv
                        else:
                            expr.pop(fv, None)
        pivots[pv] = {v: c for v, c in expr.items() if c}
    rows = []
    for f in free:
        vec = [Fraction(0)] * n
        vec[f] = Fraction(1)
        for pv, expr in pivots.items():
            if f in expr:
                vec[pv] = expr[f]
        den = 1
        for x in vec:
            den = den * x.denominator // gcd(den, x.denominator)
        ints = [int(x * den) for x in vec]
        g = 0
        for x in ints:
            g = gcd(g, x)
        if g > 1:
            ints = [x // g for x in ints]
        rows.append(tuple(ints))
    if not rows:
        return IntMatrix.from_rows([], cols=n)
    return saturate_rows(IntMatrix.from_rows(rows, cols=n))


def saturate_rows(B: IntMatrix) -> IntMatrix:
    """Basis of (rowspan(B) tensor Q) intersected with Z^n."""
    if B.rows == 0:
        return B
    e = _SnfEngine(B, track=("Vinv",))
    rows = [e.Vinv.row_vector(i) for i in range(e.rank)]
    return IntMatrix.from_rows(rows, cols=B.cols)


class RowReducer:
    """Incremental exact basis of an integer row space (sparse rows).

    Feeding rows one by one keeps a pivoted basis whose row span equals the
    span of everything fed so far; all updates are unimodular on pairs.
    """

    def __init__(self, cols: int):
        self.cols = cols
        self.pivots = {}  # leading col -> sparse row dict

    @staticmethod
    def _combine(dst, src, k):
        for c, v in src.items():
            nv = dst.get(c, 0) + k * v
            if nv:
                dst[c] = nv
            else:
                dst.pop(c, None)

    def add(self, row):
        """row: dict col -> value (consumed)."""
        r = {c: v for c, v in row.items() if v}
        while r:
            c = min(r)
            p = self.pivots.get(c)
            if p is None:
                self.pivots[c] = r
                return
            a, b = p[c], r[c]
            if b % a == 0:
                self._combine(r, p, -(b // a))
            else:
                # unimodular pair rewrite: new pivot has entry gcd(a, b)
                g = gcd(a, b)
                x, y = _bezout(a, b)
                new_p = {}
                self._combine(new_p, p, x)
                self._combine(new_p, r, y)
                new_r = {}
                self._combine(new_r, r, a // g)
                self._combine(new_r, p, -(b // g))
                self.pivots[c] = new_p
                r = new_r
        return

    def basis(self) -> IntMatrix:
        rows = [self.pivots[c] for c in sorted(self.pivots)]
        dense = [tuple(r.get(j, 0) for j in range(self.cols)) for r in rows]
        return IntMatrix.from_rows(dense, cols=self.cols)


def _bezout(a, b):
    """(x, y) with x*a + y*b = gcd(a, b)."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


def lattice_intersect_coords(A: IntMatrix, keep: int) -> IntMatrix:
    """Basis of rowspan(A) restricted to vectors supported on coords < keep.

    Returns rows of length A.cols (zero beyond keep by construction).
    """
    proj = IntMatrix.from_rows([[A[i, j] for j in range(keep, A.cols)]
                                for i in range(A.rows)], cols=A.cols - keep)
    ker = left_kernel(proj)
    rows = [A.apply_row(ker.row(i)) for i in range(ker.rows)]
    return IntMatrix.from_rows(rows, cols=A.cols)


# ---------------------------------------------------------------------------
# finitely generated abelian groups


@dataclass(frozen=True)
class FgAbPresentation:
    """Z^g modulo the row span of `relations` (one row per relation)."""

    num_generators: int
    relations: IntMatrix

    def __post_init__(self):
        if self.relations.cols != self.num_generators:
            raise ValueError("relations.cols must equal num_generators")

    @staticmethod
    def free(g):
        return FgAbPresentation(g, IntMatrix.from_rows([], cols=g))

    @staticmethod
    def from_relation_rows(g, rows):
        return FgAbPresentation(g, IntMatrix.from_rows(rows, cols=g))


@dataclass(frozen=True)
class FgAbInvariants:
    """free rank + invariant torsion factors, each dividing the next."""

    free_rank: int
    torsion_factors: tuple

    def __post_init__(self):
        for a, b in zip(self.torsion_factors, self.torsion_factors[1:]):
            if b % a != 0:
                raise ValueError("torsion factors must form a divisibility chain")
        if any(d < 2 for d in self.torsion_factors):
            raise ValueError("torsion factors must be >= 2")

    def is_trivial(self):
        return self.free_rank == 0 and not self.torsion_factors

    def is_free(self):
        return not self.torsion_factors

    def __str__(self):
        parts = ["Z"] * self.free_rank + [f"Z/{d}" for d in self.torsion_factors]
        return " + ".join(parts) if parts else "0"

    def to_json(self):
        return {"free_rank": self.free_rank,
                "torsion_factors": [str(d) for d in self.torsion_factors]}


class QuotientStructure:
    """Canonical SNF-aligned decomposition of Z^g / rowspan(R).

    Exposes canonical coordinates for elements, lifts of the canonical
    generators, and exact zero/equality tests in the quotient.  Transforms
    stay in sparse form; nothing quadratic in g is materialized.
    """

    def __init__(self, num_generators: int, relations: IntMatrix):
        if relations.cols != num_generators:
            raise ValueError("relation width mismatch")
        self.num_generators = num_generators
        self.relations = relations
        self._engine = _SnfEngine(relations, track=("V", "Vinv"))
        diag = self._engine.diagonal()
        full = [diag[i] if i < len(diag) else 0 for i in range(num_generators)]
        # canonical generator i of the decomposition corresponds to row i of
        # V^-1; order full[i] (0 = infinite); entries 1 are trivial and dropped
        self.kept = [i for i in range(num_generators) if full[i] != 1]
        self.orders = tuple(full[i] for i in self.kept)

    @property
    def invariants(self) -> FgAbInvariants:
        torsion = tuple(d for d in self.orders if d >= 2)
        free = sum(1 for d in self.orders if d == 0)
        return FgAbInvariants(free, torsion)

    def coords(self, v) -> tuple:
        """Canonical coordinates of an ambient vector, torsion parts reduced."""
        V = self._engine.V
        w = [0] * self.num_generators
        for i, vi in enumerate(v):
            if vi == 0:
                continue
            row = V.data.get(i)
            if row:
                for j, val in row.items():
                    w[j] += vi * val
        out = []
        for i, d in zip(self.kept, self.orders):
            out.append(w[i] % d if d else w[i])
        return tuple(out)

    def generator_lift(self, idx: int):
        """Ambient vector representing canonical generator idx."""
        return self._engine.Vinv.row_vector(self.kept[idx])

    def aligned_generators(self) -> IntMatrix:
        return IntMatrix.from_rows([self.generator_lift(i) for i in range(len(self.kept))],
                                   cols=self.num_generators)

    def is_zero(self, v) -> bool:
        return all(x == 0 for x in self.coords(v))

    def equal(self, v, w) -> bool:
        return self.is_zero(vec_sub(v, w))


def presentation_invariants(pres: FgAbPresentation) -> FgAbInvariants:
    return QuotientStructure(pres.num_generators, pres.relations).invariants


@dataclass(frozen=True)
class AlignedQuotient:
    """Result of quotienting with the aligned-generator lemma data attached.

    ambient_generators: rows form a basis of the free cover Z^g;
    multipliers[i] * ambient_generators[i] generates the subgroup part.
    """

    invariants: FgAbInvariants
    ambient_generators: IntMatrix
    multipliers: tuple


def quotient_hom_invariants(sub: IntMatrix, amb: FgAbPresentation) -> AlignedQuotient:
    """Invariants of (group presented by amb) / (subgroup generated by sub rows).

    Also returns generator alignment on the free cover: new ambient basis rows
    f_i with the subgroup rows spanning {d_i f_i}.
    """
    if sub.rows and sub.cols != amb.num_generators:
        raise ValueError("subgroup row dimension mismatch")
    stacked = amb.relations.stack(sub) if sub.rows else amb.relations
    inv = QuotientStructure(amb.num_generators, stacked).invariants
    snf = smith_normal_form(sub if sub.rows else IntMatrix.from_rows([], cols=amb.num_generators))
    diag = snf.diagonal()
    mult = tuple(diag[i] if i < len(diag) else 0 for i in range(amb.num_generators))
    return AlignedQuotient(inv, snf.v_inv, mult)


class WellDefinednessError(ValueError):
    """A generator map does not carry relations into relations."""


def hom_on_invariants(f: IntMatrix, src: FgAbPresentation,
                      dst: FgAbPresentation) -> IntMatrix:
    """Matrix of the induced map on canonical decompositions.

    f maps src generators to dst elements: row i of f is the image of src
    generator i in dst coordinates.  Output is in column convention: the image
    of src canonical generator i is sum_j out[j][i] * (dst canonical gen j),
    so matrices compose as hom(g . f) = hom(g) @ hom(f).
    """
    if f.rows != src.num_generators or f.cols != dst.num_generators:
        raise ValueError("map shape mismatch")
    qs_src = QuotientStructure(src.num_generators, src.relations)
    qs_dst = QuotientStructure(dst.num_generators, dst.relations)
    for i in range(src.relations.rows):
        rel_img = f.apply_row(src.relations.row(i))
        if not qs_dst.is_zero(rel_img):
            raise WellDefinednessError(f"relation row {i} is not sent into dst relations")
    cols = []
    for i in range(len(qs_src.kept)):
        lift = qs_src.generator_lift(i)
        img = f.apply_row(lift)
        cols.append(qs_dst.coords(img))
    # cols[i] is the dst-coordinate tuple of src generator i; transpose to column convention
    n_dst = len(qs_dst.kept)
    n_src = len(cols)
    return IntMatrix(n_dst, n_src,
                     tuple(tuple(cols[i][j] for i in range(n_src)) for j in range(n_dst)))
