"""Computable discrete abelian groups as enumerated presentations.

Groups live on a finite generator list (desk-scale fragments of countable
groups); relations carry stages, so equality is a stage-indexed notion.
Includes rank-1 subgroups of Q with decidable membership, bounded
s-independence, and the stage machine normalizing c.e.-presented
torsion-free groups into computable presentations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from .abelian import (FgAbPresentation, IntMatrix, in_rowspan, left_kernel,
                      smith_normal_form, vec_add, vec_is_zero, vec_scale,
                      vec_sub)


class SearchBudgetExceeded(RuntimeError):
    pass


class IntegrityError(ValueError):
    """Relation enumeration contradicts the declared group structure."""


class ZeroGroupError(ValueError):
    """All generators were killed; the enumerated group is zero so far."""


# ---------------------------------------------------------------------------
# primes

def nth_prime(i: int) -> int:
    """p_0 = 2, p_1 = 3, ..."""
    count = -1
    n = 1
    while count < i:
        n += 1
        if all(n % d for d in range(2, isqrt(n) + 1)):
            count += 1
    return n


# ---------------------------------------------------------------------------
# rank-1 groups (subgroups of Q generated by 1/p_i)


@dataclass(frozen=True)
class Rank1Group:
    prime_indices: tuple

    def primes(self):
        return tuple(nth_prime(i) for i in self.prime_indices)


def maltsev_member(G: Rank1Group, q: Fraction) -> bool:
    """q in <1/p_i : i in U>: denominator squarefree with factors among the p_i."""
    b = q.denominator
    if b == 1:
        return True
    if not G.prime_indices:
        return False
    for p in G.primes():
        if b % p == 0:
            b //= p
            if b % p == 0:
                return False
    return b == 1


# ---------------------------------------------------------------------------
# enumerated groups


def enumerate_vectors(width: int, count: int):
    """Deterministic enumeration of Z^width: shells by max-norm, lex inside."""
    out = []
    if width == 0:
        return [()]
    shell = 0
    while len(out) < count:
        if shell == 0:
            out.append(tuple(0 for _ in range(width)))
        else:
            box = range(-shell, shell + 1)
            for v in _product_sorted(box, width):
                if max(abs(x) for x in v) == shell:
                    out.append(v)
                    if len(out) >= count:
                        break
        shell += 1
    return out[:count]


def _product_sorted(rng, width):
    if width == 0:
        yield ()
        return
    for head in rng:
        for tail in _product_sorted(rng, width - 1):
            yield (head,) + tail


@dataclass(frozen=True)
class EnumeratedAbelianGroup:
    """Z^g with a stage-indexed enumeration of relations sum n_i g_i = 0."""

    num_generators: int
    relations: tuple  # of (stage, coeff tuple)
    declared_rank: int | None = None

    def __post_init__(self):
        for stage, v in self.relations:
            if len(v) != self.num_generators:
                raise ValueError("relation width mismatch")
            if stage < 0:
                raise ValueError("negative stage")

    @staticmethod
    def free(g, declared_rank=None):
        return EnumeratedAbelianGroup(g, (), declared_rank if declared_rank is not None else g)

    @staticmethod
    def build(g, staged_relations, declared_rank=None):
        rels = tuple((int(s), tuple(int(x) for x in v)) for s, v in staged_relations)
        return EnumeratedAbelianGroup(g, rels, declared_rank)

    def visible(self, stage: int) -> IntMatrix:
        rows = [v for s, v in self.relations if s <= stage]
        return IntMatrix.from_rows(rows, cols=self.num_generators)

    def max_stage(self) -> int:
        return max((s for s, _ in self.relations), default=0)

    def is_zero_at(self, v, stage: int) -> bool:
        if vec_is_zero(v):
            return True
        return in_rowspan(self.visible(stage), v)

    def equal_at(self, v, w, stage: int) -> bool:
        return self.is_zero_at(vec_sub(v, w), stage)

    def order_at(self, v, stage: int):
        """Least k >= 1 with k*v = 0 under stage-visible relations, or None."""
        if vec_is_zero(v):
            return 1
        R = self.visible(stage)
        stacked = IntMatrix.from_rows([v], cols=self.num_generators).stack(R)
        ker = left_kernel(stacked)
        g = 0
        for i in range(ker.rows):
            g = gcd(g, ker.row(i)[0])
        return abs(g) if g != 0 else None

    def elements(self, count: int):
        return enumerate_vectors(self.num_generators, count)

    def to_json(self):
        return {
            "generators": [f"g{i}" for i in range(self.num_generators)],
            "relations": [{"stage": s,
                           "combo": {f"g{i}": c for i, c in enumerate(v) if c}}
                          for s, v in self.relations],
            "declared_rank": self.declared_rank,
        }

    @staticmethod
    def from_json(data):
        gens = list(data["generators"])
        index = {g: i for i, g in enumerate(gens)}
        rels = []
        for r in data.get("relations", []):
            v = [0] * len(gens)
            for g, c in r["combo"].items():
                v[index[g]] = int(c)
            rels.append((int(r["stage"]), tuple(v)))
        return EnumeratedAbelianGroup(len(gens), tuple(rels),
                                      data.get("declared_rank"))


# ---------------------------------------------------------------------------
# dependency lattices and s-independence


def dependency_lattice(elems, zero_relations: IntMatrix) -> IntMatrix:
    """Basis of { n in Z^k : sum n_i elems_i lies in rowspan(zero_relations) }."""
    k = len(elems)
    if k == 0:
        return IntMatrix.from_rows([], cols=0)
    width = len(elems[0])
    E = IntMatrix.from_rows(list(elems), cols=width)
    stacked = E.stack(zero_relations)
    ker = left_kernel(stacked)
    rows = [ker.row(i)[:k] for i in range(ker.rows)]
    rows = [r for r in rows if not vec_is_zero(r)]
    if not rows:
        return IntMatrix.from_rows([], cols=k)
    # reduce to an independent basis of the projected lattice
    M = IntMatrix.from_rows(rows, cols=k)
    snf = smith_normal_form(M)
    diag = snf.diagonal()
    basis = []
    for i, d in enumerate(diag):
        if d != 0:
            basis.append(vec_scale(d, snf.v_inv.row(i)))
    return IntMatrix.from_rows(basis, cols=k)


def _gso(basis):
    """Exact Gram-Schmidt over Fractions: returns (mu, bstar_sq, bstar)."""
    m = len(basis)
    bstar = []
    mu = [[Fraction(0)] * m for _ in range(m)]
    bstar_sq = []
    for i in range(m):
        v = [Fraction(x) for x in basis[i]]
        for j in range(i):
            num = sum(Fraction(basis[i][t]) * bstar[j][t] for t in range(len(v)))
            mu[i][j] = num / bstar_sq[j] if bstar_sq[j] else Fraction(0)
            for t in range(len(v)):
                v[t] -= mu[i][j] * bstar[j][t]
        bstar.append(v)
        bstar_sq.append(sum(x * x for x in v))
    return mu, bstar_sq


def _fp_enumerate(basis, radius_sq: Fraction, inf_bound: int, node_budget: int):
    """Fincke-Pohst: search nonzero v in the lattice with |v|_inf <= inf_bound
    among vectors with |v|_2^2 <= radius_sq.  Returns v or None."""
    m = len(basis)
    if m == 0:
        return None
    mu, bstar_sq = _gso(basis)
    best = None
    nodes = 0

    def dfs(level, remaining, partial_x):
        nonlocal best, nodes
        if best is not None:
            return
        if level < 0:
            xs = list(reversed(partial_x))
            v = tuple(sum(xs[i] * basis[i][t] for i in range(m))
                      for t in range(len(basis[0])))
            if not vec_is_zero(v) and max(abs(c) for c in v) <= inf_bound:
                best = v
            return
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetExceeded("lattice enumeration budget")
        c = -sum(Fraction(x) * mu[j][level]
                 for x, j in zip(reversed(partial_x), range(level + 1, m)))
        if bstar_sq[level] == 0:
            dfs(level - 1, remaining, partial_x + [0])
            return
        span = remaining / bstar_sq[level]
        # integer x with (x - c)^2 <= span
        lo, hi = _int_interval(c, span)
        for x in range(lo, hi + 1):
            used = (Fraction(x) - c) ** 2 * bstar_sq[level]
            if used <= remaining:
                dfs(level - 1, remaining - used, partial_x + [x])

    dfs(m - 1, radius_sq, [])
    return best


def _int_interval(center: Fraction, span_sq: Fraction):
    """Integers x with (x - center)^2 <= span_sq (exact)."""
    if span_sq < 0:
        return 0, -1
    num, den = span_sq.numerator, span_sq.denominator
    r_floor = isqrt(num // den) + 2  # safe over-approximation, then trim
    lo = int(center) - r_floor - 2
    hi = int(center) + r_floor + 2
    while lo <= hi and (Fraction(lo) - center) ** 2 > span_sq:
        lo += 1
    while hi >= lo and (Fraction(hi) - center) ** 2 > span_sq:
        hi -= 1
    return lo, hi


def bounded_dependency(elems, s: int, zero_relations: IntMatrix,
                       node_budget: int = 200000):
    """A nonzero integer vector n with |n_i| <= s and sum n_i elems_i = 0
    (modulo the given relations), or None.  Exact decision."""
    lat = dependency_lattice(elems, zero_relations)
    if lat.rows == 0:
        return None
    basis = [lat.row(i) for i in range(lat.rows)]
    for b in basis:
        if max(abs(c) for c in b) <= s:
            return b
    # shortest-L2 sweep first: cheap and usually decisive
    min_row_sq = min(sum(x * x for x in b) for b in basis)
    v = _fp_enumerate(basis, Fraction(min_row_sq), s, node_budget)
    if v is not None:
        return v
    k = len(elems)
    full_radius = Fraction(k) * Fraction(s) ** 2
    if full_radius <= Fraction(min_row_sq):
        return None
    return _fp_enumerate(basis, full_radius, s, node_budget)


def s_independent(elems, s: int, G: EnumeratedAbelianGroup, stage: int) -> bool:
    """No nonzero coefficient vector bounded by s kills the elements at this stage."""
    if s < 1:
        raise ValueError("s must be >= 1")
    if not elems:
        return True
    return bounded_dependency(list(elems), s, G.visible(stage)) is None


def linearly_independent_at(elems, G: EnumeratedAbelianGroup, stage: int) -> bool:
    """Independence against everything visible at the stage (all s at once)."""
    if not elems:
        return True
    return dependency_lattice(list(elems), G.visible(stage)).rows == 0


# ---------------------------------------------------------------------------
# c.e.-presented groups and the normalization stage machine


@dataclass(frozen=True)
class CePresentedGroup:
    """Free abelian on the generators; equality enumerated by stages."""

    num_generators: int
    equalities: tuple  # of (stage, vector declared equal to 0)

    def __post_init__(self):
        for s, v in self.equalities:
            if len(v) != self.num_generators:
                raise ValueError("equality width mismatch")

    @staticmethod
    def build(g, staged):
        return CePresentedGroup(g, tuple((int(s), tuple(int(x) for x in v))
                                         for s, v in staged))

    def visible(self, stage: int) -> IntMatrix:
        rows = [v for s, v in self.equalities if s <= stage]
        return IntMatrix.from_rows(rows, cols=self.num_generators)

    def max_stage(self) -> int:
        return max((s for s, _ in self.equalities), default=0)


def _factorial(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


@dataclass
class RetirementEvent:
    stage: int
    dependency: tuple      # coefficients over the active basis rows
    retired_row: tuple     # symbol-space vector of the retired generator
    replacement_row: tuple  # symbol-space vector it was declared equal to
    relation_row: tuple    # retired_row - replacement_row, committed


@dataclass
class KhisamievResult:
    presentation: FgAbPresentation
    final_basis: IntMatrix          # rows: surviving generators in symbol space
    embedding: dict                 # active basis row index -> U-vector
    retirements: list
    stable_from: int                # last stage at which any retirement occurred
    stage_fragments: list           # (stage, FgAbPresentation)

    @property
    def invariants(self):
        from .abelian import presentation_invariants
        return presentation_invariants(self.presentation)


def complete_primitive(prim):
    """Unimodular matrix whose first row is the given primitive vector."""
    P = IntMatrix.from_rows([prim], cols=len(prim))
    snf = smith_normal_form(P)
    if snf.diagonal() != (1,):
        raise ValueError("vector is not primitive")
    W = snf.v_inv
    first = W.row(0)
    sign = 1
    if first != tuple(prim):
        if first == tuple(-x for x in prim):
            sign = -1
        else:
            raise AssertionError("completion lost the primitive row")
    rows = [vec_scale(sign, W.row(0))] + [W.row(i) for i in range(1, W.rows)]
    return IntMatrix.from_rows(rows, cols=len(prim))


def khisamiev_normalize(G: CePresentedGroup, horizon: int) -> KhisamievResult:
    """Stage machine: build a computable presentation of a c.e.-presented
    torsion-free group, retiring generators by the factorial trick whenever an
    enumerated equality reveals a dependency."""
    n = G.num_generators
    n_active = min(n, horizon + 1)
    committed = []            # relation rows over the symbol space
    basis = []                # active rows (symbol space)
    theta = []                # U-vectors of active rows
    retirements = []
    fragments = []
    last_change = 0

    def fragment(width):
        rows = [r[:width] for r in committed]
        return FgAbPresentation.from_relation_rows(width, rows)

    for t in range(horizon + 1):
        if t < n:
            e = tuple(1 if j == t else 0 for j in range(n))
            basis.append(e)
            theta.append(e)
        # retire while some dependency is visible among the active images
        while basis:
            lat = dependency_lattice(theta, G.visible(t))
            if lat.rows == 0:
                break
            dep = _smallest_dep_vector(lat)
            g = 0
            for c in dep:
                g = gcd(g, c)
            prim = tuple(c // g for c in dep)
            # rewrite the active basis so the dying combination is a generator
            W = complete_primitive(prim)
            retired_row = tuple(sum(prim[i] * basis[i][j] for i in range(len(basis)))
                                for j in range(n))
            new_basis = [tuple(sum(W[i, j] * basis[j][c] for j in range(len(basis)))
                               for c in range(n)) for i in range(1, W.rows)]
            new_theta = [tuple(sum(W[i, j] * theta[j][c] for j in range(len(basis)))
                               for c in range(n)) for i in range(1, W.rows)]
            if not new_basis:
                raise ZeroGroupError(
                    f"stage {t}: the last active generator was declared zero")
            coeff = _factorial(t + 1)
            replacement_row = vec_scale(coeff, new_basis[0])
            relation_row = vec_sub(retired_row, replacement_row)
            committed.append(relation_row)
            retirements.append(RetirementEvent(t, tuple(dep), retired_row,
                                               replacement_row, relation_row))
            last_change = t
            basis = new_basis
            theta = new_theta
        fragments.append((t, fragment(min(n, t + 1))))

    pres = fragment(n_active)
    return KhisamievResult(pres, IntMatrix.from_rows(basis, cols=n),
                           {i: theta[i] for i in range(len(theta))},
                           retirements, last_change, fragments)


def _smallest_dep_vector(lat: IntMatrix):
    """Deterministic pick: smallest max-norm basis-reachable vector (bounded
    search over small combinations), ties by lexicographic order."""
    rows = [lat.row(i) for i in range(lat.rows)]
    best = None
    combos = enumerate_vectors(len(rows), min(3 ** len(rows) * 8, 2000))
    for c in combos:
        v = tuple(sum(c[i] * rows[i][j] for i in range(len(rows)))
                  for j in range(len(rows[0])))
        if vec_is_zero(v):
            continue
        if v[_first_nonzero(v)] < 0:
            v = vec_scale(-1, v)
        key = (max(abs(x) for x in v), v)
        if best is None or key < best:
            best = key
    return best[1]


def _first_nonzero(v):
    for i, x in enumerate(v):
        if x != 0:
            return i
    raise ValueError("zero vector")


def divisible_by(pres: FgAbPresentation, v, m: int) -> bool:
    """Is the class of v divisible by m in the presented group?"""
    scaled = IntMatrix.identity(pres.num_generators)
    rows = [vec_scale(m, scaled.row(i)) for i in range(pres.num_generators)]
    stacked = IntMatrix.from_rows(rows, cols=pres.num_generators).stack(pres.relations)
    return in_rowspan(stacked, v)
