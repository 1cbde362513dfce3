"""Computable t.d.l.c. presentations: inverse systems of discrete abelian
groups along epimorphisms with explicitly listed finite kernels.

Two concrete flavours:

  * matrix flavour: levels are EnumeratedAbelianGroup fragments, maps are
    integer matrices on generators.  This is what the stage machine (the
    independent-set construction with movable markers and the factorial
    trick) operates on.
  * finite flavour: levels are explicit finite abelian groups with full
    tables.  This is what the 2-cocycle extension correspondence round-trips.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .abelian import (FgAbPresentation, IntMatrix, presentation_invariants,
                      vec_add, vec_is_zero, vec_scale, vec_sub)
from .discrete import (EnumeratedAbelianGroup, SearchBudgetExceeded,
                       bounded_dependency, enumerate_vectors)


class ValidationError(ValueError):
    pass


def _factorial(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


# ---------------------------------------------------------------------------
# finite abelian groups with explicit tables


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Z/d_1 x ... x Z/d_k on coordinate tuples (d_i >= 1)."""

    moduli: tuple

    def elements(self):
        return [tuple(e) for e in itertools.product(*[range(d) for d in self.moduli])]

    @property
    def zero(self):
        return tuple(0 for _ in self.moduli)

    def add(self, x, y):
        return tuple((a + b) % d for a, b, d in zip(x, y, self.moduli))

    def neg(self, x):
        return tuple((-a) % d for a, d in zip(x, self.moduli))

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def scale(self, k, x):
        return tuple((k * a) % d for a, d in zip(x, self.moduli))

    def order(self):
        out = 1
        for d in self.moduli:
            out *= d
        return out

    def order_of(self, x):
        k = 1
        cur = x
        while cur != self.zero:
            cur = self.add(cur, x)
            k += 1
        return k

    def invariants(self):
        rels = []
        g = len(self.moduli)
        for i, d in enumerate(self.moduli):
            row = [0] * g
            row[i] = d
            rels.append(row)
        return presentation_invariants(FgAbPresentation.from_relation_rows(g, rels))


class TableGroup:
    """Finite abelian group described by an element list and an addition rule;
    used for extension groups where the law is twisted by a cocycle."""

    def __init__(self, elements, add, zero, label=""):
        self.element_list = list(elements)
        self._add = add
        self.zero = zero
        self.label = label
        self._index = {e: i for i, e in enumerate(self.element_list)}

    def elements(self):
        return list(self.element_list)

    def add(self, x, y):
        return self._add(x, y)

    def neg(self, x):
        for y in self.element_list:
            if self._add(x, y) == self.zero:
                return y
        raise ValueError("no inverse found; not a group table")

    def sub(self, x, y):
        return self._add(x, self.neg(y))

    def scale(self, k, x):
        out = self.zero
        step = x if k >= 0 else self.neg(x)
        for _ in range(abs(k)):
            out = self._add(out, step)
        return out

    def order(self):
        return len(self.element_list)

    def order_of(self, x):
        k = 1
        cur = x
        while cur != self.zero:
            cur = self._add(cur, x)
            k += 1
        return k

    def invariants(self):
        elems = self.element_list
        idx = self._index
        g = len(elems)
        rows = []
        for i, x in enumerate(elems):
            for j, y in enumerate(elems):
                row = [0] * g
                row[i] += 1
                row[j] += 1
                row[idx[self._add(x, y)]] -= 1
                rows.append(row)
        return presentation_invariants(FgAbPresentation.from_relation_rows(g, rows))


def as_table_group(G: FiniteAbelianGroup) -> TableGroup:
    return TableGroup(G.elements(), G.add, G.zero, label=f"Z/{G.moduli}")


def find_isomorphism(A, B):
    """Isomorphism between finite abelian groups (tables), or None.

    Searches generator images with matching orders and extends linearly.
    """
    if A.order() != B.order():
        return None
    if A.invariants() != B.invariants():
        return None
    a_elems = A.elements()
    gens = _generating_sequence(A)
    b_by_order = {}
    for b in B.elements():
        b_by_order.setdefault(B.order_of(b), []).append(b)

    def extend(assign):
        table = {A.zero: B.zero}
        frontier = [A.zero]
        # close under addition of generators
        changed = True
        while changed:
            changed = False
            for x in list(table):
                for g, img in assign:
                    y = A.add(x, g)
                    v = B.add(table[x], img)
                    if y in table:
                        if table[y] != v:
                            return None
                    else:
                        table[y] = v
                        changed = True
        if len(table) != A.order():
            return None
        if len(set(table.values())) != A.order():
            return None
        return table

    def search(i, assign):
        if i == len(gens):
            return extend(assign)
        g = gens[i]
        for img in b_by_order.get(A.order_of(g), []):
            result = search(i + 1, assign + [(g, img)])
            if result is not None:
                return result
        return None

    return search(0, [])


def _generating_sequence(A):
    """A small generating sequence, greedily by element order."""
    elems = sorted(A.elements(), key=lambda x: (-A.order_of(x), x))
    gens = []
    span = {A.zero}
    for x in elems:
        if x in span:
            continue
        gens.append(x)
        new = set(span)
        cur = x
        while cur != A.zero:
            for s in span:
                new.add(A.add(s, cur))
            cur = A.add(cur, x)
        span = new
        if len(span) == A.order():
            break
    return gens


# ---------------------------------------------------------------------------
# finite-flavour presentations (all levels explicit tables)


@dataclass
class FiniteLevelSystem:
    """Inverse system of finite abelian groups with full map tables."""

    levels: list           # FiniteAbelianGroup or TableGroup
    maps: list             # maps[i] (i >= 1): dict element -> element one level down
    kernels: list          # kernels[i] (i >= 1): explicit kernel element list

    def depth(self):
        return len(self.levels) - 1

    def validate(self):
        for i in range(1, len(self.levels)):
            src, dst, f = self.levels[i], self.levels[i - 1], self.maps[i]
            elems = src.elements()
            if set(f) != set(elems):
                raise ValidationError(f"map {i} is not total on the level")
            for x in elems:
                for y in elems:
                    if f[src.add(x, y)] != dst.add(f[x], f[y]):
                        raise ValidationError(f"map {i} is not a homomorphism")
            if set(f.values()) != set(dst.elements()):
                raise ValidationError(f"map {i} is not surjective")
            true_kernel = {x for x in elems if f[x] == dst.zero}
            if set(self.kernels[i]) != true_kernel:
                raise ValidationError(
                    f"kernel list at level {i} is wrong: "
                    f"listed {sorted(self.kernels[i])}, actual {sorted(true_kernel)}")
        return True

    def kernel_orders(self):
        return [None] + [len(k) for k in self.kernels[1:]]

    def to_json(self):
        out = {"levels": [], "maps": [None], "kernels": [None]}
        for lv in self.levels:
            if isinstance(lv, FiniteAbelianGroup):
                out["levels"].append({"moduli": list(lv.moduli)})
            else:
                raise ValidationError("only modulus-style levels serialize")
        for i in range(1, len(self.levels)):
            out["maps"].append([[list(k), list(v)] for k, v in
                                sorted(self.maps[i].items())])
            out["kernels"].append([list(k) for k in self.kernels[i]])
        return out

    @staticmethod
    def from_json(data):
        levels = [FiniteAbelianGroup(tuple(lv["moduli"])) for lv in data["levels"]]
        maps = [None]
        kernels = [None]
        for i in range(1, len(levels)):
            maps.append({tuple(k): tuple(v) for k, v in data["maps"][i]})
            kernels.append([tuple(k) for k in data["kernels"][i]])
        return FiniteLevelSystem(levels, maps, kernels)


def cyclic_tower(p: int, depth: int, first_exponent: int = 1) -> FiniteLevelSystem:
    """Z/p^(e), Z/p^(e+1), ... with the natural projections."""
    exps = [first_exponent + i for i in range(depth + 1)]
    levels = [FiniteAbelianGroup((p ** e,)) for e in exps]
    maps = [None]
    kernels = [None]
    for i in range(1, depth + 1):
        lo = p ** exps[i - 1]
        hi = p ** exps[i]
        maps.append({(x,): (x % lo,) for x in range(hi)})
        kernels.append([(x,) for x in range(hi) if x % lo == 0])
    return FiniteLevelSystem(levels, maps, kernels)


# ---------------------------------------------------------------------------
# cocycles and the extension correspondence


@dataclass
class Cocycle:
    """Discrete L, profinite (B_i, maps), and a 2-cocycle c: L x L -> lim B_i
    given levelwise: c_tables[i][(x, y)] is an element of B_i."""

    L: object              # FiniteAbelianGroup or TableGroup
    levels: list           # B_i, finite groups; level 0 is trivial
    maps: list             # maps[i] (i >= 1): B_i -> B_{i-1}
    c_tables: list         # per level: dict (x, y) -> element of B_i

    def validate(self):
        elems = self.L.elements()
        for i, (B, table) in enumerate(zip(self.levels, self.c_tables)):
            for x in elems:
                for y in elems:
                    if table[(x, y)] != table[(y, x)]:
                        raise ValidationError("cocycle is not symmetric")
                    for z in elems:
                        lhs = B.add(table[(x, y)], table[(self.L.add(x, y), z)])
                        rhs = B.add(table[(y, z)], table[(x, self.L.add(y, z))])
                        if lhs != rhs:
                            raise ValidationError("cocycle identity fails")
            if i >= 1:
                f = self.maps[i]
                down = self.c_tables[i - 1]
                for key, v in table.items():
                    if f[v] != down[key]:
                        raise ValidationError("cocycle levels are incompatible")
        return True


def presentation_to_extension(sys: FiniteLevelSystem) -> Cocycle:
    """L = A_0; B_i = kernel of the composite A_i -> A_0, built by the strong
    index recursion; the cocycle is c(x,y) = tau(x) + tau(y) - tau(x+y) for a
    first-found section tau."""
    sys.validate()
    depth = sys.depth()
    L = sys.levels[0]
    comp = [{x: x for x in sys.levels[0].elements()}]
    for i in range(1, depth + 1):
        f = sys.maps[i]
        comp.append({x: comp[i - 1][f[x]] for x in sys.levels[i].elements()})
    # strong-index recursion for the domains of B_i: D * ker(phi_i)
    b_elems = [[sys.levels[0].zero]]
    for i in range(1, depth + 1):
        f = sys.maps[i]
        D = []
        for target in b_elems[i - 1]:
            for x in sys.levels[i].elements():
                if f[x] == target:
                    D.append(x)
                    break
        dom = set()
        for d in D:
            for k in sys.kernels[i]:
                dom.add(sys.levels[i].add(d, k))
        direct = {x for x in sys.levels[i].elements()
                  if comp[i][x] == sys.levels[0].zero}
        if dom != direct:
            raise ValidationError("strong-index recursion disagrees with the kernel filter")
        b_elems.append(sorted(dom))
    B_levels = [_subgroup_table(sys.levels[i], b_elems[i], f"B_{i}")
                for i in range(depth + 1)]
    B_maps = [None]
    for i in range(1, depth + 1):
        B_maps.append({x: sys.maps[i][x] for x in b_elems[i]})
    # section: tau_i(x) = first-found preimage chain of x
    tau = _sections(sys)
    c_tables = []
    for i in range(depth + 1):
        A = sys.levels[i]
        table = {}
        for x in L.elements():
            for y in L.elements():
                v = A.sub(A.add(tau[i][x], tau[i][y]), tau[i][L.add(x, y)])
                if comp[i][v] != L.zero:
                    raise ValidationError("section defect left the kernel")
                table[(x, y)] = v
        c_tables.append(table)
    cocycle = Cocycle(L, B_levels, B_maps, c_tables)
    cocycle.validate()
    return cocycle


def _subgroup_table(G, elems, label):
    elems = sorted(elems)
    return TableGroup(elems, G.add, G.zero, label=label)


def extension_to_presentation(E: Cocycle) -> FiniteLevelSystem:
    """A_i = ext_{c_i}(L, B_i) on pairs (u, b) with the twisted law
    (u,a) + (v,b) = (u+v, a+b+c_i(u,v)); maps drop through the profinite side
    and kernels equal the kernels of the profinite maps."""
    E.validate()
    L = E.L
    levels = []
    for i, B in enumerate(E.levels):
        table = E.c_tables[i]

        def make_add(B=B, table=table):
            def add(p, q):
                (u, a), (v, b) = p, q
                return (L.add(u, v), B.add(B.add(a, b), table[(u, v)]))
            return add

        elems = [(u, b) for u in L.elements() for b in B.elements()]
        zero = (L.zero, B.zero)
        levels.append(TableGroup(elems, make_add(), zero, label=f"ext_{i}"))
    maps = [None]
    kernels = [None]
    for i in range(1, len(levels)):
        f = E.maps[i]
        maps.append({(u, b): (u, f[b]) for (u, b) in levels[i].elements()})
        kern = [(L.zero, b) for b in E.levels[i].elements()
                if f[b] == E.levels[i - 1].zero]
        kernels.append(kern)
    out = FiniteLevelSystem(levels, maps, kernels)
    out.validate()
    return out


def extension_inverse(E: Cocycle, i: int, pair):
    """Inverse of (u, a) in ext_{c_i}: (-u, -a - c(u, -u))."""
    L, B = E.L, E.levels[i]
    u, a = pair
    nu = L.neg(u)
    return (nu, B.sub(B.neg(a), E.c_tables[i][(u, nu)]))


def cocycles_cohomologous(E1: Cocycle, E2: Cocycle):
    """Search b: L -> B_i per level with c1 - c2 = db on the same carriers;
    returns the levelwise witnesses or None."""
    if E1.L.elements() != E2.L.elements():
        return None
    L = E1.L
    witnesses = []
    for i in range(len(E1.levels)):
        B = E1.levels[i]
        if B.elements() != E2.levels[i].elements():
            return None
        gens = _generating_sequence(L) or [L.zero]
        found = None
        for images in itertools.product(B.elements(), repeat=len(gens)):
            assign = dict(zip(gens, images))
            b = _complete_coboundary_map(L, B, assign, E1.c_tables[i],
                                         E2.c_tables[i])
            if b is not None:
                found = b
                break
        if found is None:
            return None
        witnesses.append(found)
    return witnesses


def _complete_coboundary_map(L, B, assign, c1, c2):
    """Try to extend generator images to b with c1 - c2 = db."""
    b = {L.zero: B.zero}
    progress = True
    while progress:
        progress = False
        for x in list(b):
            for g, img in assign.items():
                y = L.add(x, g)
                # db(x, g) = b(x) + b(g) - b(x+g) must equal (c1-c2)(x, g)
                target = B.sub(c1[(x, g)], c2[(x, g)])
                val = B.sub(B.add(b[x], img), target)
                if y in b:
                    if b[y] != val:
                        return None
                else:
                    b[y] = val
                    progress = True
    if len(b) != len(L.elements()):
        return None
    for x in L.elements():
        for y in L.elements():
            target = B.sub(c1[(x, y)], c2[(x, y)])
            if B.sub(B.add(b[x], b[y]), b[L.add(x, y)]) != target:
                return None
    return b


@dataclass
class RoundTripReport:
    levelwise_isomorphic: bool
    kernels_match: bool
    coboundary: list | None
    isos: list

    @property
    def ok(self):
        return (self.levelwise_isomorphic and self.kernels_match
                and self.coboundary is not None)


def roundtrip_check(sys: FiniteLevelSystem) -> RoundTripReport:
    """presentation -> extension -> presentation, with the canonical levelwise
    isomorphism (u, b) |-> tau(u) + b, kernel matching, and an exhibited
    coboundary between the recovered and original cocycles."""
    E = presentation_to_extension(sys)
    back = extension_to_presentation(E)
    # sections used by the forward pass, reconstructed deterministically
    tau = _sections(sys)
    isos = []
    level_ok = True
    kernel_ok = True
    for i in range(len(sys.levels)):
        A = sys.levels[i]
        iso = {}
        for (u, b) in back.levels[i].elements():
            iso[(u, b)] = A.add(tau[i][u], b)
        # bijective homomorphism check
        vals = set(iso.values())
        if len(vals) != A.order() or len(iso) != A.order():
            level_ok = False
        src = back.levels[i]
        for x in src.elements():
            for y in src.elements():
                if iso[src.add(x, y)] != A.add(iso[x], iso[y]):
                    level_ok = False
        if i >= 1:
            for x in src.elements():
                if sys.maps[i][iso[x]] != isos[i - 1][back.maps[i][x]]:
                    level_ok = False
            if {iso[k] for k in back.kernels[i]} != set(sys.kernels[i]):
                kernel_ok = False
            if len(back.kernels[i]) != len(sys.kernels[i]):
                kernel_ok = False
        isos.append(iso)
    # transport the recovered cocycle onto the original carriers and compare
    E2 = presentation_to_extension(back)
    transported = []
    iso0 = isos[0]
    inv0 = {v: k for k, v in iso0.items()}
    for i in range(len(sys.levels)):
        table = {}
        for x in E.L.elements():
            for y in E.L.elements():
                raw = E2.c_tables[i][(inv0[x], inv0[y])]
                table[(x, y)] = isos[i][raw]
        transported.append(table)
    Et = Cocycle(E.L, E.levels, E.maps, transported)
    witness = cocycles_cohomologous(Et, E)
    return RoundTripReport(level_ok, kernel_ok, witness, isos)


def _sections(sys: FiniteLevelSystem):
    L = sys.levels[0]
    tau = [{x: x for x in L.elements()}]
    for i in range(1, len(sys.levels)):
        f = sys.maps[i]
        level_tau = {}
        for x in L.elements():
            for cand in sys.levels[i].elements():
                if f[cand] == tau[i - 1][x]:
                    level_tau[x] = cand
                    break
        tau.append(level_tau)
    return tau
