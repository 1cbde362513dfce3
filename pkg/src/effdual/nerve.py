"""Metric-nerve towers over effectively compact spaces and their H^1 towers.

The tower recursion refines a finite sample set A_n with parameters
(eps_n, delta_n) subject to exact inequalities:

  (i)   2 eps_n + delta_{n+1} < delta_n   and   delta_{n+1} < delta_n / 2
  (ii)  4 eps_{n+1} < delta_{n+1}
  (iii) A_{n+1} is eps_{n+1}-dense (certified)
  (iv)  no pairwise distance in A_{n+1} equals delta_{n+1}
  (v)   the bonding map sends a to the first earlier sample within eps_n

Simplices of the level-n nerve are the vertex sets of diameter < delta_n.
The direct limit of the H^1 groups along the induced maps recovers the dual
of a compact connected abelian group presented by a solenoid system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .abelian import (FgAbInvariants, FgAbPresentation, IntMatrix,
                      QuotientStructure, presentation_invariants)
from .circle import CirclePoint, ProductPoint, SolenoidSystem, weight
from .discrete import CePresentedGroup, IntegrityError, khisamiev_normalize
from .simplicial import (SimplicialComplex, SimplicialMap, cohomology,
                         induced_cohomology_map)


class UnsupportedSpaceError(ValueError):
    """The space lies outside the desk-scale geometry this build handles."""


class TowerConstructionError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# interval helpers on the parameter circle (exact rational endpoints)


def _merge_intervals(ivs):
    """Union of open intervals (a, b) with 0 <= a < b <= 1, as a sorted list."""
    ivs = sorted((a, b) for a, b in ivs if a < b)
    out = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _intervals_cover_circle(ivs):
    """Do the open intervals (reduced mod 1) cover [0, 1)?  Endpoints of the
    family itself must lie inside some other interval."""
    if not ivs:
        return False
    merged = _merge_intervals(ivs)
    if len(merged) == 1 and merged[0][0] <= 0 and merged[0][1] >= 1:
        return True
    # allow wrap: interval touching 1 continues at 0
    total = list(merged)
    if total[0][0] > 0:
        return False
    reach = total[0][1]
    for a, b in total[1:]:
        if a >= reach:
            return False
        reach = max(reach, b)
    return reach >= 1


def _shift_mod1(ivs, s):
    """Shift intervals by s and re-split at the wrap point."""
    out = []
    for a, b in ivs:
        a, b = a + s, b + s
        a -= int(a) if a >= 1 else 0
        # renormalize: bring a into [0,1)
        while a >= 1:
            a, b = a - 1, b - 1
        while a < 0:
            a, b = a + 1, b + 1
        if b <= 1:
            out.append((a, b))
        else:
            out.append((a, Fraction(1)))
            out.append((Fraction(0), b - 1))
    return out


# ---------------------------------------------------------------------------
# sampled spaces


class FiniteMetricSpace:
    """Explicit finite metric space with exact rational distances."""

    def __init__(self, dists, validate=True):
        self.n = len(dists)
        self.dists = [[Fraction(x) for x in row] for row in dists]
        if validate:
            for i in range(self.n):
                if self.dists[i][i] != 0:
                    raise ValueError("nonzero self-distance")
                for j in range(self.n):
                    if self.dists[i][j] != self.dists[j][i] or self.dists[i][j] < 0:
                        raise ValueError("asymmetric distance")
            for i in range(self.n):
                for j in range(self.n):
                    for k in range(self.n):
                        if self.dists[i][j] > self.dists[i][k] + self.dists[k][j]:
                            raise ValueError("triangle inequality fails")

    def diameter_bound(self):
        return max((d for row in self.dists for d in row), default=Fraction(0))

    def seed(self):
        return 0

    def distance(self, a, b):
        return self.dists[a][b]

    def net(self, eps):
        kept = []
        for p in range(self.n):
            if all(self.dists[p][k] >= eps for k in kept):
                kept.append(p)
        return kept

    def certify_dense(self, pts, eps):
        return all(any(self.dists[p][a] < eps for a in pts) for p in range(self.n))

    def ball_simplex(self, pts, r):
        return any(all(self.dists[x][a] < r for a in pts) for x in range(self.n))

    def point_label(self, p):
        return str(p)


class ChainSolenoidSpace:
    """Solenoid system whose rules form a chain q_k x_k = x_{k-1} (k = 2..L);
    index 1 free.  The whole (truncated) group is one circle parametrized by
    the deepest coordinate v = x_L, with x_k = (prod of deeper q's) * v."""

    def __init__(self, system: SolenoidSystem):
        L = system.level
        if L < 1 or system.kind(1) != "free" or system.finite_orders.get(0) != 1:
            raise UnsupportedSpaceError("chain system needs index 0 pinned, index 1 free")
        for i in range(2, L + 1):
            r = system.rules.get(i)
            if r is None or r.coeffs != ((i - 1, 1),):
                raise UnsupportedSpaceError("rules must form a chain q_k x_k = x_{k-1}")
        self.system = system
        self.L = L
        mult = {L: 1}
        for k in range(L - 1, 0, -1):
            mult[k] = mult[k + 1] * system.rules[k + 1].q
        self.mult = mult  # x_k = mult[k] * v
        self._dist_cache = {}
        self._sublevel_cache = {}

    def diameter_bound(self):
        return Fraction(1, 2)

    def seed(self):
        return Fraction(0)

    def to_product_point(self, v):
        coords = [(k, CirclePoint.of(self.mult[k] * v)) for k in range(1, self.L + 1)]
        return ProductPoint.of(coords, self.L)

    def distance_param(self, t):
        t = t - int(t)
        if t < 0:
            t += 1
        cached = self._dist_cache.get(t)
        if cached is not None:
            return cached
        total = Fraction(0)
        for k in range(1, self.L + 1):
            u = (self.mult[k] * t)
            u = u - int(u)
            total += weight(k) * min(u, 1 - u)
        self._dist_cache[t] = total
        return total

    def distance(self, a, b):
        return self.distance_param(a - b)

    def _breakpoints(self):
        pts = set()
        for k in range(1, self.L + 1):
            m = self.mult[k]
            for j in range(2 * m):
                pts.add(Fraction(j, 2 * m))
        return sorted(pts)

    def sublevel(self, thresh):
        """Open intervals {t in [0,1) : D(t) < thresh}; D piecewise linear."""
        cached = self._sublevel_cache.get(thresh)
        if cached is not None:
            return cached
        bps = self._breakpoints()
        bps.append(Fraction(1))
        out = []
        for a, b in zip(bps, bps[1:]):
            fa, fb = self.distance_param(a), self.distance_param(b)
            # D is linear on [a, b]
            if fa < thresh and fb < thresh:
                out.append((a, b))
            elif fa < thresh or fb < thresh:
                # crossing point: fa + (t-a)/(b-a)*(fb-fa) = thresh
                t = a + (thresh - fa) * (b - a) / (fb - fa)
                if fa < thresh:
                    out.append((a, t))
                else:
                    out.append((t, b))
        merged = _merge_intervals(out)
        self._sublevel_cache[thresh] = merged
        return merged

    def fibers(self):
        """Distances of the exact parameter offsets 1/2^j (the branch gaps)."""
        return sorted(self.distance_param(Fraction(1, 2 ** j))
                      for j in range(1, self.L + 1))

    def suggest_eps(self, delta):
        """Density scale keeping branch identifications complete at scale
        delta: sample gaps must fit inside the margin between delta and the
        nearest branch gap below it, or ladders of near-offset pairs tear."""
        below = [f for f in self.fibers() if f < delta]
        eps = delta / 5
        if below:
            margin = delta - max(below)
            eps = min(eps, margin * Fraction(2, 5))
        return eps

    def net(self, eps):
        W = self.sublevel(eps)
        zero_rad = Fraction(0)
        for a, b in W:
            if a == 0:
                zero_rad = b
            if b == 1 and a > 0:
                zero_rad = max(zero_rad, 1 - a)
        if zero_rad == 0:
            raise TowerConstructionError("sublevel set empty at this scale")
        align = 2 ** self.L  # keep the exact branch offsets on the grid
        m = int(1 / (2 * zero_rad)) + 1
        m = align * (m // align + 1)
        for _ in range(64):
            pts = [Fraction(j, m) for j in range(m)]
            if self.certify_dense(pts, eps):
                return pts
            m += align
        raise TowerConstructionError("net search exhausted")

    def certify_dense(self, pts, eps):
        W = self.sublevel(eps)
        shifted = []
        for p in pts:
            shifted.extend(_shift_mod1(W, p))
        return _intervals_cover_circle(shifted)

    def ball_simplex(self, pts, r):
        """Does the intersection of open r-balls around the samples meet the
        space?  Exact via the sublevel set of the distance profile."""
        W = self.sublevel(r)
        regions = None
        for p in pts:
            iv = _shift_mod1(W, p)
            iv = _merge_intervals(iv)
            if regions is None:
                regions = iv
            else:
                regions = _intersect_interval_lists(regions, iv)
            if not regions:
                return False
        return bool(regions)

    # fast structured paths for uniform parameter grids j/M

    @staticmethod
    def _grid_modulus(pts):
        if not pts:
            return None
        m = len(pts)
        if all(pts[j] == Fraction(j, m) for j in range(m)):
            return m
        return None

    def pairwise_values(self, pts):
        m = self._grid_modulus(pts)
        if m is None:
            vals = set()
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    vals.add(self.distance(pts[i], pts[j]))
            return vals
        return {self.distance_param(Fraction(d, m)) for d in range(1, m // 2 + 1)}

    def build_clique(self, pts, delta, max_dim=2):
        m = self._grid_modulus(pts)
        if m is None:
            return _clique_complex(pts, self.distance, delta, max_dim)
        adj = {d for d in range(1, m) if self.distance_param(Fraction(d, m)) < delta}
        edges = []
        for i in range(m):
            for d in adj:
                j = (i + d) % m
                if i < j:
                    edges.append((i, j))
        return FlagComplex(range(m), edges)

    def first_within(self, prev_pts, eps_prev, p):
        """Index of the first earlier sample within eps_prev of p."""
        from bisect import bisect_right
        W = self.sublevel(eps_prev)
        starts = [a for a, _ in W]
        for b, q in enumerate(prev_pts):
            t = p - q
            t = t - int(t)
            if t < 0:
                t += 1
            if t == 0:
                return b
            k = bisect_right(starts, t) - 1
            if k >= 0 and W[k][0] < t < W[k][1]:
                return b
        return None

    def point_label(self, v):
        return f"{v.numerator}/{v.denominator}"


def _intersect_interval_lists(xs, ys):
    out = []
    for a, b in xs:
        for c, d in ys:
            lo, hi = max(a, c), min(b, d)
            if lo < hi:
                out.append((lo, hi))
    return _merge_intervals(out)


class TorusSpace:
    """Product of free circles at indices 1..dims with the weighted metric."""

    def __init__(self, system: SolenoidSystem):
        if system.rules or any(i != 0 for i in system.finite_orders):
            raise UnsupportedSpaceError("torus space admits no rules")
        self.system = system
        self.dims = system.level
        if self.dims < 1:
            raise UnsupportedSpaceError("need at least one free circle")

    def diameter_bound(self):
        return sum(weight(i) for i in range(1, self.dims + 1)) / 2

    def seed(self):
        return tuple(Fraction(0) for _ in range(self.dims))

    def to_product_point(self, v):
        coords = [(i + 1, CirclePoint.of(v[i])) for i in range(self.dims)]
        return ProductPoint.of(coords, self.dims)

    def distance(self, a, b):
        total = Fraction(0)
        for i in range(self.dims):
            t = a[i] - b[i]
            t = t - int(t)
            if t < 0:
                t += 1
            total += weight(i + 1) * min(t, 1 - t)
        return total

    def _grid_counts(self, eps):
        # per-axis step s_i with sum_i w_i s_i / 2 < eps; balance w_i s_i
        counts = []
        for i in range(self.dims):
            w = weight(i + 1)
            s = eps / (self.dims * w)
            counts.append(max(2, int(1 / s) + 1))
        return counts

    def net(self, eps):
        counts = self._grid_counts(eps)
        pts = [()]
        for m in counts:
            pts = [p + (Fraction(j, m),) for p in pts for j in range(m)]
        return pts

    def certify_dense(self, pts, eps):
        """Exact for full product grids (the nets this space produces)."""
        if len(pts) == 1:
            return eps > self.diameter_bound()
        values = [sorted({p[i] for p in pts}) for i in range(self.dims)]
        expected = 1
        for v in values:
            expected *= len(v)
        if len(set(pts)) != expected:
            return False
        worst = Fraction(0)
        for i, vals in enumerate(values):
            gaps = [vals[j + 1] - vals[j] for j in range(len(vals) - 1)]
            gaps.append(1 - vals[-1] + vals[0])
            worst += weight(i + 1) * max(gaps) / 2
        return worst < eps

    def ball_simplex(self, pts, r):
        raise UnsupportedSpaceError("ball nerves on tori are not supported")

    def point_label(self, v):
        return ",".join(f"{x.numerator}/{x.denominator}" for x in v)


def space_for_system(system: SolenoidSystem):
    """Pick the exact sampled-space implementation for a solenoid system."""
    if not system.rules:
        free = system.free_indices()
        if free == [i for i in range(1, system.level + 1)]:
            if system.level == 1:
                return ChainSolenoidSpace(system)
            return TorusSpace(system)
    return ChainSolenoidSpace(system)


# ---------------------------------------------------------------------------
# tower construction


@dataclass
class NerveLevel:
    points: list
    eps: Fraction
    delta: Fraction
    complex: SimplicialComplex
    bonding: dict | None = None       # vertex -> vertex of previous level
    r: Fraction | None = None         # ball-cover radius (compare mode)
    density_certified: bool = True


@dataclass
class NerveTower:
    space: object
    levels: list
    ball_mode: bool = False

    def check_invariants(self):
        """Exact re-verification of every tower condition; raises on failure."""
        for n in range(1, len(self.levels)):
            prev, cur = self.levels[n - 1], self.levels[n]
            if not (2 * prev.eps + cur.delta < prev.delta):
                raise TowerConstructionError(f"(i) fails at level {n}")
            if not (cur.delta < prev.delta / 2):
                raise TowerConstructionError(f"(i') fails at level {n}")
            if not (4 * cur.eps < cur.delta):
                raise TowerConstructionError(f"(ii) fails at level {n}")
            if not cur.density_certified:
                raise TowerConstructionError(f"(iii) not certified at level {n}")
            if hasattr(self.space, "pairwise_values"):
                if cur.delta in self.space.pairwise_values(cur.points):
                    raise TowerConstructionError(f"(iv) fails at level {n}")
            else:
                for i in range(len(cur.points)):
                    for j in range(i + 1, len(cur.points)):
                        if self.space.distance(cur.points[i], cur.points[j]) == cur.delta:
                            raise TowerConstructionError(f"(iv) fails at level {n}")
            for v, w in cur.bonding.items():
                if not (self.space.distance(cur.points[v], prev.points[w]) < prev.eps):
                    raise TowerConstructionError(f"(v) fails at level {n}")
            if isinstance(cur.complex, FlagComplex) and \
                    isinstance(prev.complex, FlagComplex):
                validate_vertex_map(cur.complex, prev.complex, cur.bonding)
            if self.ball_mode:
                if not (2 * cur.r <= cur.delta):
                    raise TowerConstructionError(f"2r <= delta fails at level {n}")
                if not (cur.eps <= cur.r):
                    raise TowerConstructionError(f"eps <= r fails at level {n}")
                if not (2 * prev.eps + cur.delta <= prev.r):
                    raise TowerConstructionError(f"2eps+delta <= r fails at level {n}")
                if not (2 * prev.eps + cur.r <= prev.r):
                    raise TowerConstructionError(f"2eps+r' <= r fails at level {n}")
        return True

    def bonding_map(self, n) -> SimplicialMap:
        """Simplicial bonding map from level n to level n-1 (n >= 1), on
        materialized complexes (small towers only)."""
        src = self.levels[n].complex
        dst = self.levels[n - 1].complex
        if isinstance(src, FlagComplex):
            src = src.materialize()
        if isinstance(dst, FlagComplex):
            dst = dst.materialize()
        return SimplicialMap(src, dst, dict(self.levels[n].bonding))


def _clique_complex(points, dist, delta, max_dim=2):
    n = len(points)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if dist(points[i], points[j]) < delta:
                edges.append((i, j))
    return FlagComplex(range(n), edges)


def _pick_delta(target_lo, target_hi, distances):
    """A rational in (target_lo, target_hi) avoiding the given distance set."""
    bad = sorted(d for d in set(distances) if target_lo < d < target_hi)
    cuts = [target_lo] + bad + [target_hi]
    for a, b in zip(cuts, cuts[1:]):
        if a < b:
            mid = (a + b) / 2
            if mid not in bad:
                return mid
    raise TowerConstructionError("no admissible delta in the window")


def build_tower(space, depth, *, max_dim=2, first_delta=None, ball_mode=False,
                delta_shrink=None, eps_ratio=None) -> NerveTower:
    """Run the nerve recursion to the given depth."""
    if delta_shrink is None:
        delta_shrink = Fraction(2, 5) if ball_mode else Fraction(49, 100)
    if eps_ratio is None:
        eps_ratio = Fraction(1, 20) if ball_mode else Fraction(1, 5)
    eps0 = space.diameter_bound() + Fraction(1, 2)
    delta0 = 8 * eps0
    seed = space.seed()
    levels = [NerveLevel([seed], eps0, delta0,
                         SimplicialComplex.from_maximal([(0,)]),
                         bonding=None,
                         r=delta0 / 2 if ball_mode else None)]
    for n in range(depth):
        prev = levels[-1]
        bound = min(prev.delta - 2 * prev.eps, prev.delta / 2)
        if ball_mode:
            bound = min(bound, prev.r - 2 * prev.eps)
        target = prev.delta * delta_shrink
        if target >= bound:
            target = bound * Fraction(49, 50)
        if n == 0 and first_delta is not None:
            target = min(first_delta, bound * Fraction(49, 50))
        if hasattr(space, "suggest_eps"):
            eps_next = min(target * eps_ratio,
                           space.suggest_eps(target * Fraction(49, 50)))
        else:
            eps_next = target * eps_ratio
        pts = space.net(eps_next)
        if not space.certify_dense(pts, eps_next):
            raise TowerConstructionError(f"density certification failed at level {n+1}")
        if hasattr(space, "pairwise_values"):
            dists = space.pairwise_values(pts)
        else:
            dists = {space.distance(pts[i], pts[j])
                     for i in range(len(pts)) for j in range(i + 1, len(pts))}
        delta_next = _pick_delta(target * Fraction(49, 50), target, dists)
        if hasattr(space, "build_clique"):
            cx = space.build_clique(pts, delta_next, max_dim)
        else:
            cx = _clique_complex(pts, space.distance, delta_next, max_dim)
        bonding = {}
        for v, p in enumerate(pts):
            if hasattr(space, "first_within"):
                w = space.first_within(prev.points, prev.eps, p)
                if w is None:
                    raise TowerConstructionError("no bonding target within eps")
                bonding[v] = w
                continue
            for w, q in enumerate(prev.points):
                if space.distance(q, p) < prev.eps:
                    bonding[v] = w
                    break
            else:
                raise TowerConstructionError("no bonding target within eps")
        levels.append(NerveLevel(pts, eps_next, delta_next, cx, bonding,
                                 r=delta_next / 2 if ball_mode else None))
    tower = NerveTower(space, levels, ball_mode)
    tower.check_invariants()
    return tower


# ---------------------------------------------------------------------------
# flag complexes (clique complexes of a distance graph)


class FlagComplex:
    """Clique complex given by its 1-skeleton; simplices are the cliques.

    Nerve levels are flag complexes by construction (a set is a simplex iff
    its diameter is < delta iff all pairs are).  Only the graph is stored;
    triangles are enumerated on demand.
    """

    def __init__(self, vertices, edges):
        self.vertices = tuple(vertices)
        self.edges = frozenset(tuple(sorted(e)) for e in edges)
        self.adj = {v: set() for v in self.vertices}
        for u, v in self.edges:
            self.adj[u].add(v)
            self.adj[v].add(u)

    def has_simplex(self, s):
        s = tuple(sorted(set(s)))
        if any(v not in self.adj for v in s):
            return False
        return all(s[j] in self.adj[s[i]]
                   for i in range(len(s)) for j in range(i + 1, len(s)))

    def simplices_of_dim(self, d):
        if d == 0:
            return [(v,) for v in sorted(self.vertices)]
        if d == 1:
            return sorted(self.edges)
        if d == 2:
            out = []
            for u, v in sorted(self.edges):
                for w in sorted(self.adj[u] & self.adj[v]):
                    if w > v:
                        out.append((u, v, w))
            return out
        raise ValueError("flag carrier enumerates dimensions 0..2 only")

    def materialize(self, max_dim=2) -> SimplicialComplex:
        simplices = set()
        for d in range(min(max_dim, 2) + 1):
            simplices.update(self.simplices_of_dim(d))
        return SimplicialComplex(tuple(sorted(self.vertices)), frozenset(simplices))


def validate_vertex_map(src, dst, vm):
    """Vertex map src -> dst sends simplices to simplices (edge check is
    sufficient between flag complexes)."""
    for v in src.vertices:
        if vm[v] not in dst.adj:
            raise ValueError(f"image of vertex {v} missing downstairs")
    for u, v in src.edges:
        fu, fv = vm[u], vm[v]
        if fu != fv and tuple(sorted((fu, fv))) not in dst.edges:
            raise ValueError(f"edge ({u},{v}) is not sent to a simplex")
    return True


def strong_collapse(cx: FlagComplex):
    """Iteratively remove dominated vertices (closed nbhd contained in a
    neighbour's); a homotopy equivalence of flag complexes.  Returns the core
    and the one-step domination map."""
    adj = {v: set(ns) for v, ns in cx.adj.items()}
    onestep = {}
    changed = True
    while changed:
        changed = False
        for v in sorted(adj):
            if v not in adj:
                continue
            nv = adj[v] | {v}
            for u in sorted(adj[v]):
                if nv <= (adj[u] | {u}):
                    onestep[v] = u
                    for w in adj[v]:
                        adj[w].discard(v)
                    del adj[v]
                    changed = True
                    break
    core_edges = {tuple(sorted((u, v))) for u in adj for v in adj[u] if u < v}
    core = FlagComplex(sorted(adj), core_edges)
    retract = {}
    for v in cx.vertices:
        cur = v
        while cur in onestep:
            cur = onestep[cur]
        retract[v] = cur
    return core, retract


# ---------------------------------------------------------------------------
# degree-1 (co)homology via spanning trees


class H1Data:
    """H_1 of a finite complex from fundamental cycles of a spanning forest,
    and H^1 as its integral dual (H^1 = Hom(H_1, Z): Ext of the free H_0
    vanishes, so H^1 is free of rank = free rank of H_1).

    Cross-checkable against the direct cochain computation on small inputs.
    """

    def __init__(self, cx):
        from .abelian import RowReducer
        self.cx = cx
        if isinstance(cx, FlagComplex):
            core, retract = strong_collapse(cx)
            self.retract = retract
            carrier = core
        else:
            self.retract = None
            carrier = cx
        self.carrier = carrier
        verts = [s[0] for s in carrier.simplices_of_dim(0)]
        self.vindex = {v: i for i, v in enumerate(verts)}
        edges = carrier.simplices_of_dim(1)
        parent = list(range(len(verts)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        tree = []
        nontree = []
        for e in edges:
            u, v = self.vindex[e[0]], self.vindex[e[1]]
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                tree.append(e)
            else:
                nontree.append(e)
        self.components = len({find(i) for i in range(len(verts))})
        self.nontree = nontree
        self.nt_index = {e: i for i, e in enumerate(nontree)}
        # parent pointers for on-demand path chains
        tree_adj = {}
        for e in tree:
            tree_adj.setdefault(e[0], []).append(e)
            tree_adj.setdefault(e[1], []).append(e)
        self.up = {}   # vertex -> (parent vertex, edge, sign) or None at roots
        seen = set()
        for v in verts:
            if v in seen:
                continue
            self.up[v] = None
            seen.add(v)
            stack = [v]
            while stack:
                cur = stack.pop()
                for e in tree_adj.get(cur, ()):
                    other = e[1] if e[0] == cur else e[0]
                    if other in seen:
                        continue
                    # orient edge (a,b) with boundary b - a; chain root->other
                    sign = -1 if e[0] == cur else 1
                    self.up[other] = (cur, e, sign)
                    seen.add(other)
                    stack.append(other)
        reducer = RowReducer(len(nontree))
        for t in carrier.simplices_of_dim(2):
            a, b, c = t
            row = {}
            for e, s in (((b, c), 1), ((a, c), -1), ((a, b), 1)):
                j = self.nt_index.get(e)
                if j is not None:
                    row[j] = row.get(j, 0) + s
            if row:
                reducer.add(row)
        self.quotient = QuotientStructure(len(nontree), reducer.basis())
        self.free_positions = [i for i, d in enumerate(self.quotient.orders) if d == 0]

    def _chain_to_root(self, v):
        """Signed tree-edge chain whose boundary is v - root(v)."""
        chain = {}
        cur = v
        while self.up[cur] is not None:
            parent, e, sign = self.up[cur]
            # we walk cur -> parent; accumulated chain should have
            # boundary v - root, built as sum of (cur - parent) steps
            _chain_add(chain, e, -sign)
            cur = parent
        return chain

    @property
    def h1_invariants(self) -> FgAbInvariants:
        return self.quotient.invariants

    @property
    def h0_invariants(self) -> FgAbInvariants:
        return FgAbInvariants(self.components, ())

    @property
    def h1_cohomology_invariants(self) -> FgAbInvariants:
        return FgAbInvariants(len(self.free_positions), ())

    def cycle_class_free(self, chain: dict) -> tuple:
        """Free-part coordinates of the class of a 1-cycle (edge -> coeff)."""
        if self.retract is not None:
            chain = self.push_chain(self.retract, chain)
        vec = [0] * len(self.nontree)
        for e, c in chain.items():
            j = self.nt_index.get(e)
            if j is not None:
                vec[j] += c
        coords = self.quotient.coords(tuple(vec))
        return tuple(coords[i] for i in self.free_positions)

    def generator_cycle(self, k: int) -> dict:
        """Edge-chain of the k-th free homology generator."""
        lift = self.quotient.generator_lift(self.free_positions[k])
        chain = {}
        for j, coeff in enumerate(lift):
            if coeff == 0:
                continue
            e = self.nontree[j]
            _chain_add(chain, e, coeff)
            for te, s in self._chain_to_root(e[0]).items():
                _chain_add(chain, te, coeff * s)
            for te, s in self._chain_to_root(e[1]).items():
                _chain_add(chain, te, -coeff * s)
        return chain

    def push_chain(self, vertex_map: dict, chain: dict) -> dict:
        out = {}
        for (u, v), c in chain.items():
            fu, fv = vertex_map[u], vertex_map[v]
            if fu == fv:
                continue
            if fu < fv:
                _chain_add(out, (fu, fv), c)
            else:
                _chain_add(out, (fv, fu), -c)
        return out


def _chain_add(chain, e, c):
    n = chain.get(e, 0) + c
    if n:
        chain[e] = n
    else:
        chain.pop(e, None)


def induced_h1_matrix(f_vertex_map: dict, src: H1Data, dst: H1Data) -> IntMatrix:
    """Matrix of H^1(dst complex) -> H^1(src complex) induced by the
    simplicial vertex map src -> dst, on the fundamental-cycle dual bases.
    Column convention, matching induced_cohomology_map.

    By naturality of the universal-coefficients pairing this is the transpose
    of the free part of the pushforward on H_1.
    """
    n_src = len(src.free_positions)
    n_dst = len(dst.free_positions)
    push = []
    for k in range(n_src):
        cyc = src.generator_cycle(k)
        img = src.push_chain(f_vertex_map, cyc)
        push.append(dst.cycle_class_free(img))
    # push[k][j] = coefficient of dst-gen j in image of src-gen k
    return IntMatrix(n_src, n_dst,
                     tuple(tuple(push[i][j] for j in range(n_dst))
                           for i in range(n_src)))


# ---------------------------------------------------------------------------
# cohomology towers and limits


@dataclass
class CohomologyTower:
    invariants: list      # H^1 invariants per level
    maps: list            # maps[n]: H1(level n) -> H1(level n+1), column convention
    h0_invariants: list
    orders: list          # per level: generator orders (0 = infinite), map-indexed
    data: list            # per-level H1Data (fast path) or CohomologyGroup


def h1_tower(tower: NerveTower, method: str = "fast") -> CohomologyTower:
    """H^1 invariants and induced maps along the bonding maps.

    method "fast": spanning-tree homology dualized (H^1 = Hom(H_1, Z) is free
    in degree 1 since H_0 is free); method "cochain": the direct
    cochain-complex computation.  Tests cross-check them level by level.
    """
    if method == "cochain":
        cxs = [lv.complex.materialize() if isinstance(lv.complex, FlagComplex)
               else lv.complex for lv in tower.levels]
        groups = [cohomology(cx, 1) for cx in cxs]
        h0 = [cohomology(cx, 0).invariants for cx in cxs]
        maps = []
        for n in range(1, len(tower.levels)):
            f = SimplicialMap(cxs[n], cxs[n - 1], dict(tower.levels[n].bonding))
            maps.append(induced_cohomology_map(f, 1, src_coh=groups[n],
                                               dst_coh=groups[n - 1]))
        return CohomologyTower([g.invariants for g in groups], maps, h0,
                               [g.structure.orders for g in groups], groups)
    data = [H1Data(lv.complex) for lv in tower.levels]
    h0 = [d.h0_invariants for d in data]
    invs = [d.h1_cohomology_invariants for d in data]
    maps = []
    for n in range(1, len(tower.levels)):
        # bonding maps go level n -> level n-1; induced H^1 goes n-1 -> n
        maps.append(induced_h1_matrix(dict(tower.levels[n].bonding),
                                      data[n], data[n - 1]))
    orders = [tuple(0 for _ in range(len(d.free_positions))) for d in data]
    return CohomologyTower(invs, maps, h0, orders, data)


@dataclass
class StabilityReport:
    stable: bool
    window: int
    repeated_invariants: object | None
    details: str

    def to_json(self):
        return {"stable": self.stable, "window": self.window,
                "invariants": (self.repeated_invariants.to_json()
                               if self.repeated_invariants else None),
                "details": self.details}


@dataclass
class DirectLimitResult:
    group: CePresentedGroup
    presentation: FgAbPresentation
    stability: StabilityReport
    offsets: list

    @property
    def invariants(self):
        return presentation_invariants(self.presentation)

    def class_of_level_generator(self, level, idx):
        v = [0] * self.group.num_generators
        v[self.offsets[level] + idx] = 1
        return tuple(v)


def direct_limit(coh: CohomologyTower, window: int) -> DirectLimitResult:
    """Colimit presentation: all level generators, each identified with its
    image one level up; equality arrives level by level (c.e. style)."""
    sizes = [len(orders) for orders in coh.orders]
    offsets = []
    total = 0
    for s in sizes:
        offsets.append(total)
        total += s
    equalities = []
    for n, level_orders in enumerate(coh.orders):
        for i, order in enumerate(level_orders):
            if order:
                v = [0] * total
                v[offsets[n] + i] = order
                equalities.append((n, tuple(v)))
    for n, M in enumerate(coh.maps):
        for i in range(M.cols):
            v = [0] * total
            v[offsets[n] + i] = 1
            for j in range(M.rows):
                v[offsets[n + 1] + j] -= M[j, i]
            equalities.append((n + 1, tuple(v)))
    group = CePresentedGroup(total, tuple(equalities))
    pres = FgAbPresentation.from_relation_rows(total, [v for _, v in equalities])

    if window < 1 or window > len(coh.maps):
        stab = StabilityReport(False, max(window, 1), None,
                               "tower shorter than the stability window")
    else:
        tail_invs = coh.invariants[-window:]
        tail_maps = coh.maps[-window:]
        same_inv = all(inv == tail_invs[0] for inv in tail_invs)
        same_map = all(m.entries == tail_maps[0].entries for m in tail_maps)
        stab = StabilityReport(same_inv and same_map, window,
                               tail_invs[0] if same_inv else None,
                               "invariants and transition matrices repeated"
                               if same_inv and same_map else
                               "tail levels disagree")
    return DirectLimitResult(group, pres, stab, offsets)


@dataclass
class DualExtractionResult:
    invariants: object
    stability: StabilityReport
    limit: DirectLimitResult
    normalized: object
    tower_sizes: list
    h0_ok: bool


def dual_of_compact_connected(space, depth, window, *, first_delta=None,
                              max_dim=2) -> DualExtractionResult:
    """Tower -> H^1 tower -> colimit -> normalization.  Never queries the
    group operation of the space; only the metric and the dense points."""
    tower = build_tower(space, depth, first_delta=first_delta, max_dim=max_dim)
    coh = h1_tower(tower)
    limit = direct_limit(coh, window)
    if limit.invariants.torsion_factors:
        raise IntegrityError(
            "torsion in the H^1 colimit: the space is not a connected group dual")
    horizon = max(len(coh.invariants) + 1, limit.group.max_stage() + 2)
    normalized = khisamiev_normalize(limit.group, horizon)
    h0_ok = all(inv.free_rank == 1 and not inv.torsion_factors
                for inv in coh.h0_invariants[-max(window, 1):])
    return DualExtractionResult(normalized.invariants, limit.stability, limit,
                                normalized, [len(lv.points) for lv in tower.levels],
                                h0_ok)


# ---------------------------------------------------------------------------
# ball-cover nerve cross-check


@dataclass
class BallNerveComparison:
    metric_tower: NerveTower
    ball_complexes: list
    metric_coh: CohomologyTower
    ball_coh: CohomologyTower
    iso_matrices: list      # H1(metric level n) -> H1(ball level n)
    conjugate: bool
    isomorphic: bool


def ball_nerve_comparison(space, depth, *, first_delta=None) -> BallNerveComparison:
    """Build the metric-nerve tower and the ball-cover nerve on the same
    samples (radius r_n = delta_n / 2), compare the H^1 towers."""
    tower = build_tower(space, depth, first_delta=first_delta, ball_mode=True)
    ball_cxs = []
    for lv in tower.levels:
        pts = lv.points
        n = len(pts)
        adj = [set() for _ in range(n)]
        simplices = [(i,) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if space.ball_simplex([pts[i], pts[j]], lv.r):
                    adj[i].add(j)
                    adj[j].add(i)
                    simplices.append((i, j))
        for i in range(n):
            for j in sorted(adj[i]):
                if j <= i:
                    continue
                for k in sorted(adj[i] & adj[j]):
                    if k > j and space.ball_simplex([pts[i], pts[j], pts[k]], lv.r):
                        simplices.append((i, j, k))
        ball_cxs.append(SimplicialComplex(tuple(range(n)), frozenset(simplices)))

    metric_coh = h1_tower(tower)
    ball_data = [H1Data(cx) for cx in ball_cxs]
    ball_maps = []
    for n in range(1, len(ball_cxs)):
        # validity: the bonding vertex map must be simplicial on ball nerves
        SimplicialMap(ball_cxs[n], ball_cxs[n - 1], dict(tower.levels[n].bonding))
        ball_maps.append(induced_h1_matrix(dict(tower.levels[n].bonding),
                                           ball_data[n], ball_data[n - 1]))
    ball_coh = CohomologyTower([d.h1_cohomology_invariants for d in ball_data],
                               ball_maps,
                               [d.h0_invariants for d in ball_data],
                               [tuple(0 for _ in d.free_positions)
                                for d in ball_data],
                               ball_data)

    # phi_n: ball nerve -> metric nerve, identity on vertices (2r <= delta)
    iso = []
    for n, lv in enumerate(tower.levels):
        ident = {i: i for i in range(len(lv.points))}
        for s in ball_cxs[n].simplices:
            if not lv.complex.has_simplex(s):
                raise TowerConstructionError(
                    "ball-nerve simplex missing from the metric nerve")
        iso.append(induced_h1_matrix(ident, ball_data[n], metric_coh.data[n]))
    isomorphic = all(metric_coh.invariants[n] == ball_coh.invariants[n]
                     for n in range(len(ball_cxs)))
    conjugate = True
    for n in range(len(ball_maps)):
        left = iso[n + 1].mul(metric_coh.maps[n])
        right = ball_maps[n].mul(iso[n])
        if left.entries != right.entries:
            conjugate = False
    return BallNerveComparison(tower, ball_cxs, metric_coh, ball_coh, iso,
                               conjugate, isomorphic)
