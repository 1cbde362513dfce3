"""Exact arithmetic on T = R/Z and on products of circles; solenoid systems.

Points are reduced rationals mod 1.  A solenoid system cuts a closed subgroup
out of the product of circles by rules q_n * x_n = sum_{s<n} m_{n,s} * x_s,
with some indices free and some confined to finite cyclic subgroups.  Cover
certification follows the rule-lifting scheme: interval products compatible
with the rules reduce covering the group to covering the finite-dimensional
torus of unconstrained indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor

from .discrete import EnumeratedAbelianGroup, IntegrityError


def _mod1(x: Fraction) -> Fraction:
    return x - floor(x)


@dataclass(frozen=True)
class CirclePoint:
    value: Fraction

    @staticmethod
    def of(x) -> "CirclePoint":
        return CirclePoint(_mod1(Fraction(x)))

    def __post_init__(self):
        if not (0 <= self.value < 1):
            raise ValueError("circle point must be reduced into [0,1)")

    def __add__(self, other):
        return CirclePoint(_mod1(self.value + other.value))

    def __sub__(self, other):
        return CirclePoint(_mod1(self.value - other.value))

    def scale(self, k: int) -> "CirclePoint":
        return CirclePoint(_mod1(k * self.value))

    def __str__(self):
        return f"{self.value.numerator}/{self.value.denominator}"


ZERO = CirclePoint(Fraction(0))


def circle_distance(a: CirclePoint, b: CirclePoint) -> Fraction:
    d = abs(a.value - b.value)
    return min(d, 1 - d)


@dataclass(frozen=True)
class CircleInterval:
    """Open arc of given center and radius; radius <= 1/2, may wrap."""

    center: CirclePoint
    radius: Fraction

    def __post_init__(self):
        if not (0 < self.radius <= Fraction(1, 2)):
            raise ValueError("arc radius must be in (0, 1/2]")

    def contains(self, p: CirclePoint) -> bool:
        return circle_distance(self.center, p) < self.radius

    def contains_closed(self, p: CirclePoint) -> bool:
        return circle_distance(self.center, p) <= self.radius

    def formally_inside(self, other: "CircleInterval") -> bool:
        return circle_distance(self.center, other.center) + self.radius < other.radius

    @property
    def diameter(self) -> Fraction:
        return 2 * self.radius

    def __str__(self):
        return f"arc({self.center}, r={self.radius})"


FULL = None  # sentinel: the whole circle, used in arc arithmetic


def arc_scale(I, k: int):
    """Image of the arc under x -> k*x (exact; whole circle when it wraps)."""
    if I is FULL:
        return FULL if k != 0 else CircleInterval(ZERO, Fraction(1, 10 ** 9))
    if k == 0:
        raise ValueError("scaling an arc by 0 collapses it to a point")
    r = abs(k) * I.radius
    if r >= Fraction(1, 2):
        return FULL
    return CircleInterval(I.center.scale(k), r)


def arc_sum(I, J):
    if I is FULL or J is FULL:
        return FULL
    r = I.radius + J.radius
    if r >= Fraction(1, 2):
        return FULL
    return CircleInterval(I.center + J.center, r)


def arc_preimages(I, q: int):
    """The q preimages of the arc under x -> q*x: arcs ((c+j)/q, r/q)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if I is FULL:
        return [FULL]
    return [CircleInterval(CirclePoint.of(Fraction(I.center.value + j, q)),
                           I.radius / q) for j in range(q)]


# ---------------------------------------------------------------------------
# product points


@dataclass(frozen=True)
class ProductPoint:
    """Finitely supported point of the circle product; 0 beyond the support."""

    coords: tuple  # of (index, CirclePoint), sorted, nonzero values only
    level: int

    @staticmethod
    def of(assignments, level):
        coords = tuple(sorted((i, p) for i, p in assignments
                              if p.value != 0))
        return ProductPoint(coords, level)

    def __post_init__(self):
        for i, p in self.coords:
            if i < 0 or i > self.level:
                raise ValueError("support outside the declared level")

    def get(self, i: int) -> CirclePoint:
        for j, p in self.coords:
            if j == i:
                return p
        return ZERO

    def support(self):
        return tuple(i for i, _ in self.coords)

    def to_json(self):
        return {"level": self.level,
                "coords": {str(i): str(p) for i, p in self.coords}}


def weight(i: int) -> Fraction:
    return Fraction(1, 2 ** (i + 1))


def product_distance(x: ProductPoint, y: ProductPoint, N: int):
    """Exact partial sum up to index N and the tail-padded upper bound."""
    lower = Fraction(0)
    for i in range(N + 1):
        lower += weight(i) * circle_distance(x.get(i), y.get(i))
    return lower, lower + Fraction(1, 2 ** (N + 1))


# ---------------------------------------------------------------------------
# solenoid systems


@dataclass(frozen=True)
class SolenoidRule:
    index: int
    q: int
    coeffs: tuple  # of (s, m) with s < index, sorted

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("rule modulus must be >= 1")
        for s, m in self.coeffs:
            if s >= self.index:
                raise ValueError("rule may only cite smaller indices")

    def rhs_point(self, point_at) -> CirclePoint:
        acc = ZERO
        for s, m in self.coeffs:
            acc = acc + point_at(s).scale(m)
        return acc

    def satisfied_by(self, point_at) -> bool:
        return point_at(self.index).scale(self.q) == self.rhs_point(point_at)


class SolenoidSystem:
    """Closed subgroup of the circle product described index by index."""

    def __init__(self, level: int, rules=(), finite_orders=None):
        self.level = level
        self.rules = {}
        for r in rules:
            if r.index > level:
                raise ValueError("rule index beyond level")
            if r.index in self.rules:
                raise ValueError("duplicate rule index")
            self.rules[r.index] = r
        self.finite_orders = dict(finite_orders or {})
        for i, k in self.finite_orders.items():
            if i > level or k < 1:
                raise ValueError("bad finite order entry")

    def kind(self, i: int) -> str:
        if i in self.rules:
            return "rule"
        if i in self.finite_orders:
            return "cyclic"
        return "free"

    def free_indices(self, upto=None):
        upto = self.level if upto is None else upto
        return [i for i in range(upto + 1)
                if i not in self.rules and i not in self.finite_orders]

    def satisfies_all_rules(self, point: ProductPoint) -> bool:
        for i, r in self.rules.items():
            if i <= point.level and not r.satisfied_by(point.get):
                return False
        for i, k in self.finite_orders.items():
            if i <= point.level and point.get(i).scale(k) != ZERO:
                return False
        return True

    def to_json(self):
        return {
            "level": self.level,
            "rules": [{"index": r.index, "q": r.q,
                       "coeffs": {str(s): m for s, m in r.coeffs}}
                      for r in sorted(self.rules.values(), key=lambda r: r.index)],
            "finite": {str(i): k for i, k in sorted(self.finite_orders.items())},
        }

    @staticmethod
    def from_json(data):
        rules = [SolenoidRule(int(r["index"]), int(r["q"]),
                              tuple(sorted((int(s), int(m))
                                           for s, m in r["coeffs"].items())))
                 for r in data.get("rules", [])]
        finite = {int(i): int(k) for i, k in data.get("finite", {}).items()}
        return SolenoidSystem(int(data["level"]), rules, finite)


def free_circle(level: int = 1) -> SolenoidSystem:
    """Index 0 pinned to 0, index 1 a free circle: the dual of Z."""
    return SolenoidSystem(level, (), {0: 1})


def two_torus(level: int = 2) -> SolenoidSystem:
    return SolenoidSystem(level, (), {0: 1})


def dyadic_solenoid(level: int) -> SolenoidSystem:
    rules = [SolenoidRule(i, 2, ((i - 1, 1),)) for i in range(2, level + 1)]
    return SolenoidSystem(level, rules, {0: 1})


def point_group() -> SolenoidSystem:
    return SolenoidSystem(0, (), {0: 1})


# ---------------------------------------------------------------------------
# the naive construction: discrete group -> solenoid fragment


def naive_dual(G: EnumeratedAbelianGroup, stage: int) -> SolenoidSystem:
    """Projection rules for Hom(G, T) at the given stage.

    Generator 0 is the group identity by convention (pinned projection {0}).
    For each index: a finite cyclic projection when the generator has finite
    order, a rule q*x_s = sum m_i*x_i when a primitive dependency on earlier
    generators is visible, a free circle otherwise.
    """
    horizon = min(stage, G.num_generators - 1)
    rules = []
    finite = {}
    for s in range(horizon + 1):
        e_s = tuple(1 if j == s else 0 for j in range(G.num_generators))
        order = G.order_at(e_s, stage)
        if s == 0:
            if order != 1:
                raise IntegrityError("generator 0 must be the group identity")
            finite[0] = 1
            continue
        if order == 1:
            raise IntegrityError(
                f"generator {s} is declared zero by the visible relations")
        if order is not None:
            finite[s] = order
        dep = _prefix_dependency(G, s, stage)
        if dep is not None:
            n, coeffs = dep
            rules.append(SolenoidRule(s, n, coeffs))
    return SolenoidSystem(horizon, rules, finite)


def _prefix_dependency(G: EnumeratedAbelianGroup, s: int, stage: int):
    """Primitive visible relation n*g_s = sum_{i<s} m_i g_i, or None.

    Returns (n, ((i, m_i), ...)) with n >= 1 and gcd(n, m_0, ..) = 1; pure
    order relations (all m_i = 0) are excluded (the cyclic case covers them).
    """
    from math import gcd
    from .abelian import lattice_intersect_coords

    R = G.visible(stage)
    if R.rows == 0:
        return None
    lat = lattice_intersect_coords(R, s + 1)
    rows = [lat.row(i) for i in range(lat.rows)]
    rows = [r for r in rows if not all(x == 0 for x in r)]
    if not rows:
        return None
    # least positive coefficient of g_s achievable in the visible lattice
    col = [r[s] for r in rows]
    g = 0
    for c in col:
        g = gcd(g, c)
    if g == 0:
        return None
    # combine rows to reach coefficient g at coordinate s
    vec = None
    acc_g = 0
    for r in rows:
        if r[s] == 0:
            continue
        if vec is None:
            vec, acc_g = list(r), abs(r[s])
            if r[s] < 0:
                vec = [-x for x in vec]
        else:
            a, b, gg = _ext_gcd(acc_g, r[s])
            vec = [a * vec[j] + b * r[j] for j in range(len(vec))]
            acc_g = gg
            if vec[s] < 0:
                vec = [-x for x in vec]
    candidates = [tuple(vec)]
    sub = [r for r in rows if r[s] == 0]
    for extra in sub:
        for k in (-2, -1, 1, 2):
            candidates.append(tuple(vec[j] + k * extra[j] for j in range(len(vec))))
    best = None
    for c in candidates:
        if c[s] <= 0:
            continue
        total = 0
        for x in c:
            total = gcd(total, x)
        if total == 1:
            key = (c[s], sum(abs(x) for x in c), c)
            if best is None or key < best:
                best = key
    if best is None:
        return None  # only non-primitive dependencies visible; leave free
    v = best[2]
    n = v[s]
    coeffs = tuple((i, -v[i]) for i in range(s) if v[i] != 0)
    if not coeffs:
        return None
    return n, coeffs


def _ext_gcd(a, b):
    """(x, y, g) with x*a + y*b = g = gcd(a, b), g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_s, old_t, old_r


# ---------------------------------------------------------------------------
# dense point enumeration


def base_rationals(stage: int):
    """All reduced a/b in [0,1) with 1 <= b <= stage, sorted by (b, a)."""
    out = [CirclePoint(Fraction(0))]
    for b in range(2, stage + 1):
        for a in range(1, b):
            f = Fraction(a, b)
            if f.denominator == b:
                out.append(CirclePoint(f))
    return out


def cyclic_points(k: int):
    return [CirclePoint(Fraction(j, k)) for j in range(k)]


def enumerate_dense(system: SolenoidSystem, stage: int):
    """Rational points of the system satisfying every rule of index <= stage
    exactly; coordinates live on indices 0..stage."""
    partials = [dict()]
    for i in range(min(stage, system.level) + 1):
        new = []
        kind = system.kind(i)
        for asg in partials:
            if kind == "rule":
                rule = system.rules[i]
                rhs = rule.rhs_point(lambda s, a=asg: a.get(s, ZERO))
                branches = [CirclePoint.of(Fraction(rhs.value + j, rule.q))
                            for j in range(rule.q)]
                if i in system.finite_orders:
                    k = system.finite_orders[i]
                    branches = [p for p in branches if p.scale(k) == ZERO]
            elif kind == "cyclic":
                branches = cyclic_points(system.finite_orders[i])
            else:
                branches = base_rationals(stage)
            for p in branches:
                nxt = dict(asg)
                if p.value != 0:
                    nxt[i] = p
                new.append(nxt)
        partials = new
    return [ProductPoint.of(list(a.items()), max(stage, system.level))
            for a in partials]


# ---------------------------------------------------------------------------
# product balls and cover certification


@dataclass(frozen=True)
class ProductBall:
    """Product of rational arcs on a finite support, full circles elsewhere."""

    arcs: tuple  # of (index, CircleInterval), sorted by index

    @staticmethod
    def of(assignments):
        return ProductBall(tuple(sorted(assignments, key=lambda t: t[0])))

    def support(self):
        return tuple(i for i, _ in self.arcs)

    def arc(self, i):
        for j, a in self.arcs:
            if j == i:
                return a
        return FULL

    def contains_point(self, p: ProductPoint) -> bool:
        return all(a.contains(p.get(i)) for i, a in self.arcs)

    def exclusion_slack(self, p: ProductPoint) -> Fraction:
        """max over supported coords of (distance - radius); >= 0 iff outside."""
        worst = None
        for i, a in self.arcs:
            s = circle_distance(a.center, p.get(i)) - a.radius
            if worst is None or s > worst:
                worst = s
        return worst if worst is not None else Fraction(-1)

    def to_json(self):
        return {"arcs": {str(i): {"center": str(a.center), "radius":
                                  f"{a.radius.numerator}/{a.radius.denominator}"}
                         for i, a in self.arcs}}

    @staticmethod
    def from_json(data):
        arcs = []
        for i, spec in data["arcs"].items():
            arcs.append((int(i), CircleInterval(CirclePoint.of(Fraction(spec["center"])),
                                                Fraction(spec["radius"]))))
        return ProductBall.of(arcs)


@dataclass(frozen=True)
class RulePiece:
    """A rule-compatible interval product on indices 0..level (FULL allowed)."""

    arcs: tuple   # CircleInterval or FULL per index 0..level

    def fits_in(self, ball: ProductBall) -> bool:
        for i, a in ball.arcs:
            mine = self.arcs[i] if i < len(self.arcs) else FULL
            if mine is FULL:
                return False
            if not mine.formally_inside(a):
                return False
        return True


@dataclass(frozen=True)
class CoverVerdict:
    status: str                 # "certified" | "refuted" | "exhausted"
    witness: ProductPoint | None = None
    pieces: int = 0
    pitch: Fraction | None = None
    level: int = 0
    work: int = 0

    @property
    def certified(self):
        return self.status == "certified"

    def to_json(self):
        out = {"status": self.status, "pieces": self.pieces, "level": self.level,
               "work": self.work}
        if self.pitch is not None:
            out["pitch"] = f"{self.pitch.numerator}/{self.pitch.denominator}"
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


class MalformedBallError(ValueError):
    pass


def rule_pieces(system: SolenoidSystem, level: int, pitch: Fraction):
    """Rule-compatible interval products covering the system at this pitch.

    Free indices get overlapping arcs of radius `pitch` on a pitch-step grid;
    rule indices get the exact preimage branches of the lifted right side.
    """
    pieces = [[]]
    for i in range(level + 1):
        kind = system.kind(i) if i <= system.level else "free"
        new = []
        for arcs in pieces:
            if kind == "rule":
                rule = system.rules[i]
                acc = None
                for s, m in rule.coeffs:
                    term = arc_scale(arcs[s], m)
                    acc = term if acc is None else arc_sum(acc, term)
                rhs = acc if acc is not None else CircleInterval(ZERO, pitch)
                branches = arc_preimages(rhs, rule.q)
            elif kind == "cyclic":
                k = system.finite_orders[i]
                branches = [CircleInterval(p, pitch) for p in cyclic_points(k)]
            else:
                steps = int(1 / pitch) + 1
                branches = [CircleInterval(CirclePoint.of(j * pitch), pitch)
                            for j in range(steps)]
            for b in branches:
                new.append(arcs + [b])
        pieces = new
    return [RulePiece(tuple(p)) for p in pieces]


def _validate_balls(balls):
    for b in balls:
        if not isinstance(b, ProductBall) or not b.arcs:
            raise MalformedBallError("each ball needs at least one rational arc")


def certify_cover(system: SolenoidSystem, balls, budget: int) -> CoverVerdict:
    """Certified / Refuted / Exhausted verdict for 'the balls cover the group'."""
    _validate_balls(balls)
    level = max(max((max(b.support()) for b in balls), default=0), 0)
    work = 0

    min_radius = min(a.radius for b in balls for _, a in b.arcs)
    pitch = min_radius / 2
    stage = max(level, 2)

    while work <= budget:
        # refutation pass: an exact dense point outside every ball
        for p in enumerate_dense(system, stage):
            work += 1
            if all(b.exclusion_slack(p) >= 0 for b in balls):
                return CoverVerdict("refuted", witness=p, level=level, work=work)
            if work > budget:
                return CoverVerdict("exhausted", level=level, work=work)
        # certification pass at the current pitch
        pieces = rule_pieces(system, level, pitch)
        work += len(pieces)
        if all(any(piece.fits_in(b) for b in balls) for piece in pieces):
            return CoverVerdict("certified", pieces=len(pieces), pitch=pitch,
                                level=level, work=work)
        pitch = pitch / 2
        stage += 1
    return CoverVerdict("exhausted", level=level, work=work)


def cover_level_for(eps: Fraction) -> int:
    """Smallest index horizon whose metric tail is below eps/4."""
    i = 0
    while Fraction(1, 2 ** (i + 2)) > eps / 4:
        i += 1
    return i


def enumerate_covers(system: SolenoidSystem, eps: Fraction, budget: int):
    """Stream certified covers by eps-balls: products of arcs of radius <= eps
    on every index up to the tail level, full circles beyond.

    Points of a level-L system have support inside [0, L] (the truncation pins
    the tail to 0), so balls never need to constrain indices beyond L.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    level = min(cover_level_for(eps), system.level)
    work = 0
    pitch = eps / 2
    while work <= budget:
        pieces = rule_pieces(system, level, pitch)
        work += len(pieces)
        usable = all(a is not FULL and a.radius < eps
                     for piece in pieces for a in piece.arcs)
        if usable:
            balls = [ProductBall.of([(i, CircleInterval(a.center,
                                                        min(eps, 2 * a.radius)))
                                     for i, a in enumerate(piece.arcs)])
                     for piece in pieces]
            verdict = certify_cover(system, balls, max(budget - work, 0))
            work += verdict.work
            if verdict.certified:
                yield balls, verdict
        pitch = pitch / 2
