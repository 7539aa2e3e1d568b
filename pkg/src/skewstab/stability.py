"""Stability analysis and stabilisation over a chain of local models.

A family of vertex sets, one per fibre of a chain, is analytically
stable when the pushforward of every vertex lands back in the family or
in a region certified never to return to it.  Complement regions are
classified three ways: J-type regions contain an exact point whose
orbit reaches the vertex set (always replayable), F-type regions are
trapped away from it forever, everything else is Unknown within the
configured budgets.  Unknown never upgrades to a stable verdict.

Soundness split: J evidence is only ever produced from exact orbits of
exact points, while F evidence tracks whole disks through image bounds
that over-approximate.  An over-approximated disk that stays clear of
the vertex sets is genuinely trapped; it is never used to claim a hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .berkovich import (
    Direction,
    TypeIIPoint,
    classical_in_direction,
    direction_at,
    direction_infinity,
    direction_multiplicity,
    direction_to_class,
    g_point,
    gauss_point,
    join,
    leq,
    point_in_direction,
    special_directions,
)
from .errors import (
    FitFailure,
    InsufficientPrecision,
    NotApplicable,
    NotRayInvariant,
    NotRepresentable,
    RoundCapExceeded,
    SkewstabError,
)
from .intervalmap import (
    FixedPoint,
    InfiniteByDenominatorGrowth,
    PLMap,
    detect_preperiodic,
    fixed_points,
    induce_interval_map,
)
from .puiseux import INF, as_series
from .roots import newton_puiseux
from .skew import (
    Chain,
    SkewLocal,
    folding_tree,
    has_good_reduction,
    is_simple,
    pushforward,
    pushforward_direction,
    reduction_mod_x,
    single_chain,
)
from .vertexset import (
    GammaDomain,
    VertexSet,
    domain_contains,
    locate,
    smooth_n_convex_hull,
    tree_lattice_points,
)

STABLE = "StableCertified"
DESTABILISING = "DestabilisingFound"
INCONCLUSIVE = "Inconclusive"

#: orbits whose radius exponent leaves this band are treated as escaped
_T_BOUND = Fraction(10**6)


@dataclass(frozen=True)
class StabilizationConfig:
    """Budgets for classification and stabilisation loops.

    horizon caps orbit length, max_rounds caps closure rounds, m0 is the
    working lattice level (default: largest g over the input vertices),
    probe_budget caps probe denominators and retry counts, max_level caps
    the lattice level of points the resolution rules may add.
    """

    horizon: int = 64
    max_rounds: int = 32
    m0: Optional[int] = None
    probe_budget: int = 8
    probe_horizon: int = 16
    max_level: int = 16

    def __post_init__(self):
        for name in (
            "horizon",
            "max_rounds",
            "probe_budget",
            "probe_horizon",
            "max_level",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.m0 is not None and self.m0 < 1:
            raise ValueError("m0 must be positive")


# -- domain classes -------------------------------------------------------


@dataclass(frozen=True)
class MapsIntoPersistentFDisk:
    disk: "RegistryDisk"

    def __str__(self):
        return f"maps into persistent disk {self.disk}"


@dataclass(frozen=True)
class AttractingCycleCertificate:
    """A cycle of disks, each mapping inside the next.

    Orbits entering the first disk stay in the cycle forever; every disk
    was checked to be disjoint from its fibre's vertex set, so nothing
    trapped here can return to it.  Covers indifferent cycles too.
    """

    disks: tuple  # ((fibre, boundary, direction), ...)
    entry: int  # steps from the classified region to the cycle

    def __str__(self):
        inner = "; ".join(f"fibre {j}: disk(at {b}, {v})" for j, b, v in self.disks)
        return f"invariant disk cycle after {self.entry} step(s): {inner}"


@dataclass(frozen=True)
class GoodReductionInvariance:
    """A residue-class cycle under the reduced maps, clear of the vertex sets."""

    residues: tuple  # ((fibre, residue-or-None), ...)

    def __str__(self):
        inner = ", ".join(
            f"({j}, {'inf' if r is None else r})" for j, r in self.residues
        )
        return f"good-reduction residue cycle {inner}"


@dataclass(frozen=True)
class FCertified:
    reason: object  # one of the three certificate types above

    kind: str = field(default="F", init=False)

    def __str__(self):
        return f"F-certified: {self.reason}"


@dataclass(frozen=True)
class JDomain:
    """A region with an exact witness orbit into the vertex set.

    ``path`` replays the claim: it starts at (fibre, witness) and its
    last entry is a vertex of the final fibre's set.  Enlarging the
    vertex sets can only keep the witness valid.
    """

    witness: TypeIIPoint
    fibre: int
    steps: int
    path: tuple  # ((fibre, point), ...)

    kind: str = field(default="J", init=False)

    def __str__(self):
        return (
            f"J-domain: {self.witness} (fibre {self.fibre}) reaches the "
            f"vertex set in {self.steps} step(s)"
        )


@dataclass(frozen=True)
class Unknown:
    horizon: int
    note: str = ""

    kind: str = field(default="unknown", init=False)

    def __str__(self):
        extra = f" ({self.note})" if self.note else ""
        return f"unclassified within horizon {self.horizon}{extra}"


# -- persistent disk registry ---------------------------------------------


@dataclass(frozen=True)
class RegistryDisk:
    fibre: int
    boundary: TypeIIPoint
    direction: Direction
    round_created: int

    def contains(self, p: TypeIIPoint) -> bool:
        return point_in_direction(self.direction, p)

    def __str__(self):
        side = "infinity" if self.direction.at_infinity else str(self.direction.rep)
        return f"D(fibre {self.fibre}, at {self.boundary}, towards {side})"


class PersistentFDiskRegistry:
    """Disks certified to stay away from the vertex sets, forever.

    Insertion-only; the audit re-checks the five axioms (boundary is a
    vertex, generic direction, disjoint from the vertex set, forward
    invariant into the registry, never shrunk) against the current state.
    """

    def __init__(self):
        self._disks = []
        self._high_water = 0

    def add(self, disk: RegistryDisk):
        if disk not in self._disks:
            self._disks.append(disk)

    def __iter__(self):
        return iter(self._disks)

    def __len__(self):
        return len(self._disks)

    def in_fibre(self, j: int):
        return [d for d in self._disks if d.fibre == j]

    def find(self, j: int, p: TypeIIPoint) -> Optional[RegistryDisk]:
        for d in self.in_fibre(j):
            if d.contains(p):
                return d
        return None

    def audit(self, gammas: dict, chain: Chain):
        """Failure strings for every axiom violation; empty means pass."""
        failures = []
        for d in self._disks:
            tag = str(d)
            if d.boundary not in gammas[d.fibre]:
                failures.append(f"{tag}: boundary not a vertex of fibre {d.fibre}")
            if any(v == d.direction for v, _ in special_directions(d.boundary)):
                failures.append(f"{tag}: direction is special at the boundary")
            elif direction_multiplicity(d.boundary, d.direction) != g_point(d.boundary):
                failures.append(f"{tag}: direction multiplicity below g")
            for g in gammas[d.fibre]:
                if d.contains(g):
                    failures.append(f"{tag}: vertex {g} lies inside")
                    break
            img = _disk_image(chain.links[d.fibre], d.boundary, d.direction)
            nxt = chain.next_fibre(d.fibre)
            if img is None:
                failures.append(f"{tag}: image disk not computable")
            elif not any(
                _disk_contained(img[0], img[1], e.boundary, e.direction)
                for e in self.in_fibre(nxt)
            ):
                failures.append(f"{tag}: image not inside any registry disk")
        if len(self._disks) < self._high_water:
            failures.append("registry shrank")
        self._high_water = max(self._high_water, len(self._disks))
        return failures


# -- exact disk image bounds ----------------------------------------------


def _packet_inside(v: Direction, desc) -> bool:
    """Whether a non-rational root packet can lie in direction v.

    The packet gives val(root - prefix) exactly, so membership is often
    decidable from valuations alone; when the leading terms could cancel
    we answer True, which is the conservative side for callers trying to
    rule regions out.
    """
    b = v.at
    base = b.center if v.at_infinity else v.rep
    d = desc.prefix - base
    lead = d.val() if d.terms else None
    if lead == desc.valuation:
        return True
    w = desc.valuation if lead is None else min(lead, desc.valuation)
    return (w < b.t) if v.at_infinity else (w > b.t)


_zero_cache = {}


def _num_zeros(link: SkewLocal):
    key = id(link)
    hit = _zero_cache.get(key)
    if hit is None or hit[0] is not link:
        hit = (link, newton_puiseux(list(link.num), None))
        _zero_cache[key] = hit
    return hit[1]


def _disk_image(link: SkewLocal, b: TypeIIPoint, v: Direction):
    """The disk bounding the image of D(b, v), or None when unbounded.

    With no pole inside, the image sits in the disk at the pushforward
    boundary (maximum principle).  With poles but no zeros inside, the
    map omits 0, so the image is again a disk, on the complementary side
    of the same boundary.  With both, the image can be everything.
    """
    pole_roots, pole_descs, pole_at_inf = link.poles()
    try:
        zero_roots, zero_descs = _num_zeros(link)
    except SkewstabError:
        return None

    def any_inside(roots, descs, at_inf_flag):
        if at_inf_flag and v.at_infinity:
            return True
        try:
            if any(classical_in_direction(v, r.series) for r in roots):
                return True
        except SkewstabError:
            return True
        return any(_packet_inside(v, d) for d in descs)

    num_deg = len(link.num) - 1
    den_deg = len(link.den) - 1
    poles_in = any_inside(pole_roots, pole_descs, num_deg > den_deg)
    zeros_in = any_inside(zero_roots, zero_descs, den_deg > num_deg)
    if poles_in and zeros_in:
        return None
    try:
        b2 = pushforward(link, b)
        v2 = pushforward_direction(link, b, v)
    except SkewstabError:
        return None
    return b2, v2


def _disk_contained(b1, v1, b2, v2) -> bool:
    """D(b1, v1) inside D(b2, v2); both open disks off their boundary."""
    if b1 == b2:
        return v1 == v2
    if not point_in_direction(v2, b1):
        return False
    return v1 != direction_at(b1, b2)


def _disk_disjoint(b, v, gammas) -> bool:
    return not any(point_in_direction(v, g) for g in gammas)


def _in_disks(disks, j: int, p: TypeIIPoint) -> bool:
    return any(jd == j and point_in_direction(vd, p) for jd, bd, vd in disks)


# -- analyzer: shared orbit machinery --------------------------------------


class _Analyzer:
    """Chain stepping with memoisation plus the current vertex family."""

    def __init__(self, chain, gammas, cfg, registry):
        self.chain = chain
        self.cfg = cfg
        self.registry = registry
        self.single = not isinstance(gammas, dict)
        self.gammas = self._normalise(gammas)
        self._push_cache = {}
        self._cls_cache = {}

    def _normalise(self, gammas) -> dict:
        if isinstance(gammas, dict):
            out = {}
            for j in range(self.chain.size):
                if j not in gammas:
                    raise ValueError(f"no vertex set given for fibre {j}")
                out[j] = VertexSet(gammas[j])
            return out
        vs = VertexSet(gammas)
        return {j: vs for j in range(self.chain.size)}

    def result(self):
        if self.single and self.chain.size == 1:
            return self.gammas[0]
        return dict(self.gammas)

    def vertices(self):
        for j in range(self.chain.size):
            for p in self.gammas[j]:
                yield j, p

    def step(self, j: int, p: TypeIIPoint):
        key = (j, p)
        hit = self._push_cache.get(key)
        if hit is None:
            hit = self.chain.step(j, p)
            self._push_cache[key] = hit
        return hit

    def extend(self, additions: dict) -> bool:
        changed = False
        for j, pts in additions.items():
            merged = self.gammas[j].union(pts)
            if len(merged) != len(self.gammas[j]):
                self.gammas[j] = merged
                changed = True
        if changed:
            self._flush_classifications()
        return changed

    def set_gammas(self, gammas: dict):
        self.gammas = {j: VertexSet(v) for j, v in gammas.items()}
        self._flush_classifications()

    def _flush_classifications(self):
        # J-certificates persist under enlargement; F and Unknown do not
        self._cls_cache = {k: c for k, c in self._cls_cache.items() if c.kind == "J"}

    # -- J search -----------------------------------------------------------

    def _probe_ts(self, lo: Fraction, hi: Fraction):
        out = set()
        for q in range(1, self.cfg.probe_budget + 1):
            k = math.floor(lo * q) + 1
            while Fraction(k, q) < hi:
                out.add(Fraction(k, q))
                k += 1
        return sorted(out, key=lambda t: (t.denominator, t))[:8]

    def _domain_probes(self, j: int, dom: GammaDomain):
        if dom.kind == "annulus":
            outer, inner = dom.boundary
            return [
                TypeIIPoint(inner.center, t) for t in self._probe_ts(outer.t, inner.t)
            ]
        if dom.kind == "disk" and dom.direction is not None:
            b, v = dom.boundary[0], dom.direction
            if v.at_infinity:
                return [
                    TypeIIPoint(b.center, b.t - t)
                    for t in self._probe_ts(Fraction(0), Fraction(2))
                ]
            return [
                TypeIIPoint(v.rep, b.t + t)
                for t in self._probe_ts(Fraction(0), Fraction(2))
            ]
        if dom.kind == "component":
            out = []
            bdry = list(dom.boundary)
            for i, a in enumerate(bdry):
                for b in bdry[i + 1 :]:
                    w = join(a, b)
                    for cand in (w, TypeIIPoint(b.center, (w.t + b.t) / 2)):
                        if domain_contains(dom, self.gammas[j], cand):
                            out.append(cand)
            return out[:8]
        return []

    def _probe_orbit(self, j: int, p: TypeIIPoint):
        """(steps, path) when the exact orbit reaches the vertex family."""
        path = [(j, p)]
        jj, pp = j, p
        for k in range(1, self.cfg.probe_horizon + 1):
            try:
                jj, pp = self.step(jj, pp)
            except SkewstabError:
                return None
            path.append((jj, pp))
            if pp in self.gammas[jj]:
                return k, tuple(path)
            if self.registry is not None and self.registry.find(jj, pp) is not None:
                return None
            if abs(pp.t) > _T_BOUND:
                return None
        return None

    def _classical_in_domain(self, j: int, dom: GammaDomain, series) -> bool:
        depth = max(b.t for b in dom.boundary) + 2
        if series.precision is not INF and series.precision < depth:
            return False
        try:
            proxy = TypeIIPoint(series, depth)
        except SkewstabError:
            return False
        return domain_contains(dom, self.gammas[j], proxy)

    def _pole_ray_witness(self, j: int, dom: GammaDomain):
        """Exact J-witness on a ray through a pole inside the domain.

        Along such a ray the image level sweeps down without bound, so
        solving the induced interval map for the exact level of a target
        vertex, then replaying the pushforward, gives a one-step witness
        whenever the centres match too.
        """
        link = self.chain.links[j]
        nxt = self.chain.next_fibre(j)
        roots, _descs, _at_inf = link.poles()
        lo = max(b.t for b in dom.boundary)
        for root in roots:
            if not self._classical_in_domain(j, dom, root.series):
                continue
            try:
                pl = induce_interval_map(
                    link, root.series, (lo + Fraction(1, 16), lo + 4)
                )
            except SkewstabError:
                continue
            for target in self.gammas[nxt]:
                cand = _solve_level(pl, target.t, root.series)
                if cand is None or not domain_contains(dom, self.gammas[j], cand):
                    continue
                try:
                    if pushforward(link, cand) == target:
                        return JDomain(
                            witness=cand,
                            fibre=j,
                            steps=1,
                            path=((j, cand), (nxt, target)),
                        )
                except SkewstabError:
                    continue
        return None

    # -- F search -----------------------------------------------------------

    def _registry_f(self, j: int, b, v):
        if self.registry is None:
            return None
        for d in self.registry.in_fibre(j):
            if _disk_contained(b, v, d.boundary, d.direction):
                return FCertified(MapsIntoPersistentFDisk(d))
        img = _disk_image(self.chain.links[j], b, v)
        if img is None:
            return None
        nxt = self.chain.next_fibre(j)
        for d in self.registry.in_fibre(nxt):
            if _disk_contained(img[0], img[1], d.boundary, d.direction):
                return FCertified(MapsIntoPersistentFDisk(d))
        return None

    def _disk_cycle_f(self, j: int, b, v):
        disks = [(j, b, v)]
        jj, bb, vv = j, b, v
        for _ in range(min(self.cfg.horizon, 16)):
            img = _disk_image(self.chain.links[jj], bb, vv)
            if img is None:
                return None
            jj = self.chain.next_fibre(jj)
            bb, vv = img
            for i, (ji, bi, vi) in enumerate(disks):
                if ji == jj and _disk_contained(bb, vv, bi, vi):
                    ok = all(
                        _disk_disjoint(bk, vk, self.gammas[jk])
                        for jk, bk, vk in disks
                    )
                    if not ok:
                        return None
                    return FCertified(
                        AttractingCycleCertificate(tuple(disks[i:]), entry=i)
                    )
            disks.append((jj, bb, vv))
        return None

    def _good_reduction_f(self, j: int, dom: GammaDomain):
        if dom.kind != "disk" or dom.direction is None:
            return None
        b, v = dom.boundary[0], dom.direction
        if b != gauss_point() or v.at_infinity:
            return None
        if not all(is_simple(l) and has_good_reduction(l) for l in self.chain.links):
            return None
        blocked = {}
        for jj in range(self.chain.size):
            bl = set()
            for g in self.gammas[jj]:
                if g == gauss_point():
                    continue
                d = direction_at(gauss_point(), g)
                bl.add(None if d.at_infinity else d.rep.residue())
            blocked[jj] = bl
        reduced = [reduction_mod_x(l) for l in self.chain.links]
        cur = v.rep.residue()
        jj = j
        if cur in blocked[jj]:
            return None
        seen = {}
        path = []
        for k in range(self.cfg.horizon):
            if (jj, cur) in seen:
                return FCertified(
                    GoodReductionInvariance(tuple(path[seen[(jj, cur)] :]))
                )
            seen[(jj, cur)] = k
            path.append((jj, cur))
            try:
                cur = reduced[jj].apply(cur)
            except ArithmeticError:
                return None
            jj = self.chain.next_fibre(jj)
            if cur is not None and (
                abs(cur.numerator) > 10**9 or cur.denominator > 10**9
            ):
                return None
            if cur in blocked[jj]:
                return None
        return None

    # -- classification -------------------------------------------------------

    def classify(self, j: int, dom: GammaDomain):
        key = (j, dom)
        hit = self._cls_cache.get(key)
        if hit is not None:
            return hit
        out = self._classify(j, dom)
        self._cls_cache[key] = out
        return out

    def _classify(self, j: int, dom: GammaDomain):
        for probe in self._domain_probes(j, dom):
            res = self._probe_orbit(j, probe)
            if res is not None:
                steps, path = res
                return JDomain(witness=probe, fibre=j, steps=steps, path=path)
        w = self._pole_ray_witness(j, dom)
        if w is not None:
            return w
        if dom.kind == "disk" and dom.direction is not None:
            b, v = dom.boundary[0], dom.direction
            f = self._registry_f(j, b, v)
            if f is not None:
                return f
            f = self._disk_cycle_f(j, b, v)
            if f is not None:
                return f
        f = self._good_reduction_f(j, dom)
        if f is not None:
            return f
        note = "" if dom.kind == "disk" else "no disk-tracking F route for this shape"
        return Unknown(self.cfg.horizon, note=note)


def _solve_level(pl: PLMap, level: Fraction, center) -> Optional[TypeIIPoint]:
    """A parameter t with pl(t) == level, as a point on the centre ray."""
    cuts = pl.cuts()
    for i, (s, c) in enumerate(pl.pieces):
        if s == 0:
            continue
        t = (level - c) / s
        if cuts[i] <= t <= cuts[i + 1]:
            return TypeIIPoint(center, t)
    return None


# -- classification entry points -------------------------------------------


def classify_domain(dom, gammas, chain, cfg=None, fibre: int = 0, registry=None):
    """Classify one complement region of the vertex family."""
    if isinstance(chain, SkewLocal):
        chain = single_chain(chain)
    cfg = cfg if cfg is not None else StabilizationConfig()
    return _Analyzer(chain, gammas, cfg, registry).classify(fibre, dom)


@dataclass(frozen=True)
class DestabilisingWitness:
    point: TypeIIPoint
    fibre: int
    image: TypeIIPoint
    image_fibre: int
    domain: GammaDomain
    evidence: JDomain

    @property
    def surface(self) -> str:
        return (
            f"the vertex divisor at {self.point} over fibre {self.fibre} pushes "
            f"into a region from which an exact orbit returns to the vertex "
            f"locus in {self.evidence.steps} step(s); stabilising requires "
            f"blowing up along this orbit"
        )


@dataclass(frozen=True)
class UnresolvedImage:
    point: TypeIIPoint
    fibre: int
    image: TypeIIPoint
    image_fibre: int
    domain: Optional[GammaDomain]
    note: str


@dataclass(frozen=True)
class StabilityReport:
    verdict: str
    witnesses: tuple
    unresolved: tuple
    classifications: tuple  # ((fibre, domain, class), ...)
    notes: tuple = ()

    @property
    def stable(self) -> bool:
        return self.verdict == STABLE

    def structured(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        for note in self.notes:
            lines.append(f"note: {note}")
        for i, w in enumerate(self.witnesses):
            lines.append(f"witness[{i}].point: {w.point} @ fibre {w.fibre}")
            lines.append(f"witness[{i}].image: {w.image} @ fibre {w.image_fibre}")
            lines.append(f"witness[{i}].domain: {w.domain}")
            ev = w.evidence
            lines.append(
                f"witness[{i}].replay: start={ev.witness} fibre={ev.fibre} "
                f"steps={ev.steps} end={ev.path[-1][1]}"
            )
            lines.append(f"witness[{i}].surface: {w.surface}")
        for i, u in enumerate(self.unresolved):
            lines.append(
                f"unresolved[{i}]: {u.point} @ fibre {u.fibre} -> {u.image} "
                f"in {u.domain} ({u.note})"
            )
        for i, (j, dom, cls) in enumerate(self.classifications):
            lines.append(f"domain[{i}]: fibre {j}, {dom}: {cls}")
        return "\n".join(lines)

    def __str__(self):
        return self.structured()


def _hypothesis_notes(chain: Chain):
    if any(l.base.n >= 2 for l in chain.links):
        return (
            "superattracting invariant fibre accepted by hypothesis "
            "(contracting base germ)",
        )
    return ()


def _scan(an: _Analyzer):
    witnesses = []
    unresolved = []
    classifications = []
    seen_domains = set()
    for j, p in an.vertices():
        try:
            j2, img = an.step(j, p)
        except SkewstabError as e:
            unresolved.append(
                UnresolvedImage(p, j, p, j, None, f"pushforward failed: {e}")
            )
            continue
        if img in an.gammas[j2]:
            continue
        dom = locate(an.gammas[j2], img)
        cls = an.classify(j2, dom)
        if (j2, dom) not in seen_domains:
            seen_domains.add((j2, dom))
            classifications.append((j2, dom, cls))
        if cls.kind == "J":
            witnesses.append(DestabilisingWitness(p, j, img, j2, dom, cls))
        elif cls.kind == "unknown":
            unresolved.append(UnresolvedImage(p, j, img, j2, dom, cls.note))
    return tuple(witnesses), tuple(unresolved), tuple(classifications)


def _report(an: _Analyzer) -> StabilityReport:
    witnesses, unresolved, classifications = _scan(an)
    if witnesses:
        verdict = DESTABILISING
    elif unresolved:
        verdict = INCONCLUSIVE
    else:
        verdict = STABLE
    return StabilityReport(
        verdict=verdict,
        witnesses=witnesses,
        unresolved=unresolved,
        classifications=classifications,
        notes=_hypothesis_notes(an.chain),
    )


def destabilising_points(gammas, chain, cfg=None, registry=None):
    """Vertices whose image leaves the family and lands in a J region.

    Returns (witnesses, unresolved, classifications); unresolved entries
    are images in Unknown regions, which block a stable verdict without
    forcing a destabilising one.
    """
    if isinstance(chain, SkewLocal):
        chain = single_chain(chain)
    cfg = cfg if cfg is not None else StabilizationConfig()
    return _scan(_Analyzer(chain, gammas, cfg, registry))


def is_analytically_stable(gammas, chain, cfg=None, registry=None) -> StabilityReport:
    """Three-valued stability verdict with replayable evidence.

    StableCertified only when every vertex image is a vertex again or
    sits in an F-certified region; any Unknown region downgrades the
    verdict to Inconclusive rather than guessing.
    """
    if isinstance(chain, SkewLocal):
        chain = single_chain(chain)
    cfg = cfg if cfg is not None else StabilizationConfig()
    return _report(_Analyzer(chain, gammas, cfg, registry))


# -- minimal stabilisation --------------------------------------------------


@dataclass(frozen=True)
class StabilisationStep:
    round: int
    fibre: int
    point: TypeIIPoint
    image: TypeIIPoint
    image_fibre: int
    classification: str


def minimal_stabilisation(gammas, chain, cfg=None):
    """Blow up images of destabilising vertices until the family closes.

    Each round adds the pushforward image of every vertex whose image
    escaped into a J region; images in Unknown regions are added too
    (conservative: the loop never claims stability for them, and leaving
    them out could stall the closure short of an honest verdict).  F
    images are left alone.  Returns (vertex family, report, trace);
    raises RoundCapExceeded with the trace attached when the loop does
    not close.
    """
    if isinstance(chain, SkewLocal):
        chain = single_chain(chain)
    cfg = cfg if cfg is not None else StabilizationConfig()
    an = _Analyzer(chain, gammas, cfg, None)
    trace = []
    for rnd in range(1, cfg.max_rounds + 1):
        additions = {}
        for j, p in an.vertices():
            j2, img = an.step(j, p)
            if img in an.gammas[j2] or img in additions.get(j2, set()):
                continue
            dom = locate(an.gammas[j2], img)
            cls = an.classify(j2, dom)
            if cls.kind == "F":
                continue
            additions.setdefault(j2, set()).add(img)
            trace.append(StabilisationStep(rnd, j, p, img, j2, cls.kind))
        if not additions:
            return an.result(), _report(an), trace
        an.extend(additions)
    raise RoundCapExceeded(f"no stabilisation within {cfg.max_rounds} rounds", trace)


# -- smooth stabilisation ----------------------------------------------------


def stabilize_smooth(gammas, chain, cfg=None):
    """Alternate smooth lattice closure with orbit resolution rules.

    Every vertex must resolve through one of, in order: (i) its orbit
    enters a persistent registry disk, (ii) its orbit reaches a vertex,
    (iii) its orbit is exactly preperiodic, (iv) it escapes into a
    verified attracting disk cycle, (v) it falls into a good-reduction
    residue cycle; both disk rules convert the trap into registry disks
    and add the finite orbit segment leading into it.  The loop stops
    when a round adds nothing.  Returns (vertex family, report,
    registry, trace) where the report comes from the independent
    stability checker, never from the loop's own bookkeeping.
    """
    if isinstance(chain, SkewLocal):
        chain = single_chain(chain)
    cfg = cfg if cfg is not None else StabilizationConfig()
    registry = PersistentFDiskRegistry()
    an = _Analyzer(chain, gammas, cfg, registry)
    m0 = cfg.m0
    if m0 is None:
        m0 = max((g_point(p) for _, p in an.vertices()), default=1)

    # seed with the folding locus, cut at the working level
    for j, link in enumerate(chain.links):
        try:
            ends = folding_tree(link)
        except SkewstabError:
            ends = []  # the seed is heuristic; skipping it only risks Inconclusive
        if ends:
            seed = tree_lattice_points(
                list(an.gammas[j]) + list(ends) + [gauss_point()], m0
            )
            an.extend({j: set(seed)})

    trace = []
    for rnd in range(1, cfg.max_rounds + 1):
        hulls = {}
        for j in range(chain.size):
            level = max([m0] + [g_point(p) for p in an.gammas[j]])
            hulls[j] = smooth_n_convex_hull(an.gammas[j], level)
        an.set_gammas(hulls)
        audit = registry.audit(an.gammas, chain)

        additions = {}
        unresolved = []
        resolutions = []
        for j, p in an.vertices():
            rule = _resolve_vertex(an, rnd, j, p, additions)
            if rule is None:
                unresolved.append((j, p))
            else:
                resolutions.append((j, str(p), rule))
        trace.append(
            {
                "round": rnd,
                "added": sorted(
                    (j, str(p)) for j, pts in additions.items() for p in pts
                ),
                "registry_audit": audit,
                "unresolved": [(j, str(p)) for j, p in unresolved],
                "resolutions": resolutions,
            }
        )
        if an.extend(additions):
            continue
        report = is_analytically_stable(an.result(), chain, cfg, registry)
        if unresolved:
            names = ", ".join(f"{p} @ fibre {j}" for j, p in unresolved)
            report = StabilityReport(
                verdict=INCONCLUSIVE if report.verdict == STABLE else report.verdict,
                witnesses=report.witnesses,
                unresolved=report.unresolved,
                classifications=report.classifications,
                notes=report.notes
                + (
                    f"no resolution rule applied within horizon "
                    f"{cfg.horizon} for: {names}",
                ),
            )
        return an.result(), report, registry, trace
    raise RoundCapExceeded(
        f"smooth stabilisation open after {cfg.max_rounds} rounds", trace
    )


def _resolve_vertex(an: _Analyzer, rnd: int, j: int, p: TypeIIPoint, additions):
    """Apply the resolution rules to one vertex; returns the rule name.

    The walk runs to the full horizon before any trap construction, so
    orbits prefer falling into existing registry disks over spawning
    fresh ones.
    """
    path = []
    seen = {(j, p)}
    jj, pp = j, p
    for _ in range(an.cfg.horizon):
        try:
            jj, pp = an.step(jj, pp)
        except SkewstabError:
            return None
        if an.registry.find(jj, pp) is not None:
            if not _level_ok(an, path):
                return None
            _add_points(additions, path)
            return "registry-disk"
        if pp in an.gammas[jj] or pp in additions.get(jj, set()):
            if not _level_ok(an, path):
                return None
            _add_points(additions, path)
            return "vertex"
        if (jj, pp) in seen:
            if not _level_ok(an, path):
                return None
            _add_points(additions, path)
            return "preperiodic"
        seen.add((jj, pp))
        path.append((jj, pp))
        if abs(pp.t) > _T_BOUND:
            break
    rule = _attracting_disks(an, rnd, path, additions)
    if rule is not None:
        return rule
    return _residue_disks(an, rnd, path, additions)


def _add_points(additions, pairs):
    for j, p in pairs:
        additions.setdefault(j, set()).add(p)


def _level_ok(an: _Analyzer, pairs) -> bool:
    """Refuse additions whose lattice level would blow up the hull."""
    return all(g_point(p) <= an.cfg.max_level for _, p in pairs)


def _escape_index(path):
    """(i, k, inward) for the earliest nested same-fibre pair, else None.

    Earliest means smallest k then smallest i, so a monotone ray yields
    the one-step pair and a single self-mapping trap disk rather than a
    long chain of them.
    """
    for k in range(1, len(path)):
        jk, pk = path[k]
        for i in range(k):
            ji, pi = path[i]
            if ji != jk or pi == pk:
                continue
            if leq(pk, pi) and pk.t > pi.t:
                return i, k, True
            if leq(pi, pk) and pk.t < pi.t:
                return i, k, False
    return None


def _commit_trap(an: _Analyzer, rnd: int, path, additions, disks, rule: str):
    """Register a verified trap once the orbit provably enters it.

    The walk is extended past the recorded path if needed; without an
    entry point the construction is abandoned and nothing is committed.
    """
    pre = []
    entered = False
    for jj, q in path:
        if _in_disks(disks, jj, q):
            entered = True
            break
        pre.append((jj, q))
    if not entered:
        jj, qq = path[-1] if path else (None, None)
        if jj is None:
            return None
        for _ in range(an.cfg.horizon):
            try:
                jj, qq = an.step(jj, qq)
            except SkewstabError:
                return None
            if _in_disks(disks, jj, qq):
                entered = True
                break
            pre.append((jj, qq))
            if abs(qq.t) > _T_BOUND:
                return None
    if not entered:
        return None
    if not _level_ok(an, pre) or not _level_ok(an, [(jj, b) for jj, b, _ in disks]):
        return None
    for jj, b, v in disks:
        an.registry.add(RegistryDisk(jj, b, v, rnd))
        additions.setdefault(jj, set()).add(b)
    _add_points(additions, pre)
    return rule


def _attracting_disks(an: _Analyzer, rnd: int, path, additions):
    """Rule (iv): convert a nested orbit escape into registry disks.

    Boundaries sit on integer levels past every current vertex in the
    class, then the candidate cycle is verified by exact disk image
    containment; depths are pushed further on failure, up to the probe
    budget.
    """
    hit = _escape_index(path)
    if hit is None:
        return None
    i, k, inward = hit
    period = k - i
    slots = []
    for idx in range(i, k):
        jj, first = path[idx]
        # the deepest centre seen in this slot best approximates the limit
        q = max(
            (path[s][1] for s in range(idx, len(path), period)),
            key=lambda pt: pt.t if inward else -pt.t,
        )
        if inward:
            depth = max(
                [first.t]
                + [
                    g.t
                    for g in an.gammas[jj]
                    if leq(g, TypeIIPoint(q.center, min(first.t, g.t)))
                ]
            )
            bound = Fraction(math.floor(depth) + 1)
        else:
            bound = Fraction(
                math.floor(min([first.t] + [g.t for g in an.gammas[jj]])) - 1
            )
        slots.append((jj, q, bound))
    step = Fraction(1) if inward else Fraction(-1)
    for _ in range(an.cfg.probe_budget):
        disks = []
        for jj, q, bound in slots:
            b = TypeIIPoint(q.center, bound)
            v = direction_to_class(b, q.center) if inward else direction_infinity(b)
            if (jj, b, v) not in disks:
                disks.append((jj, b, v))
        if _verify_disk_cycle(an, disks, additions):
            return _commit_trap(an, rnd, path, additions, disks, "attracting-disk")
        slots = [(jj, q, bound + step) for jj, q, bound in slots]
    return None


def _verify_disk_cycle(an: _Analyzer, disks, additions) -> bool:
    n = len(disks)
    for idx, (jj, b, v) in enumerate(disks):
        held = list(an.gammas[jj]) + list(additions.get(jj, ()))
        if not _disk_disjoint(b, v, held):
            return False
        img = _disk_image(an.chain.links[jj], b, v)
        if img is None:
            return False
        nj = an.chain.next_fibre(jj)
        tj, tb, tv = disks[(idx + 1) % n]
        if nj != tj or not _disk_contained(img[0], img[1], tb, tv):
            return False
    return True


def _residue_disks(an: _Analyzer, rnd: int, path, additions):
    """Rule (v): trap a residue-class orbit under good reduction.

    Only attempted when every link has good reduction and the orbit sits
    in residue classes at the Gauss point whose reduced orbit cycles;
    the cycle becomes registry disks at depth 1, deepened on conflict.
    """
    if not path or not all(
        is_simple(l) and has_good_reduction(l) for l in an.chain.links
    ):
        return None
    j0, q0 = path[0]
    if q0.t <= 0:
        return None
    reduced = [reduction_mod_x(l) for l in an.chain.links]
    cur = q0.center.residue()
    jj = j0
    seen = {}
    cyc = []
    for k in range(an.cfg.horizon):
        if (jj, cur) in seen:
            cyc = cyc[seen[(jj, cur)] :]
            break
        seen[(jj, cur)] = k
        cyc.append((jj, cur))
        try:
            cur = reduced[jj].apply(cur)
        except ArithmeticError:
            return None
        if cur is None:
            return None
        jj = an.chain.next_fibre(jj)
    else:
        return None
    # depth 0 anchors the disks at the Gauss point: the full residue class
    depth = Fraction(0)
    for _ in range(an.cfg.probe_budget):
        disks = []
        for jj, r in cyc:
            b = TypeIIPoint(as_series(r), depth)
            disks.append((jj, b, direction_to_class(b, as_series(r))))
        if _verify_disk_cycle(an, disks, additions):
            return _commit_trap(an, rnd, path, additions, disks, "residue-cycle")
        depth += 1
    return None


# -- wandering Julia evidence -------------------------------------------------


@dataclass(frozen=True)
class WanderingJuliaCertificate:
    """Non-stabilisability evidence from an induced interval model.

    The named vertex generates an infinite orbit (certified by exact
    denominator growth) on an invariant interval that also carries a
    repelling fixed parameter; no finite vertex family closed under the
    pushforward can absorb such an orbit.
    """

    point: TypeIIPoint
    fibre: int
    interval: tuple
    fixed_point: FixedPoint
    orbit: InfiniteByDenominatorGrowth

    def __str__(self):
        lo, hi = self.interval
        return (
            f"wandering Julia certificate at {self.point} (fibre {self.fibre}): "
            f"invariant interval [{lo}, {hi}], repelling fixed parameter "
            f"t = {self.fixed_point.t} (slope {self.fixed_point.slope}), "
            f"infinite orbit from t = {self.orbit.start}"
        )


def _restrict(pl: PLMap, lo: Fraction, hi: Fraction) -> PLMap:
    pieces = []
    breaks = []
    cuts = pl.cuts()
    for i, piece in enumerate(pl.pieces):
        a, b = cuts[i], cuts[i + 1]
        if b <= lo or a >= hi:
            continue
        if pieces:
            breaks.append(max(a, lo))
        pieces.append(piece)
    return PLMap(lo, hi, tuple(breaks), tuple(pieces))


def _invariant_restriction(pl: PLMap, t0: Fraction) -> Optional[PLMap]:
    """The smallest restriction [lo, h] mapped into itself containing t0."""
    cuts = list(pl.cuts())
    candidates = sorted(
        {c for c in cuts + [pl(c) for c in cuts] + [t0, 2 * t0] if t0 <= c <= pl.hi}
    )
    for h in candidates:
        if h <= pl.lo:
            continue
        sub = _restrict(pl, pl.lo, h)
        if all(sub.lo <= sub(c) <= sub.hi for c in sub.cuts()):
            return sub
    return None


def wandering_julia_report(chain, point: TypeIIPoint, cfg=None, fibre: int = 0):
    """Interval-model evidence that the orbit of ``point`` never closes.

    Returns a WanderingJuliaCertificate, or None when the induced model
    shows a finite (preperiodic) orbit or stays inconclusive.  Raises
    NotApplicable when no interval model exists on the point's ray.
    """
    if isinstance(chain, SkewLocal):
        chain = single_chain(chain)
    cfg = cfg if cfg is not None else StabilizationConfig()
    j, p = fibre, point
    for _ in range(chain.size):
        if j >= chain.tail:
            break
        j, p = chain.step(j, p)
    links = chain.links[j:] + chain.links[chain.tail : j]
    first_return = Chain(links, period=chain.period, tail=0)
    hi = max(Fraction(2), 2 * abs(p.t) + 2)
    pl = None
    err = None
    # breakpoints must land on the sample grid; vary its density
    for samples in (8, 6, 12, 9, 10):
        try:
            pl = induce_interval_map(
                first_return, p.center, (Fraction(0), hi), samples=samples
            )
            break
        except (
            NotRayInvariant,
            FitFailure,
            InsufficientPrecision,
            NotRepresentable,
        ) as e:
            err = e
    if pl is None:
        raise NotApplicable(f"no interval model on the ray through {point}: {err}")
    # the model is only iterable when the first return preserves the ray
    probe = TypeIIPoint(p.center, max(abs(p.t), Fraction(1)))
    jp, qp = 0, probe
    for _ in first_return.links:
        jp, qp = first_return.step(jp, qp)
    if qp.center != p.center.drop_from(qp.t):
        raise NotApplicable(
            f"the first return maps the ray through {point} onto a different ray"
        )
    sub = _invariant_restriction(pl, p.t)
    if sub is None or not (sub.lo <= p.t <= sub.hi):
        return None
    cert = detect_preperiodic(sub, p.t, horizon=cfg.horizon)
    if not isinstance(cert, InfiniteByDenominatorGrowth):
        return None
    repelling = [
        f for f in fixed_points(sub) if isinstance(f, FixedPoint) and f.repelling
    ]
    if not repelling:
        return None
    return WanderingJuliaCertificate(
        point=point,
        fibre=fibre,
        interval=(sub.lo, sub.hi),
        fixed_point=repelling[-1],
        orbit=cert,
    )
