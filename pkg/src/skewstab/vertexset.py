"""Finite vertex sets on the Berkovich line: hulls, lattice convexity,
smoothness, and the complement domains they cut out.

Level-n vertices are the points with g <= n.  Along a segment these sit
at the radius exponents p/q with lcm(m, q) <= n, so consecutive ones are
Farey neighbours; an annulus between adjacent vertices is clean exactly
when no point with g <= max(g_outer, g_inner) lies strictly inside,
which the Farey structure makes decidable by a finite denominator scan.
Smoothness = every special direction of every vertex meets the set, and
every complement component is a clean disk or annulus.  The checker is
independent of the hull constructions so the two can audit each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Optional

from .berkovich import (
    Direction,
    TypeIIPoint,
    _diff_val,
    classify_point,
    direction_at,
    g_point,
    hyperbolic_distance,
    join,
    leq,
    m_point,
    point_in_direction,
    special_directions,
)
from .errors import RoundCapExceeded
from .puiseux import INF, PuiseuxPoly


class VertexSet:
    """Immutable finite set of disk points, kept sorted for determinism."""

    __slots__ = ("points",)

    def __init__(self, points=()):
        uniq = {}
        for p in points:
            uniq[p] = None
        object.__setattr__(
            self, "points", tuple(sorted(uniq, key=TypeIIPoint.sort_key))
        )

    def __setattr__(self, name, value):
        raise AttributeError("VertexSet is immutable")

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __contains__(self, p):
        return p in self.points

    def __eq__(self, other):
        if not isinstance(other, VertexSet):
            return NotImplemented
        return self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def union(self, extra) -> "VertexSet":
        return VertexSet(self.points + tuple(extra))

    def __str__(self):
        return "{" + ", ".join(str(p) for p in self.points) + "}"

    def __repr__(self):
        return f"VertexSet({self})"


@dataclass(frozen=True)
class HullTree:
    """Join-closure of a vertex set with its tree structure.

    ``edges`` lists (outer, inner) pairs of tree-adjacent nodes; ``top``
    is the unique maximal node.
    """

    nodes: tuple
    edges: tuple
    top: TypeIIPoint

    def children(self, p):
        return [inner for outer, inner in self.edges if outer == p]

    def parent(self, p):
        for outer, inner in self.edges:
            if inner == p:
                return outer
        return None

    def edge_length(self, outer, inner) -> Fraction:
        return hyperbolic_distance(outer, inner)


def hull(points) -> HullTree:
    """Smallest join-closed set containing the given points, as a tree."""
    pts = list(VertexSet(points))
    if not pts:
        raise ValueError("hull of an empty set")
    exact = all(not p.classical and p.center.precision is INF for p in pts)
    nodes = _join_closure(pts) if exact else _join_closure_by_pairs(pts)
    lst = sorted(nodes, key=TypeIIPoint.sort_key)
    edges = []
    top = None
    for p in lst:
        parent = None
        for q in lst:
            if q == p or not leq(p, q):
                continue
            if parent is None or q.t > parent.t:
                parent = q
        if parent is None:
            top = p
        else:
            edges.append((parent, p))
    return HullTree(tuple(lst), tuple(edges), top)


def _join_closure_by_pairs(pts):
    """Quadratic reference closure; the path for inexact centres."""
    nodes = set(pts)
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            nodes.add(join(a, b))
    # one closure round is enough in a tree, but verify
    lst = sorted(nodes, key=TypeIIPoint.sort_key)
    for i, a in enumerate(lst):
        for b in lst[i + 1 :]:
            j = join(a, b)
            if j not in nodes:
                nodes.add(j)
    return nodes


def _centre_cmp(a: PuiseuxPoly, b: PuiseuxPoly) -> int:
    """Order exact series by the sign of the leading term of a - b.

    Compatible with the disk tree: centres that agree below any depth d
    form a contiguous block, because any third series compares against
    both through a disagreement strictly below d.
    """
    ta, tb = a.terms, b.terms
    i = j = 0
    while i < len(ta) and j < len(tb):
        ea, ca = ta[i]
        eb, cb = tb[j]
        if ea < eb:
            return -1 if ca < 0 else 1
        if eb < ea:
            return 1 if cb < 0 else -1
        if ca != cb:
            return -1 if ca < cb else 1
        i += 1
        j += 1
    if i < len(ta):
        return -1 if ta[i][1] < 0 else 1
    if j < len(tb):
        return 1 if tb[j][1] < 0 else -1
    return 0


def _point_order(p: TypeIIPoint, q: TypeIIPoint) -> int:
    c = _centre_cmp(p.center, q.center)
    if c:
        return c
    return (p.t > q.t) - (p.t < q.t)


def _join_closure(pts):
    """All pairwise joins in near-linear time (exact centres only).

    In centre order the branch depth of two points is the minimum of the
    adjacent branch depths between them, so a union-find sweep from deep
    to shallow meets every pairwise join: merging two blocks at depth h
    yields a node not already present exactly when both blocks contain a
    point strictly deeper than h.
    """
    order = sorted(pts, key=cmp_to_key(_point_order))
    n = len(order)
    parent = list(range(n))
    deepest = [p.t for p in order]

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    shared = []  # adjacent pairs with identical centres: never a new node
    branch = []  # (depth of first centre disagreement, left position)
    for i in range(n - 1):
        v = _diff_val(order[i].center, order[i + 1].center)
        if v is None:
            shared.append(i)
        else:
            branch.append((v, i))
    nodes = set(order)
    for i in shared:
        a, b = find(i), find(i + 1)
        parent[a] = b
        deepest[b] = max(deepest[a], deepest[b])
    for h, i in sorted(branch, key=lambda g: g[0], reverse=True):
        a, b = find(i), find(i + 1)
        if deepest[a] > h and deepest[b] > h:
            nodes.add(TypeIIPoint(order[i].center, h))
        parent[a] = b
        deepest[b] = max(deepest[a], deepest[b])
    return nodes


def segment_lattice_points(
    outer: TypeIIPoint, inner: TypeIIPoint, bound: int, closed: bool = False
):
    """Level-`bound` vertices on the segment between two comparable points.

    These are the points zeta(c, p/q) on the inner centre's ray with
    lcm(m, q) <= bound, m the multiplicity of the centre truncated at
    p/q.  Open segment by default.
    """
    if not leq(inner, outer):
        raise ValueError("segment endpoints are not comparable")
    found = {}
    for q in range(1, bound + 1):
        k = math.ceil(outer.t * q)
        while Fraction(k, q) <= inner.t:
            s = Fraction(k, q)
            k += 1
            if not closed and (s == outer.t or s == inner.t):
                continue
            if s in found:
                continue
            p = TypeIIPoint(inner.center, s)
            if math.lcm(m_point(p), s.denominator) <= bound:
                found[s] = p
    return [found[s] for s in sorted(found)]


def tree_lattice_points(points, n: int) -> VertexSet:
    """All level-n vertices (g <= n) on the hull of the given points."""
    h = hull(points)
    got = [p for p in h.nodes if g_point(p) <= n]
    for outer, inner in h.edges:
        got.extend(segment_lattice_points(outer, inner, n))
    return VertexSet(got)


def n_convex_hull(points, n: int) -> VertexSet:
    """Join-closure plus all level-n vertices along every edge.

    Requires every input vertex to have g <= n.  Monotone, idempotent,
    and finite: per edge only denominators up to n occur.
    """
    for p in points:
        if g_point(p) > n:
            raise ValueError(f"{p} has g = {g_point(p)} > n = {n}")
    h = hull(points)
    got = list(h.nodes)
    for outer, inner in h.edges:
        got.extend(segment_lattice_points(outer, inner, n))
    return VertexSet(got)


# -- flanking ------------------------------------------------------------


def flank_in_direction(p: TypeIIPoint, v: Direction) -> TypeIIPoint:
    """Nearest level-m(p) vertex strictly in direction v from p."""
    m = m_point(p)
    if v.at_infinity:
        k = math.floor(p.t * m)
        if Fraction(k, m) == p.t:
            k -= 1
        return TypeIIPoint(p.center, Fraction(k, m))
    k = math.ceil(p.t * m)
    if Fraction(k, m) == p.t:
        k += 1
    return TypeIIPoint(v.rep, Fraction(k, m))


def missing_flanks(p: TypeIIPoint, gammas):
    """Special directions of p with no vertex of gammas in them.

    Returns [(direction, nearest flank vertex)]; empty means flanked.
    """
    out = []
    others = [q for q in gammas if q != p]
    for v, _mult in special_directions(p):
        if not any(point_in_direction(v, q) for q in others):
            out.append((v, flank_in_direction(p, v)))
    return out


def is_flanked(p: TypeIIPoint, gammas) -> bool:
    return not missing_flanks(p, gammas)


# -- smoothness ----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    witness: TypeIIPoint
    message: str

    def __str__(self):
        return f"{self.kind} at {self.witness}: {self.message}"


@dataclass(frozen=True)
class SmoothnessReport:
    smooth: bool
    violations: tuple

    def __bool__(self):
        return self.smooth

    def __str__(self):
        if self.smooth:
            return "smooth"
        return "not smooth: " + "; ".join(str(v) for v in self.violations)


def is_smooth(gammas) -> SmoothnessReport:
    """Decide smoothness, reporting every violation with a witness point.

    Checks that all junctions are present (complement components are
    disks or annuli), that no annulus between adjacent vertices contains
    a point of level <= max of the endpoint levels, and that every
    special direction of every vertex meets the set.
    """
    pts = list(VertexSet(gammas))
    if not pts:
        raise ValueError("smoothness of an empty set")
    violations = []
    pset = set(pts)
    junction_gaps = {}
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            j = join(a, b)
            if j in pset or leq(a, b) or leq(b, a) or not _sees(pts, a, b):
                continue
            junction_gaps.setdefault(j, (a, b))
    for j, (a, b) in junction_gaps.items():
        violations.append(
            Violation(
                "missing-junction",
                j,
                f"component between {a} and {b} is not a disk or annulus",
            )
        )
    for outer, inner in _adjacent_pairs(pts):
        cap = max(g_point(outer), g_point(inner))
        inside = segment_lattice_points(outer, inner, cap)
        if inside:
            witness = min(inside, key=lambda p: (g_point(p), p.t))
            violations.append(
                Violation(
                    "interior-vertex",
                    witness,
                    f"annulus from {outer} to {inner} contains a point of "
                    f"level {g_point(witness)} <= {cap}",
                )
            )
    for p in pts:
        for v, flank in missing_flanks(p, pts):
            where = "at infinity" if v.at_infinity else f"towards {v.rep}"
            violations.append(
                Violation(
                    "missing-flank",
                    flank,
                    f"special direction {where} of {p} sees no vertex",
                )
            )
    violations.sort(key=lambda v: (v.witness.sort_key(), v.kind))
    return SmoothnessReport(not violations, tuple(violations))


def _adjacent_pairs(pts):
    """Comparable pairs with no third vertex strictly between them."""
    out = []
    for a in pts:
        parent = None
        for q in pts:
            if q == a or not leq(a, q):
                continue
            if parent is None or q.t > parent.t:
                parent = q
        if parent is not None:
            out.append((parent, a))
    return out


def smooth_n_convex_hull(points, n: int, max_rounds: int = 64) -> VertexSet:
    """Close under joins, level-n fill, and flank completion until stable.

    The result contains the input, is level-n convex, and passes
    is_smooth; the round cap guards against internal errors only, since
    each round only adds vertices at bounded levels in a bounded region.
    """
    current = VertexSet(points)
    trace = []
    for _ in range(max_rounds):
        filled = n_convex_hull(current, n)
        extra = []
        for p in filled:
            for _v, flank in missing_flanks(p, filled):
                extra.append(flank)
        new = filled.union(extra)
        trace.append(len(new))
        if new == current:
            return current
        current = new
    raise RoundCapExceeded(
        f"smooth hull did not stabilise within {max_rounds} rounds", trace
    )


# -- complement domains --------------------------------------------------


@dataclass(frozen=True)
class GammaDomain:
    """A connected component of the complement of a vertex set.

    kind "disk": one boundary vertex; ``direction`` is the tangent
    direction of the component there (None in symbolic enumeration,
    standing for every direction at the vertex not leading back into the
    set).  kind "annulus": two comparable boundary vertices, stored
    (outer, inner).  kind "component": three or more boundary vertices,
    possible only when a junction is missing.
    """

    kind: str
    boundary: tuple
    direction: Optional[Direction] = None

    def __str__(self):
        if self.kind == "disk":
            d = "*" if self.direction is None else str(self.direction)
            return f"disk(at {self.boundary[0]}, {d})"
        inner = ", ".join(str(b) for b in self.boundary)
        return f"{self.kind}({inner})"


def visible_boundary(gammas, p: TypeIIPoint):
    """Vertices reachable from p without crossing another vertex."""
    pts = [q for q in gammas if q != p]
    out = []
    for q in pts:
        jq = join(p, q)
        blocked = False
        for r in pts:
            if r == q:
                continue
            if (leq(p, r) and leq(r, jq)) or (leq(q, r) and leq(r, jq)):
                blocked = True
                break
        if not blocked:
            out.append(q)
    return sorted(out, key=TypeIIPoint.sort_key)


def locate(gammas, p: TypeIIPoint) -> Optional[GammaDomain]:
    """The complement component containing p; None when p is a vertex."""
    pts = list(VertexSet(gammas))
    if p in pts:
        return None
    bdry = visible_boundary(pts, p)
    if not bdry:
        raise ValueError("cannot locate a point against an empty vertex set")
    if len(bdry) == 1:
        g = bdry[0]
        return GammaDomain("disk", (g,), direction_at(g, p))
    if len(bdry) == 2:
        a, b = bdry
        if leq(b, a):
            return GammaDomain("annulus", (a, b))
        if leq(a, b):
            return GammaDomain("annulus", (b, a))
    return GammaDomain("component", tuple(bdry))


def enumerate_domains(gammas):
    """All complement components, disks kept symbolic.

    Annuli (and junction-free multi-boundary components) are listed
    explicitly; every vertex also contributes one symbolic disk entry
    standing for all directions at it that do not lead to another
    vertex.  locate refines a symbolic disk to a concrete direction.
    """
    pts = list(VertexSet(gammas))
    doms = []
    # components between vertices = maximal cliques of the visibility graph
    pairs = _visible_pairs(pts)
    comps = []
    assigned = set()
    for a, b in pairs:
        if (a, b) in assigned:
            continue
        comp = {a, b}
        for c in pts:
            if c in comp:
                continue
            if all(_sees(pts, c, q) for q in comp):
                comp.add(c)
        members = sorted(comp, key=TypeIIPoint.sort_key)
        for i, x in enumerate(members):
            for y in members[i + 1 :]:
                assigned.add((x, y))
        comps.append(members)
    for members in comps:
        if len(members) == 2:
            a, b = members
            if leq(b, a):
                doms.append(GammaDomain("annulus", (a, b)))
            elif leq(a, b):
                doms.append(GammaDomain("annulus", (b, a)))
            else:
                doms.append(GammaDomain("component", (a, b)))
        else:
            doms.append(GammaDomain("component", tuple(members)))
    for p in pts:
        doms.append(GammaDomain("disk", (p,), None))
    return doms


def _visible_pairs(pts):
    out = []
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            if _sees(pts, a, b):
                out.append((a, b))
    return out


def _sees(pts, a, b) -> bool:
    if a == b:
        return False
    j = join(a, b)
    for r in pts:
        if r == a or r == b:
            continue
        if (leq(a, r) and leq(r, j)) or (leq(b, r) and leq(r, j)):
            return False
    return True


def domain_contains(dom: GammaDomain, gammas, p: TypeIIPoint) -> bool:
    if dom.kind == "disk":
        if dom.direction is not None:
            return point_in_direction(dom.direction, p)
        loc = locate(gammas, p)
        return (
            loc is not None
            and loc.kind == "disk"
            and loc.boundary[0] == dom.boundary[0]
        )
    if dom.kind == "annulus":
        outer, inner = dom.boundary
        v = direction_at(outer, inner)
        return point_in_direction(v, p) and not leq(p, inner)
    loc = locate(gammas, p)
    return loc is not None and loc.kind == "component" and loc.boundary == dom.boundary


# -- dual graph ----------------------------------------------------------


def dual_graph(gammas):
    """Vertices with labels and one edge per pair of mutually visible
    vertices.  For a smooth set the edges are exactly the annuli and
    the graph is a tree; a component with three or more boundary
    vertices shows up as a clique.
    """
    pts = list(VertexSet(gammas))
    nodes = []
    for p in pts:
        nodes.append(
            (
                p,
                {
                    "a": str(p.center),
                    "t": str(p.t),
                    "m": m_point(p),
                    "g": g_point(p),
                    "cls": classify_point(p),
                },
            )
        )
    edges = _visible_pairs(pts)
    return nodes, edges


def dual_graph_dot(gammas) -> str:
    nodes, edges = dual_graph(gammas)
    idx = {p: f"v{i}" for i, (p, _) in enumerate(nodes)}
    lines = ["graph dual {"]
    for p, attrs in nodes:
        label = f"a={attrs['a']} t={attrs['t']} m={attrs['m']} g={attrs['g']}"
        lines.append(f'  {idx[p]} [label="{label}" cls="{attrs["cls"]}"];')
    for a, b in edges:
        lines.append(f"  {idx[a]} -- {idx[b]};")
    lines.append("}")
    return "\n".join(lines)


def is_tree(gammas) -> bool:
    nodes, edges = dual_graph(gammas)
    if len(edges) != len(nodes) - 1:
        return False
    parent = {p: p for p, _ in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    roots = {find(p) for p, _ in nodes}
    return len(roots) == 1
