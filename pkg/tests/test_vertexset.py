import random
from fractions import Fraction as F

import pytest

from skewstab.berkovich import TypeIIPoint, g_point, gauss_point
from skewstab.puiseux import PuiseuxPoly, Rat
from skewstab.vertexset import (
    GammaDomain,
    VertexSet,
    domain_contains,
    dual_graph,
    dual_graph_dot,
    enumerate_domains,
    hull,
    is_flanked,
    is_smooth,
    is_tree,
    locate,
    n_convex_hull,
    segment_lattice_points,
    smooth_n_convex_hull,
    tree_lattice_points,
)

X = PuiseuxPoly.monomial(1, 1)
ZERO = PuiseuxPoly.zero()
ONE = PuiseuxPoly.const(1)
ROOT_X = PuiseuxPoly.monomial(1, F(1, 2))


def zeta(center, t):
    return TypeIIPoint(center, F(t))


GAUSS = gauss_point()


class TestHull:
    def test_collinear_path(self):
        h = hull([GAUSS, zeta(ZERO, 1), zeta(X, 2)])
        assert h.top == GAUSS
        assert h.nodes == (GAUSS, zeta(ZERO, 1), zeta(X, 2))
        assert h.edges == (
            (GAUSS, zeta(ZERO, 1)),
            (zeta(ZERO, 1), zeta(X, 2)),
        )

    def test_singleton(self):
        h = hull([zeta(X, 2)])
        assert h.nodes == (zeta(X, 2),)
        assert h.edges == ()

    def test_incomparable_pair_gets_join(self):
        h = hull([zeta(ZERO, 1), zeta(ONE, 1)])
        assert GAUSS in h.nodes
        assert h.top == GAUSS
        assert len(h.edges) == 2
        assert h.edge_length(GAUSS, zeta(ZERO, 1)) == 1


class TestNConvexHull:
    def test_level_one_fill(self):
        out = n_convex_hull([GAUSS, zeta(ZERO, 2)], 1)
        assert out == VertexSet([GAUSS, zeta(ZERO, 1), zeta(ZERO, 2)])

    def test_level_two_fill(self):
        out = n_convex_hull([GAUSS, zeta(ZERO, 1)], 2)
        assert out == VertexSet([GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)])

    def test_level_four_farey_fill(self):
        out = n_convex_hull([GAUSS, zeta(ZERO, 1)], 4)
        expected = [GAUSS, zeta(ZERO, 1)] + [
            zeta(ZERO, s) for s in (F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(3, 4))
        ]
        assert out == VertexSet(expected)

    def test_ramified_ray_respects_centre_multiplicity(self):
        p = zeta(ROOT_X, F(3, 4))
        out = n_convex_hull([GAUSS, p], 4)
        # below 1/2 the centre truncates to 0 (m=1); above it m=2 caps the
        # admissible denominators at {1,2,4}, so 2/3 is excluded
        expected = [
            GAUSS,
            zeta(ZERO, F(1, 4)),
            zeta(ZERO, F(1, 3)),
            zeta(ZERO, F(1, 2)),
            p,
        ]
        assert out == VertexSet(expected)

    def test_idempotent(self):
        once = n_convex_hull([GAUSS, zeta(ZERO, 2)], 3)
        assert n_convex_hull(once, 3) == once

    def test_precondition(self):
        with pytest.raises(ValueError):
            n_convex_hull([zeta(ZERO, F(1, 2))], 1)


class TestFlanked:
    def test_gauss_always_flanked(self):
        assert is_flanked(GAUSS, [GAUSS])
        assert is_flanked(GAUSS, [GAUSS, zeta(ZERO, 5)])

    def test_satellite_flanked_by_both_endpoints(self):
        gammas = [GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)]
        assert is_flanked(zeta(ZERO, F(1, 2)), gammas)

    def test_satellite_missing_inner_endpoint(self):
        assert not is_flanked(zeta(ZERO, F(1, 2)), [GAUSS, zeta(ZERO, F(1, 2))])


class TestSmoothHull:
    def test_satellite_singleton(self):
        out = smooth_n_convex_hull([zeta(ZERO, F(1, 2))], 2)
        assert out == VertexSet([GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)])

    def test_gauss_fixed(self):
        assert smooth_n_convex_hull([GAUSS], 1) == VertexSet([GAUSS])

    def test_ramified_satellite(self):
        p = zeta(ROOT_X, F(3, 4))
        out = smooth_n_convex_hull([p], 4)
        expected = [
            GAUSS,
            zeta(ZERO, F(1, 4)),
            zeta(ZERO, F(1, 3)),
            zeta(ZERO, F(1, 2)),
            zeta(ZERO, F(2, 3)),
            zeta(ZERO, F(3, 4)),
            zeta(ZERO, 1),
            p,
            zeta(ROOT_X, 1),
        ]
        assert out == VertexSet(expected)
        assert zeta(ZERO, F(1, 2)) in out and zeta(ROOT_X, 1) in out
        assert is_smooth(out).smooth


class TestIsSmooth:
    def test_adjacent_integral_pair(self):
        assert is_smooth([GAUSS, zeta(ZERO, 1)]).smooth

    def test_gap_names_interior_vertex(self):
        report = is_smooth([GAUSS, zeta(ZERO, 2)])
        assert not report.smooth
        assert len(report.violations) == 1
        v = report.violations[0]
        assert v.kind == "interior-vertex"
        assert v.witness == zeta(ZERO, 1)

    def test_smooth_path(self):
        assert is_smooth([GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)]).smooth

    def test_missing_flank_reported(self):
        report = is_smooth([GAUSS, zeta(ZERO, F(1, 2))])
        assert not report.smooth
        kinds = {v.kind for v in report.violations}
        assert kinds == {"missing-flank"}
        assert report.violations[0].witness == zeta(ZERO, 1)

    def test_missing_junction_reported(self):
        report = is_smooth([zeta(ZERO, 1), zeta(ONE, 1)])
        assert not report.smooth
        assert any(
            v.kind == "missing-junction" and v.witness == GAUSS
            for v in report.violations
        )

    def test_farey_neighbours_clean_but_skips_are_not(self):
        assert is_smooth(
            [GAUSS, zeta(ZERO, F(1, 3)), zeta(ZERO, F(1, 2)), zeta(ZERO, 1)]
        ).smooth
        report = is_smooth(
            [GAUSS, zeta(ZERO, F(1, 4)), zeta(ZERO, F(1, 2)), zeta(ZERO, 1)]
        )
        assert not report.smooth
        assert any(
            v.kind == "interior-vertex" and v.witness == zeta(ZERO, F(1, 3))
            for v in report.violations
        )


class TestDomains:
    def test_locate_disk_at_gauss(self):
        dom = locate([GAUSS], zeta(ZERO, 1))
        assert dom.kind == "disk"
        assert dom.boundary == (GAUSS,)
        assert not dom.direction.at_infinity
        assert dom.direction.rep.is_exact_zero

    def test_locate_annulus(self):
        dom = locate([GAUSS, zeta(ZERO, 1)], zeta(ZERO, F(1, 2)))
        assert dom.kind == "annulus"
        assert dom.boundary == (GAUSS, zeta(ZERO, 1))

    def test_locate_vertex(self):
        assert locate([GAUSS, zeta(ZERO, 1)], GAUSS) is None

    def test_hanging_branch_is_a_disk(self):
        gammas = [GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)]
        dom = locate(gammas, zeta(ROOT_X, F(3, 4)))
        assert dom.kind == "disk"
        assert dom.boundary == (zeta(ZERO, F(1, 2)),)

    def test_point_hanging_inside_annulus(self):
        gammas = [GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)]
        probe = zeta(PuiseuxPoly.monomial(1, F(3, 4)), F(7, 8))
        dom = locate(gammas, probe)
        assert dom.kind == "annulus"
        assert dom.boundary == (zeta(ZERO, F(1, 2)), zeta(ZERO, 1))

    def test_enumeration_partitions(self):
        gammas = [GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)]
        doms = enumerate_domains(gammas)
        annuli = [d for d in doms if d.kind == "annulus"]
        disks = [d for d in doms if d.kind == "disk"]
        assert len(annuli) == 2 and len(disks) == 3
        probes = [
            zeta(ZERO, F(1, 4)),
            zeta(ZERO, F(3, 4)),
            zeta(ZERO, 2),
            zeta(ONE, 1),
            zeta(ROOT_X, F(3, 4)),
            zeta(X, F(3, 2)),
        ]
        for p in probes:
            hits = [d for d in doms if domain_contains(d, gammas, p)]
            assert len(hits) == 1, f"{p} hit {len(hits)} domains"
        for g in gammas:
            assert not any(domain_contains(d, gammas, g) for d in doms)


class TestDualGraph:
    def test_single_edge(self):
        nodes, edges = dual_graph([GAUSS, zeta(ZERO, 1)])
        assert len(nodes) == 2 and len(edges) == 1

    def test_smooth_hull_path(self):
        out = smooth_n_convex_hull([zeta(ZERO, F(1, 2))], 2)
        nodes, edges = dual_graph(out)
        assert len(nodes) == 3 and len(edges) == 2
        assert is_tree(out)

    def test_singleton(self):
        nodes, edges = dual_graph([GAUSS])
        assert len(nodes) == 1 and edges == []

    def test_dot_output_frozen(self):
        out = smooth_n_convex_hull([zeta(ZERO, F(1, 2))], 2)
        dot = dual_graph_dot(out)
        assert dot == "\n".join(
            [
                "graph dual {",
                '  v0 [label="a=0 t=0 m=1 g=1" cls="integral"];',
                '  v1 [label="a=0 t=1/2 m=1 g=2" cls="satellite"];',
                '  v2 [label="a=0 t=1 m=1 g=1" cls="integral"];',
                "  v0 -- v1;",
                "  v1 -- v2;",
                "}",
            ]
        )

    def test_missing_junction_clique(self):
        two = PuiseuxPoly.const(2)
        gammas = [zeta(ZERO, 1), zeta(ONE, 1), zeta(two, 1)]
        nodes, edges = dual_graph(gammas)
        assert len(edges) == 3
        assert not is_tree(gammas)
        doms = enumerate_domains(gammas)
        comps = [d for d in doms if d.kind == "component"]
        assert len(comps) == 1 and len(comps[0].boundary) == 3


def _random_vertex(rng):
    centers = [
        ZERO,
        X,
        ONE,
        ROOT_X,
        X + PuiseuxPoly.monomial(1, F(3, 2)),
        PuiseuxPoly.monomial(1, F(1, 3)),
    ]
    while True:
        c = rng.choice(centers)
        q = rng.choice([1, 2, 3, 4])
        t = F(rng.randint(0, 2 * q), q)
        p = TypeIIPoint(c, t)
        if g_point(p) <= 4:
            return p


class TestJoinClosureAgainstReference:
    """The sweep-based closure must agree with plain pairwise joining."""

    def test_matches_pairwise_closure(self):
        from skewstab.vertexset import _join_closure, _join_closure_by_pairs

        rng = random.Random(97)
        for case in range(200):
            pts = [_random_vertex(rng) for _ in range(rng.randint(1, 7))]
            fast = _join_closure(pts)
            slow = _join_closure_by_pairs(pts)
            assert fast == slow, f"case {case}: {sorted(map(str, fast))}"

    def test_matches_on_shared_rays(self):
        from skewstab.vertexset import _join_closure, _join_closure_by_pairs

        # stacked points on few rays exercise the equal-centre merges
        rng = random.Random(98)
        centers = [ZERO, X, X + PuiseuxPoly.monomial(1, F(3, 2))]
        for case in range(100):
            pts = [
                TypeIIPoint(rng.choice(centers), F(rng.randint(-4, 8), 2))
                for _ in range(rng.randint(2, 8))
            ]
            assert _join_closure(pts) == _join_closure_by_pairs(pts), f"case {case}"


class TestSmoothHullProperty:
    def test_outputs_pass_is_smooth(self):
        rng = random.Random(20260815)
        for case in range(40):
            gammas = [_random_vertex(rng) for _ in range(rng.randint(1, 4))]
            n = max(g_point(p) for p in gammas)
            out = smooth_n_convex_hull(gammas, n)
            for p in gammas:
                assert p in out
            report = is_smooth(out)
            assert report.smooth, f"case {case}: {report}"
            assert is_tree(out) or len(out) == 1
            if case < 10:
                assert smooth_n_convex_hull(out, n) == out
                filled = n_convex_hull(out, n)
                assert filled == out

    def test_lattice_points_on_tree(self):
        pts = tree_lattice_points([GAUSS, zeta(ZERO, 1)], 2)
        assert pts == VertexSet([GAUSS, zeta(ZERO, F(1, 2)), zeta(ZERO, 1)])
        ends = segment_lattice_points(GAUSS, zeta(ZERO, 1), 2, closed=True)
        assert [p.t for p in ends] == [0, F(1, 2), 1]
