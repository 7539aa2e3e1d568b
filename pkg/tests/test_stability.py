from fractions import Fraction as F

import pytest

from mapdefs import ONE, ZERO, thm6_map, square_map, xy2_map
from skewstab.berkovich import (
    TypeIIPoint,
    direction_to_class,
    gauss_point,
    leq,
)
from skewstab.errors import NotApplicable, RoundCapExceeded
from skewstab.puiseux import PuiseuxPoly, as_series
from skewstab.skew import BaseGerm, Chain, SkewLocal, pushforward
from skewstab.stability import (
    AttractingCycleCertificate,
    DESTABILISING,
    GoodReductionInvariance,
    INCONCLUSIVE,
    JDomain,
    PersistentFDiskRegistry,
    RegistryDisk,
    STABLE,
    StabilizationConfig,
    _Analyzer,
    classify_domain,
    destabilising_points,
    is_analytically_stable,
    minimal_stabilisation,
    stabilize_smooth,
    wandering_julia_report,
)
from skewstab.skew import single_chain
from skewstab.vertexset import GammaDomain, VertexSet, is_smooth, locate


def zp(c, t):
    return TypeIIPoint(as_series(c), F(t))


def drift_square_map():
    # y^2 scaled by the unit 1 + x^(1/2); good reduction, reduced map y^2,
    # but exact orbits pick up ever-longer centre expansions
    half = PuiseuxPoly.monomial(1, F(1, 2))
    return SkewLocal(BaseGerm(PuiseuxPoly.monomial(1, 1)), [ZERO, ZERO, ONE + half], [ONE], "drift")


class TestConfig:
    def test_defaults(self):
        cfg = StabilizationConfig()
        assert cfg.horizon == 64 and cfg.max_rounds == 32

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            StabilizationConfig(horizon=0)
        with pytest.raises(ValueError):
            StabilizationConfig(m0=-1)


class TestDestabilising:
    def test_fold_map_names_the_deep_vertex(self):
        gam = [gauss_point(), zp(0, 1)]
        witnesses, unresolved, classes = destabilising_points(gam, thm6_map())
        assert len(witnesses) == 1 and not unresolved
        w = witnesses[0]
        assert w.point == zp(0, 1)
        assert w.image == zp(0, F(1, 2))
        assert w.domain.kind == "annulus"
        assert isinstance(w.evidence, JDomain)

    def test_witness_replays_by_pushforward(self):
        gam = [gauss_point(), zp(0, 1)]
        witnesses, _, _ = destabilising_points(gam, thm6_map())
        ev = witnesses[0].evidence
        assert ev.witness == zp(0, F(2, 3))
        assert ev.steps == 1
        assert ev.path[-1] == (0, zp(0, 1))
        # the claim is checkable with nothing but the pushforward
        assert pushforward(thm6_map(), ev.witness) == zp(0, 1)

    def test_gauss_alone_is_stable(self):
        report = is_analytically_stable([gauss_point()], thm6_map())
        assert report.verdict == STABLE
        assert report.stable

    def test_verdict_and_surface_text(self):
        gam = [gauss_point(), zp(0, 1)]
        report = is_analytically_stable(gam, thm6_map())
        assert report.verdict == DESTABILISING
        assert not report.stable
        out = report.structured()
        assert "verdict: DestabilisingFound" in out
        assert "witness[0].point: zeta(0, 1)" in out
        assert "witness[0].replay: start=zeta(0, 2/3)" in out
        assert "blowing up along this orbit" in report.witnesses[0].surface

    def test_superattracting_base_is_noted(self):
        report = is_analytically_stable([gauss_point()], thm6_map())
        assert any("hypothesis" in n for n in report.notes)


class TestClassify:
    def test_pole_ray_gives_exact_witness(self):
        b = zp(0, 1)
        dom = GammaDomain("disk", (b,), direction_to_class(b, as_series(0)))
        cls = classify_domain(dom, [gauss_point(), zp(0, 1)], thm6_map())
        assert cls.kind == "J"
        assert cls.witness == zp(0, F(4, 3))
        assert pushforward(thm6_map(), cls.witness) == gauss_point()

    def test_probe_free_annulus_stays_unknown(self):
        gam = [gauss_point(), zp(0, F(7, 8)), zp(0, 1)]
        dom = locate(VertexSet(gam), zp(0, F(15, 16)))
        assert dom.kind == "annulus"
        cls = classify_domain(dom, gam, thm6_map())
        assert cls.kind == "unknown"

    def test_invariant_gauss_disk_is_f_certified(self):
        gam = [gauss_point()]
        dom = locate(VertexSet(gam), zp(0, 1))
        cls = classify_domain(dom, gam, xy2_map())
        assert cls.kind == "F"
        assert isinstance(cls.reason, AttractingCycleCertificate)

    def test_j_classification_survives_enlargement(self):
        an = _Analyzer(
            single_chain(thm6_map()),
            [gauss_point(), zp(0, 1)],
            StabilizationConfig(),
            None,
        )
        dom = locate(an.gammas[0], zp(0, F(1, 2)))
        first = an.classify(0, dom)
        assert first.kind == "J"
        an.extend({0: {zp(0, F(1, 2))}})
        assert an.classify(0, dom) is first

    def test_good_reduction_residue_cycle(self):
        an = _Analyzer(
            single_chain(square_map()),
            [gauss_point(), zp(0, 1)],
            StabilizationConfig(),
            None,
        )
        b = gauss_point()
        dom = GammaDomain("disk", (b,), direction_to_class(b, as_series(1)))
        cert = an._good_reduction_f(0, dom)
        assert cert is not None and cert.kind == "F"
        assert isinstance(cert.reason, GoodReductionInvariance)
        assert cert.reason.residues == ((0, F(1)),)


class TestMinimalStabilisation:
    def test_fold_map_never_closes(self):
        gam = [gauss_point(), zp(0, 1)]
        with pytest.raises(RoundCapExceeded) as exc:
            minimal_stabilisation(gam, thm6_map())
        trace = exc.value.trace
        assert trace[0].point == zp(0, 1)
        assert [s.image.t for s in trace[:4]] == [F(1, 2), F(3, 4), F(7, 8), F(11, 16)]
        assert all(s.image_fibre == 0 for s in trace)

    def test_small_round_cap_respected(self):
        gam = [gauss_point(), zp(0, 1)]
        cfg = StabilizationConfig(max_rounds=2)
        with pytest.raises(RoundCapExceeded) as exc:
            minimal_stabilisation(gam, thm6_map(), cfg)
        assert max(s.round for s in exc.value.trace) == 2

    def test_good_reduction_family_closes_in_one_round(self):
        gam = [gauss_point(), zp(-1, 1), zp(1, 2)]
        res, report, trace = minimal_stabilisation(gam, square_map())
        assert report.verdict == STABLE
        assert [s.image for s in trace] == [zp(1, 1)]
        assert zp(1, 1) in res

    def test_already_closed_family_adds_nothing(self):
        gam = [gauss_point(), zp(-1, 1)]
        res, report, trace = minimal_stabilisation(gam, square_map())
        assert report.verdict == STABLE
        assert trace == []
        assert set(res) == set(gam)


class TestRegistry:
    def test_audit_flags_every_axiom_breach(self):
        reg = PersistentFDiskRegistry()
        bad = RegistryDisk(0, zp(0, 1), direction_to_class(zp(0, 1), as_series(0)), 1)
        reg.add(bad)
        fails = reg.audit(
            {0: VertexSet([gauss_point(), zp(0, 2)])}, single_chain(square_map())
        )
        assert any("boundary not a vertex" in f for f in fails)
        assert any("lies inside" in f for f in fails)

    def test_insertion_only_and_dedup(self):
        reg = PersistentFDiskRegistry()
        d = RegistryDisk(0, zp(0, 1), direction_to_class(zp(0, 1), as_series(0)), 1)
        reg.add(d)
        reg.add(d)
        assert len(reg) == 1
        assert reg.find(0, zp(0, 3)) is d
        assert reg.find(0, zp(1, 3)) is None


class TestStabilizeSmooth:
    def test_xy2_reaches_a_certified_family(self):
        res, report, registry, trace = stabilize_smooth([gauss_point()], xy2_map())
        assert report.verdict == STABLE
        assert len(registry) == 2
        assert all(not t["registry_audit"] for t in trace)
        # independent checkers agree
        assert is_smooth(res).smooth
        fresh = is_analytically_stable(res, xy2_map(), registry=registry)
        assert fresh.verdict == STABLE

    def test_xy2_traps_both_ends_of_the_ray(self):
        _, _, registry, _ = stabilize_smooth([gauss_point()], xy2_map())
        kinds = {d.direction.at_infinity for d in registry}
        assert kinds == {True, False}

    def test_fold_map_stalls_honestly(self):
        cfg = StabilizationConfig(horizon=12, max_rounds=3, max_level=4)
        try:
            _, report, _, trace = stabilize_smooth([gauss_point()], thm6_map(), cfg)
        except RoundCapExceeded:
            return
        assert report.verdict in (DESTABILISING, INCONCLUSIVE)
        assert any("no resolution rule" in n for n in report.notes)

    def test_residue_cycle_rule_fires(self):
        cfg = StabilizationConfig(horizon=16, max_rounds=4, max_level=8)
        res, report, registry, trace = stabilize_smooth(
            [gauss_point(), zp(-1, 1)], drift_square_map(), cfg
        )
        assert report.verdict == STABLE
        rules = {r for t in trace for _, _, r in t["resolutions"]}
        assert "residue-cycle" in rules
        assert any(
            d.boundary == gauss_point() and not d.direction.at_infinity
            for d in registry
        )

    def test_two_fibre_cycle_chain(self):
        chain = Chain([square_map(), xy2_map()], period=2, tail=0)
        g = gauss_point()
        res, report, registry, trace = stabilize_smooth(
            {0: [g, zp(0, 1)], 1: [g]}, chain
        )
        assert report.verdict == STABLE
        assert {d.fibre for d in registry} == {0, 1}
        assert all(not t["registry_audit"] for t in trace)
        assert isinstance(res, dict) and set(res) == {0, 1}

    def test_tail_chain_image_disk_is_trapped(self):
        chain = Chain([square_map(), square_map()], period=1, tail=1)
        gam = {0: [gauss_point(), zp(-1, 1)], 1: [gauss_point()]}
        res, report, trace = minimal_stabilisation(gam, chain)
        assert report.verdict == STABLE
        assert trace == []


class TestWanderingJulia:
    def test_fold_map_certificate(self):
        cert = wandering_julia_report(thm6_map(), zp(0, 1))
        assert cert is not None
        assert cert.interval == (F(0), F(1))
        assert cert.fixed_point.t == F(4, 5)
        assert abs(cert.fixed_point.slope) == F(3, 2)
        assert cert.fixed_point.repelling
        assert cert.orbit.kind == "infinite-by-denominator-growth"
        assert cert.orbit.start == 1
        assert "repelling fixed parameter" in str(cert)

    def test_escaping_orbits_give_no_certificate(self):
        assert wandering_julia_report(square_map(), zp(0, 1)) is None
        assert wandering_julia_report(xy2_map(), zp(0, 1)) is None

    def test_contracting_model_gives_no_certificate(self):
        # the ray exists but carries no repelling anchor
        assert wandering_julia_report(thm6_map(), TypeIIPoint(as_series(1), F(1))) is None

    def test_unmodelled_ray_raises(self):
        # images of the centre-1 ray leave the ray entirely
        with pytest.raises(NotApplicable):
            wandering_julia_report(xy2_map(), TypeIIPoint(as_series(1), F(1)))


class TestAnalyzerInternals:
    def test_probe_ordering_prefers_simple_denominators(self):
        an = _Analyzer(
            single_chain(square_map()), [gauss_point()], StabilizationConfig(), None
        )
        ts = an._probe_ts(F(0), F(1))
        assert ts[0] == F(1, 2)
        assert ts == sorted(ts, key=lambda t: (t.denominator, t))

    def test_probe_free_interval(self):
        an = _Analyzer(
            single_chain(square_map()), [gauss_point()], StabilizationConfig(), None
        )
        assert an._probe_ts(F(7, 8), F(1)) == []

    def test_missing_fibre_rejected(self):
        chain = Chain([square_map(), square_map()], period=2, tail=0)
        with pytest.raises(ValueError):
            _Analyzer(chain, {0: [gauss_point()]}, StabilizationConfig(), None)
