"""Newton-polygon root expansion."""

import random
from fractions import Fraction as F

import pytest

from skewstab.errors import InsufficientPrecision
from skewstab.puiseux import INF, PuiseuxPoly
from skewstab.roots import (
    BranchDescriptor,
    newton_puiseux,
    poly_eval,
    rational_roots,
)


def P(*terms, precision=INF):
    return PuiseuxPoly(terms, precision)


ZERO = PuiseuxPoly.zero()
ONE = PuiseuxPoly.const(1)


def test_square_root_branches():
    # y^2 - x: two exact branches +-x^(1/2)
    roots, descs = newton_puiseux([P((F(1), F(-1))), ZERO, ONE])
    assert descs == []
    series = sorted((r.series.terms, r.multiplicity) for r in roots)
    assert series == [
        (((F(1, 2), F(-1)),), 1),
        (((F(1, 2), F(1)),), 1),
    ]
    assert all(r.series.precision is INF for r in roots)


def test_double_root_multiplicity():
    # (y - x)^2
    roots, descs = newton_puiseux([P((F(2), F(1))), P((F(1), F(-2))), ONE])
    assert descs == []
    assert len(roots) == 1
    assert roots[0].multiplicity == 2
    assert roots[0].series.terms == ((F(1), F(1)),)


def test_root_at_zero_with_order():
    # y^3 * (y - 1): root 0 with multiplicity 3, root 1
    roots, _ = newton_puiseux([ZERO, ZERO, ZERO, PuiseuxPoly.const(-1), ONE])
    by_mult = sorted((r.multiplicity, r.series.terms) for r in roots)
    assert by_mult == [(1, ((F(0), F(1)),)), (3, ())]


def test_irrational_residual_becomes_descriptor():
    # y^2 - 2: no rational branch
    roots, descs = newton_puiseux([PuiseuxPoly.const(-2), ZERO, ONE])
    assert roots == []
    assert len(descs) == 1
    assert descs[0].valuation == 0
    assert descs[0].degree == 2


def test_mixed_rational_and_descriptor():
    # y^6 - x^4: branches +-x^(2/3) rational, quartic residual leftover
    coeffs = [P((F(4), F(-1)))] + [ZERO] * 5 + [ONE]
    roots, descs = newton_puiseux(coeffs)
    expansions = sorted(r.series.terms for r in roots)
    assert expansions == [((F(2, 3), F(-1)),), ((F(2, 3), F(1)),)]
    assert len(descs) == 1
    assert descs[0].valuation == F(2, 3)
    assert descs[0].degree == 4
    # every root accounted for
    assert sum(r.multiplicity for r in roots) + sum(d.degree for d in descs) == 6


def test_nested_expansion():
    # (y - x - x^2)*(y + x) = y^2 - x^2*y - (x+x^2)*x ... build it honestly
    a = P((F(1), F(1)), (F(2), F(1)))
    b = P((F(1), F(-1)))
    coeffs = [a * b, -(a + b), ONE]
    roots, descs = newton_puiseux(coeffs)
    assert descs == []
    got = sorted(r.series.terms for r in roots)
    assert got == [((F(1), F(-1)),), ((F(1), F(1)), (F(2), F(1)))]


def test_truncated_coefficient_raises_when_it_matters():
    coeffs = [PuiseuxPoly.zero(precision=F(2)), ZERO, ONE]
    with pytest.raises(InsufficientPrecision):
        newton_puiseux(coeffs)


def test_roots_satisfy_equation_randomised():
    rng = random.Random(41)
    for _ in range(25):
        # build F as a product of known linear factors, then re-expand
        branches = []
        for _ in range(rng.randint(1, 3)):
            terms = []
            e = F(rng.randint(0, 2), rng.choice([1, 2]))
            for _ in range(rng.randint(1, 2)):
                c = rng.randint(-3, 3)
                if c:
                    terms.append((e, F(c)))
                e += F(rng.randint(1, 3), rng.choice([1, 2]))
            branches.append(PuiseuxPoly(terms))
        coeffs = [ONE]
        for br in branches:
            # multiply running polynomial by (y - br)
            new = [ZERO] * (len(coeffs) + 1)
            for i, c in enumerate(coeffs):
                new[i + 1] = new[i + 1] + c
                new[i] = new[i] - c * br
            coeffs = new
        roots, descs = newton_puiseux(coeffs, target_precision=F(12))
        assert descs == []
        assert sum(r.multiplicity for r in roots) == len(branches)
        for r in roots:
            residual = poly_eval(coeffs, r.series)
            assert (not residual.terms) or residual.val() >= F(12) - 1


def test_rational_roots_helper():
    # (2y - 1)(y + 3)(y^2 + 1)
    poly = [F(-3), F(5), F(-1), F(5), F(2)]
    roots, leftover = rational_roots(poly)
    assert sorted(roots) == [(F(-3), 1), (F(1, 2), 1)]
    assert leftover == 2
