"""Root expansion for polynomials in y with Puiseux-series coefficients.

The base field for coefficients is Q, so only branches whose expansions
stay rational are returned as explicit series.  Branches that would need
an algebraic extension (an irreducible residual factor with no rational
root) are reported as descriptors carrying the branch valuation and the
number of conjugate roots they stand for.  Together the two lists always
account for every root of the polynomial, which callers can and do check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InsufficientPrecision
from .puiseux import DEFAULT_PRECISION, INF, PuiseuxPoly, rat

_MAX_DEPTH = 400
_FACTOR_LIMIT = 10**12


@dataclass(frozen=True)
class PuiseuxRoot:
    series: PuiseuxPoly
    multiplicity: int


@dataclass(frozen=True)
class BranchDescriptor:
    """A packet of conjugate roots not representable over Q.

    ``prefix`` is the rational initial segment shared by the packet,
    ``valuation`` the exact valuation of (root - prefix), ``degree`` how
    many roots (with multiplicity) the packet contains.
    """

    prefix: PuiseuxPoly
    valuation: Fraction
    degree: int
    reason: str


def poly_eval(coeffs, value: PuiseuxPoly) -> PuiseuxPoly:
    """Evaluate sum coeffs[i] * value^i (Horner)."""
    acc = PuiseuxPoly.zero()
    for c in reversed(list(coeffs)):
        acc = acc * value + c
    return acc


def poly_derivative(coeffs):
    return [c.scale(i) for i, c in enumerate(coeffs)][1:]


def newton_puiseux(coeffs, target_precision=None):
    """All roots of sum coeffs[i]*y^i over Q-Puiseux series.

    Returns (roots, descriptors).  Roots carry the requested precision
    unless the expansion terminates exactly first.  Raises
    InsufficientPrecision when a coefficient's unknown tail could move
    the Newton polygon.
    """
    target = DEFAULT_PRECISION if target_precision is None else rat(target_precision)
    coeffs = [c for c in coeffs]
    while len(coeffs) > 1 and coeffs[-1].is_exact_zero:
        coeffs.pop()
    if len(coeffs) == 1 or all(not c.terms for c in coeffs):
        if any(not c.terms and c.precision is not INF for c in coeffs):
            raise InsufficientPrecision("polynomial not visibly nonzero")
        if len(coeffs) == 1:
            return [], []
        raise ValueError("zero polynomial has no well-defined roots")
    roots, descs = _expand(coeffs, target, 0)
    return roots, descs


def _expand(coeffs, target, depth):
    if depth > _MAX_DEPTH:
        raise InsufficientPrecision("root expansion exceeded depth budget")
    roots: list = []
    descs: list = []
    # order of vanishing at y = 0
    k = 0
    while k < len(coeffs):
        c = coeffs[k]
        if c.terms:
            break
        if c.precision is not INF:
            raise InsufficientPrecision(
                f"coefficient of y^{k} is O(x^{c.precision}): root order at 0 undecidable"
            )
        k += 1
    if k == len(coeffs):
        raise ValueError("zero polynomial")
    if k > 0:
        roots.append(PuiseuxRoot(PuiseuxPoly.zero(), k))
        coeffs = coeffs[k:]
    if len(coeffs) == 1:
        return roots, descs

    pts = []
    uncertain = []
    for i, c in enumerate(coeffs):
        if c.terms:
            pts.append((i, c.val()))
        elif c.precision is not INF:
            uncertain.append((i, c.precision))
    hull = _lower_hull(pts)
    _check_polygon_safe(hull, uncertain, depth)

    for (i1, v1), (i2, v2) in zip(hull, hull[1:]):
        mu = (v1 - v2) / (i2 - i1)
        if depth > 0 and mu <= 0:
            continue
        online = {
            i: c.leading_coeff()
            for i, c in enumerate(coeffs)
            if c.terms and i1 <= i <= i2 and c.val() == v1 - mu * (i - i1)
        }
        residual = [online.get(i, Fraction(0)) for i in range(i1, i2 + 1)]
        found, leftover = rational_roots(residual)
        if leftover:
            descs.append(
                BranchDescriptor(
                    prefix=PuiseuxPoly.zero(),
                    valuation=mu,
                    degree=leftover,
                    reason="residual factor has no rational root",
                )
            )
        for u0, mult in found:
            rem = target - mu
            if rem <= 0:
                roots.append(
                    PuiseuxRoot(PuiseuxPoly.zero(min(target, mu)), mult)
                )
                continue
            sub = _substitute(coeffs, mu, u0)
            sub_roots, sub_descs = _expand(sub, rem, depth + 1)
            for r in sub_roots:
                lifted = (PuiseuxPoly.const(u0) + r.series).shift(mu)
                roots.append(PuiseuxRoot(lifted, r.multiplicity))
            for d in sub_descs:
                lifted_prefix = (PuiseuxPoly.const(u0) + d.prefix).shift(mu)
                descs.append(
                    BranchDescriptor(lifted_prefix, mu + d.valuation, d.degree, d.reason)
                )
    return roots, descs


def _lower_hull(pts):
    pts = sorted(pts)
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) <= (p[0] - x1) * (y2 - y1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _check_polygon_safe(hull, uncertain, depth):
    if not uncertain:
        return
    lo = hull[0][0]
    hi = hull[-1][0]
    for i, bound in uncertain:
        if i < lo:
            # handled by the order-at-zero scan; unreachable here
            raise InsufficientPrecision("unknown low-order coefficient")
        if i > hi:
            # a hidden high coefficient only adds slopes <= (v(hi)-bound)/(i-hi);
            # harmless at depth>0 when those are all nonpositive
            if depth > 0 and bound >= hull[-1][1]:
                continue
            raise InsufficientPrecision(
                f"coefficient of y^{i} is undetermined and could extend the polygon"
            )
        hv = _hull_value(hull, i)
        if bound <= hv:
            raise InsufficientPrecision(
                f"coefficient of y^{i} is O(x^{bound}) but the polygon needs it below x^{hv}"
            )


def _hull_value(hull, i):
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= i <= x2:
            return y1 + (y2 - y1) * Fraction(i - x1, x2 - x1)
    return hull[-1][1]


def _substitute(coeffs, mu, u0):
    """Coefficients of F(x, x^mu * (u0 + z)) as a polynomial in z."""
    d = len(coeffs) - 1
    shifted = [c.shift(mu * i) for i, c in enumerate(coeffs)]
    out = [PuiseuxPoly.zero() for _ in range(d + 1)]
    for j, cj in enumerate(shifted):
        if not cj.terms and cj.is_exact_zero:
            continue
        b = Fraction(1)
        for i in range(j, -1, -1):
            # binomial(j, i) * u0^(j-i)
            out[i] = out[i] + cj.scale(b)
            if i > 0:
                b = b * i / (j - i + 1) * u0
    return out


def rational_roots(poly):
    """Rational roots with multiplicity of a Q-coefficient polynomial.

    Returns (roots, leftover_degree).  leftover_degree counts roots of
    the remaining factor that has no rational root (or whose integer
    coefficients are too large to factor here).
    """
    coeffs = [rat(c) for c in poly]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        raise ValueError("zero polynomial")
    zero_mult = 0
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
        zero_mult += 1
    roots = []
    if zero_mult:
        roots.append((Fraction(0), zero_mult))
    while len(coeffs) > 1:
        r = _one_rational_root(coeffs)
        if r is None:
            break
        mult = 0
        while True:
            quot, rem = _deflate(coeffs, r)
            if rem != 0:
                break
            coeffs = quot
            mult += 1
        roots.append((r, mult))
    return roots, len(coeffs) - 1


def _one_rational_root(coeffs):
    n = len(coeffs) - 1
    if n == 1:
        return -coeffs[0] / coeffs[1]
    if n == 2:
        a, b, c = coeffs[2], coeffs[1], coeffs[0]
        disc = b * b - 4 * a * c
        if disc < 0:
            return None
        num = _sqrt_fraction(disc)
        if num is None:
            return None
        return (-b + num) / (2 * a)
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in coeffs]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    ints = [c // g for c in ints]
    lead, const = ints[-1], ints[0]
    if abs(lead) > _FACTOR_LIMIT or abs(const) > _FACTOR_LIMIT:
        return None
    for p in _divisors(abs(const)):
        for q in _divisors(abs(lead)):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if _poly_value(coeffs, cand) == 0:
                    return cand
    return None


def _sqrt_fraction(q: Fraction):
    if q < 0:
        return None
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def _poly_value(coeffs, v: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * v + c
    return acc


def _deflate(coeffs, r: Fraction):
    # synthetic division by (y - r): coeffs ascending
    out = [Fraction(0)] * (len(coeffs) - 1)
    carry = Fraction(0)
    for i in range(len(coeffs) - 1, 0, -1):
        carry = coeffs[i] + carry * r
        out[i - 1] = carry
    rem = coeffs[0] + carry * r
    return out, rem


def _divisors(n: int):
    if n == 0:
        return [1]
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return sorted(out)
