"""Local models of rational skew products and their action on disk points.

A local model is a pair ``(phi1, phi2)``: a base germ ``phi1`` fixing
x = 0 with ``phi1(x) = lam*x^n*(1 + h.o.t.)``, and a fibre map ``phi2``
given as a ratio of two polynomials in y with Puiseux-series
coefficients.  The model acts on disk points of the fibre: the image
seminorm of ``zeta(a, t)`` evaluates ``f`` at ``|phi2-pullback of f|^(1/n)``.

The pushforward below computes that image point exactly.  Writing
``P(tau) = num(a + tau)`` and ``Q(tau) = den(a + tau)``, the image radius
exponent is ``(1/n) * max_w [vG(P - w*Q) - vG(Q)]`` where ``vG`` is the
Gauss valuation at level t and the maximum runs over the coefficient
ratios ``w = P_i/Q_i``: an ultrametric argument shows some such ratio
attains the global maximum, and the maximiser is the new centre (up to
the usual truncation) after transport through the inverse of the base
germ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .berkovich import Direction, TypeIIPoint, direction_at
from .errors import (
    DegenerateImage,
    InsufficientPrecision,
    ProbeDivergence,
    ValidationFailure,
)
from .puiseux import (
    DEFAULT_PRECISION,
    INF,
    PuiseuxPoly,
    as_series,
    rat,
    reversion,
)
from .roots import newton_puiseux, poly_derivative, poly_eval

ZERO = PuiseuxPoly.zero()
ONE = PuiseuxPoly.const(1)


class BaseGerm:
    """Germ ``phi1`` at x = 0: positive integer valuation n, lead lam != 0."""

    __slots__ = ("series", "n", "lam", "_rev_cache")

    def __init__(self, series):
        series = as_series(series)
        v = series.val()
        if v is INF or v <= 0 or v.denominator != 1:
            raise ValueError("base germ needs phi1(0) = 0 with integer valuation >= 1")
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "n", int(v))
        object.__setattr__(self, "lam", series.leading_coeff())
        object.__setattr__(self, "_rev_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("BaseGerm is immutable")

    @property
    def is_simple(self) -> bool:
        return self.n == 1

    @property
    def scale_factor(self) -> Fraction:
        """Radius exponents of image points scale by 1/n."""
        return Fraction(1, self.n)

    def inverse_to(self, precision) -> PuiseuxPoly:
        precision = rat(precision)
        g = self._rev_cache.get(precision)
        if g is None:
            g = reversion(self.series, precision)
            self._rev_cache[precision] = g
        return g

    def __str__(self):
        return str(self.series)


def _trim(coeffs):
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1].is_exact_zero:
        coeffs.pop()
    return coeffs


def _visible_degree(coeffs) -> int:
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if c.terms:
            return i
        if c.precision is not INF:
            raise InsufficientPrecision(f"degree undecidable: coefficient {i} truncated")
    return 0


class SkewLocal:
    """One local model: base germ plus fibre map num/den in y."""

    __slots__ = ("base", "num", "den", "label", "_poles", "_crit")

    def __init__(self, base: BaseGerm, num, den, label: str = ""):
        num = _trim([as_series(c) for c in num])
        den = _trim([as_series(c) for c in den])
        if all(not c.terms for c in den):
            raise ValueError("fibre map denominator is zero")
        if all(not c.terms for c in num):
            raise ValueError("fibre map numerator is zero")
        if _proportional(num, den):
            raise ValueError("fibre map is constant in y (degenerate skew product)")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "num", tuple(num))
        object.__setattr__(self, "den", tuple(den))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "_poles", None)
        object.__setattr__(self, "_crit", None)

    def __setattr__(self, name, value):
        raise AttributeError("SkewLocal is immutable")

    @property
    def rdeg(self) -> int:
        return max(_visible_degree(self.num), _visible_degree(self.den))

    def phi2_eval(self, b, precision=None) -> PuiseuxPoly:
        b = as_series(b)
        top = poly_eval(self.num, b)
        bot = poly_eval(self.den, b)
        return top * bot.inv(precision=precision)

    def poles(self, precision=None):
        """Fibre poles: roots of the denominator, plus a flag for infinity."""
        if self._poles is None:
            roots, descs = newton_puiseux(list(self.den), precision)
            at_inf = _visible_degree(self.num) > _visible_degree(self.den)
            object.__setattr__(self, "_poles", (roots, descs, at_inf))
        return self._poles

    def __str__(self):
        lbl = f"[{self.label}] " if self.label else ""
        return f"{lbl}phi1 = {self.base}, phi2 = ({_poly_str(self.num)}) / ({_poly_str(self.den)})"


def _poly_str(coeffs) -> str:
    parts = []
    for i, c in enumerate(coeffs):
        if not c.terms:
            continue
        ys = "1" if i == 0 else ("y" if i == 1 else f"y^{i}")
        parts.append(f"({c})*{ys}" if i else f"({c})")
    return " + ".join(parts) if parts else "0"


def _proportional(num, den) -> bool:
    # exact cross-ratio test: num_i*den_j == num_j*den_i for all i, j
    if any(c.precision is not INF for c in list(num) + list(den)):
        return False
    n = max(len(num), len(den))

    def get(seq, i):
        return seq[i] if i < len(seq) else ZERO

    for i in range(n):
        for j in range(i + 1, n):
            if get(num, i) * get(den, j) != get(num, j) * get(den, i):
                return False
    return True


# -- Gauss valuations ----------------------------------------------------------


def gauss_val(coeffs, t):
    """min_i (val(c_i) + t*i) with honest handling of truncated zeros.

    Returns INF when the polynomial is exactly zero; raises when a
    truncated coefficient could undercut the visible minimum.
    """
    t = rat(t)
    best = None
    bounds = []
    for i, c in enumerate(coeffs):
        if c.terms:
            v = c.val() + t * i
            best = v if best is None else min(best, v)
        elif c.precision is not INF:
            bounds.append(c.precision + t * i)
    if best is None:
        if bounds:
            raise InsufficientPrecision("Gauss valuation of an all-truncated polynomial")
        return INF
    for b in bounds:
        if b < best:
            raise InsufficientPrecision(
                f"truncated coefficient (bound {b}) could undercut Gauss valuation {best}"
            )
    return best


def shift_poly(coeffs, a: PuiseuxPoly):
    """Coefficients of the same polynomial in tau = y - a."""
    if not a.terms and a.is_exact_zero:
        return list(coeffs)
    d = len(coeffs) - 1
    out = [ZERO for _ in range(d + 1)]
    apow = [ONE]
    for _ in range(d):
        apow.append(apow[-1] * a)
    for j, cj in enumerate(coeffs):
        if not cj.terms and cj.is_exact_zero:
            continue
        b = 1
        for i in range(j, -1, -1):
            out[i] = out[i] + cj.scale(b) * apow[j - i]
            if i > 0:
                b = b * i // (j - i + 1)
    return out


# -- pushforward ----------------------------------------------------------------


def pushforward(s: SkewLocal, p: TypeIIPoint) -> TypeIIPoint:
    """Exact image of a disk point under the local model.

    Raises DegenerateImage when the fibre map is constant on the disk,
    InsufficientPrecision when coefficient truncation blocks a decision,
    NotRepresentable when the centre transport needs an irrational root.
    """
    if p.classical:
        raise ValueError("pushforward expects a disk point, not a classical probe")
    t = p.t
    P = shift_poly(list(s.num), p.center)
    Q = shift_poly(list(s.den), p.center)
    vQ = gauss_val(Q, t)
    if vQ is INF:
        raise ValueError("denominator vanished identically after shift")

    candidates = []
    seen = set()
    for i, qi in enumerate(Q):
        if not qi.terms:
            if qi.precision is not INF:
                raise InsufficientPrecision(
                    f"candidate ratio at y-degree {i} blocked by truncated coefficient"
                )
            continue
        pi = P[i] if i < len(P) else ZERO
        w = ZERO if not pi.terms else pi * qi.inv()
        key = (w.terms, w.precision)
        if key not in seen:
            seen.add(key)
            candidates.append((w, pi, qi))

    best = None
    best_s = None
    for w, pi, qi in candidates:
        diff = [
            (P[i] if i < len(P) else ZERO) - w * (Q[i] if i < len(Q) else ZERO)
            for i in range(max(len(P), len(Q)))
        ]
        v = gauss_val(diff, t)
        if v is INF:
            raise DegenerateImage(
                f"fibre map is the constant {w} on the disk of {p}"
            )
        sw = v - vQ
        if best_s is None or sw > best_s:
            best_s = sw
            best = (w, pi, qi)
    q = s.base.scale_factor
    T = q * best_s
    w, pi, qi = best
    if w.terms and w.precision is not INF and w.precision <= best_s:
        # the winner only matters modulo x^best_s; redo its division finer
        w = pi * qi.inv(precision=best_s + 2 - pi.val_floor() + qi.val_floor())
    center = _transport_center(s.base, w, T)
    return TypeIIPoint(center, T)


def _transport_center(base: BaseGerm, w: PuiseuxPoly, T: Fraction) -> PuiseuxPoly:
    """Express the new centre in the image coordinate via the inverse germ."""
    if not w.terms:
        return ZERO
    need = max(DEFAULT_PRECISION, (abs(T) + 2) * base.n)
    g = base.inverse_to(need)
    composed = w.compose(g, precision=T + 1)
    if composed.precision is not INF and composed.precision < T:
        raise InsufficientPrecision("transported centre lost too much precision")
    return composed


def pushforward_direction(
    s: SkewLocal, p: TypeIIPoint, v: Direction, cap: int = 8
) -> Direction:
    """Image of a tangent direction, by probing points along it.

    Probes step into the direction at shrinking distance until two
    consecutive probe images select the same direction at the image
    point; ProbeDivergence after ``cap`` refinements.
    """
    if v.at != p:
        raise ValueError("direction is not anchored at the given point")
    image = pushforward(s, p)
    delta = Fraction(1)
    prev = None
    for _ in range(cap):
        if v.at_infinity:
            probe = TypeIIPoint(p.center, p.t - delta)
        else:
            probe = TypeIIPoint(v.rep, p.t + delta)
        probe_image = pushforward(s, probe)
        if probe_image != image:
            d = direction_at(image, probe_image)
            if prev is not None and d == prev:
                return d
            prev = d
        else:
            prev = None
        delta = delta / 2
    raise ProbeDivergence(
        f"direction image at {p} did not settle within {cap} refinements"
    )


# -- reduction ------------------------------------------------------------------


#: Residue classes at the Gauss point are Q union {infinity}; None is infinity.
ResidueValue = Optional[Fraction]


@dataclass(frozen=True)
class ReducedMap:
    """The fibre map modulo x, as a rational self-map of the residue line."""

    num: tuple
    den: tuple

    @property
    def degree(self) -> int:
        return max(len(self.num) - 1, len(self.den) - 1)

    def apply(self, value: ResidueValue) -> ResidueValue:
        if value is None:
            dn, dd = len(self.num) - 1, len(self.den) - 1
            if dn > dd:
                return None
            if dn < dd:
                return Fraction(0)
            return self.num[-1] / self.den[-1]
        top = _frac_poly_eval(self.num, value)
        bot = _frac_poly_eval(self.den, value)
        if bot == 0:
            if top == 0:
                raise ArithmeticError("0/0 in reduced map; gcd not cleared")
            return None
        return top / bot

    def __str__(self):
        return f"({_frac_poly_str(self.num)}) / ({_frac_poly_str(self.den)})"


def _frac_poly_eval(coeffs, v: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * v + c
    return acc


def _frac_poly_str(coeffs) -> str:
    parts = []
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        ys = "1" if i == 0 else ("y" if i == 1 else f"y^{i}")
        parts.append(f"{c}*{ys}" if i else f"{c}")
    return " + ".join(parts) if parts else "0"


def _frac_poly_gcd(a, b):
    a = [Fraction(c) for c in a]
    b = [Fraction(c) for c in b]
    while any(c != 0 for c in b):
        a, b = b, _frac_poly_mod(a, b)
    while a and a[-1] == 0:
        a.pop()
    if a:
        lead = a[-1]
        a = [c / lead for c in a]
    return a


def _frac_poly_mod(a, b):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    db = len(b) - 1
    while len(a) - 1 >= db and a:
        factor = a[-1] / b[-1]
        shift = len(a) - 1 - db
        for i, c in enumerate(b):
            a[i + shift] -= factor * c
        while a and a[-1] == 0:
            a.pop()
    return a


def _frac_poly_div(a, b):
    # exact division, used after gcd
    a = list(a)
    out = [Fraction(0)] * (len(a) - len(b) + 1)
    while len(a) >= len(b) and a:
        factor = a[-1] / b[-1]
        shift = len(a) - len(b)
        out[shift] = factor
        for i, c in enumerate(b):
            a[i + shift] -= factor * c
        while a and a[-1] == 0:
            a.pop()
    return out


def reduction_mod_x(s: SkewLocal) -> ReducedMap:
    """Reduce the fibre map modulo x after clearing the common Gauss norm.

    Only meaningful over a simple base germ (the base coordinate reduces
    to itself); callers check ``s.base.is_simple``.
    """
    if not s.base.is_simple:
        raise ValueError("reduction requires a simple base germ")
    c0 = None
    for c in list(s.num) + list(s.den):
        if c.terms:
            v = c.val()
            c0 = v if c0 is None else min(c0, v)
        elif c.precision is not INF:
            raise InsufficientPrecision("truncated coefficient blocks reduction")
    num_bar = [c.coeff_at(c0) for c in s.num]
    den_bar = [c.coeff_at(c0) for c in s.den]
    while num_bar and num_bar[-1] == 0:
        num_bar.pop()
    while den_bar and den_bar[-1] == 0:
        den_bar.pop()
    if not num_bar or not den_bar:
        return ReducedMap(tuple(num_bar or [Fraction(0)]), tuple(den_bar or [Fraction(0)]))
    g = _frac_poly_gcd(num_bar, den_bar)
    if len(g) > 1:
        num_bar = _frac_poly_div(num_bar, g)
        den_bar = _frac_poly_div(den_bar, g)
    return ReducedMap(tuple(num_bar), tuple(den_bar))


def has_good_reduction(s: SkewLocal) -> bool:
    """Degree of the reduced map equals the fibre degree."""
    red = reduction_mod_x(s)
    if all(c == 0 for c in red.num) or all(c == 0 for c in red.den):
        return False
    return red.degree == s.rdeg


# -- critical points --------------------------------------------------------------


@dataclass(frozen=True)
class CriticalLocus:
    """Critical points of the fibre map: expanded roots, unexpanded
    packets, and the multiplicity at infinity."""

    roots: tuple
    descriptors: tuple
    infinity_multiplicity: int

    def total(self) -> int:
        return (
            sum(r.multiplicity for r in self.roots)
            + sum(d.degree for d in self.descriptors)
            + self.infinity_multiplicity
        )


def critical_points_rational(num, den, precision=None) -> CriticalLocus:
    num = _trim([as_series(c) for c in num])
    den = _trim([as_series(c) for c in den])
    d = max(_visible_degree(num), _visible_degree(den))
    if d < 2:
        raise ValueError("critical points only meaningful for fibre degree >= 2")
    dnum = poly_derivative(num) or [ZERO]
    dden = poly_derivative(den) or [ZERO]
    w_len = max(len(dnum) + len(den), len(num) + len(dden)) - 1
    wronskian = [ZERO for _ in range(w_len)]
    for i, a in enumerate(dnum):
        for j, b in enumerate(den):
            wronskian[i + j] = wronskian[i + j] + a * b
    for i, a in enumerate(num):
        for j, b in enumerate(dden):
            wronskian[i + j] = wronskian[i + j] - a * b
    wronskian = _trim(wronskian)
    roots, descs = newton_puiseux(wronskian, precision)
    finite = sum(r.multiplicity for r in roots) + sum(d_.degree for d_ in descs)
    inf_mult = (2 * d - 2) - finite
    return CriticalLocus(tuple(roots), tuple(descs), inf_mult)


def critical_points(s: SkewLocal, precision=None) -> CriticalLocus:
    if s._crit is None:
        object.__setattr__(
            s, "_crit", critical_points_rational(s.num, s.den, precision)
        )
    return s._crit


# -- folding tree (heuristic, probe-validated) -------------------------------------


def folding_tree(s: SkewLocal, depth=8, budget=4):
    """Endpoints of a finite tree meant to contain all folding of the map.

    HEURISTIC: endpoints are placed at depth ``depth`` below each critical
    point (and above, for a critical point at infinity) and validated by
    probing that rays leaving each endpoint map without folding; on
    failure the endpoint is pushed deeper, up to ``budget`` retries.
    Degree-1 fibre maps fold nothing and give the empty tree.
    """
    if s.rdeg < 2:
        return []
    crit = critical_points(s)
    rays = []
    for r in crit.roots:
        rays.append(("finite", r.series))
    for d_ in crit.descriptors:
        rays.append(("packet", d_))
    if crit.infinity_multiplicity > 0:
        rays.append(("infinity", None))
    endpoints = []
    for kind, data in rays:
        e = Fraction(depth)
        for attempt in range(budget + 1):
            pt = _folding_endpoint(kind, data, e)
            if pt is None:
                break
            if _ray_leaves_cleanly(s, pt):
                endpoints.append(pt)
                break
            e += 2
        else:
            raise ValidationFailure(
                f"folding ray for {kind} critical point failed validation at depth {e}"
            )
    return endpoints


def _folding_endpoint(kind, data, e):
    if kind == "finite":
        series = data
        cap = series.precision
        t = e if cap is INF else min(e, cap)
        return TypeIIPoint(series, t)
    if kind == "packet":
        # only the valuation is known; stop the ray where knowledge stops
        return TypeIIPoint(data.prefix, data.valuation)
    return TypeIIPoint(ZERO, -e)


def _ray_leaves_cleanly(s, pt) -> bool:
    # beyond-the-endpoint probes: image parameters must move strictly
    # monotonically, i.e. no fold is visible past the endpoint
    try:
        ts = []
        for d in (Fraction(0), Fraction(1, 2), Fraction(1)):
            probe = TypeIIPoint(pt.center, pt.t + 1 + d)
            ts.append(pushforward(s, probe).t)
        return (ts[0] < ts[1] < ts[2]) or (ts[0] > ts[1] > ts[2])
    except (InsufficientPrecision, DegenerateImage):
        return False


# -- chains -------------------------------------------------------------------------


class Chain:
    """A finite chain of local models over a preperiodic base orbit.

    Fibres are indexed 0 .. N-1 with N = tail + period; link j maps fibre
    j to fibre j+1, except the last link which returns to fibre ``tail``
    (the start of the cycle).
    """

    __slots__ = ("links", "period", "tail")

    def __init__(self, links, period: int, tail: int = 0):
        links = list(links)
        if period < 1 or tail < 0 or len(links) != period + tail:
            raise ValueError("chain needs len(links) == period + tail, period >= 1")
        object.__setattr__(self, "links", tuple(links))
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "tail", tail)

    def __setattr__(self, name, value):
        raise AttributeError("Chain is immutable")

    @property
    def size(self) -> int:
        return len(self.links)

    def next_fibre(self, j: int) -> int:
        if j + 1 < self.size:
            return j + 1
        return self.tail

    def step(self, j: int, p: TypeIIPoint):
        return self.next_fibre(j), pushforward(self.links[j], p)

    def orbit(self, j: int, p: TypeIIPoint, steps: int):
        """[(fibre, point)] starting at (j, p), of length steps + 1."""
        out = [(j, p)]
        for _ in range(steps):
            j, p = self.step(j, p)
            out.append((j, p))
        return out


def single_chain(s: SkewLocal) -> Chain:
    return Chain([s], period=1, tail=0)


def dynamical_degree(s: SkewLocal, deg_phi1: int) -> int:
    """First dynamical degree of the global model this germ came from."""
    return max(deg_phi1, s.rdeg)


def is_simple(s: SkewLocal) -> bool:
    return s.base.is_simple


def scale_factor(s: SkewLocal) -> Fraction:
    return s.base.scale_factor
