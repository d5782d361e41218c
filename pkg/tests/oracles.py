"""Independent reference computations built on sympy, used to cross-check dmkh."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import sympy as sp

B = sp.Symbol("b")


def to_sympy_scalar(a) -> sp.Expr:
    if not hasattr(a, "re"):
        a = Fraction(a)
        return sp.Rational(a.numerator, a.denominator)
    return sp.Rational(a.re.numerator, a.re.denominator) + sp.I * sp.Rational(a.im.numerator, a.im.denominator)


def to_sympy_ratfunc(f) -> sp.Expr:
    num = sum((to_sympy_scalar(c) * B ** k for k, c in enumerate(f.num.c)), sp.Integer(0))
    den = sum((to_sympy_scalar(c) * B ** k for k, c in enumerate(f.den.c)), sp.Integer(0))
    return num / den


def order_at(expr: sp.Expr, x: sp.Expr) -> int:
    """Valuation of a nonzero rational function at b = x."""
    expr = sp.cancel(sp.together(expr))
    num, den = sp.fraction(expr)
    k = 0
    pn = sp.Poly(num, B)
    while pn.eval(x) == 0:
        pn = sp.Poly(sp.quo(pn.as_expr(), B - x, B), B)
        k += 1
    pd = sp.Poly(den, B)
    m = 0
    while pd.eval(x) == 0:
        pd = sp.Poly(sp.quo(pd.as_expr(), B - x, B), B)
        m += 1
    return k - m


_FIELD = sp.QQ_I.frac_field(B)


def _poly_order(p, x) -> int:
    lin = p.ring.gens[0] - p.ring.domain.convert(x)
    k = 0
    while p and not p(x):
        p, r = p.div(lin)
        assert r == 0
        k += 1
    return k


def _field_order(f, x) -> int:
    return _poly_order(f.numer, x) - _poly_order(f.denom, x)


def smith_lattice_degree(basis1, basis2, place) -> Fraction:
    """deg(L1, L2) from the elementary divisors of B1^{-1} B2 over C[[b - x]].

    The k-th determinantal divisor is the minimal valuation among k x k minors;
    elementary divisor exponents are successive differences, and their sum
    equals the index of L2 in L1 with the dmkh sign convention
    deg(L1, L2) = v(det B2) - v(det B1).  Arithmetic is exact in Q(i)(b).
    """
    from sympy.polys.matrices import DomainMatrix

    x = sp.QQ_I.from_sympy(to_sympy_scalar(place))

    def dm(basis):
        rows = [[_FIELD.from_sympy(to_sympy_ratfunc(a)) for a in row] for row in basis]
        return DomainMatrix(rows, (len(rows), len(rows)), _FIELD)

    rel = dm(basis1).inv() * dm(basis2)
    n = rel.shape[0]
    dets = [0]
    for k in range(1, n + 1):
        best = None
        for rows in combinations(range(n), k):
            for cols in combinations(range(n), k):
                minor = rel.extract(list(rows), list(cols)).det()
                if minor == _FIELD.zero:
                    continue
                v = _field_order(minor, x)
                best = v if best is None else min(best, v)
        dets.append(best)
    elementary = [dets[k] - dets[k - 1] for k in range(1, n + 1)]
    return Fraction(sum(elementary))


def newton_slopes_rank2(phi) -> dict:
    """Slopes of a rank-2 phi from the lower hull of (i, v_inf(c_i)) for X^2 - tr X + det (lambda = 0)."""
    m = sp.Matrix([[to_sympy_ratfunc(a) for a in row] for row in phi])
    tr, det = sp.cancel(m.trace()), sp.cancel(m.det())

    def deg(e):
        if e == 0:
            return None
        n, d = sp.fraction(sp.cancel(e))
        return sp.degree(n, B) - sp.degree(d, B)

    pts = [(0, -deg(det))]
    if deg(tr) is not None:
        pts.append((1, -deg(tr)))
    pts.append((2, 0))
    # lower hull
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    out: dict = {}
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        omega = Fraction(y2 - y1, x2 - x1)
        out[omega] = out.get(omega, 0) + (x2 - x1)
    return out


def example_a_degree_oracle(S, ell, weights, d, T=1) -> Fraction:
    """Summand-by-summand degree for phi = [[0, P], [1, 0]], P = prod (b - a)^ell(a).

    filtered: det of the adapted basis (s, s; 1, -1) is -2 s, s = P^{1/2}, so
    -v_inf(det) = deg P / 2; minus the d's (one value doubled when deg P is odd).
    finite: jump -ell(a) at a with weight t(a).
    slope: -sum (omega/2) r(omega) with omega = deg P / 2 and r = 2.
    """
    T = Fraction(T)
    P = sp.Integer(1)
    for a, l in zip(S, ell):
        P *= (B - to_sympy_scalar(a)) ** l
    degP = sp.degree(sp.expand(P), B)
    filtered = Fraction(degP, 2) - (sum(Fraction(v) for v in d) if degP % 2 == 0 else 2 * Fraction(d[0]) / 2)
    finite = Fraction(0)
    for a, l, t in zip(S, ell, weights):
        jump = -order_at(sp.expand(P), to_sympy_scalar(a))
        finite += (1 - Fraction(t) / T) * jump
    slopes = newton_slopes_rank2([[_zero(), _ratfunc_from_sympy(P)], [_one(), _zero()]])
    slope_term = -sum((w / 2) * r for w, r in slopes.items())
    return filtered + finite + slope_term


def example_b_degree_oracle(roots, Q_coeffs, weights, d, T=1) -> Fraction:
    """Summand-by-summand degree for phi = [[0, P], [-1, Q]] with P of simple roots.

    The adapted basis (P, P; a1, a2) has det P (a2 - a1); with 2 deg Q > deg P the
    eigenvalues behave like Q and P/Q, so -v_inf(det) = deg P + deg Q.
    """
    T = Fraction(T)
    P = sp.Integer(1)
    for a in roots:
        P *= B - to_sympy_scalar(a)
    Q = sum((to_sympy_scalar(c) * B ** k for k, c in enumerate(Q_coeffs)), sp.Integer(0))
    degP, degQ = sp.degree(sp.expand(P), B), sp.degree(Q, B)
    filtered = Fraction(degP + degQ) - sum(Fraction(v) for v in d)
    det = sp.expand(P)  # det phi = P
    finite = Fraction(0)
    for a, t in zip(roots, weights):
        finite += (1 - Fraction(t) / T) * (-order_at(det, to_sympy_scalar(a)))
    slopes = newton_slopes_rank2([[_zero(), _ratfunc_from_sympy(P)], [_ratfunc_from_sympy(-sp.Integer(1)),
                                                                       _ratfunc_from_sympy(Q)]])
    slope_term = -sum((w / 2) * r for w, r in slopes.items())
    return filtered + finite + slope_term


# small bridges back to dmkh types for the slope helper


def _ratfunc_from_sympy(e):
    from dmkh.algebra import GaussQ, Poly, RatFunc

    num, den = sp.fraction(sp.cancel(e))

    def poly(x):
        c = sp.Poly(sp.expand(x), B).all_coeffs()[::-1]
        return Poly([GaussQ(Fraction(str(sp.re(a))), Fraction(str(sp.im(a)))) for a in c])

    return RatFunc(poly(num), poly(den))


def _zero():
    from dmkh.algebra import RatFunc

    return RatFunc()


def _one():
    from dmkh.algebra import RatFunc

    return RatFunc.of(1)
