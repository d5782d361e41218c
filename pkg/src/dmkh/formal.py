"""Formal structure of difference modules at beta = infinity, in the local
variable x = beta^{-1}: Newton polygons, leading constants, basic modules,
level detection, block splitting and good filtrations."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

import sympy

from .algebra import (
    ONE,
    ZERO,
    AlgebraError,
    GaussQ,
    MatSeries,
    Matrix,
    Poly,
    PrecisionError,
    Puiseux,
    RatFunc,
    SingularMatrixError,
    adjugate,
    charpoly,
    const_inverse,
    det_cofactor,
    det_gauss,
    identity,
    mat_mul,
    mat_sub,
    nullspace,
    solve,
)
from .difference import DifferenceModule, default_order


class FormalError(ValueError):
    pass


class LevelUndetermined(FormalError):
    """The given basis does not exhibit a Phi*-stable lattice."""


# ---------------------------------------------------------------------------
# Factoring over Q(i)

_X = sympy.Symbol("X")


def _to_sympy(a: GaussQ):
    return sympy.Rational(a.re.numerator, a.re.denominator) + sympy.I * sympy.Rational(a.im.numerator, a.im.denominator)


def _from_sympy(z) -> GaussQ:
    re, im = sympy.re(z), sympy.im(z)
    return GaussQ(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))


def factor_over_qi(p: Poly) -> list[tuple[Poly, int]]:
    """Monic irreducible factors of p over Q(i) with multiplicities."""
    if p.deg <= 0:
        return []
    expr = sum(_to_sympy(a) * _X**k for k, a in enumerate(p.c))
    _, facs = sympy.factor_list(sympy.expand(expr), _X, extension=sympy.I)
    out = []
    for f, m in facs:
        coeffs = [_from_sympy(sympy.nsimplify(c)) for c in reversed(sympy.Poly(f, _X).all_coeffs())]
        out.append((Poly(coeffs).monic(), int(m)))
    out.sort(key=lambda fm: (fm[0].deg, [c.sort_key() for c in fm[0].c]))
    return out


# ---------------------------------------------------------------------------
# Formal modules


@dataclass(frozen=True, eq=False)
class FormalModule:
    """Matrix phi over C((x^{1/q})), x = 1/y, with Phi*(x^{j/q}) = x^{j/q}(1 + nu x)^{-j/q}."""

    phi: MatSeries
    nu: GaussQ = GaussQ(0)

    @property
    def q(self) -> int:
        return self.phi.ram

    @property
    def rank(self) -> int:
        return self.phi.n

    def entries(self) -> Matrix:
        return self.phi.entries()


def formal_at_infinity(module: DifferenceModule, order: int | None = None) -> FormalModule:
    """Expansion of phi at infinity to absolute order `order` in x."""
    order = default_order() if order is None else order
    ents = []
    for row in module.phi:
        r = []
        for f in row:
            if f.is_zero():
                r.append(Puiseux.zero(order))
            else:
                v = f.v_inf()
                r.append(f.series_at_infinity(max(order - v, 1)).truncate(order))
        ents.append(r)
    return FormalModule(MatSeries.from_entries(ents), module.nu)


def formal_from_entries(ents: Matrix, nu=0) -> FormalModule:
    return FormalModule(MatSeries.from_entries(ents), GaussQ.of(nu))


def formal_apply_phi(m: FormalModule, vec: Sequence[Puiseux]) -> list[Puiseux]:
    """Phi*(sum_j g_j e_j) = sum_j shift(g_j) phi[:, j]."""
    ents = m.entries()
    sv = [g.shift(m.nu) for g in vec]
    return [sum((ents[i][j] * sv[j] for j in range(m.rank)), Puiseux.zero(10**9, m.q))
            for i in range(m.rank)]


def gauge(m: FormalModule, h: MatSeries, hinv: MatSeries | None = None) -> FormalModule:
    """Matrix of Phi* in the basis given by the columns of h: h^{-1} phi Phi*(h)."""
    hinv = h.inverse() if hinv is None else hinv
    return FormalModule(hinv * m.phi * h.shift(m.nu), m.nu)


# ---------------------------------------------------------------------------
# Newton polygon and leading constants


@dataclass(frozen=True)
class SlopeComponent:
    omega: Fraction
    alpha: GaussQ | None  # orbit representative; None when the residual factor is irrational
    orbit_size: int
    multiplicity: int
    factor: str | None = None
    frakb: Puiseux | None = None


@dataclass(frozen=True)
class SlopeDecomposition:
    ramification: int
    components: tuple
    polygon: tuple  # vertices (j, v_j)
    path: str
    base_ram: int = 1
    det_law: bool = True
    notes: tuple = ()

    def slopes(self) -> dict:
        out: dict = {}
        for c in self.components:
            out[c.omega] = out.get(c.omega, 0) + c.multiplicity
        return dict(sorted(out.items()))

    def r(self, omega) -> int:
        return self.slopes().get(Fraction(omega), 0)

    def total_slope(self) -> Fraction:
        return sum((w * r for w, r in self.slopes().items()), Fraction(0))


def _lc_val(a) -> tuple[Fraction, GaussQ] | None:
    if isinstance(a, RatFunc):
        if a.is_zero():
            return None
        return Fraction(a.v_inf()), a.num.lc / a.den.lc
    if isinstance(a, Puiseux):
        if a.is_zero():
            return None
        return a.val, a.lc
    a = GaussQ.of(a)
    return (Fraction(0), a) if a else None


def _krylov_operator_rat(module: DifferenceModule) -> list[RatFunc]:
    """Coefficients a_0..a_r of X^r - sum c_k X^k for a cyclic vector."""
    from .difference import apply_phi

    r = module.rank
    b = RatFunc.X()
    cands = [[RatFunc.of(1 if i == j else 0) for i in range(r)] for j in range(r)]
    cands.append([b**i for i in range(r)])
    cands.append([(b + 1) ** i for i in range(r)])
    for v in cands:
        cols = [v]
        for _ in range(r):
            cols.append(apply_phi(module, cols[-1]))
        k = [[cols[j][i] for j in range(r)] for i in range(r)]
        d = det_cofactor(k)
        if d.is_zero():
            continue
        adj = adjugate(k)
        c = [sum((adj[i][j] * cols[r][j] for j in range(r)), RatFunc()) / d for i in range(r)]
        return [-ci for ci in c] + [RatFunc.of(1)]
    raise FormalError("no cyclic vector found among the standard candidates")


def _krylov_operator_formal(m: FormalModule) -> list[Puiseux]:
    r = m.rank
    q = m.q
    prec = m.phi.prec
    one, zero = Puiseux.const(1, prec, q), Puiseux.zero(prec, q)
    cands = [[one if i == j else zero for i in range(r)] for j in range(r)]
    cands.append([Puiseux.monomial(1, -i * q, q, prec - i * q) for i in range(r)])
    for v in cands:
        cols = [v]
        for _ in range(r):
            cols.append(formal_apply_phi(m, cols[-1]))
        k = [[cols[j][i] for j in range(r)] for i in range(r)]
        d = det_gauss(k)
        if d.is_zero():
            continue
        adj = adjugate(k)
        dinv = d.inverse()
        c = [sum((adj[i][j] * cols[r][j] for j in range(r)), Puiseux.zero(10**9, q)) * dinv
             for i in range(r)]
        return [-ci for ci in c] + [one]
    raise FormalError("no cyclic vector found at the working precision")


def _char_data(module, order):
    if isinstance(module, DifferenceModule):
        if not module.nu:
            return charpoly(module.matrix()), "charpoly", 1
        return _krylov_operator_rat(module), "cyclic-vector", 1
    if isinstance(module, FormalModule):
        if not module.nu:
            return charpoly(module.entries()), "charpoly", module.q
        return _krylov_operator_formal(module), "cyclic-vector", module.q
    raise TypeError("expected DifferenceModule or FormalModule")


def _lower_hull(points: list[tuple[int, Fraction]]) -> list[tuple[int, Fraction]]:
    hull: list[tuple[int, Fraction]] = []
    for p in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the segment hull[-2] -> p
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _det_val(module) -> Fraction:
    if isinstance(module, DifferenceModule):
        return Fraction(module.det_phi().v_inf())
    d = det_gauss(module.entries())
    if d.is_zero():
        raise PrecisionError("det phi vanishes to the working precision")
    return d.val


def residual_roots(poly: Poly, omega: Fraction, base_ram: int) -> list[SlopeComponent]:
    """Orbit representatives of roots of a residual polynomial."""
    d = (omega * base_ram).denominator
    roots: list[tuple[GaussQ, int]] = []
    comps = []
    for fac, mult in factor_over_qi(poly):
        if fac.deg == 1:
            roots.append((-fac.c[0], mult))
        else:
            comps.append(SlopeComponent(omega, None, d, fac.deg * mult, fac.to_str("a")))
    used = [False] * len(roots)
    orbit_comps = []
    for i, (a, m) in enumerate(roots):
        if used[i]:
            continue
        members = [(a, m)]
        used[i] = True
        for j in range(i + 1, len(roots)):
            if not used[j] and (roots[j][0] / a) ** d == 1:
                used[j] = True
                members.append(roots[j])
        rep = min((b for b, _ in members), key=GaussQ.sort_key)
        orbit_comps.append(SlopeComponent(omega, rep, d, sum(mm for _, mm in members)))
    return orbit_comps + comps


def newton_polygon(module, order: int | None = None) -> SlopeDecomposition:
    """Slopes omega (growth exponents of Phi* in beta) with multiplicities r(omega).

    The lower convex hull of (j, v_inf(a_j)) for sum_j a_j X^j, the characteristic
    polynomial when nu = 0 and a cyclic-vector operator otherwise; edge slope is
    omega and edge length r(omega).
    """
    if isinstance(module, DifferenceModule) and order is not None and module.nu:
        pass
    coeffs, path, base = _char_data(module, order)
    notes = []
    pts = []
    for j, a in enumerate(coeffs):
        lv = _lc_val(a)
        if lv is None:
            if isinstance(a, Puiseux) and a.prec < 10**8:
                notes.append(f"a_{j} vanishes to order {a.precision}")
            continue
        pts.append((j, lv[0]))
    if not pts or pts[0][0] != 0:
        raise SingularMatrixError("phi is singular (zero constant coefficient)")
    hull = _lower_hull(pts)
    lcs = {j: _lc_val(coeffs[j])[1] for j, _ in pts}
    vals = dict(pts)
    comps: list[SlopeComponent] = []
    ram = base
    for (j1, v1), (j2, v2) in zip(hull, hull[1:]):
        omega = (v2 - v1) / (j2 - j1)
        resid = [ZERO] * (j2 - j1 + 1)
        for j in range(j1, j2 + 1):
            if j in vals and vals[j] == v1 + omega * (j - j1):
                resid[j - j1] = lcs[j]
        comps.extend(residual_roots(Poly(resid), omega, base))
        ram = lcm(ram, base * (omega * base).denominator)
    comps.sort(key=lambda c: (c.omega, c.alpha.sort_key() if c.alpha is not None else (0, 0), c.factor or ""))
    total = sum(((v2 - v1) for (j1, v1), (j2, v2) in zip(hull, hull[1:])), Fraction(0))
    try:
        det_ok = total == -_det_val(module)
    except PrecisionError:
        det_ok = False
        notes.append("determinant law undecided at the working precision")
    return SlopeDecomposition(ram, tuple(comps), tuple(hull), path, base, det_ok, tuple(notes))


def leading_constants(module, omega, order: int | None = None) -> list[SlopeComponent]:
    omega = Fraction(omega)
    dec = newton_polygon(module, order)
    out = [c for c in dec.components if c.omega == omega]
    if not out:
        raise FormalError(f"{omega} is not a slope")
    return out


# ---------------------------------------------------------------------------
# Basic modules, twists, pullbacks


def basic_module(q: int, ell: int, alpha, nu=0, order: int | None = None) -> FormalModule:
    """L_q(ell, alpha): Phi*(e) = alpha y_q^{-ell} e, i.e. phi = alpha x^{ell/q}."""
    order = default_order() if order is None else order
    alpha = GaussQ.of(alpha)
    if not alpha:
        raise FormalError("alpha must be nonzero")
    prec = ell + order * q
    return FormalModule(MatSeries(1, [[[alpha]]], ell, q, prec), GaussQ.of(nu))


def twist_by_basic(m: FormalModule, ell: int, alpha, q: int | None = None) -> FormalModule:
    """Tensor with L_q(ell, alpha)^{-1}: phi -> alpha^{-1} y_q^{ell} phi."""
    alpha = GaussQ.of(alpha)
    if not alpha:
        raise FormalError("alpha must be nonzero")
    q = m.q if q is None else q
    return FormalModule(m.phi.mul_xpow(Fraction(-ell, q)).scale(alpha.inverse()), m.nu)


def ramified_pullback(m: FormalModule, p: int) -> FormalModule:
    if p % m.q:
        raise FormalError(f"{p} is not a multiple of {m.q}")
    return FormalModule(m.phi.with_ram(p), m.nu)


# ---------------------------------------------------------------------------
# Level


LEVEL_ZERO = "Zero"
LEVEL_LESS_THAN_ONE = "LessThanOne"
LEVEL_HIGHER = "Higher"


def level_check(m: FormalModule, order: int | None = None) -> str:
    """Zero | LessThanOne | Higher, tested on the lattice spanned by the given basis."""
    dec = newton_polygon(m, order)
    for c in dec.components:
        if c.omega != 0 or c.alpha != 1:
            return LEVEL_HIGHER
    phi = m.phi
    if phi.start < 0:
        raise LevelUndetermined("phi is not integral in the given basis")
    if phi.prec <= 0:
        raise PrecisionError("phi known to no positive order")
    lead = phi.coeff_n(0)
    cp = charpoly(lead)
    target = (Poly((-1, 1)) ** m.rank).c
    if tuple(cp) != target:
        raise LevelUndetermined("leading matrix is not unipotent in the given basis")
    if phi.prec < m.q:
        raise PrecisionError("order too small to test the level-zero condition")
    e = phi - MatSeries.identity(m.rank, phi.prec, m.q)
    if e.is_zero() or e.start >= m.q:
        return LEVEL_ZERO
    return LEVEL_LESS_THAN_ONE


# ---------------------------------------------------------------------------
# Closed form for the m-fold cocycle of the basic module of slope ell/q


def g_series(z_coeff: GaussQ, prec: int) -> Puiseux:
    """G(z x) = 1 - log(1 + z x)/(z x) as a series in x."""
    c = []
    p = ONE
    for n in range(0, prec):
        if n == 0:
            c.append(ZERO)
            continue
        p = p * z_coeff
        c.append(p * Fraction((-1) ** (n + 1), n + 1))
    return Puiseux(c, 0, 1, prec)


def basic_phi_power(q: int, ell: int, lam, T, m: int, order: int | None = None) -> Puiseux:
    """(Phi^m)*(e) = (y + m nu)^{-m ell/q} exp((m ell/q) G(m nu / y)) e, nu = 2 i lam T."""
    if m < 1:
        raise FormalError("m must be at least 1")
    order = default_order() if order is None else order
    nu = GaussQ(0, 2) * GaussQ.of(lam) * Fraction(T)
    c = Fraction(m * ell, q)
    if c == 0:
        return Puiseux.const(1, order * q, q)
    base = Puiseux((ONE, m * nu), 0, 1, order).binom_pow(-c)
    expo = (g_series(m * nu, order) * c).exp()
    return (base * expo).mul_xpow(c)


def basic_factor(q: int, ell: int, lam, T, order: int | None = None) -> Puiseux:
    return basic_phi_power(q, ell, lam, T, 1, order)


def iterate_cocycle(f: Puiseux, nu, m: int) -> Puiseux:
    """F_1 = f, F_{k+1} = shift(F_k) f."""
    out = f
    for _ in range(m - 1):
        out = out.shift(nu) * f
    return out


# ---------------------------------------------------------------------------
# Block splitting


@dataclass
class SplitBlock:
    omega: Fraction
    alpha: GaussQ | None
    indices: tuple
    frakb: Puiseux | None = None
    note: str = ""


@dataclass
class SplitResult:
    ramification: int
    blocks: list
    conjugation: MatSeries
    split_phi: MatSeries
    residue: list = field(default_factory=list)
    conjugation_inv: MatSeries | None = None

    def components(self) -> list[tuple[Fraction, GaussQ | None, int]]:
        return [(b.omega, b.alpha, len(b.indices)) for b in self.blocks]


def _bellman_ford(n: int, edges: list[tuple[int, int, int]]) -> list[int] | None:
    dist = [0] * n
    for _ in range(n + 1):
        changed = False
        for j, i, w in edges:
            if dist[j] + w < dist[i]:
                dist[i] = dist[j] + w
                changed = True
        if not changed:
            return dist
    return None


def _poly_of_matrix(p: Poly, a: Matrix) -> Matrix:
    n = len(a)
    out = [[ZERO] * n for _ in range(n)]
    for c in reversed(p.c):
        out = mat_mul(out, a)
        for i in range(n):
            out[i][i] = out[i][i] + c
    return out


def _sylvester(ci: Matrix, cj: Matrix, rhs: Matrix) -> Matrix:
    """Solve ci H - H cj = rhs."""
    a, b = len(ci), len(cj)
    rows = []
    vec = []
    for u in range(a):
        for v in range(b):
            row = [ZERO] * (a * b)
            for k in range(a):
                row[k * b + v] = row[k * b + v] + ci[u][k]
            for k in range(b):
                row[u * b + k] = row[u * b + k] - cj[k][v]
            rows.append(row)
            vec.append(rhs[u][v])
    sol = solve(rows, vec)
    return [[sol[u * b + v] for v in range(b)] for u in range(a)]


def _block_diag(mats: list[MatSeries], prec: int, ram: int) -> MatSeries:
    n = sum(m.n for m in mats)
    ents = [[Puiseux.zero(prec, ram) for _ in range(n)] for _ in range(n)]
    off = 0
    for m in mats:
        e = m.entries()
        for i in range(m.n):
            for j in range(m.n):
                ents[off + i][off + j] = e[i][j].with_ram(lcm(ram, e[i][j].ram))
        off += m.n
    return MatSeries.from_entries(ents)


def _sub(m: MatSeries, idx: Sequence[int]) -> MatSeries:
    e = m.entries()
    return MatSeries.from_entries([[e[i][j] for j in idx] for i in idx])


def _frakb(block: MatSeries, omega: Fraction, alpha: GaussQ) -> Puiseux:
    b = block.entries()[0][0].mul_xpow(omega) * alpha.inverse()
    terms = {e: a for e, a in b.terms() if 0 < e < 1}
    return Puiseux.from_terms(terms, min(b.precision, Fraction(1)), b.ram)


def spectral_split(m: FormalModule, order: int | None = None) -> SplitResult:
    """Block-diagonalize phi by a formal gauge transformation h, so that
    h^{-1} phi Phi*(h) is block diagonal with blocks of a single (omega, alpha)."""
    dec = newton_polygon(m, order)
    p = dec.ramification
    mm = ramified_pullback(m, p)
    r = mm.rank
    prec = mm.phi.prec
    if r == 1:
        block = mm.phi
        omega = -block.val
        alpha = block.coeff_n(block.start)[0][0]
        ident = MatSeries.identity(1, prec, p)
        return SplitResult(p, [SplitBlock(omega, alpha, (0,), _frakb(block, omega, alpha))],
                           ident, block, [], ident)
    omega_max = max(c.omega for c in dec.components)
    W = int(omega_max * p)
    ents = mm.entries()
    edges = []
    for i in range(r):
        for j in range(r):
            if not ents[i][j].is_zero():
                edges.append((j, i, ents[i][j].start + W))
    s = _bellman_ford(r, edges)
    ident = MatSeries.identity(r, prec, p)
    if s is None:
        return SplitResult(p, [], ident, mm.phi, ["no shear normalizes the top slope"], ident)
    big = prec + max(abs(v) for v in s) + 1
    shear = _diag_monomials(s, p, big)
    shear_inv = _diag_monomials([-v for v in s], p, big)
    psi = gauge(mm, shear, shear_inv).phi.mul_xpow(omega_max)
    if psi.start < 0:
        return SplitResult(p, [], ident, mm.phi, ["shear failed to bound the top slope"], ident)
    a0 = psi.coeff_n(0)
    facs = factor_over_qi(Poly(charpoly(a0)))
    cols: list[list[GaussQ]] = []
    groups = []
    for fac, mult in facs:
        space = nullspace(_poly_of_matrix(fac ** mult, a0))
        groups.append((fac, len(cols), len(cols) + len(space)))
        cols.extend(space)
    p0 = [[cols[j][i] for j in range(r)] for i in range(r)]
    p0s = MatSeries.const(p0, big, p)
    p0inv = MatSeries.const(const_inverse(p0), big, p)
    work = p0inv * psi * p0s
    if len(groups) == 1:
        fac, _, _ = groups[0]
        total, total_inv = shear * p0s, p0inv * shear_inv
        if fac.deg == 1 and fac.c[0]:
            alpha = -fac.c[0]
            blk = SplitBlock(omega_max, alpha, tuple(range(r)))
            return SplitResult(p, [blk], total, work.mul_xpow(-omega_max), [], total_inv)
        return SplitResult(p, [], total, work.mul_xpow(-omega_max),
                           [f"leading matrix has a single factor {fac.to_str('a')}"], total_inv)
    # order-by-order removal of off-diagonal blocks
    wprec = work.prec
    hcoef = {0: identity(r)}
    bcoef = {0: work.coeff_n(0)}
    nu = mm.nu

    def same_block(i, j):
        return any(lo <= i < hi and lo <= j < hi for _, lo, hi in groups)

    for n in range(1, wprec):
        hser = MatSeries(r, [hcoef.get(k, [[ZERO] * r for _ in range(r)]) for k in range(n)], 0, p, n + 1)
        hshift = hser.shift(nu)
        lhs = work.truncate(n + 1) * hshift
        acc = lhs.coeff_n(n)
        for k in range(1, n):
            if k in hcoef and (n - k) in bcoef:
                acc = mat_sub(acc, mat_mul(hcoef[k], bcoef[n - k]))
        bn = [[acc[i][j] if same_block(i, j) else ZERO for j in range(r)] for i in range(r)]
        hn = [[ZERO] * r for _ in range(r)]
        for _, lo_i, hi_i in groups:
            for _, lo_j, hi_j in groups:
                if lo_i == lo_j:
                    continue
                ci = [row[lo_i:hi_i] for row in bcoef[0][lo_i:hi_i]]
                cj = [row[lo_j:hi_j] for row in bcoef[0][lo_j:hi_j]]
                rhs = [[-acc[u][v] for v in range(lo_j, hi_j)] for u in range(lo_i, hi_i)]
                sol = _sylvester(ci, cj, rhs)
                for u in range(hi_i - lo_i):
                    for v in range(hi_j - lo_j):
                        hn[lo_i + u][lo_j + v] = sol[u][v]
        hcoef[n] = hn
        bcoef[n] = bn
    h = MatSeries(r, [hcoef[k] for k in range(wprec)], 0, p, wprec)
    hinv = h.inverse()
    total, total_inv = shear * p0s * h, hinv * p0inv * shear_inv
    blocks: list[SplitBlock] = []
    residue: list[str] = []
    subconj, subconj_inv = [], []
    split = gauge(mm, total, total_inv).phi
    for fac, lo, hi in groups:
        idx = list(range(lo, hi))
        sub = _sub(split, idx)
        if fac.deg == 1 and not fac.c[0]:
            inner = spectral_split(FormalModule(sub, nu), order)
            subconj.append(inner.conjugation)
            subconj_inv.append(inner.conjugation_inv)
            for b in inner.blocks:
                blocks.append(SplitBlock(b.omega, b.alpha, tuple(lo + i for i in b.indices), b.frakb, b.note))
            residue.extend(inner.residue)
        else:
            subconj.append(MatSeries.identity(hi - lo, big, p))
            subconj_inv.append(MatSeries.identity(hi - lo, big, p))
            if fac.deg == 1:
                alpha = -fac.c[0]
                fb = _frakb(sub, omega_max, alpha) if hi - lo == 1 else None
                blocks.append(SplitBlock(omega_max, alpha, tuple(idx), fb))
            else:
                residue.append(f"irrational leading factor {fac.to_str('a')} on indices {idx}")
    total = total * _block_diag(subconj, big, p)
    total_inv = _block_diag(subconj_inv, big, p) * total_inv
    split = gauge(mm, total, total_inv).phi
    for b in blocks:
        if len(b.indices) == 1 and b.alpha is not None:
            b.frakb = _frakb(_sub(split, b.indices), b.omega, b.alpha)
    blocks.sort(key=lambda b: b.indices)
    return SplitResult(split.ram, blocks, total, split, residue, total_inv)


def _diag_monomials(s: Sequence[int], p: int, prec: int) -> MatSeries:
    r = len(s)
    return MatSeries.from_entries(
        [[Puiseux.monomial(1, s[i], p, prec) if i == j else Puiseux.zero(prec, p)
          for j in range(r)] for i in range(r)])


# ---------------------------------------------------------------------------
# Good filtrations at infinity


@dataclass(frozen=True)
class FiltrationComponent:
    indices: tuple
    omega: Fraction
    alpha: GaussQ


@dataclass(frozen=True)
class FiltrationReport:
    ok: bool
    component: int | None = None
    level: Fraction | None = None
    message: str = ""


def adapted_phi(module, basis: MatSeries, order: int | None = None) -> MatSeries:
    """B^{-1} phi Phi*(B) for an adapted basis B given as columns."""
    if isinstance(module, DifferenceModule):
        fm = formal_at_infinity(module, order)
    else:
        fm = module
    p = lcm(fm.q, basis.ram)
    fm = ramified_pullback(fm, p)
    return gauge(fm, basis.with_ram(p)).phi


def good_filtration_check(module, basis: MatSeries, components: Sequence[FiltrationComponent],
                          d: Sequence, order: int | None = None) -> FiltrationReport:
    """Check (alpha^{-1} beta^{-omega} Phi* - (1 + b)) P_a subset beta^{-1} P_a per component.

    d holds deg^P of the basis vectors in units of the cover filtration, so that
    multiplying by x^{1/p} lowers the degree by one.
    """
    d = [Fraction(v) for v in d]
    mphi = adapted_phi(module, basis, order)
    p = mphi.ram
    ents = mphi.entries()
    r = len(ents)
    for ci, comp in enumerate(components):
        inside = set(comp.indices)
        alpha = GaussQ.of(comp.alpha)
        for i in sorted(comp.indices, key=lambda k: (d[k], k)):
            col = [ents[k][i].mul_xpow(comp.omega) * alpha.inverse() for k in range(r)]
            for k in range(r):
                if k not in inside and not col[k].is_zero():
                    return FiltrationReport(False, ci, d[i], f"Phi*(v_{i}) has a component along v_{k} outside its block")
            if len(comp.indices) == 1:
                fb = {e: a for e, a in col[i].terms() if 0 < e < 1}
            else:
                fb = {}
            one_b = Puiseux.from_terms({Fraction(0): 1, **fb}, col[i].precision, p)
            col[i] = col[i] - one_b
            for k in comp.indices:
                need = 1 + (d[k] - d[i]) / p
                f = col[k]
                if f.is_zero():
                    if f.precision < need:
                        raise PrecisionError(f"order too small to decide the level {d[i]}")
                    continue
                if f.val < need:
                    return FiltrationReport(False, ci, d[i],
                                            f"coefficient along v_{k} has valuation {f.val} < {need}")
    return FiltrationReport(True)
