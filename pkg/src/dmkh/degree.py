"""Parabolic degrees, slopes, induced submodules and stability of rank <= 2
parabolic difference modules; the two worked examples with closed forms."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import lcm
from typing import Sequence

from .algebra import (
    ONE,
    ZERO,
    GaussQ,
    MatSeries,
    Poly,
    PrecisionError,
    Puiseux,
    RatFunc,
    det_gauss,
    mat_inverse,
    nullspace,
)
from .difference import (
    DifferenceModule,
    FiniteParabolic,
    Lattice,
    ModuleError,
    apply_phi,
    default_order,
    lattice_degree,
    singularity_data,
    standard_parabolic,
)
from .formal import (
    FiltrationComponent,
    FormalModule,
    formal_at_infinity,
    good_filtration_check,
    newton_polygon,
    spectral_split,
)


class StabilityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ParabolicDifferenceModule:
    """Difference module with lattice chains at finite places and a filtered
    adapted basis at infinity.

    `basis` holds the adapted basis at infinity as columns over C((x^{1/p}));
    `d` holds deg^P of each column in units of the cover filtration.
    """

    module: DifferenceModule
    finite: tuple
    basis: MatSeries
    d: tuple
    components: tuple = ()
    order: int = 12
    notes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "finite", tuple(self.finite))
        object.__setattr__(self, "d", tuple(Fraction(v) for v in self.d))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.d) != self.module.rank or self.basis.n != self.module.rank:
            raise ModuleError("infinity data does not match the rank")

    @property
    def rank(self) -> int:
        return self.module.rank

    @property
    def ramification(self) -> int:
        return self.basis.ram


def make_pdm(module: DifferenceModule, finite: Sequence[FiniteParabolic], basis: MatSeries | None = None,
             d: Sequence | None = None, components: Sequence[FiltrationComponent] = (),
             order: int | None = None) -> ParabolicDifferenceModule:
    order = default_order() if order is None else order
    r = module.rank
    if basis is None:
        basis = MatSeries.identity(r, 10**6)
    if d is None:
        d = [0] * r
    return ParabolicDifferenceModule(module, tuple(finite), basis, tuple(d), tuple(components), order)


# ---------------------------------------------------------------------------
# Degrees


def filtered_bundle_degree_P1(pdm: ParabolicDifferenceModule) -> Fraction:
    """-v_inf(det B) - (1/p) sum_i d_i."""
    det = det_gauss(pdm.basis.entries())
    if det.is_zero():
        raise PrecisionError("adapted basis determinant vanishes to the working precision")
    return -det.val - sum(pdm.d, Fraction(0)) / pdm.ramification


def finite_contribution(pdm: ParabolicDifferenceModule) -> Fraction:
    T = pdm.module.T
    return sum(((1 - rec.weight / T) * rec.jump for rec in singularity_data(pdm.module, pdm.finite)), Fraction(0))


def slope_contribution(pdm: ParabolicDifferenceModule) -> Fraction:
    dec = newton_polygon(pdm.module)
    return -sum((w / 2 * r for w, r in dec.slopes().items()), Fraction(0))


def parabolic_degree(pdm: ParabolicDifferenceModule) -> Fraction:
    return filtered_bundle_degree_P1(pdm) + finite_contribution(pdm) + slope_contribution(pdm)


def slope(pdm: ParabolicDifferenceModule) -> Fraction:
    return parabolic_degree(pdm) / pdm.rank


def direct_sum(a: ParabolicDifferenceModule, b: ParabolicDifferenceModule) -> ParabolicDifferenceModule:
    """Direct sum of two pdms sharing lambda and T."""
    if a.module.lam != b.module.lam or a.module.T != b.module.T:
        raise ModuleError("summands must share lambda and T")
    ra, rb = a.rank, b.rank
    z = RatFunc()
    phi = [list(row) + [z] * rb for row in a.module.phi] + [[z] * ra + list(row) for row in b.module.phi]
    module = DifferenceModule(phi, a.module.lam, a.module.T)
    p = lcm(a.ramification, b.ramification)
    prec = min(a.basis.with_ram(p).prec, b.basis.with_ram(p).prec)
    ea, eb = a.basis.with_ram(p).entries(), b.basis.with_ram(p).entries()
    zero = Puiseux.zero(prec, p)
    ents = [list(row) + [zero] * rb for row in ea] + [[zero] * ra + list(row) for row in eb]
    d = [v * (p // a.ramification) for v in a.d] + [v * (p // b.ramification) for v in b.d]
    places = {}
    for src, off, rank in ((a, 0, ra), (b, ra, rb)):
        for fp in src.finite:
            places.setdefault(fp.place, []).append((src, off, rank, fp))
    finite = []
    for x, items in sorted(places.items(), key=lambda kv: kv[0].sort_key()):
        weights = sorted({t for *_, fp in items for t in fp.weights})
        lats = []
        for k in range(len(weights) + 1):
            blocks = []
            for src, off, rank, fp in items:
                # lattice of this summand after the k-th weight of the merged chain
                idx = sum(1 for t in fp.weights if k > 0 and t <= weights[k - 1])
                blocks.append((off, rank, fp.lattices[idx].matrix()))
            covered = {off for _, off, _, _ in items}
            for src, off, rank in ((a, 0, ra), (b, ra, rb)):
                if off not in covered:
                    blocks.append((off, rank, [[RatFunc.of(1 if i == j else 0) for j in range(rank)] for i in range(rank)]))
            n = ra + rb
            m = [[RatFunc() for _ in range(n)] for _ in range(n)]
            for off, rank, blk in blocks:
                for i in range(rank):
                    for j in range(rank):
                        m[off + i][off + j] = blk[i][j]
            lats.append(Lattice(x, m))
        finite.append(FiniteParabolic(x, tuple(weights), tuple(lats)))
    comps = list(a.components) + [FiltrationComponent(tuple(ra + i for i in c.indices), c.omega, c.alpha)
                                  for c in b.components]
    return ParabolicDifferenceModule(module, tuple(finite), MatSeries.from_entries(ents), tuple(d), tuple(comps),
                                     min(a.order, b.order))


# ---------------------------------------------------------------------------
# Invariant lines and induced structures


def _primitive(v: Sequence[RatFunc]) -> list[RatFunc]:
    den = Poly.const(1)
    for f in v:
        den = den * f.den // Poly.gcd(den, f.den)
    polys = [(f * RatFunc.of(den)).num for f in v]
    g = Poly()
    for p in polys:
        g = Poly.gcd(g, p) if not g.is_zero() else p.monic()
    return [RatFunc(p // g) for p in polys]


def invariant_factor(module: DifferenceModule, v: Sequence[RatFunc]) -> RatFunc:
    """c with Phi*(v) = c v, or ModuleError if span(v) is not invariant."""
    w = apply_phi(module, v)
    k = next((i for i, f in enumerate(v) if not f.is_zero()), None)
    if k is None:
        raise ModuleError("zero vector spans no line")
    c = w[k] / v[k]
    if any(w[i] != c * v[i] for i in range(len(v))):
        raise ModuleError("subspace is not Phi*-invariant")
    return c


def induced_submodule(pdm: ParabolicDifferenceModule, subspace: Sequence[Sequence]) -> ParabolicDifferenceModule:
    """Induced pdm on a Phi*-invariant subspace given by spanning vectors (rank 1 or full)."""
    vecs = [[RatFunc.of(a) for a in v] for v in subspace]
    if not vecs:
        raise ModuleError("empty subspace")
    if len(vecs) == pdm.rank:
        return pdm
    if len(vecs) != 1:
        raise StabilityError("only rank-one subspaces are supported")
    w = _primitive(vecs[0])
    c = invariant_factor(pdm.module, w)
    sub = DifferenceModule([[c]], pdm.module.lam, pdm.module.T)
    finite = []
    for fp in pdm.finite:
        lats = []
        for lat in fp.lattices:
            binv = mat_inverse(lat.matrix())
            coords = [sum((binv[i][j] * w[j] for j in range(pdm.rank)), RatFunc()) for i in range(pdm.rank)]
            m = min(f.val_at(fp.place) for f in coords if not f.is_zero())
            gen = RatFunc(Poly((-fp.place, 1))) ** (-m)
            lats.append(Lattice(fp.place, [[gen]], lat.prec))
        finite.append(FiniteParabolic(fp.place, fp.weights, tuple(lats)))
    p = pdm.ramification
    binv = pdm.basis.inverse().entries()
    prec = pdm.basis.prec
    ws = [f.series_at_infinity(prec) if not f.is_zero() else Puiseux.zero(prec) for f in w]
    coords = [sum((binv[i][j] * ws[j] for j in range(pdm.rank)), Puiseux.zero(10**9, p)) for i in range(pdm.rank)]
    dd = None
    for k, f in enumerate(coords):
        if f.is_zero():
            continue
        val = pdm.d[k] - p * f.val
        dd = val if dd is None else max(dd, val)
    if dd is None:
        raise PrecisionError("line vanishes in the adapted basis to the working precision")
    basis = MatSeries.identity(1, 10**6, p)
    dec = newton_polygon(sub)
    comps = [FiltrationComponent((0,), c0.omega, c0.alpha) for c0 in dec.components if c0.alpha is not None]
    return ParabolicDifferenceModule(sub, tuple(finite), basis, (dd,), tuple(comps), pdm.order)


# ---------------------------------------------------------------------------
# Stability


STABLE = "Stable"
SEMISTABLE = "Semistable"
UNSTABLE = "Unstable"
STABLE_UP_TO_BOUND = "StableUpToBound"


@dataclass
class Witness:
    name: str
    vector: tuple
    mu: Fraction


@dataclass
class StabilityVerdict:
    status: str
    mu_total: Fraction
    witness: Witness | None = None
    bound: int | None = None
    certified: bool = False
    candidates: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def default_degree_bound(module: DifferenceModule) -> int:
    pole = 0
    for row in module.phi:
        for f in row:
            if not f.is_zero():
                pole = max(pole, -f.v_inf())
    return 2 * pole + module.rank


def riccati_holds(module: DifferenceModule, g: RatFunc) -> bool:
    """m21 + m22 g' = g (m11 + m12 g') with g' = g(beta + nu)."""
    m = module.phi
    gs = g.shift(module.nu)
    return m[1][0] + m[1][1] * gs == g * (m[0][0] + m[0][1] * gs)


def _line_name(g: RatFunc | None) -> str:
    if g is None:
        return "e2"
    if g.is_zero():
        return "e1"
    s = g.to_str("b")
    return f"e1 + ({s}) e2"


def _line_vector(g: RatFunc | None) -> tuple:
    if g is None:
        return (RatFunc(), RatFunc.of(1))
    return (RatFunc.of(1), g)


def _is_square_over_c(f: RatFunc) -> bool:
    n = f.num.monic() if not f.num.is_zero() else f.num
    return n.sqrt_exact() is not None and f.den.sqrt_exact() is not None


def pade(series: Puiseux, bound: int) -> RatFunc | None:
    """Rational g(beta) with deg num, deg den <= bound matching a series in x = 1/beta."""
    if series.ram != 1:
        return None
    top = series.prec
    # unknown denominator coefficients d_0..d_bound; (D g) has no terms x^e for 1 <= e < top - bound
    rows = []
    for e in range(1, top - bound):
        rows.append([series.coeff_n(e + k) if e + k < top else ZERO for k in range(bound + 1)])
    if len(rows) < bound + 1:
        return None
    ns = nullspace(rows)
    if not ns:
        return None
    best = None
    for v in ns:
        deg = max(k for k in range(bound + 1) if v[k])
        if best is None or deg < best[0]:
            best = (deg, v)
    dcoef = best[1]
    den = Poly(dcoef)
    # numerator: coefficients of x^e for e <= 0 in D g, i.e. beta^{-e}
    num = [ZERO] * (bound + 1)
    for k in range(bound + 1):
        if not dcoef[k]:
            continue
        for e, a in series.terms():
            if e.denominator != 1:
                return None
            idx = int(e) - k
            if idx <= 0 and -idx <= bound:
                num[-idx] = num[-idx] + dcoef[k] * a
    return RatFunc(Poly(num), den)


def _candidate_lines(module: DifferenceModule, bound: int, notes: list) -> tuple[list, bool]:
    """Verified invariant lines (g or None for e2) and whether the list is complete."""
    m = module.phi
    found: list = []
    if m[0][1].is_zero():
        found.append(None)
    if not module.nu:
        a = m[0][1]
        b = m[0][0] - m[1][1]
        c = -m[1][0]
        if a.is_zero():
            if not b.is_zero():
                found.append(-c / b)
                return found, True
            if c.is_zero():
                notes.append("phi is scalar; every line is invariant, only coordinate lines examined")
                found.append(RatFunc())
                return found, False
            return found, True
        disc = b * b - a * c * 4
        root = disc.sqrt_exact()
        if root is None:
            if _is_square_over_c(disc):
                notes.append("eigenlines are defined over a quadratic extension of Q(i)")
                return found, False
            return found, True
        for sgn in (1, -1):
            g = (-b + root * sgn) / (a * 2)
            if g not in found:
                found.append(g)
        return found, True
    # nu != 0: formal invariant lines from the block splitting, rebuilt by Pade
    order = max(2 * bound + 12, default_order())
    fm = formal_at_infinity(module, order)
    split = spectral_split(fm, order)
    if len(split.blocks) != 2 or split.residue:
        notes.append("formal lines not separated; no rational candidates")
        return found, False
    h = split.conjugation.entries()
    complete = True
    for j in range(2):
        top, bot = h[0][j], h[1][j]
        if top.is_zero():
            continue
        g_series = (bot * top.inverse()).simplify_ram()
        g = pade(g_series, bound)
        if g is not None and riccati_holds(module, g):
            if g not in found:
                found.append(g)
        else:
            complete = False
    return found, complete


def stability_check(pdm: ParabolicDifferenceModule, degree_bound: int | None = None) -> StabilityVerdict:
    r = pdm.rank
    mu = slope(pdm)
    if r == 1:
        return StabilityVerdict(STABLE, mu, certified=True)
    if r > 2:
        raise StabilityError("stability search supports rank <= 2")
    bound = default_degree_bound(pdm.module) if degree_bound is None else degree_bound
    dec = newton_polygon(pdm.module)
    if dec.ramification > 1 and len(dec.slopes()) == 1:
        return StabilityVerdict(STABLE, mu, bound=bound, certified=True,
                                notes=["slope decomposition at infinity is ramified and irreducible"])
    notes: list = []
    lines, complete = _candidate_lines(pdm.module, bound, notes)
    cands = []
    for g in lines:
        vec = _line_vector(g)
        sub = induced_submodule(pdm, [vec])
        cands.append(Witness(_line_name(g), vec, parabolic_degree(sub)))
    best = None
    for wit in sorted(cands, key=lambda w: w.name):
        if best is None or wit.mu > best.mu:
            best = wit
    if best is not None and best.mu > mu:
        return StabilityVerdict(UNSTABLE, mu, best, bound, True, cands, notes)
    if best is not None and best.mu == mu:
        return StabilityVerdict(SEMISTABLE, mu, best, bound, complete, cands, notes)
    if complete:
        return StabilityVerdict(STABLE, mu, None, bound, True, cands, notes)
    return StabilityVerdict(STABLE_UP_TO_BOUND, mu, None, bound, False, cands, notes)


# ---------------------------------------------------------------------------
# Worked examples


@dataclass
class ExampleResult:
    pdm: ParabolicDifferenceModule
    closed_form: Fraction
    warnings: list = field(default_factory=list)


def build_example_A(S: Sequence, ell: Sequence[int], weights: Sequence, d: Sequence, T=1,
                    order: int | None = None) -> ExampleResult:
    """phi = [[0, P], [1, 0]] with P = prod (beta - a)^ell(a), lambda = 0.

    Even total ell: d = (d1, d2) on v = s e1 +- e2, s = P^{1/2}.
    Odd total ell: d = (d,) used on both vectors over the double cover.
    """
    order = default_order() if order is None else order
    S = [GaussQ.of(a) for a in S]
    T = Fraction(T)
    weights = [Fraction(t) for t in weights]
    if not (len(S) == len(ell) == len(weights)) or len(set(S)) != len(S):
        raise ModuleError("S, ell and weights must match and S must be distinct")
    if any(l <= 0 for l in ell):
        raise ModuleError("ell(a) must be positive")
    warnings = []
    if all(l % 2 == 0 for l in ell):
        warnings.append("all ell(a) even: the stability statement does not apply")
    P = Poly.const(1)
    for a, l in zip(S, ell):
        P = P * Poly((-a, 1)) ** l
    b = RatFunc.of(P)
    module = DifferenceModule([[0, b], [1, 0]], 0, T)
    finite = [standard_parabolic(module, a, t) for a, t in zip(S, weights)]
    total = sum(ell)
    s = b.series_at_infinity(order).power(Fraction(1, 2))
    p = s.ram
    one = Puiseux.const(1, s.prec, p)
    basis = MatSeries.from_entries([[s, s], [one, -one]])
    omega = Fraction(total, 2)
    comps = (FiltrationComponent((0,), omega, ONE), FiltrationComponent((1,), omega, GaussQ(-1)))
    weighted = sum(((1 - t / T) * l for t, l in zip(weights, ell)), Fraction(0))
    if total % 2 == 0:
        if len(d) != 2:
            raise ModuleError("even case takes (d1, d2)")
        d1, d2 = Fraction(d[0]), Fraction(d[1])
        dvec = (d1, d2)
        closed = -d1 - d2 - weighted
    else:
        if len(d) != 1:
            raise ModuleError("odd case takes a single d")
        dd = Fraction(d[0])
        dvec = (dd, dd)
        closed = -dd - weighted
    pdm = ParabolicDifferenceModule(module, tuple(finite), basis, dvec, comps, order, tuple(warnings))
    return ExampleResult(pdm, closed, warnings)


def build_example_B(roots: Sequence, Q: Poly, weights: Sequence, d: Sequence, lc_p=1, T=1,
                    order: int | None = None) -> ExampleResult:
    """phi = [[0, P], [-1, Q]] with P = lc_p prod (beta - a), lambda = 0."""
    order = default_order() if order is None else order
    roots = [GaussQ.of(a) for a in roots]
    lc_p = GaussQ.of(lc_p)
    T = Fraction(T)
    Q = Poly.of(Q)
    weights = [Fraction(t) for t in weights]
    if len(set(roots)) != len(roots):
        raise ModuleError("P must have simple zeros")
    if len(weights) != len(roots):
        raise ModuleError("one weight per zero of P")
    if not lc_p:
        raise ModuleError("P must be nonzero")
    if Q.is_zero():
        raise ModuleError("Q must be nonzero")
    P = Poly.from_roots(roots, lc_p)
    if (P.deg, Q.deg) == (0, 0):
        raise ModuleError("(deg P, deg Q) must differ from (0, 0)")
    if 2 * Q.deg < P.deg:
        raise ModuleError("need 2 deg Q >= deg P")
    if 2 * Q.deg == P.deg and Q.lc * Q.lc - P.lc * 4 == 0:
        raise ModuleError("degenerate leading data q^2 - 4p = 0")
    Pr, Qr = RatFunc.of(P), RatFunc.of(Q)
    module = DifferenceModule([[0, Pr], [-1, Qr]], 0, T)
    finite = [standard_parabolic(module, a, t) for a, t in zip(roots, weights)]
    extra = P.deg + 2 * Q.deg
    ps = Pr.series_at_infinity(order + extra)
    qs = Qr.series_at_infinity(order + extra)
    inner = (1 - ps * (qs * qs).inverse() * 4)
    try:
        root = inner.power(Fraction(1, 2))
    except Exception as exc:
        raise ModuleError("eigenvalue expansion needs a square root outside Q(i)") from exc
    a1 = (qs + qs * root) * Fraction(1, 2)
    a2 = ps * a1.inverse()
    basis = MatSeries.from_entries([[ps, ps], [a1, a2]])
    comps = (FiltrationComponent((0,), -a1.val, a1.lc), FiltrationComponent((1,), -a2.val, a2.lc))
    d1, d2 = Fraction(d[0]), Fraction(d[1])
    closed = Fraction(P.deg, 2) + Q.deg - d1 - d2 - sum(((1 - t / T) for t in weights), Fraction(0))
    pdm = ParabolicDifferenceModule(module, tuple(finite), basis, (d1, d2), comps, order)
    return ExampleResult(pdm, closed, [])


def check_infinity_data(pdm: ParabolicDifferenceModule):
    """good_filtration_check on the stored components."""
    return good_filtration_check(pdm.module, pdm.basis, pdm.components, pdm.d, pdm.order)
