"""Closed-form rank-one model monopoles on S^1_T x C_w (and its p-fold covers).

Every field is a sympy expression in real coordinates (t, X, Y) with
w_p = X + iY and w = w_p^p.  Derivatives come from the closed forms; numerical
work is double precision.

Conventions.  Metric dt^2 + dw dwbar with orientation dt dx dy.  A monopole is
(h, A, phi) in a frame e with h(e, e) = H; the mini-holomorphic operators at
lambda are
    d_{beta1bar} = ((i lam / 2) nabla_t + nabla_wbar - (lam / 2) phi) / (1 + |lam|^2)
    d_{t1}       = ((1 - |lam|^2) nabla_t - 2 i lam nabla_w + 2 i conj(lam) nabla_wbar) / (1 + |lam|^2) - i phi
and chart (t1, beta1) = (t + Im(lam wbar), w + 2 i lam t + lam^2 wbar).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .algebra import GaussQ

t_, X_, Y_ = sp.symbols("t X Y", real=True)
I = sp.I


class DomainError(ValueError):
    pass


class UnsupportedError(ValueError):
    pass


def _sym(c) -> sp.Expr:
    if isinstance(c, GaussQ):
        return sp.Rational(c.re.numerator, c.re.denominator) + I * sp.Rational(c.im.numerator, c.im.denominator)
    if isinstance(c, Fraction):
        return sp.Rational(c.numerator, c.denominator)
    if isinstance(c, (int, sp.Basic)):
        return sp.sympify(c)
    if isinstance(c, str):
        return _sym(GaussQ.of(c))
    c = complex(c)
    if c.imag == 0:
        return sp.Float(c.real, 17)
    return sp.Float(c.real, 17) + I * sp.Float(c.imag, 17)


def _cx(c) -> complex:
    if isinstance(c, GaussQ):
        return c.to_complex()
    return complex(c)


# ---------------------------------------------------------------------------
# Hodge star


def hodge_identities() -> dict:
    """Star relations on (dt, dx, dy), checked exactly with sympy.

    2-forms are stored on the basis (dt dx, dt dy, dx dy) and 1-forms on (dt, dx, dy).
    """
    star2 = sp.Matrix([[0, 0, 1], [0, -1, 0], [1, 0, 0]])  # columns: images of dtdx, dtdy, dxdy
    star1 = star2.T  # *dt = dxdy, *dx = -dtdy, *dy = dtdx
    # 2-forms built from complex 1-forms dw = dx + i dy
    dt_dw = sp.Matrix([1, I, 0])
    dt_dwb = sp.Matrix([1, -I, 0])
    dw_dwb = sp.Matrix([0, 0, -2 * I])
    dw = sp.Matrix([0, 1, I])
    dwb = sp.Matrix([0, 1, -I])
    dt = sp.Matrix([1, 0, 0])
    checks = {
        "star(dt dw) = -i dw": sp.simplify(star2 * dt_dw - (-I) * dw) == sp.zeros(3, 1),
        "star(dt dwbar) = i dwbar": sp.simplify(star2 * dt_dwb - I * dwb) == sp.zeros(3, 1),
        "star(dw dwbar) = -2i dt": sp.simplify(star2 * dw_dwb - (-2 * I) * dt) == sp.zeros(3, 1),
        "star star = id on 1-forms": star2 * star1 == sp.eye(3),
    }
    return {"identities": checks, "ok": all(checks.values())}


# ---------------------------------------------------------------------------
# Models


@dataclass
class ModelMonopole:
    """Rank-one model with symbolic fields.

    exprs: At, Aw, Awb, phi, logH, and optionally frame exponent E, stated
    log-norm, and the cocycle data (identification and stated factor, as logs).
    """

    family: str
    params: dict
    lam: complex
    T: float
    p: int
    exprs: dict
    region: Callable | None = None

    @property
    def L(self) -> float:
        return 1 + abs(self.lam) ** 2

    # derivative operators on expressions in (t, X, Y)
    def _dwp(self, e):
        return (sp.diff(e, X_) - I * sp.diff(e, Y_)) / 2

    def _dwpb(self, e):
        return (sp.diff(e, X_) + I * sp.diff(e, Y_)) / 2

    def d_t(self, e):
        return sp.diff(e, t_)

    def d_w(self, e):
        wp = X_ + I * Y_
        return self._dwp(e) / (self.p * wp ** (self.p - 1))

    def d_wb(self, e):
        wpb = X_ - I * Y_
        return self._dwpb(e) / (self.p * wpb ** (self.p - 1))

    def _lam(self):
        lam = self.params.get("_lam_sym")
        return lam if lam is not None else _sym(self.lam)

    def _f(self, e):
        return sp.lambdify((t_, X_, Y_), e, "numpy")

    @cached_property
    def fields(self) -> dict:
        ex = self.exprs
        At, Aw, Awb, phi = ex["At"], ex["Aw"], ex["Awb"], ex["phi"]
        out = {
            "At": At, "Aw": Aw, "Awb": Awb, "phi": phi,
            "F_tw": self.d_t(Aw) - self.d_w(At),
            "F_twb": self.d_t(Awb) - self.d_wb(At),
            "F_wwb": self.d_w(Awb) - self.d_wb(Aw),
            "Dt_phi": self.d_t(phi),
            "Dw_phi": self.d_w(phi),
            "Dwb_phi": self.d_wb(phi),
        }
        return out

    @cached_property
    def numeric(self) -> dict:
        return {k: self._f(v) for k, v in self.fields.items()}

    # ------------------------------------------------------------------
    def _eval(self, name, pts):
        t, X, Y = pts
        val = self.numeric[name](t, X, Y)
        return np.broadcast_to(np.asarray(val, dtype=complex), np.shape(t))

    def check_domain(self, pts):
        t, X, Y = (np.atleast_1d(np.asarray(a, dtype=float)) for a in pts)
        if np.any(np.hypot(X, Y) == 0):
            raise DomainError("w = 0 is outside the domain")
        if self.region is not None and not np.all(self.region(t, X, Y)):
            raise DomainError("point outside the admissible region")
        return t, X, Y


def _chart1(lam: complex, t, w):
    t1 = t + np.imag(lam * np.conj(w))
    b1 = w + 2j * lam * t + lam * lam * np.conj(w)
    return t1, b1


def chart_to_1(lam, t, w):
    return _chart1(complex(lam), np.asarray(t, dtype=float), np.asarray(w, dtype=complex))


def chart_from_1(lam, t1, b1):
    lam = complex(lam)
    L = 1 + abs(lam) ** 2
    w = (np.asarray(b1, dtype=complex) - 2j * lam * np.asarray(t1, dtype=float)) / L
    t = np.asarray(t1, dtype=float) - np.imag(lam * np.conj(w))
    return t, w


def _t1_beta1(lam, p):
    wp, wpb = X_ + I * Y_, X_ - I * Y_
    w, wb = wp ** p, wpb ** p
    lamb = sp.conjugate(lam)
    t1 = t_ + (lam * wb - lamb * w) / (2 * I)
    b1 = w + 2 * I * lam * t_ + lam ** 2 * wb
    return t1, b1, w, wb


def _region_large_w(lam: complex, T: float, p: int):
    """|2 lam (t1 + T)| and |2 lam t1| below half of |beta1 - 2 i lam t1|."""
    L = 1 + abs(lam) ** 2

    def ok(t, X, Y):
        w = (X + 1j * Y) ** p
        t1 = t + np.imag(lam * np.conj(w))
        den = L * np.abs(w)
        return (np.abs(2 * lam * (t1 + T)) < den / 2) & (np.abs(2 * lam * t1) < den / 2)

    return ok


def basic_lp_ell(p: int, ell: int, lam=0, T=1.0) -> ModelMonopole:
    """L*_p(ell): A = c t/2 (dwbar/wbar - dw/w), phi = i c log|w|, c = ell/(pT)."""
    if p < 1:
        raise ValueError("p must be positive")
    lam_c, T = _cx(lam), float(T)
    lam_s, Ts = _sym(lam), sp.nsimplify(T)
    c = sp.Rational(ell, p) / Ts
    wp, wpb = X_ + I * Y_, X_ - I * Y_
    w, wb = wp ** p, wpb ** p
    logabsw = sp.Rational(p, 2) * sp.log(X_ ** 2 + Y_ ** 2)
    ex = {
        "At": sp.Integer(0),
        "Aw": -c * t_ / (2 * w),
        "Awb": c * t_ / (2 * wb),
        "phi": I * c * logabsw,
        "logH": sp.Integer(0),
    }
    logabswp = sp.log(X_ ** 2 + Y_ ** 2) / 2
    ident = ell * (logabswp - sp.log(wp))
    if lam_c == 0:
        ex["E"] = -c * t_ * logabsw
        ex["lognorm"] = -sp.Rational(ell, p) * t_ / Ts * logabsw
        ex["ident"] = ident
        ex["factor"] = -ell * sp.log(wp)
        region = None
    else:
        lamb = sp.conjugate(lam_s)
        Ls = 1 + lam_s * lamb
        t1, b1, _, _ = _t1_beta1(lam_s, p)
        xi, xib = I * t_ + lam_s * wb, -I * t_ + lamb * w
        eta, etab = w + I * lam_s * t_, wb - I * lamb * t_
        logabs = sp.log((etab + lamb * xi) * (eta + lam_s * xib)) / 2
        Ev = (-c * (xi - xib) * logabs / (2 * I)
              + c / Ls * (-lamb / (2 * I) * (eta + lam_s * xib) * logabs
                          - lam_s / (2 * I) * (etab + lamb * xi) * logabs
                          - lam_s * I / 2 * (1 + sp.log(Ls)) * (etab + lamb * xi)
                          - lamb * I / 2 * (1 + sp.log(Ls)) * (eta + lam_s * xib)))
        log1m = -sp.log(1 + 2 * I * lam_s * t1 / (b1 - 2 * I * lam_s * t1))
        ex["E"] = Ev + c * (t1 * sp.log(Ls) + b1 / (2 * I * lam_s) * log1m + t1)
        ex["lognorm"] = -t1 * c * logabsw + c * sp.re(b1 / (2 * I * lam_s) * log1m + t1)
        ex["ident"] = ident
        x = 2 * I * lam_s * Ts / b1
        Gx = 1 - sp.log(1 + x) / x
        ex["factor"] = (-ell * sp.log(wp)
                        - sp.Rational(ell, p) * sp.log(1 + 2 * I * lam_s * (t1 + Ts) / (Ls * w))
                        + sp.Rational(ell, p) * Gx)
        region = _region_large_w(lam_c, T, p)
    params = {"p": p, "ell": ell, "_lam_sym": lam_s}
    return ModelMonopole("lp-ell", params, lam_c, T, p, ex, region)


def frobenius(coeffs: Sequence, p: int = 1, lam=0, T=1.0) -> ModelMonopole:
    """L(a) for a = sum_k coeffs[k] w_p^k with a(0) = 0 and deg a <= p.

    A = -i (f + conj f) dt, phi = f - conj f with f = d a / d w.
    """
    coeffs = [_sym(c) for c in coeffs]
    if coeffs and coeffs[0] != 0:
        raise ValueError("a(0) must vanish")
    if len(coeffs) - 1 > p:
        raise ValueError("deg a must be <= p")
    lam_c = _cx(lam)
    lam_s = _sym(lam)
    Ts = sp.nsimplify(T)
    wp, wpb = X_ + I * Y_, X_ - I * Y_
    w = wp ** p

    def a_of(z):
        return sum((ck * z ** k for k, ck in enumerate(coeffs)), sp.Integer(0))

    def ab_of(z):
        return sum((sp.conjugate(ck) * z ** k for k, ck in enumerate(coeffs)), sp.Integer(0))

    f = sum((k * ck * wp ** (k - p) for k, ck in enumerate(coeffs) if k), sp.Integer(0)) / p
    fb = sum((k * sp.conjugate(ck) * wpb ** (k - p) for k, ck in enumerate(coeffs) if k), sp.Integer(0)) / p
    ex = {"At": -I * (f + fb), "Aw": sp.Integer(0), "Awb": sp.Integer(0), "phi": f - fb, "logH": sp.Integer(0)}
    if lam_c == 0:
        ex["E"] = 2 * I * t_ * f
        ex["factor"] = 2 * I * Ts * f
        region = None
    else:
        lamb = sp.conjugate(lam_s)
        Ls = 1 + lam_s * lamb
        t1, b1, _, _ = _t1_beta1(lam_s, p)
        wp1 = wp * (1 + 2 * I * lam_s * t1 / (Ls * w)) ** sp.Rational(1, p)
        wp2 = wp * (1 + 2 * I * lam_s * (t1 + Ts) / (Ls * w)) ** sp.Rational(1, p)
        ex["E"] = -lam_s * ab_of(wpb) + lamb * a_of(wp) - (1 / lam_s + lamb) * (a_of(wp) - a_of(wp1))
        ex["factor"] = (1 / lam_s + lamb) * (a_of(wp2) - a_of(wp1))
        region = _region_large_w(lam_c, float(T), p)
    ex["ident"] = sp.Integer(0)
    params = {"coeffs": [str(c) for c in coeffs], "p": p, "_lam_sym": lam_s}
    return ModelMonopole("frobenius", params, lam_c, float(T), p, ex, region)


def tame(a, alpha, lam=0, T=1.0) -> ModelMonopole:
    """L(a, alpha): h(e, e) = |w|^{2a}, A = a dw/w + i (alpha/w + conj(alpha)/wbar) dt,
    phi = -alpha/w + conj(alpha)/wbar."""
    a_s, al = _sym(a), _sym(alpha)
    alb = sp.conjugate(al)
    lam_c, lam_s = _cx(lam), _sym(lam)
    Ts = sp.nsimplify(T)
    w, wb = X_ + I * Y_, X_ - I * Y_
    logabs2 = sp.log(X_ ** 2 + Y_ ** 2)
    ex = {
        "At": I * (al / w + alb / wb),
        "Aw": a_s / w,
        "Awb": sp.Integer(0),
        "phi": -al / w + alb / wb,
        "logH": a_s * logabs2,
        "ident": sp.Integer(0),
    }
    if lam_c == 0:
        ex["E"] = -2 * I * al * t_ / w
        ex["factor"] = -2 * I * al * Ts / w
        region = lambda t, X, Y: np.hypot(X, Y) > 1  # noqa: E731
    else:
        lamb = sp.conjugate(lam_s)
        t1, b1, _, _ = _t1_beta1(lam_s, 1)
        cst = -al + lam_s * a_s + lam_s ** 2 * alb
        log_ratio = -sp.log(1 + 2 * I * lam_s * t1 / (b1 - 2 * I * lam_s * t1))
        ex["E"] = alb * lam_s * logabs2 - cst / lam_s * log_ratio
        ex["factor"] = (-al / lam_s + a_s + lam_s * alb) * sp.log(1 + 2 * I * lam_s * Ts / b1)
        big = _region_large_w(lam_c, float(T), 1)
        region = lambda t, X, Y: big(t, X, Y) & (np.hypot(X, Y) > 1)  # noqa: E731
    params = {"a": str(a_s), "alpha": str(al), "_lam_sym": lam_s}
    return ModelMonopole("tame", params, lam_c, float(T), 1, ex, region)


def global_gamma(gamma, lam=0, T=1.0) -> ModelMonopole:
    """L(gamma): flat, A = -i (gamma + conj gamma) dt, phi = gamma - conj gamma."""
    g = _sym(gamma)
    gb = sp.conjugate(g)
    lam_c, lam_s = _cx(lam), _sym(lam)
    lamb = sp.conjugate(lam_s)
    Ls = 1 + lam_s * lamb
    Ts = sp.nsimplify(T)
    t1, b1, _, _ = _t1_beta1(lam_s, 1)
    b1b = sp.conjugate(b1)
    ex = {
        "At": -I * (g + gb),
        "Aw": sp.Integer(0),
        "Awb": sp.Integer(0),
        "phi": g - gb,
        "logH": sp.Integer(0),
        "E": (-lam_s * gb * b1b + lamb * g * b1 + 2 * I * (g - lam_s * lamb * gb) * t1) / Ls,
        "lognorm": -2 * sp.im(g) * t1,
        "ident": sp.Integer(0),
        "factor": 2 * I * g * Ts,
    }
    params = {"gamma": str(g), "_lam_sym": lam_s}
    return ModelMonopole("gamma", params, lam_c, float(T), 1, ex, None)


def custom_rank1(At, Aw, Awb, phi, logH=0, lam=0, T=1.0) -> ModelMonopole:
    """Arbitrary rank-one data in (t, X, Y); used to test operator identities off-shell."""
    ex = {k: sp.sympify(v) for k, v in dict(At=At, Aw=Aw, Awb=Awb, phi=phi, logH=logH).items()}
    return ModelMonopole("custom", {"_lam_sym": _sym(lam)}, _cx(lam), float(T), 1, ex, None)


def gauge_transform(model: ModelMonopole, theta) -> ModelMonopole:
    """Unitary change of frame e' = e exp(i theta), theta real and T-periodic in t.

    A' = A + i d theta; sections keep their values, so frame exponents shift by -i theta.
    """
    theta = sp.sympify(theta)
    ex = dict(model.exprs)
    ex["At"] = ex["At"] + I * model.d_t(theta)
    ex["Aw"] = ex["Aw"] + I * model.d_w(theta)
    ex["Awb"] = ex["Awb"] + I * model.d_wb(theta)
    if "E" in ex:
        ex["E"] = ex["E"] - I * theta
    params = dict(model.params, gauge=str(theta))
    return ModelMonopole(model.family, params, model.lam, model.T, model.p, ex, model.region)


def default_gauge(T: float = 1.0) -> sp.Expr:
    return sp.sin(2 * sp.pi * t_ / sp.nsimplify(T)) * sp.cos(X_ / 4) * sp.sin(Y_ / 3)


SYMBOLS = (t_, X_, Y_)


# ---------------------------------------------------------------------------
# Sampling


def sample_points(model: ModelMonopole, n: int, radius: float | None = None, seed_skip: int = 1):
    """Deterministic Halton points (t, X, Y) in the admissible region.

    For lambda != 0 points are drawn in the (t1, beta1) chart with |beta1| large
    and mapped back; branches of w_p are spread over the p sheets.
    """
    from scipy.stats import qmc

    lam, T, p = model.lam, model.T, model.p
    L = 1 + abs(lam) ** 2
    R0 = radius if radius is not None else max(4.0, 16 * abs(lam) * (T + 1)) * L
    u = qmc.Halton(d=4, scramble=False).random(n + seed_skip)[seed_skip:]
    t1 = u[:, 0] * T
    R = R0 * (1 + u[:, 1])
    th = 2 * np.pi * u[:, 2]
    b1 = R * np.exp(1j * th)
    t, w = chart_from_1(lam, t1, b1)
    k = np.floor(u[:, 3] * p)
    wp = np.abs(w) ** (1 / p) * np.exp(1j * (np.angle(w) + 2 * np.pi * k) / p)
    return t, wp.real, wp.imag


# ---------------------------------------------------------------------------
# Bogomolny residual


def bogomolny_components(model: ModelMonopole, pts):
    t, X, Y = model.check_domain(pts)
    ev = lambda k: model._eval(k, (t, X, Y))  # noqa: E731
    r_t = -2j * ev("F_wwb") - ev("Dt_phi")
    r_w = -1j * ev("F_tw") - ev("Dw_phi")
    r_wb = 1j * ev("F_twb") - ev("Dwb_phi")
    return r_t, r_w, r_wb


def bogomolny_residual(model: ModelMonopole, pts) -> np.ndarray:
    """|star F - nabla phi| (max over dt, dw, dwbar components) at each point."""
    r = bogomolny_components(model, pts)
    return np.max(np.abs(np.vstack([np.atleast_1d(c) for c in r])), axis=0)


# ---------------------------------------------------------------------------
# Finite-difference cross-check of curvature and nabla phi


_FD_KEYS = ("F_tw", "F_twb", "F_wwb", "Dt_phi", "Dw_phi", "Dwb_phi")


def _fd_fields(model: ModelMonopole, t, X, Y, h):
    f = {k: model.numeric[k] for k in ("At", "Aw", "Awb", "phi")}

    def val(k, tt, xx, yy):
        return np.broadcast_to(np.asarray(f[k](tt, xx, yy), dtype=complex), np.shape(tt))

    def dt(k):
        return (val(k, t + h, X, Y) - val(k, t - h, X, Y)) / (2 * h)

    def dX(k):
        return (val(k, t, X + h, Y) - val(k, t, X - h, Y)) / (2 * h)

    def dY(k):
        return (val(k, t, X, Y + h) - val(k, t, X, Y - h)) / (2 * h)

    p = model.p
    wp = X + 1j * Y
    jw = 1 / (p * wp ** (p - 1))
    jwb = 1 / (p * np.conj(wp) ** (p - 1))
    dw = lambda k: (dX(k) - 1j * dY(k)) / 2 * jw  # noqa: E731
    dwb = lambda k: (dX(k) + 1j * dY(k)) / 2 * jwb  # noqa: E731
    return {
        "F_tw": dt("Aw") - dw("At"),
        "F_twb": dt("Awb") - dwb("At"),
        "F_wwb": dw("Awb") - dwb("Aw"),
        "Dt_phi": dt("phi"),
        "Dw_phi": dw("phi"),
        "Dwb_phi": dwb("phi"),
    }


def fd_error(model: ModelMonopole, pts, h: float) -> float:
    t, X, Y = model.check_domain(pts)
    fd = _fd_fields(model, t, X, Y, h)
    err = 0.0
    for k in _FD_KEYS:
        exact = model._eval(k, (t, X, Y))
        err = max(err, float(np.max(np.abs(fd[k] - exact))))
    return err


@dataclass
class FdReport:
    errors: tuple
    ratio: float | None
    exact: bool


def fd_convergence(model: ModelMonopole, pts, hs=(1e-2, 5e-3)) -> FdReport:
    """Central differences at h and h/2; ratio ~ 4 for an O(h^2) scheme.

    A difference error below 1e-13 at the coarse step means the fields are
    polynomial of degree <= 2 in each direction, so the scheme is exact.
    """
    errs = tuple(fd_error(model, pts, h) for h in hs)
    if errs[0] < 1e-13:
        return FdReport(errs, None, True)
    return FdReport(errs, errs[0] / errs[1], False)


# ---------------------------------------------------------------------------
# Frames


@dataclass
class FrameReport:
    holomorphic: np.ndarray
    norm: np.ndarray | None
    cocycle: np.ndarray

    def max(self) -> dict:
        return {
            "holomorphic": float(np.max(self.holomorphic)),
            "norm": None if self.norm is None else float(np.max(self.norm)),
            "cocycle": float(np.max(self.cocycle)),
        }


def _frame_numeric(model: ModelMonopole) -> dict:
    cache = model.__dict__.setdefault("_frame_cache", {})
    if cache:
        return cache
    ex = model.exprs
    if "E" not in ex:
        raise UnsupportedError(f"family {model.family} has no frame")
    lam = model._lam()
    lamb = sp.conjugate(lam)
    Ls = 1 + lam * lamb
    E = ex["E"]
    Et, Ew, Ewb = model.d_t(E), model.d_w(E), model.d_wb(E)
    At, Aw, Awb, phi = ex["At"], ex["Aw"], ex["Awb"], ex["phi"]
    dbar = (I * lam / 2 * (Et + At) + Ewb + Awb - lam / 2 * phi) / Ls
    dt1 = ((1 - lam * lamb) * (Et + At) - 2 * I * lam * (Ew + Aw) + 2 * I * lamb * (Ewb + Awb)) / Ls - I * phi
    cache["dbar"] = model._f(dbar)
    cache["dt1"] = model._f(dt1)
    cache["E"] = model._f(E)
    cache["logH"] = model._f(ex["logH"])
    cache["lognorm"] = model._f(ex["lognorm"]) if "lognorm" in ex else None
    cache["ident"] = model._f(ex["ident"])
    cache["factor"] = model._f(ex["factor"])
    return cache


def frame_check(model: ModelMonopole, pts) -> FrameReport:
    """Mini-holomorphicity of the frame, its norm formula and its gluing cocycle."""
    t, X, Y = model.check_domain(pts)
    if model.region is not None and not np.all(model.region(t + model.T, X, Y)):
        raise DomainError("shifted point leaves the admissible region")
    fn = _frame_numeric(model)

    def ev(name, tt=t):
        return np.broadcast_to(np.asarray(fn[name](tt, X, Y), dtype=complex), np.shape(t))

    hol = np.abs(ev("dbar")) + np.abs(ev("dt1"))
    norm = None
    if fn["lognorm"] is not None:
        lognorm = ev("E").real + ev("logH").real / 2
        norm = np.abs(np.exp(lognorm - ev("lognorm").real) - 1)
    d = ev("E", t + model.T) + ev("ident") - ev("E") - ev("factor")
    coc = np.abs(np.exp(d) - 1)
    return FrameReport(hol, norm, coc)


def g_function(x: complex) -> complex:
    """G(x) = 1 - log(1 + x)/x."""
    x = complex(x)
    if x == 0:
        return 0j
    return 1 - np.log(1 + x) / x


# ---------------------------------------------------------------------------
# G(h) operator identity


@dataclass
class GReport:
    deviation: np.ndarray
    printed_sign_deviation: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray


def _g_numeric(model: ModelMonopole) -> dict:
    cache = model.__dict__.setdefault("_g_cache", {})
    if cache:
        return cache
    ex = model.exprs
    lam = model._lam()
    lamb = sp.conjugate(lam)
    Ls = 1 + lam * lamb
    At, Awb, phi, logH = ex["At"], ex["Awb"], ex["phi"], ex["logH"]
    # d_{E,beta1bar} = Y + a and its h-adjoint d_{E,h,beta1} = Xf + b, b = Xf(log H) - conj(a)
    a = (I * lam / 2 * At + Awb - lam / 2 * phi) / Ls

    def Yf(e):
        return (I * lam / 2 * model.d_t(e) + model.d_wb(e)) / Ls

    def Xf(e):
        return (-I * lamb / 2 * model.d_t(e) + model.d_w(e)) / Ls

    f = model.fields
    # orthonormal chart (t0, beta0): components of d/dt0, d/dbeta0, d/dbeta0bar on (d/dt, d/dw, d/dwbar)
    vt0 = ((1 - lam * lamb) / Ls, -2 * I * lam / Ls, 2 * I * lamb / Ls)
    vb0 = (-I * lamb / Ls, 1 / Ls, lamb ** 2 / Ls)
    vbb0 = (I * lam / Ls, lam ** 2 / Ls, 1 / Ls)
    Fm = [[0, f["F_tw"], f["F_twb"]], [-f["F_tw"], 0, f["F_wwb"]], [-f["F_twb"], -f["F_wwb"], 0]]
    F00 = sum(vb0[i] * vbb0[j] * Fm[i][j] for i in range(3) for j in range(3))
    dphi = (f["Dt_phi"], f["Dw_phi"], f["Dwb_phi"])
    dt0phi = sum(vt0[i] * dphi[i] for i in range(3))
    cache["Xa"] = model._f(Xf(a))
    cache["YXlogH"] = model._f(Yf(Xf(logH)))
    cache["G"] = model._f(F00 - I / 2 * dt0phi)
    cache["Dt_phi"] = model._f(f["Dt_phi"])
    return cache


def g_operator_check(model: ModelMonopole, pts) -> GReport:
    """G(h) = F_{beta0 beta0bar} - (i/2) nabla_{t0} phi in the orthonormal chart (t0, beta0),
    against (1 + |lam|^2)^2 [d_{E,h,beta1}, d_{E,beta1bar}] - (i/2)(1 + |lam|^2) nabla_t phi.

    [Xf + b, Y + a] = Xf(a) - Y(b) = 2 Re Xf(a) - Y Xf(log H) since Y(conj a) = conj(Xf(a)).
    The identity needs an integrable mini-holomorphic structure; it does not need Bogomolny.
    """
    t, X, Y = model.check_domain(pts)
    fn = _g_numeric(model)

    def ev(name):
        return np.broadcast_to(np.asarray(fn[name](t, X, Y), dtype=complex), np.shape(t))

    L = model.L
    comm = 2 * ev("Xa").real - ev("YXlogH")
    dtphi = ev("Dt_phi")
    lhs = ev("G")
    rhs = L ** 2 * comm - 0.5j * L * dtphi
    printed = L ** 2 * comm + 0.5j * L * dtphi
    return GReport(np.abs(lhs - rhs), np.abs(lhs - printed), lhs, rhs)


def integrable_rank1(psi, lam=0, T=1.0) -> ModelMonopole:
    """Off-shell data: frame e mini-holomorphic at lam, h(e, e) = exp(psi).

    Solves d_{E,beta1bar} e = d_{E,t1} e = 0 for (A, phi) with A h-unitary and phi h-skew:
    A_t = psi_t/2 + i u, A_wbar = v, A_w = psi_w - conj(v), phi = i s, where
    s + i u = (-(1 - |lam|^2) psi_t/2 + 2 i lam psi_w)/(1 + |lam|^2).
    Satisfies Bogomolny only for special psi.
    """
    psi = sp.sympify(psi)
    lam_s = _sym(lam)
    lamb = sp.conjugate(lam_s)
    Ls = 1 + lam_s * lamb
    pt = sp.diff(psi, t_)
    pw = (sp.diff(psi, X_) - I * sp.diff(psi, Y_)) / 2
    pwb = (sp.diff(psi, X_) + I * sp.diff(psi, Y_)) / 2
    Z = (-(1 - lam_s * lamb) * pt / 2 + 2 * I * lam_s * pw) / Ls
    Zb = (-(1 - lam_s * lamb) * pt / 2 - 2 * I * lamb * pwb) / Ls
    s, u = (Z + Zb) / 2, (Z - Zb) / (2 * I)
    v = -I * lam_s / 4 * pt + lam_s / 2 * u + I * lam_s / 2 * s
    vb = I * lamb / 4 * pt + lamb / 2 * u - I * lamb / 2 * s
    ex = {"At": pt / 2 + I * u, "Aw": pw - vb, "Awb": v, "phi": I * s, "logH": psi, "E": sp.Integer(0),
          "ident": sp.Integer(0), "factor": sp.Integer(0)}
    return ModelMonopole("custom", {"_lam_sym": lam_s}, _cx(lam), float(T), 1, ex, None)


# ---------------------------------------------------------------------------
# Monodromy of the scattering map


def scattering_field(f: np.ndarray):
    """A_t = -i (f + f^dagger), phi = f - f^dagger for a Higgs field f dw."""
    f = np.asarray(f, dtype=complex)
    fd = f.conj().T
    return -1j * (f + fd), f - fd


def monodromy(f, T: float = 1.0, steps: int = 10_000) -> np.ndarray:
    """RK4 transport of (nabla_t - i phi) s = 0 over [0, T] for a t-independent
    pull-back datum; returns s(T) for s(0) = Id.  Matches exp(2 i T f)."""
    if steps < 100:
        warnings.warn("fewer than 100 RK4 steps: accuracy not certified", RuntimeWarning, stacklevel=2)
    if callable(f):
        fn = f
    else:
        f0 = np.asarray(f, dtype=complex)
        fn = lambda _t: f0  # noqa: E731

    def rhs(tt, s):
        At, phi = scattering_field(fn(tt))
        return -(At - 1j * phi) @ s

    n = np.asarray(fn(0.0)).shape[0]
    s = np.eye(n, dtype=complex)
    h = T / steps
    tt = 0.0
    for _ in range(steps):
        k1 = rhs(tt, s)
        k2 = rhs(tt + h / 2, s + h / 2 * k1)
        k3 = rhs(tt + h / 2, s + h / 2 * k2)
        k4 = rhs(tt + h, s + h * k3)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        tt += h
    return s


def monodromy_expected(f, T: float = 1.0) -> np.ndarray:
    from scipy.linalg import expm

    return expm(2j * T * np.asarray(f, dtype=complex))


# ---------------------------------------------------------------------------
# Filtered degree of global rank-one models


@dataclass(frozen=True)
class LinearPiece:
    """Integrand slope * t + intercept on [start, end)."""

    start: Fraction
    end: Fraction
    slope: Fraction
    intercept: Fraction

    def integral(self) -> Fraction:
        a, b = self.start, self.end
        return self.slope * (b * b - a * a) / 2 + self.intercept * (b - a)


def integrate_pieces(pieces: Sequence[LinearPiece]) -> Fraction:
    return sum((pc.integral() for pc in pieces), Fraction(0))


@dataclass(frozen=True)
class DiracL:
    t10: Fraction
    beta10: GaussQ
    ell: int
    a: Fraction
    T: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "t10", Fraction(self.t10))
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "T", Fraction(self.T))
        object.__setattr__(self, "beta10", GaussQ.of(self.beta10))
        if not 0 <= self.t10 < self.T:
            raise ValueError("need 0 <= t1^0 < T")

    def slice_degree_pieces(self) -> list[LinearPiece]:
        """ell (t1 - t1^0)/T - a before t1^0, and the same minus ell after it."""
        s = Fraction(self.ell) / self.T
        c = -s * self.t10 - self.a
        return [LinearPiece(Fraction(0), self.t10, s, c), LinearPiece(self.t10, self.T, s, c - self.ell)]


def global_degree_dirac(model: DiracL) -> Fraction:
    return integrate_pieces(model.slice_degree_pieces()) / model.T


def global_degree_gamma(weight, T=1) -> Fraction:
    """Slice degree is the constant -weight."""
    T = Fraction(T)
    return integrate_pieces([LinearPiece(Fraction(0), T, Fraction(0), -Fraction(weight))]) / T


def global_degree(model, weight=0) -> Fraction:
    if isinstance(model, DiracL):
        return global_degree_dirac(model)
    if isinstance(model, ModelMonopole) and model.family == "gamma":
        return global_degree_gamma(weight, Fraction(model.T).limit_denominator())
    raise UnsupportedError("global degree is defined for DiracL and GlobalGamma")


# ---------------------------------------------------------------------------
# Sweep


@dataclass
class SweepReport:
    family: str
    samples: int
    bogomolny: float
    frame: dict | None
    g_identity: float
    fd: FdReport | None
    notes: list = field(default_factory=list)


def sweep(model: ModelMonopole, samples: int = 64, with_fd: bool = True) -> SweepReport:
    pts = sample_points(model, samples)
    bog = float(np.max(bogomolny_residual(model, pts)))
    notes = []
    try:
        frame = frame_check(model, pts).max()
    except UnsupportedError as exc:
        frame = None
        notes.append(str(exc))
    g = float(np.max(g_operator_check(model, pts).deviation))
    fd = fd_convergence(model, tuple(a[:4] for a in pts)) if with_fd else None
    return SweepReport(model.family, samples, bog, frame, g, fd, notes)
