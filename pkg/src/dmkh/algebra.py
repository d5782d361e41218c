"""Exact arithmetic over Q(i): scalars, polynomials, rational functions,
truncated Puiseux series and small generic matrix routines."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt, lcm
from typing import Callable, Iterable, Sequence


class AlgebraError(ValueError):
    pass


class PrecisionError(AlgebraError):
    """Raised when a quantity cannot be decided at the working precision."""


class SingularMatrixError(AlgebraError):
    pass


class ValuationError(AlgebraError):
    """Raised when a series operation needs a valuation it does not have."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _qsqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


# ---------------------------------------------------------------------------
# Gaussian rationals


class GaussQ:
    """Element re + im*i of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussQ):
            if im:
                raise TypeError("imaginary part given twice")
            self.re, self.im = re.re, re.im
            return
        self.re = _frac(re)
        self.im = _frac(im)

    @staticmethod
    def of(x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussQ(x)
        if isinstance(x, str):
            from .manifest import parse_scalar

            return parse_scalar(x)
        raise TypeError(f"cannot convert {type(x).__name__} to GaussQ")

    # arithmetic ------------------------------------------------------------
    def __add__(self, o):
        if isinstance(o, GaussQ):
            return GaussQ(self.re + o.re, self.im + o.im)
        if isinstance(o, (int, Fraction)):
            return GaussQ(self.re + o, self.im)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __sub__(self, o):
        if isinstance(o, GaussQ):
            return GaussQ(self.re - o.re, self.im - o.im)
        if isinstance(o, (int, Fraction)):
            return GaussQ(self.re - o, self.im)
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, (int, Fraction)):
            return GaussQ(o - self.re, -self.im)
        return NotImplemented

    def __mul__(self, o):
        if isinstance(o, GaussQ):
            if not o.im:
                return GaussQ(self.re * o.re, self.im * o.re)
            if not self.im:
                return GaussQ(self.re * o.re, self.re * o.im)
            return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
        if isinstance(o, (int, Fraction)):
            return GaussQ(self.re * o, self.im * o)
        return NotImplemented

    __rmul__ = __mul__

    def inverse(self) -> "GaussQ":
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("inverse of zero in Q(i)")
        return GaussQ(self.re / n, -self.im / n)

    def __truediv__(self, o):
        if isinstance(o, (int, Fraction)):
            return GaussQ(self.re / o, self.im / o)
        if isinstance(o, GaussQ):
            if not o.im:
                return GaussQ(self.re / o.re, self.im / o.re)
            return self * o.inverse()
        return NotImplemented

    def __rtruediv__(self, o):
        if isinstance(o, (int, Fraction)):
            return GaussQ(o) * self.inverse()
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out, base = GaussQ(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparisons -------------------------------------------------------------
    def __eq__(self, o):
        if isinstance(o, GaussQ):
            return self.re == o.re and self.im == o.im
        if isinstance(o, (int, Fraction)):
            return not self.im and self.re == o
        return NotImplemented

    def __hash__(self):
        return hash(self.re) if not self.im else hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def sort_key(self):
        return (self.re, self.im)

    # misc ----------------------------------------------------------------------
    def conj(self) -> "GaussQ":
        return GaussQ(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return not self.im

    def sqrt_exact(self) -> "GaussQ | None":
        """Principal square root if it lies in Q(i), else None."""
        if not self:
            return GaussQ(0)
        m = _qsqrt(self.abs2())
        if m is None:
            return None
        a = _qsqrt((self.re + m) / 2)
        b = _qsqrt((m - self.re) / 2)
        if a is None or b is None:
            return None
        if self.im < 0:
            b = -b
        root = GaussQ(a, b)
        if root * root != self:
            root = GaussQ(a, -b)
        return root if root * root == self else None

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if not self.im:
            return str(self.re)
        mag = abs(self.im)
        imag = "i" if mag == 1 else f"{mag} i"
        if not self.re:
            return imag if self.im > 0 else f"-{imag}"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re} {sign} {imag}"

    def __repr__(self):
        return f"GaussQ({self})"


ZERO = GaussQ(0)
ONE = GaussQ(1)
I = GaussQ(0, 1)


def gq(x) -> GaussQ:
    return GaussQ.of(x)


# ---------------------------------------------------------------------------
# Polynomials over Q(i)


class Poly:
    """Polynomial with GaussQ coefficients stored low degree first."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = ()):
        c = [GaussQ.of(a) for a in coeffs]
        while c and not c[-1]:
            c.pop()
        self.c = tuple(c)

    @staticmethod
    def X() -> "Poly":
        return Poly((0, 1))

    @staticmethod
    def const(a) -> "Poly":
        return Poly((a,))

    @staticmethod
    def from_roots(roots: Iterable, lc=1) -> "Poly":
        p = Poly.const(lc)
        for r in roots:
            p = p * Poly((-GaussQ.of(r), 1))
        return p

    @staticmethod
    def of(x) -> "Poly":
        if isinstance(x, Poly):
            return x
        return Poly.const(x)

    @property
    def deg(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    @property
    def lc(self) -> GaussQ:
        return self.c[-1] if self.c else ZERO

    def coeff(self, k: int) -> GaussQ:
        return self.c[k] if 0 <= k < len(self.c) else ZERO

    def __call__(self, x):
        acc = ZERO
        for a in reversed(self.c):
            acc = acc * x + a
        return acc

    def __add__(self, o):
        o = Poly.of(o)
        n = max(len(self.c), len(o.c))
        return Poly(self.coeff(k) + o.coeff(k) for k in range(n))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-a for a in self.c)

    def __sub__(self, o):
        return self + (-Poly.of(o))

    def __rsub__(self, o):
        return Poly.of(o) - self

    def __mul__(self, o):
        if not isinstance(o, Poly):
            o = GaussQ.of(o)
            return Poly(a * o for a in self.c)
        if not self.c or not o.c:
            return Poly()
        out = [ZERO] * (len(self.c) + len(o.c) - 1)
        for i, a in enumerate(self.c):
            if not a:
                continue
            for j, b in enumerate(o.c):
                out[i + j] = out[i + j] + a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __divmod__(self, o: "Poly"):
        o = Poly.of(o)
        if o.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        q = [ZERO] * max(len(rem) - len(o.c) + 1, 0)
        inv = o.lc.inverse()
        for k in range(len(rem) - len(o.c), -1, -1):
            f = rem[k + len(o.c) - 1] * inv
            q[k] = f
            if f:
                for j, b in enumerate(o.c):
                    rem[k + j] = rem[k + j] - f * b
        return Poly(q), Poly(rem[: len(o.c) - 1])

    def __floordiv__(self, o):
        return divmod(self, o)[0]

    def __mod__(self, o):
        return divmod(self, o)[1]

    def __eq__(self, o):
        if isinstance(o, Poly):
            return self.c == o.c
        if isinstance(o, (int, Fraction, GaussQ)):
            return self == Poly.const(o)
        return NotImplemented

    def __hash__(self):
        return hash(self.c)

    def monic(self) -> "Poly":
        return self * self.lc.inverse() if self.c else self

    @staticmethod
    def gcd(a: "Poly", b: "Poly") -> "Poly":
        while not b.is_zero():
            a, b = b, a % b
        return a.monic()

    def derivative(self) -> "Poly":
        return Poly(a * k for k, a in enumerate(self.c) if k)

    def taylor_shift(self, c) -> "Poly":
        """Return p(X + c)."""
        c = GaussQ.of(c)
        if not c:
            return self
        lin = Poly((c, 1))
        acc = Poly()
        for a in reversed(self.c):
            acc = acc * lin + a
        return acc

    def val_at(self, x) -> int:
        """Multiplicity of x as a root."""
        if self.is_zero():
            raise ValuationError("valuation of the zero polynomial")
        p, k = self.taylor_shift(x), 0
        while not p.c[k]:
            k += 1
        return k

    def sqrt_exact(self) -> "Poly | None":
        if self.is_zero():
            return Poly()
        if self.deg % 2:
            return None
        lead = self.lc.sqrt_exact()
        if lead is None:
            return None
        n = self.deg // 2
        s = [ZERO] * (n + 1)
        s[n] = lead
        two_lead = lead * 2
        for k in range(n - 1, -1, -1):
            acc = self.c[n + k]
            for j in range(k + 1, n):
                acc = acc - s[j] * s[n + k - j]
            s[k] = acc / two_lead
        root = Poly(s)
        return root if root * root == self else None

    def to_str(self, var: str = "b") -> str:
        if not self.c:
            return "0"
        parts = []
        for k in range(len(self.c) - 1, -1, -1):
            a = self.c[k]
            if not a:
                continue
            mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
            parts.append(_term(a, mono))
        return _join(parts)

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"Poly({self})"


def _term(a: GaussQ, mono: str) -> str:
    if not mono:
        s = str(a)
        return f"({s})" if a.re and a.im else s
    if a == 1:
        return mono
    if a == -1:
        return f"-{mono}"
    if a.re and a.im:
        return f"({a}) {mono}"
    return f"{a} {mono}"


def _join(parts: list[str]) -> str:
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


# ---------------------------------------------------------------------------
# Rational functions in one variable


class Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFINITY"

    __str__ = __repr__


INFINITY = Infinity()


class RatFunc:
    """Reduced quotient num/den with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num=0, den=None, _reduced=False):
        num = Poly.of(num) if not isinstance(num, Poly) else num
        den = Poly.const(1) if den is None else Poly.of(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if not _reduced:
            if num.is_zero():
                den = Poly.const(1)
            else:
                g = Poly.gcd(num, den)
                if g.deg > 0:
                    num, den = num // g, den // g
                inv = den.lc.inverse()
                num, den = num * inv, den * inv
        self.num, self.den = num, den

    @staticmethod
    def of(x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, Poly):
            return RatFunc(x, None, _reduced=True)
        return RatFunc(Poly.const(x), None, _reduced=True)

    @staticmethod
    def X() -> "RatFunc":
        return RatFunc.of(Poly.X())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.deg == 0

    def __add__(self, o):
        o = RatFunc.of(o)
        if self.den == o.den:
            return RatFunc(self.num + o.num, self.den)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, _reduced=True)

    def __sub__(self, o):
        return self + (-RatFunc.of(o))

    def __rsub__(self, o):
        return RatFunc.of(o) - self

    def __mul__(self, o):
        if isinstance(o, (int, Fraction, GaussQ)):
            return RatFunc(self.num * o, self.den, _reduced=bool(o))
        o = RatFunc.of(o)
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        return RatFunc(self.den, self.num)

    def __truediv__(self, o):
        return self * RatFunc.of(o).inverse()

    def __rtruediv__(self, o):
        return RatFunc.of(o) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return RatFunc(self.num ** n, self.den ** n, _reduced=True)

    def __eq__(self, o):
        if isinstance(o, RatFunc):
            return self.num == o.num and self.den == o.den
        if isinstance(o, (int, Fraction, GaussQ, Poly)):
            return self == RatFunc.of(o)
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.den))

    def __call__(self, x):
        d = self.den(x)
        if not d:
            raise ZeroDivisionError("evaluation at a pole")
        return self.num(x) / d

    def shift(self, c) -> "RatFunc":
        """Return f(X + c)."""
        c = GaussQ.of(c)
        if not c:
            return self
        return RatFunc(self.num.taylor_shift(c), self.den.taylor_shift(c), _reduced=True)

    def v_inf(self) -> int:
        """Valuation at infinity: deg den - deg num."""
        if self.is_zero():
            raise ValuationError("valuation of zero")
        return self.den.deg - self.num.deg

    def val_at(self, x) -> int:
        if x is INFINITY:
            return self.v_inf()
        if self.is_zero():
            raise ValuationError("valuation of zero")
        return self.num.val_at(x) - self.den.val_at(x)

    def valuation(self, place) -> int:
        return self.val_at(place)

    def sqrt_exact(self) -> "RatFunc | None":
        n = self.num.sqrt_exact()
        d = self.den.sqrt_exact()
        if n is None or d is None:
            return None
        return RatFunc(n, d)

    def series_at_infinity(self, order: int) -> "Puiseux":
        """Expansion in x = 1/X with `order` terms of relative precision."""
        if self.is_zero():
            return Puiseux.zero(order)
        v = self.v_inf()
        nrev = Puiseux(tuple(reversed(self.num.c)), 0, 1, order)
        drev = Puiseux(tuple(reversed(self.den.c)), 0, 1, order)
        return (nrev * drev.inverse()).shifted_exponent(v)

    def series_at(self, place, order: int) -> "Puiseux":
        """Laurent expansion at a finite point in t = X - place, or at infinity."""
        if place is INFINITY:
            return self.series_at_infinity(order)
        if self.is_zero():
            return Puiseux.zero(order)
        n = self.num.taylor_shift(place)
        d = self.den.taylor_shift(place)
        vn, vd = n.val_at(0), d.val_at(0)
        ns = Puiseux(n.c[vn:], 0, 1, order)
        ds = Puiseux(d.c[vd:], 0, 1, order)
        return (ns * ds.inverse()).shifted_exponent(vn - vd)

    def to_str(self, var: str = "b") -> str:
        if self.is_poly():
            return self.num.to_str(var)
        n, d = self.num.to_str(var), self.den.to_str(var)
        if len(self.num.c) > 1 or (self.num.c and self.num.c[0].re and self.num.c[0].im):
            n = f"({n})"
        return f"{n} / ({d})"

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"RatFunc({self})"


# ---------------------------------------------------------------------------
# Truncated Puiseux series


def _binom(r: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for j in range(k):
        out = out * (r - j) / (j + 1)
    return out


class Puiseux:
    """sum_k coeffs[k] x^((start+k)/ram) + O(x^(prec/ram)).

    Exponents and the absolute precision are stored as integer numerators
    over the ramification index `ram`.
    """

    __slots__ = ("start", "coeffs", "ram", "prec")

    def __init__(self, coeffs: Sequence = (), start: int = 0, ram: int = 1, prec: int = 0):
        c = [GaussQ.of(a) for a in coeffs[: max(prec - start, 0)]]
        lead = 0
        while lead < len(c) and not c[lead]:
            lead += 1
        c = c[lead:]
        while c and not c[-1]:
            c.pop()
        self.coeffs = tuple(c)
        self.start = start + lead if c else prec
        self.ram = ram
        self.prec = prec

    # constructors ----------------------------------------------------------
    @staticmethod
    def zero(prec: int, ram: int = 1) -> "Puiseux":
        return Puiseux((), prec, ram, prec)

    @staticmethod
    def const(a, prec: int, ram: int = 1) -> "Puiseux":
        return Puiseux((a,), 0, ram, prec)

    @staticmethod
    def monomial(a, n: int, ram: int, prec: int) -> "Puiseux":
        return Puiseux((a,), n, ram, prec)

    @staticmethod
    def from_terms(terms: dict, prec: Fraction, ram: int | None = None) -> "Puiseux":
        exps = [Fraction(e) for e in terms] + [Fraction(prec)]
        p = ram or 1
        for e in exps:
            p = lcm(p, e.denominator)
        if not terms:
            return Puiseux.zero(int(Fraction(prec) * p), p)
        idx = {int(Fraction(e) * p): GaussQ.of(a) for e, a in terms.items()}
        lo = min(idx)
        hi = max(idx)
        return Puiseux([idx.get(k, ZERO) for k in range(lo, hi + 1)], lo, p, int(Fraction(prec) * p))

    # basic accessors -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def valn(self) -> int:
        return self.start

    @property
    def val(self) -> Fraction:
        return Fraction(self.start, self.ram)

    @property
    def precision(self) -> Fraction:
        return Fraction(self.prec, self.ram)

    @property
    def lc(self) -> GaussQ:
        return self.coeffs[0] if self.coeffs else ZERO

    def coeff_n(self, n: int) -> GaussQ:
        if n >= self.prec:
            raise PrecisionError(f"coefficient at {Fraction(n, self.ram)} is beyond the precision")
        k = n - self.start
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else ZERO

    def coeff(self, e) -> GaussQ:
        e = Fraction(e)
        n = e * self.ram
        if n.denominator != 1:
            return ZERO
        return self.coeff_n(int(n))

    def terms(self):
        for k, a in enumerate(self.coeffs):
            if a:
                yield Fraction(self.start + k, self.ram), a

    def with_ram(self, p: int) -> "Puiseux":
        if p == self.ram:
            return self
        if p % self.ram:
            raise AlgebraError(f"ramification {p} is not a multiple of {self.ram}")
        m = p // self.ram
        c = [ZERO] * ((len(self.coeffs) - 1) * m + 1) if self.coeffs else []
        for k, a in enumerate(self.coeffs):
            c[k * m] = a
        return Puiseux(c, self.start * m, p, self.prec * m)

    def simplify_ram(self) -> "Puiseux":
        from math import gcd

        g = self.ram
        g = gcd(g, self.prec)
        for e, _ in self.terms():
            g = gcd(g, int(e * self.ram))
        if self.coeffs:
            g = gcd(g, self.start)
        if g <= 1:
            return self
        return Puiseux(self.coeffs[::g], self.start // g if self.coeffs else self.prec // g,
                       self.ram // g, self.prec // g)

    def truncate(self, prec: int) -> "Puiseux":
        if prec >= self.prec:
            return self
        return Puiseux(self.coeffs, self.start, self.ram, prec)

    def shifted_exponent(self, n: int) -> "Puiseux":
        """Multiply by x^(n/ram)."""
        return Puiseux(self.coeffs, self.start + n, self.ram, self.prec + n)

    def mul_xpow(self, e) -> "Puiseux":
        e = Fraction(e)
        p = lcm(self.ram, e.denominator)
        s = self.with_ram(p)
        return s.shifted_exponent(int(e * p))

    # arithmetic ------------------------------------------------------------
    @staticmethod
    def _align(a: "Puiseux", b: "Puiseux"):
        if a.ram == b.ram:
            return a, b
        p = lcm(a.ram, b.ram)
        return a.with_ram(p), b.with_ram(p)

    def _coerce(self, o) -> "Puiseux | None":
        if isinstance(o, Puiseux):
            return o
        if isinstance(o, (int, Fraction, GaussQ)):
            return Puiseux.const(o, 10**9, self.ram)
        return None

    def __add__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        a, b = Puiseux._align(self, o)
        prec = min(a.prec, b.prec)
        if not a.coeffs:
            return b.truncate(prec) if b.prec != prec else b
        if not b.coeffs:
            return a.truncate(prec)
        lo = min(a.start, b.start)
        hi = min(max(a.start + len(a.coeffs), b.start + len(b.coeffs)), prec)
        c = [ZERO] * max(hi - lo, 0)
        for k, x in enumerate(a.coeffs):
            if a.start + k < hi:
                c[a.start + k - lo] = x
        for k, x in enumerate(b.coeffs):
            if b.start + k < hi:
                c[b.start + k - lo] = c[b.start + k - lo] + x
        return Puiseux(c, lo, a.ram, prec)

    __radd__ = __add__

    def __neg__(self):
        return Puiseux(tuple(-a for a in self.coeffs), self.start, self.ram, self.prec)

    def __sub__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, o):
        if isinstance(o, (int, Fraction, GaussQ)):
            if not o:
                return Puiseux.zero(self.prec, self.ram)
            return Puiseux(tuple(a * o for a in self.coeffs), self.start, self.ram, self.prec)
        if not isinstance(o, Puiseux):
            return NotImplemented
        a, b = Puiseux._align(self, o)
        prec = min(a.start + b.prec, b.start + a.prec)
        start = a.start + b.start
        n = prec - start
        if n <= 0 or not a.coeffs or not b.coeffs:
            return Puiseux.zero(prec, a.ram)
        n = min(n, len(a.coeffs) + len(b.coeffs) - 1)
        c = [ZERO] * n
        bc = b.coeffs
        for i, x in enumerate(a.coeffs[:n]):
            if not x:
                continue
            for j in range(min(len(bc), n - i)):
                y = bc[j]
                if y:
                    c[i + j] = c[i + j] + x * y
        return Puiseux(c, start, a.ram, prec)

    __rmul__ = __mul__

    def inverse(self) -> "Puiseux":
        if not self.coeffs:
            raise PrecisionError("inverse of a series that vanishes to the working precision")
        v = self.start
        n = self.prec - v
        a = self.coeffs
        inv0 = a[0].inverse()
        if len(a) == 1:
            return Puiseux([inv0], -v, self.ram, -v + n)
        b = [inv0]
        for k in range(1, n):
            acc = ZERO
            for j in range(1, min(k, len(a) - 1) + 1):
                if a[j]:
                    acc = acc + a[j] * b[k - j]
            b.append(-acc * inv0)
        return Puiseux(b, -v, self.ram, -v + n)

    def __truediv__(self, o):
        if isinstance(o, (int, Fraction, GaussQ)):
            return self * GaussQ.of(o).inverse()
        return self * o.inverse()

    def __rtruediv__(self, o):
        return self.inverse() * o

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return Puiseux.const(1, self.prec - self.start, self.ram)
        out = None
        base = self
        while n:
            if n & 1:
                out = base if out is None else out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def _unit_parts(self):
        """Split a series with val 0 and lc 1 into its coefficient list."""
        if not self.coeffs or self.start != 0:
            raise ValuationError("expected a series of valuation zero")
        return list(self.coeffs) + [ZERO] * (self.prec - len(self.coeffs))

    def exp(self) -> "Puiseux":
        if self.coeffs and self.start <= 0:
            raise ValuationError("exp needs positive valuation")
        n = self.prec
        if n >= 10**8:
            raise PrecisionError("exp of an exact series needs a finite precision")
        g = [ZERO] * n
        for k, a in enumerate(self.coeffs):
            if self.start + k < n:
                g[self.start + k] = a
        f = [ONE] + [ZERO] * (n - 1)
        for m in range(1, n):
            acc = ZERO
            for k in range(1, m + 1):
                if g[k]:
                    acc = acc + g[k] * f[m - k] * k
            f[m] = acc / m
        return Puiseux(f, 0, self.ram, n)

    def log(self) -> "Puiseux":
        """Logarithm of a series 1 + (positive valuation)."""
        if self.start != 0 or self.lc != 1:
            raise ValuationError("log needs a series of the form 1 + O(x^positive)")
        n = self.prec
        f = self._unit_parts()
        g = [ZERO] * n
        for m in range(1, n):
            acc = f[m] * m
            for k in range(1, m):
                if g[k] and f[m - k]:
                    acc = acc - g[k] * f[m - k] * k
            g[m] = acc / m
        return Puiseux(g, 0, self.ram, n)

    def power(self, r) -> "Puiseux":
        """s^r for rational r; the leading coefficient must have an exact r-th power."""
        r = Fraction(r)
        if r.denominator == 1:
            return self ** int(r)
        if not self.coeffs:
            raise PrecisionError("fractional power of a vanishing series")
        c0 = self.lc
        if c0 == 1:
            lead = ONE
        elif r.denominator == 2:
            root = c0.sqrt_exact()
            if root is None:
                raise AlgebraError(f"leading coefficient {c0} has no square root in Q(i)")
            lead = root ** r.numerator
        else:
            raise AlgebraError("fractional power needs leading coefficient 1")
        e = Fraction(self.start, self.ram) * r
        unit = Puiseux(self.coeffs, 0, self.ram, self.prec - self.start) / c0
        u = unit.binom_pow(r) * lead
        return u.mul_xpow(e)

    def binom_pow(self, r) -> "Puiseux":
        """(1 + u)^r for a series 1 + u with u of positive valuation."""
        r = Fraction(r)
        if self.start != 0 or self.lc != 1:
            raise ValuationError("binomial power needs a series 1 + O(x^positive)")
        n = self.prec
        s = self._unit_parts()
        f = [ONE] + [ZERO] * (n - 1)
        for m in range(1, n):
            acc = ZERO
            for k in range(1, m + 1):
                if s[k]:
                    acc = acc + s[k] * f[m - k] * ((r + 1) * k - m)
            f[m] = acc / m
        return Puiseux(f, 0, self.ram, n)

    def shift(self, nu) -> "Puiseux":
        """Substitute x^(j/p) -> x^(j/p) (1 + nu x)^(-j/p), i.e. y -> y + nu."""
        nu = GaussQ.of(nu)
        if not nu or not self.coeffs:
            return self
        p, prec = self.ram, self.prec
        out = [ZERO] * (prec - self.start)
        for k, a in enumerate(self.coeffs):
            if not a:
                continue
            j = self.start + k
            r = Fraction(-j, p)
            coef = Fraction(1)
            nupow = ONE
            m = 0
            while j + m * p < prec:
                out[j + m * p - self.start] = out[j + m * p - self.start] + a * nupow * coef
                coef = coef * (r - m) / (m + 1)
                nupow = nupow * nu
                m += 1
        return Puiseux(out, self.start, p, prec)

    def __eq__(self, o):
        if isinstance(o, Puiseux):
            a, b = Puiseux._align(self, o)
            return a.prec == b.prec and a.start == b.start and a.coeffs == b.coeffs
        return NotImplemented

    def __hash__(self):
        s = self.simplify_ram()
        return hash((s.coeffs, s.start, s.ram, s.prec))

    def agrees_with(self, o: "Puiseux", prec: Fraction | None = None) -> bool:
        """Equality of all coefficients below min(precisions, prec)."""
        a, b = Puiseux._align(self, o)
        bound = min(a.prec, b.prec)
        if prec is not None:
            bound = min(bound, int(Fraction(prec) * a.ram))
        d = (a - b).truncate(bound)
        return d.is_zero()

    def evaluate(self, x: complex) -> complex:
        """Numerical value of the truncated sum at a complex x (principal roots)."""
        import cmath

        if x == 0:
            raise ValueError("evaluation at zero")
        z = cmath.exp(cmath.log(x) / self.ram)
        return sum(a.to_complex() * z ** (self.start + k) for k, a in enumerate(self.coeffs))

    def to_str(self, var: str = "x") -> str:
        parts = []
        for e, a in self.terms():
            if e == 0:
                mono = ""
            elif e == 1:
                mono = var
            elif e.denominator == 1:
                mono = f"{var}^{e.numerator}"
            else:
                mono = f"{var}^({e})"
            parts.append(_term(a, mono))
        o = self.precision
        tail = f"O({var}^{o})" if o.denominator == 1 else f"O({var}^({o}))"
        return (_join(parts) + " + " if parts else "") + tail

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"Puiseux({self})"


EXACT = 10**9  # precision marker for exactly known finite series


# ---------------------------------------------------------------------------
# Generic matrices (lists of rows) over a commutative ring


Matrix = list


def mat_shape(m: Matrix) -> tuple[int, int]:
    return len(m), len(m[0]) if m else 0


def mat_map(m: Matrix, f: Callable) -> Matrix:
    return [[f(a) for a in row] for row in m]


def identity(n: int, one=ONE, zero=ZERO) -> Matrix:
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n, k = mat_shape(a)
    k2, m = mat_shape(b)
    if k != k2:
        raise ValueError("shape mismatch in matrix product")
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = a[i][0] * b[0][j]
            for t in range(1, k):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a: Matrix, c) -> Matrix:
    return [[x * c for x in row] for row in a]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def trace(a: Matrix):
    acc = a[0][0]
    for i in range(1, len(a)):
        acc = acc + a[i][i]
    return acc


def _is_zero(a) -> bool:
    if isinstance(a, (Poly, RatFunc, Puiseux)):
        return a.is_zero()
    return not a


def det_cofactor(m: Matrix):
    """Determinant by Laplace expansion along the first row (any ring)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    acc = None
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * det_cofactor(minor)
        if j % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def _pivot_key(a):
    if isinstance(a, Puiseux):
        return a.start
    if isinstance(a, RatFunc):
        return a.num.deg + a.den.deg
    return 0


def det_gauss(m: Matrix):
    """Determinant by Gaussian elimination over a field (or a Puiseux field)."""
    n = len(m)
    a = [list(row) for row in m]
    det = None
    sign = 1
    for col in range(n):
        cands = [r for r in range(col, n) if not _is_zero(a[r][col])]
        if not cands:
            zero = a[col][col] - a[col][col]
            if isinstance(zero, Puiseux):
                prec = min(a[r][col].prec for r in range(col, n))
                return Puiseux.zero(prec if det is None else det.start + prec, zero.ram)
            return zero
        piv = min(cands, key=lambda r: _pivot_key(a[r][col]))
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        p = a[col][col]
        det = p if det is None else det * p
        if col == n - 1:
            break
        inv = p.inverse()
        for r in range(col + 1, n):
            if _is_zero(a[r][col]):
                continue
            f = a[r][col] * inv
            for c in range(col + 1, n):
                a[r][c] = a[r][c] - f * a[col][c]
    return det if sign == 1 else -det


def adjugate(m: Matrix) -> Matrix:
    n = len(m)
    if n == 1:
        one = m[0][0] - m[0][0] + 1
        return [[one]]
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
            c = det_cofactor(minor)
            out[j][i] = -c if (i + j) % 2 else c
    return out


def mat_inverse(m: Matrix) -> Matrix:
    """Inverse as adjugate over determinant; entries must support .inverse()."""
    d = det_cofactor(m)
    if _is_zero(d):
        raise SingularMatrixError("matrix is singular")
    dinv = d.inverse() if hasattr(d, "inverse") else 1 / d
    return [[x * dinv for x in row] for row in adjugate(m)]


def charpoly(m: Matrix) -> list:
    """Coefficients c_0..c_n of det(X - m) via Faddeev-LeVerrier."""
    n = len(m)
    zero = m[0][0] - m[0][0]
    one = zero + 1
    c = [zero] * (n + 1)
    c[n] = one
    mk = [[zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        mk = mat_mul(m, mk)
        for i in range(n):
            mk[i][i] = mk[i][i] + c[n - k + 1]
        c[n - k] = trace(mat_mul(m, mk)) * Fraction(-1, k)
    return c


def det_valuation(m: Matrix, place=None) -> Fraction:
    """Valuation of det m: at `place` for rational entries, or of the series."""
    d = det_gauss(m)
    if isinstance(d, Puiseux):
        if d.is_zero():
            raise PrecisionError("determinant vanishes to the working precision")
        return d.val
    if isinstance(d, RatFunc):
        if d.is_zero():
            raise SingularMatrixError("determinant is zero")
        return Fraction(d.val_at(INFINITY if place is None else place))
    raise TypeError("det_valuation needs RatFunc or Puiseux entries")


# ---------------------------------------------------------------------------
# Linear algebra over Q(i)


def rref(m: Matrix) -> tuple[Matrix, list[int]]:
    a = [[GaussQ.of(x) for x in row] for row in m]
    rows, cols = mat_shape(a)
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((k for k in range(r, rows) if a[k][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = a[r][c].inverse()
        a[r] = [x * inv for x in a[r]]
        for k in range(rows):
            if k != r and a[k][c]:
                f = a[k][c]
                a[k] = [x - f * y for x, y in zip(a[k], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a, pivots


def nullspace(m: Matrix) -> list[list[GaussQ]]:
    a, pivots = rref(m)
    cols = len(m[0])
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * cols
        v[f] = ONE
        for r, p in enumerate(pivots):
            v[p] = -a[r][f]
        basis.append(v)
    return basis


def solve(m: Matrix, b: list) -> list[GaussQ]:
    """Unique solution of m v = b over Q(i)."""
    cols = len(m[0])
    aug = [list(row) + [b[i]] for i, row in enumerate(m)]
    a, pivots = rref(aug)
    if cols in pivots or len(pivots) != cols:
        raise SingularMatrixError("linear system has no unique solution")
    return [a[i][cols] for i in range(cols)]


# ---------------------------------------------------------------------------
# Matrix-valued truncated series


def _zeros(n: int) -> Matrix:
    return [[ZERO] * n for _ in range(n)]


def _is_zero_mat(m: Matrix) -> bool:
    return all(not a for row in m for a in row)


def const_inverse(m: Matrix) -> Matrix:
    """Inverse of a constant Q(i) matrix by Gauss-Jordan."""
    n = len(m)
    aug = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(m)]
    a, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("constant matrix is singular")
    return [row[n:] for row in a]


class MatSeries:
    """sum_k coeffs[k] x^((start+k)/ram) + O(x^(prec/ram)) with n x n Q(i) coefficients."""

    __slots__ = ("n", "start", "coeffs", "ram", "prec")

    def __init__(self, n: int, coeffs: Sequence[Matrix], start: int = 0, ram: int = 1, prec: int = 0):
        c = [[[GaussQ.of(a) for a in row] for row in m] for m in coeffs[: max(prec - start, 0)]]
        lead = 0
        while lead < len(c) and _is_zero_mat(c[lead]):
            lead += 1
        c = c[lead:]
        while c and _is_zero_mat(c[-1]):
            c.pop()
        self.n = n
        self.coeffs = c
        self.start = start + lead if c else prec
        self.ram = ram
        self.prec = prec

    @staticmethod
    def zero(n: int, prec: int, ram: int = 1) -> "MatSeries":
        return MatSeries(n, [], prec, ram, prec)

    @staticmethod
    def const(m: Matrix, prec: int, ram: int = 1) -> "MatSeries":
        return MatSeries(len(m), [m], 0, ram, prec)

    @staticmethod
    def identity(n: int, prec: int, ram: int = 1) -> "MatSeries":
        return MatSeries.const(identity(n), prec, ram)

    @staticmethod
    def from_entries(m: Matrix) -> "MatSeries":
        n = len(m)
        ram = 1
        for row in m:
            for a in row:
                ram = lcm(ram, a.ram)
        ents = [[a.with_ram(ram) for a in row] for row in m]
        prec = min(a.prec for row in ents for a in row)
        start = min(a.start for row in ents for a in row)
        start = min(start, prec)
        coeffs = []
        for k in range(start, prec):
            coeffs.append([[a.coeff_n(k) for a in row] for row in ents])
        return MatSeries(n, coeffs, start, ram, prec)

    def entries(self) -> Matrix:
        out = []
        for i in range(self.n):
            row = []
            for j in range(self.n):
                row.append(Puiseux([m[i][j] for m in self.coeffs], self.start, self.ram, self.prec))
            out.append(row)
        return out

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def val(self) -> Fraction:
        return Fraction(self.start, self.ram)

    def coeff_n(self, k: int) -> Matrix:
        if k >= self.prec:
            raise PrecisionError(f"coefficient at {Fraction(k, self.ram)} is beyond the precision")
        j = k - self.start
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return _zeros(self.n)

    def coeff(self, e) -> Matrix:
        e = Fraction(e) * self.ram
        if e.denominator != 1:
            return _zeros(self.n)
        return self.coeff_n(int(e))

    def with_ram(self, p: int) -> "MatSeries":
        if p == self.ram:
            return self
        if p % self.ram:
            raise AlgebraError(f"ramification {p} is not a multiple of {self.ram}")
        m = p // self.ram
        c = []
        z = _zeros(self.n)
        for k, a in enumerate(self.coeffs):
            if k:
                c.extend([z] * (m - 1))
            c.append(a)
        return MatSeries(self.n, c, self.start * m, p, self.prec * m)

    def truncate(self, prec: int) -> "MatSeries":
        if prec >= self.prec:
            return self
        return MatSeries(self.n, self.coeffs, self.start, self.ram, prec)

    def mul_xpow(self, e) -> "MatSeries":
        e = Fraction(e)
        s = self.with_ram(lcm(self.ram, e.denominator))
        k = int(e * s.ram)
        return MatSeries(s.n, s.coeffs, s.start + k, s.ram, s.prec + k)

    @staticmethod
    def _align(a: "MatSeries", b: "MatSeries"):
        if a.ram == b.ram:
            return a, b
        p = lcm(a.ram, b.ram)
        return a.with_ram(p), b.with_ram(p)

    def __add__(self, o: "MatSeries") -> "MatSeries":
        a, b = MatSeries._align(self, o)
        prec = min(a.prec, b.prec)
        lo = min(a.start, b.start, prec)
        c = []
        for k in range(lo, prec):
            x, y = a.coeff_n(k), b.coeff_n(k)
            c.append([[u + v for u, v in zip(rx, ry)] for rx, ry in zip(x, y)])
        return MatSeries(a.n, c, lo, a.ram, prec)

    def __neg__(self):
        return MatSeries(self.n, [[[-a for a in row] for row in m] for m in self.coeffs],
                         self.start, self.ram, self.prec)

    def __sub__(self, o):
        return self + (-o)

    def scale(self, c) -> "MatSeries":
        c = GaussQ.of(c)
        return MatSeries(self.n, [[[a * c for a in row] for row in m] for m in self.coeffs],
                         self.start, self.ram, self.prec)

    def __mul__(self, o: "MatSeries") -> "MatSeries":
        if isinstance(o, (int, Fraction, GaussQ)):
            return self.scale(o)
        a, b = MatSeries._align(self, o)
        prec = min(a.start + b.prec, b.start + a.prec)
        start = a.start + b.start
        length = prec - start
        if length <= 0 or not a.coeffs or not b.coeffs:
            return MatSeries.zero(a.n, prec, a.ram)
        c = [None] * length
        for i, x in enumerate(a.coeffs[:length]):
            if _is_zero_mat(x):
                continue
            for j, y in enumerate(b.coeffs[: length - i]):
                if _is_zero_mat(y):
                    continue
                p = mat_mul(x, y)
                c[i + j] = p if c[i + j] is None else mat_add(c[i + j], p)
        z = _zeros(a.n)
        return MatSeries(a.n, [m if m is not None else z for m in c], start, a.ram, prec)

    def inverse(self) -> "MatSeries":
        if not self.coeffs:
            raise PrecisionError("inverse of a series vanishing to the working precision")
        try:
            a0inv = const_inverse(self.coeffs[0])
        except SingularMatrixError:
            # leading matrix singular: invert entrywise through the determinant
            return MatSeries.from_entries(mat_inverse(self.entries()))
        length = self.prec - self.start
        if len(self.coeffs) == 1:
            return MatSeries(self.n, [a0inv], -self.start, self.ram, -self.start + length)
        b = [a0inv]
        for k in range(1, length):
            acc = None
            for j in range(1, min(k, len(self.coeffs) - 1) + 1):
                if _is_zero_mat(self.coeffs[j]):
                    continue
                p = mat_mul(self.coeffs[j], b[k - j])
                acc = p if acc is None else mat_add(acc, p)
            b.append(_zeros(self.n) if acc is None else mat_scale(mat_mul(a0inv, acc), -1))
        return MatSeries(self.n, b, -self.start, self.ram, -self.start + length)

    def shift(self, nu) -> "MatSeries":
        """Entrywise x^(j/p) -> x^(j/p) (1 + nu x)^(-j/p)."""
        nu = GaussQ.of(nu)
        if not nu or not self.coeffs:
            return self
        p, prec = self.ram, self.prec
        out = [_zeros(self.n) for _ in range(prec - self.start)]
        for k, a in enumerate(self.coeffs):
            if _is_zero_mat(a):
                continue
            j = self.start + k
            r = Fraction(-j, p)
            coef = ONE
            m = 0
            while j + m * p < prec:
                tgt = out[j + m * p - self.start]
                for i in range(self.n):
                    for l in range(self.n):
                        if a[i][l]:
                            tgt[i][l] = tgt[i][l] + a[i][l] * coef
                coef = coef * nu * ((r - m) / (m + 1))
                m += 1
        return MatSeries(self.n, out, self.start, p, prec)

    def _nilpotent_series(self, terms: Callable[[int], Fraction]) -> "MatSeries":
        """sum_k terms(k) E^k for E = self with nilpotent or positive-valuation leading part."""
        if self.coeffs and self.start < 0:
            raise ValuationError("series function needs nonnegative valuation")
        if self.coeffs and self.start == 0 and not _is_nilpotent(self.coeffs[0]):
            raise ValuationError("constant term must be nilpotent")
        prec = self.prec
        power = MatSeries.identity(self.n, prec, self.ram)
        c0 = terms(0)
        out = power.scale(c0) if c0 else MatSeries.zero(self.n, prec, self.ram)
        kmax = self.n * (prec + 1) + self.n
        for k in range(1, kmax + 1):
            power = power * self
            if power.is_zero() and power.prec >= prec:
                break
            c = terms(k)
            if c:
                out = out + power.scale(c)
        return out.truncate(prec)

    def exp(self) -> "MatSeries":
        from math import factorial

        return self._nilpotent_series(lambda k: Fraction(1, factorial(k)))

    def log_unipotent(self) -> "MatSeries":
        """log of a series whose constant term is unipotent and valuation is zero."""
        e = self - MatSeries.identity(self.n, self.prec, self.ram)
        return e._nilpotent_series(lambda k: Fraction((-1) ** (k + 1), k) if k else Fraction(0))

    def __eq__(self, o):
        if not isinstance(o, MatSeries):
            return NotImplemented
        a, b = MatSeries._align(self, o)
        return a.prec == b.prec and a.start == b.start and a.coeffs == b.coeffs

    def agrees_with(self, o: "MatSeries", prec: Fraction | None = None) -> bool:
        a, b = MatSeries._align(self, o)
        bound = min(a.prec, b.prec)
        if prec is not None:
            bound = min(bound, int(Fraction(prec) * a.ram))
        return (a - b).truncate(bound).is_zero()

    def __repr__(self):
        return f"MatSeries(n={self.n}, start={self.start}, ram={self.ram}, prec={self.prec})"


def _is_nilpotent(m: Matrix) -> bool:
    n = len(m)
    p = m
    for _ in range(n - 1):
        p = mat_mul(p, m)
    return _is_zero_mat(p)


def const_exp(m: Matrix) -> Matrix:
    """exp of a nilpotent constant matrix."""
    if not _is_nilpotent(m):
        raise ValuationError("const_exp needs a nilpotent matrix")
    return MatSeries.const(m, 1).exp().coeff_n(0)


def is_nilpotent(m: Matrix) -> bool:
    return _is_nilpotent(m)
