"""Formal lambda-connections of Poincare rank < q and their difference modules.

A connection is A = sum_j A_j w_q^{-j} (w_q = w^{1/q}).  The flat frame along
w = y - 2 i lambda t solves dS/dt = S (-2i A(w_q(t, y)^{-1})), S(0) = Id, and
the difference matrix is G = S(T)^{-1} with y replaced by y + nu, nu = 2 i lambda T.
At lambda = 0 the same recursion gives G = exp(2 i T A).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Sequence

from .algebra import (
    ONE,
    ZERO,
    GaussQ,
    I,
    MatSeries,
    Poly,
    Puiseux,
    SingularMatrixError,
    identity,
    is_nilpotent,
    mat_add,
    mat_mul,
    mat_scale,
    solve,
)
from .formal import LEVEL_HIGHER, FormalModule, LevelUndetermined, level_check

CONVENTION = "G = S(T)^{-1} shifted by nu; lambda = 0 limit G = exp(2 i T A)"


class BridgeError(ValueError):
    pass


@dataclass(frozen=True)
class KmsPoint:
    a: Fraction
    alpha: GaussQ


def kms_map(lam, point: KmsPoint) -> KmsPoint:
    """(a, alpha) -> (a + 2 Re(lambda conj(alpha)), alpha - a lambda - conj(alpha) lambda^2)."""
    lam = GaussQ.of(lam)
    a, al = Fraction(point.a), GaussQ.of(point.alpha)
    return KmsPoint(a + 2 * (lam * al.conj()).re, al - lam * a - al.conj() * lam * lam)


def _zero(n):
    return [[ZERO] * n for _ in range(n)]


@dataclass(frozen=True)
class FormalLambdaConnection:
    q: int
    lam: GaussQ
    T: Fraction
    A: tuple  # A_0, A_1, ... as constant matrices
    N: int

    def __post_init__(self):
        object.__setattr__(self, "lam", GaussQ.of(self.lam))
        object.__setattr__(self, "T", Fraction(self.T))
        mats = tuple(tuple(tuple(GaussQ.of(a) for a in row) for row in m) for m in self.A)
        if not mats:
            raise BridgeError("connection needs at least A_0")
        object.__setattr__(self, "A", mats)
        if self.q < 1 or self.N < 1 or self.T <= 0:
            raise BridgeError("need q >= 1, N >= 1 and T > 0")
        if not is_nilpotent([list(r) for r in mats[0]]):
            raise BridgeError("A_0 must be nilpotent (Poincare rank < q)")

    @property
    def rank(self) -> int:
        return len(self.A[0])

    @property
    def nu(self) -> GaussQ:
        return I * 2 * self.lam * self.T

    def coeff(self, j: int):
        if j < len(self.A):
            return [list(r) for r in self.A[j]]
        return _zero(self.rank)


def _binom(r: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out = out * (r - i) / (i + 1)
    return out


# matrix polynomials in t: lists of matrices, index = power of t


def _padd(p, q, n):
    out = [row for row in p] + [None] * max(0, len(q) - len(p))
    for k, m in enumerate(q):
        out[k] = m if out[k] is None else mat_add(out[k], m)
    return [m if m is not None else _zero(n) for m in out]


def _pmul(p, q, n):
    if not p or not q:
        return []
    out = [None] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            m = mat_mul(a, b)
            out[i + j] = m if out[i + j] is None else mat_add(out[i + j], m)
    return out


def _peval(p, t, n):
    out = _zero(n)
    tk = Fraction(1)
    for m in p:
        out = mat_add(out, mat_scale(m, tk))
        tk *= t
    return out


def _c_poly(conn: FormalLambdaConnection, b: int):
    """Coefficient of x^{b/q} in A(w_q(t, y)^{-1}) as a matrix polynomial in t."""
    n, q = conn.rank, conn.q
    out = []
    lam2 = GaussQ(0, -2) * conn.lam
    for k in range(0, b // q + 1):
        j = b - k * q
        if k > 0 and j == 0:
            continue
        if j >= len(conn.A):
            continue
        c = GaussQ.of(_binom(Fraction(-j, q), k)) * lam2 ** k
        if not c:
            continue
        term = [_zero(n)] * k + [mat_scale(conn.coeff(j), c)]
        out = _padd(out, term, n)
    return out


def flat_frame(conn: FormalLambdaConnection, order: int | None = None) -> list:
    """Coefficients S_0(t), ..., S_{order-1}(t) of the flat frame as matrix polynomials."""
    order = conn.N if order is None else order
    n = conn.rank
    m0 = mat_scale(conn.coeff(0), GaussQ(0, -2))
    expo = []
    pw = identity(n)
    for k in range(n + 1):
        expo.append(mat_scale(pw, Fraction(1, factorial(k))))
        pw = mat_mul(pw, m0)
    S = [expo]
    cpolys = [None] + [_c_poly(conn, b) for b in range(1, order)]
    for idx in range(1, order):
        R = []
        for a in range(idx):
            R = _padd(R, _pmul(S[a], cpolys[idx - a], n), n)
        R = [mat_scale(m, GaussQ(0, -2)) for m in R]
        Sn = []
        for mm, rm in enumerate(R):
            for kk, ek in enumerate(expo):
                c = Fraction(factorial(mm) * factorial(kk), factorial(mm + kk + 1))
                term = [_zero(n)] * (mm + kk + 1) + [mat_scale(mat_mul(rm, ek), c)]
                Sn = _padd(Sn, term, n)
        S.append(Sn)
    return S


def psi_forward_general(conn: FormalLambdaConnection, order: int | None = None) -> MatSeries:
    """Difference matrix G(y_q^{-1}) of the connection, to order N in x^{1/q}."""
    order = conn.N if order is None else order
    S = flat_frame(conn, order)
    coeffs = [_peval(s, conn.T, conn.rank) for s in S]
    st = MatSeries(conn.rank, coeffs, 0, conn.q, order)
    try:
        inv = st.inverse()
    except SingularMatrixError as exc:  # cannot happen: S_0(T) is unipotent
        raise BridgeError("flat frame is singular") from exc
    return inv.shift(conn.nu)


def psi_forward_rank1(frak_a, q: int, lam, T, N: int) -> Puiseux:
    """exp(lambda^{-1} (a((y+nu)_q) - a(y_q))) for a in w_q C[w_q] of degree < q."""
    a = Poly.of(frak_a) if not isinstance(frak_a, Poly) else frak_a
    lam, T = GaussQ.of(lam), Fraction(T)
    if a.deg >= q:
        raise BridgeError("deg a must be < q")
    if a.coeff(0):
        raise BridgeError("a(0) must vanish")
    if not lam:
        raise BridgeError("rank-one closed form needs lambda != 0")
    nu = I * 2 * lam * T
    terms: dict = {}
    for k in range(1, a.deg + 1):
        ck = a.coeff(k)
        if not ck:
            continue
        m = 1
        while m * q - k < N:
            e = Fraction(m * q - k, q)
            terms[e] = terms.get(e, ZERO) + ck * GaussQ.of(_binom(Fraction(k, q), m)) * nu ** m / lam
            m += 1
    expo = Puiseux.from_terms(terms, Fraction(N, q), q)
    return expo.exp()


def psi_forward_regular(A, lam, T, N: int) -> MatSeries:
    """exp(lambda^{-1} A log(1 + nu x)) for a constant matrix A."""
    lam, T = GaussQ.of(lam), Fraction(T)
    if not lam:
        raise BridgeError("regular closed form needs lambda != 0")
    nu = I * 2 * lam * T
    A = [[GaussQ.of(a) for a in row] for row in A]
    n = len(A)
    coeffs = [_zero(n)]
    p = ONE
    for m in range(1, N):
        p = p * nu
        coeffs.append(mat_scale(A, p * Fraction((-1) ** (m + 1), m) / lam))
    return MatSeries(n, coeffs, 0, 1, N).exp()


def connection_from_rank1(frak_a, q: int, lam, T, N: int) -> FormalLambdaConnection:
    """A = d a / d w for a in w_q C[w_q]."""
    a = Poly.of(frak_a) if not isinstance(frak_a, Poly) else frak_a
    mats = [[[ZERO]]]
    for j in range(1, q):
        mats.append([[a.coeff(q - j) * Fraction(q - j, q)]])
    return FormalLambdaConnection(q, lam, T, tuple(mats), N)


def psi_inverse(G: MatSeries, q: int, lam, T, N: int | None = None) -> FormalLambdaConnection:
    """Connection whose difference matrix agrees with G to order N."""
    lam, T = GaussQ.of(lam), Fraction(T)
    if q % G.ram:
        raise BridgeError("ramification of G must divide q")
    G = G.with_ram(q)
    N = G.prec if N is None else min(N, G.prec)
    nu = I * 2 * lam * T
    try:
        lvl = level_check(FormalModule(G, nu))
    except LevelUndetermined as exc:
        raise BridgeError(f"level of G undetermined: {exc}") from exc
    if lvl == LEVEL_HIGHER:
        raise BridgeError("G has level >= 1")
    n = G.n
    log0 = MatSeries.const(G.coeff_n(0), 1, 1).log_unipotent().coeff_n(0)
    A = [mat_scale(log0, (I * 2 * T).inverse())]
    # The order-j coefficient depends on A_j through X -> -S_0(T)^{-1} (int S_0 (-2i X) E) S_0(T)^{-1},
    # which involves A_0 only; its matrix is read off once at order 1.
    cols = []
    if N > 1:
        zero = psi_forward_general(FormalLambdaConnection(q, lam, T, (A[0], _zero(n)), 2)).coeff_n(1)
        for a in range(n):
            for b in range(n):
                e = _zero(n)
                e[a][b] = ONE
                resp = psi_forward_general(FormalLambdaConnection(q, lam, T, (A[0], e), 2)).coeff_n(1)
                cols.append([resp[u][v] - zero[u][v] for u in range(n) for v in range(n)])
    mat = [[cols[c][r] for c in range(n * n)] for r in range(n * n)]
    for j in range(1, N):
        base_conn = FormalLambdaConnection(q, lam, T, tuple(A) + (_zero(n),), j + 1)
        base = psi_forward_general(base_conn).coeff_n(j)
        target = G.coeff_n(j)
        rhs = [target[u][v] - base[u][v] for u in range(n) for v in range(n)]
        try:
            x = solve(mat, rhs)
        except SingularMatrixError as exc:
            raise BridgeError(f"order {j} correction is not invertible") from exc
        A.append([[x[a * n + b] for b in range(n)] for a in range(n)])
    return FormalLambdaConnection(q, lam, T, tuple(A), N)


def block_diagonal_connection(parts: Sequence[FormalLambdaConnection]) -> FormalLambdaConnection:
    q, lam, T = parts[0].q, parts[0].lam, parts[0].T
    N = min(p.N for p in parts)
    n = sum(p.rank for p in parts)
    length = max(len(p.A) for p in parts)
    mats = []
    for j in range(length):
        m = _zero(n)
        off = 0
        for p in parts:
            c = p.coeff(j)
            for u in range(p.rank):
                for v in range(p.rank):
                    m[off + u][off + v] = c[u][v]
            off += p.rank
        mats.append(m)
    return FormalLambdaConnection(q, lam, T, tuple(mats), N)
