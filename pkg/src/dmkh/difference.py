"""Difference modules over C[beta] with Phi*(beta) = beta + nu, nu = 2 i lambda T,
lattices at finite places and their relative degrees."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebra import (
    INFINITY,
    GaussQ,
    Matrix,
    Poly,
    Puiseux,
    RatFunc,
    SingularMatrixError,
    det_cofactor,
    det_valuation,
    identity,
    mat_inverse,
    mat_map,
    mat_mul,
)


def default_order() -> int:
    return int(os.environ.get("DMKH_ORDER", "12"))


LATTICE_PREC = 16


class ModuleError(ValueError):
    pass


def _as_rat_matrix(m) -> tuple[tuple[RatFunc, ...], ...]:
    return tuple(tuple(RatFunc.of(a) for a in row) for row in m)


@dataclass(frozen=True)
class DifferenceModule:
    """Free module C[beta]^r with Phi*(e_j) = sum_i phi[i][j] e_i."""

    phi: tuple
    lam: GaussQ = GaussQ(0)
    T: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_rat_matrix(self.phi))
        object.__setattr__(self, "lam", GaussQ.of(self.lam))
        object.__setattr__(self, "T", Fraction(self.T))
        r = len(self.phi)
        if r == 0 or any(len(row) != r for row in self.phi):
            raise ModuleError("phi must be a non-empty square matrix")
        if self.T <= 0:
            raise ModuleError("T must be positive")
        if self.det_phi().is_zero():
            raise ModuleError("phi must be invertible over C(beta)")

    @property
    def rank(self) -> int:
        return len(self.phi)

    @property
    def nu(self) -> GaussQ:
        return GaussQ(0, 2) * self.lam * self.T

    def matrix(self) -> Matrix:
        return [list(row) for row in self.phi]

    def det_phi(self) -> RatFunc:
        return det_cofactor(self.matrix())

    def phi_inverse_shifted(self) -> Matrix:
        """phi(beta - nu)^{-1}, the matrix of (Phi*)^{-1} in the standard basis."""
        return mat_map(mat_inverse(self.matrix()), lambda f: f.shift(-self.nu))

    def singular_support(self) -> tuple[list[GaussQ], list[str]]:
        """Points where phi leaves GL_r of the local ring, with unresolved factors."""
        polys = [self.det_phi().num]
        for row in self.phi:
            for f in row:
                polys.append(f.den)
        roots: set[GaussQ] = set()
        unresolved: list[str] = []
        for p in polys:
            rs, bad = qi_roots(p)
            roots.update(rs)
            unresolved.extend(bad)
        return sorted(roots, key=GaussQ.sort_key), sorted(set(unresolved))


def qi_roots(p: Poly) -> tuple[list[GaussQ], list[str]]:
    """Roots of p in Q(i), plus the irreducible factors of higher degree."""
    if p.deg <= 0:
        return [], []
    from .formal import factor_over_qi

    roots, bad = [], []
    for fac, _mult in factor_over_qi(p):
        if fac.deg == 1:
            roots.append(-fac.c[0] / fac.c[1])
        else:
            bad.append(fac.to_str())
    return roots, bad


def shift_vector(v: Sequence[RatFunc], c) -> list[RatFunc]:
    return [RatFunc.of(f).shift(c) for f in v]


def apply_phi(module: DifferenceModule, v: Sequence, times: int = 1) -> list[RatFunc]:
    """Phi*(sum_j v_j e_j) = phi . v(beta + nu), iterated `times` times."""
    out = [RatFunc.of(f) for f in v]
    for _ in range(times):
        sv = shift_vector(out, module.nu)
        out = [sum((module.phi[i][j] * sv[j] for j in range(module.rank)), RatFunc())
               for i in range(module.rank)]
    return out


def apply_phi_inverse(module: DifferenceModule, v: Sequence) -> list[RatFunc]:
    m = module.phi_inverse_shifted()
    sv = shift_vector(v, -module.nu)
    return [sum((m[i][j] * sv[j] for j in range(module.rank)), RatFunc())
            for i in range(module.rank)]


@dataclass(frozen=True)
class Lattice:
    """C[[beta - place]]-lattice in the completed module, spanned by columns of basis."""

    place: GaussQ
    basis: tuple
    prec: int = LATTICE_PREC

    def __post_init__(self):
        object.__setattr__(self, "place", GaussQ.of(self.place))
        object.__setattr__(self, "basis", tuple(tuple(row) for row in self.basis))

    @property
    def rank(self) -> int:
        return len(self.basis)

    def matrix(self) -> Matrix:
        return [list(row) for row in self.basis]

    def det_val(self) -> Fraction:
        return det_valuation(self.matrix(), self.place)


def lattice_degree(l1: Lattice, l2: Lattice) -> Fraction:
    """deg(L1, L2) = val(det B2) - val(det B1); positive when L1 is larger."""
    if l1.place != l2.place:
        raise ModuleError("lattices live at different places")
    return l2.det_val() - l1.det_val()


def localize(module: DifferenceModule, place, prec: int = LATTICE_PREC, check: bool = True) -> Lattice:
    """The lattice V (x) C[[beta - x]] at a point outside the singular set."""
    place = GaussQ.of(place)
    if check and not is_regular_at(module, place):
        raise ModuleError(f"phi is not in GL_r of the local ring at {place}")
    return Lattice(place, identity(module.rank, RatFunc.of(1), RatFunc()), prec)


def image_lattice(module: DifferenceModule, place, prec: int = LATTICE_PREC) -> Lattice:
    """Phi*(V) (x) C[[beta - x]], spanned by the columns of phi."""
    return Lattice(GaussQ.of(place), module.matrix(), prec)


def is_regular_at(module: DifferenceModule, place) -> bool:
    place = GaussQ.of(place)
    for row in module.phi:
        for f in row:
            if not f.is_zero() and f.val_at(place) < 0:
                return False
    return module.det_phi().val_at(place) == 0


# ---------------------------------------------------------------------------
# Parabolic structure at finite places


@dataclass(frozen=True)
class FiniteParabolic:
    """Weights 0 <= t_1 < ... < t_m < T and lattices L_0 = V, ..., L_m = Phi*(V)."""

    place: GaussQ
    weights: tuple
    lattices: tuple  # L_0 .. L_m

    def __post_init__(self):
        object.__setattr__(self, "place", GaussQ.of(self.place))
        object.__setattr__(self, "weights", tuple(Fraction(t) for t in self.weights))
        if len(self.lattices) != len(self.weights) + 1:
            raise ModuleError("need m weights and m + 1 lattices")
        for a, b in zip(self.weights, self.weights[1:]):
            if not a < b:
                raise ModuleError("weights must be strictly increasing")


def standard_parabolic(module: DifferenceModule, place, weight, prec: int = LATTICE_PREC) -> FiniteParabolic:
    """One-step data L_0 = V, L_1 = Phi*(V) with a single weight."""
    return FiniteParabolic(
        place,
        (Fraction(weight),),
        (localize(module, place, prec, check=False), image_lattice(module, place, prec)),
    )


def chain_parabolic(module: DifferenceModule, place, weights, middle: Sequence, prec: int = LATTICE_PREC) -> FiniteParabolic:
    """Data with intermediate lattices given by basis matrices."""
    lats = [localize(module, place, prec, check=False)]
    lats += [Lattice(place, [[RatFunc.of(a) for a in row] for row in m], prec) for m in middle]
    lats.append(image_lattice(module, place, prec))
    return FiniteParabolic(place, tuple(weights), tuple(lats))


@dataclass(frozen=True)
class SingularityRecord:
    place: GaussQ
    weight: Fraction
    jump: Fraction  # deg(L_i, L_{i-1})


def singularity_data(module: DifferenceModule, data: Sequence[FiniteParabolic]) -> list[SingularityRecord]:
    """Weighted jumps sorted by (Re x, Im x, t)."""
    T = module.T
    out = []
    for fp in data:
        for t in fp.weights:
            if not 0 <= t < T:
                raise ModuleError(f"weight {t} outside [0, T)")
        for i, t in enumerate(fp.weights, start=1):
            out.append(SingularityRecord(fp.place, t, lattice_degree(fp.lattices[i], fp.lattices[i - 1])))
    out.sort(key=lambda r: (r.place.re, r.place.im, r.weight))
    return out


def validate_finite_data(module: DifferenceModule, data: Sequence[FiniteParabolic]) -> list[str]:
    """Diagnostics: places in D without data and data at regular points."""
    msgs = []
    roots, unresolved = module.singular_support()
    have = {fp.place for fp in data}
    for x in roots:
        if x not in have:
            msgs.append(f"singular point {x} carries no parabolic data")
    for fp in data:
        if is_regular_at(module, fp.place):
            msgs.append(f"place {fp.place} is regular; its jump is zero")
    for u in unresolved:
        msgs.append(f"singular factor {u} has no roots in Q(i)")
    return msgs


def lattice_from_series(place, basis: Matrix, prec: int = LATTICE_PREC) -> Lattice:
    """Lattice with a basis of Laurent series in beta - place."""
    for row in basis:
        for a in row:
            if not isinstance(a, Puiseux):
                raise TypeError("expected Puiseux entries")
    return Lattice(place, basis, prec)


__all__ = [
    "DifferenceModule",
    "Lattice",
    "FiniteParabolic",
    "SingularityRecord",
    "apply_phi",
    "apply_phi_inverse",
    "lattice_degree",
    "localize",
    "image_lattice",
    "is_regular_at",
    "standard_parabolic",
    "chain_parabolic",
    "singularity_data",
    "validate_finite_data",
    "default_order",
    "INFINITY",
    "SingularMatrixError",
    "ModuleError",
]
