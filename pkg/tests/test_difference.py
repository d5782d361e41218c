from fractions import Fraction as F

import pytest

import oracles
from dmkh.algebra import GaussQ, I, RatFunc
from dmkh.difference import (
    DifferenceModule,
    Lattice,
    ModuleError,
    apply_phi,
    apply_phi_inverse,
    chain_parabolic,
    is_regular_at,
    lattice_degree,
    qi_roots,
    singularity_data,
    standard_parabolic,
    validate_finite_data,
)

b = RatFunc.X()


def test_phi_and_inverse_round_trip():
    mod = DifferenceModule([[b, RatFunc.of(1)], [RatFunc(), b + I]], GaussQ(1, 1), F(1, 2))
    assert mod.nu == GaussQ(0, 2) * GaussQ(1, 1) * F(1, 2)
    v = [b ** 2 + 1, RatFunc.of(3) / (b - 2)]
    assert apply_phi_inverse(mod, apply_phi(mod, v)) == v
    twice = apply_phi(mod, v, 2)
    assert twice == apply_phi(mod, apply_phi(mod, v))


def test_singular_support_over_gaussian_rationals():
    mod = DifferenceModule([[RatFunc(), (b - 1) * (b * b + 1)], [RatFunc.of(1), RatFunc()]], 0, 1)
    roots, bad = mod.singular_support()
    assert set(roots) == {GaussQ(1), I, -I}
    assert bad == []
    roots, bad = qi_roots((b * b - 2).num)
    assert roots == [] and bad


def test_regularity():
    mod = DifferenceModule([[b, RatFunc()], [RatFunc(), RatFunc.of(1) / (b - 3)]], 0, 1)
    assert not is_regular_at(mod, 0)
    assert not is_regular_at(mod, 3)
    assert is_regular_at(mod, 1)


def test_zero_phi_rejected():
    with pytest.raises(ModuleError):
        DifferenceModule([[RatFunc(), RatFunc()], [RatFunc(), RatFunc()]], 0, 1)


def test_standard_jump_is_minus_det_multiplicity():
    P = (b - 1) ** 3 * (b + I)
    mod = DifferenceModule([[RatFunc(), P], [RatFunc.of(1), RatFunc()]], 0, 1)
    data = [standard_parabolic(mod, 1, F(1, 5)), standard_parabolic(mod, -I, F(2, 3))]
    recs = singularity_data(mod, data)
    jumps = {r.place: r.jump for r in recs}
    assert jumps == {GaussQ(1): -3, -I: -1}
    for fp in data:
        L0, L1 = fp.lattices
        assert oracles.smith_lattice_degree(L1.matrix(), L0.matrix(), fp.place) == jumps[fp.place]


def test_chain_parabolic_splits_the_jump():
    mod = DifferenceModule([[b ** 2, RatFunc()], [RatFunc(), RatFunc.of(1)]], 0, 1)
    mid = [[b, 0], [0, 1]]
    fp = chain_parabolic(mod, 0, [F(1, 4), F(1, 2)], [mid])
    recs = singularity_data(mod, [fp])
    assert [r.jump for r in recs] == [-1, -1]
    assert sum(r.jump for r in recs) == lattice_degree(fp.lattices[-1], fp.lattices[0])


def test_weights_validated():
    mod = DifferenceModule([[b]], 0, 1)
    with pytest.raises(ModuleError):
        singularity_data(mod, [standard_parabolic(mod, 0, 1)])
    with pytest.raises(ModuleError):
        chain_parabolic(mod, 0, [F(1, 2), F(1, 4)], [[[b]]])


def test_validation_messages():
    mod = DifferenceModule([[b * (b - 1)]], 0, 1)
    msgs = validate_finite_data(mod, [standard_parabolic(mod, 0, 0), standard_parabolic(mod, 5, 0)])
    assert any("1 carries no parabolic data" in m for m in msgs)
    assert any("place 5 is regular" in m for m in msgs)


def test_lattice_degree_sign_and_places():
    L1 = Lattice(0, [[RatFunc.of(1)]])
    L2 = Lattice(0, [[b ** 2]])
    assert lattice_degree(L1, L2) == 2
    assert lattice_degree(L2, L1) == -2
    with pytest.raises(ModuleError):
        lattice_degree(L1, Lattice(1, [[b]]))
