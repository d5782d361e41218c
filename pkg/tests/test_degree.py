from fractions import Fraction as F

import pytest

import oracles
from dmkh.algebra import GaussQ, I, Poly, RatFunc
from dmkh.degree import (
    SEMISTABLE,
    STABLE,
    UNSTABLE,
    StabilityError,
    build_example_A,
    build_example_B,
    check_infinity_data,
    direct_sum,
    filtered_bundle_degree_P1,
    finite_contribution,
    induced_submodule,
    make_pdm,
    pade,
    parabolic_degree,
    riccati_holds,
    slope,
    slope_contribution,
    stability_check,
)
from dmkh.difference import DifferenceModule, ModuleError, standard_parabolic

b = RatFunc.X()


def test_example_a_summands():
    ex = build_example_A([0], [1], [F(1, 4)], [F(1, 4)])
    pdm = ex.pdm
    assert filtered_bundle_degree_P1(pdm) == F(1, 2) - F(1, 4)
    assert finite_contribution(pdm) == -F(3, 4)
    assert slope_contribution(pdm) == -F(1, 2)
    assert parabolic_degree(pdm) == ex.closed_form == -1
    assert slope(pdm) == -F(1, 2)


def test_example_a_even_closed_form_and_oracle():
    S, ell, w, d = [0, GaussQ(1, 1)], [1, 1], [0, F(1, 2)], [F(1, 3), -F(1, 2)]
    ex = build_example_A(S, ell, w, d)
    assert parabolic_degree(ex.pdm) == ex.closed_form == -F(4, 3)
    assert oracles.example_a_degree_oracle(S, ell, w, d) == ex.closed_form


def test_example_b_closed_form_and_oracle():
    ex = build_example_B([-1, 0, 1], Poly([1, 0, 1]), [0, F(1, 3), F(1, 2)], [0, 0])
    assert parabolic_degree(ex.pdm) == ex.closed_form == F(4, 3)
    assert oracles.example_b_degree_oracle([-1, 0, 1], [1, 0, 1], [0, F(1, 3), F(1, 2)], [0, 0]) == F(4, 3)


def test_infinity_filtrations_are_good():
    for ex in (build_example_A([0], [1], [0], [0]),
               build_example_A([0, 1], [1, 1], [0, 0], [0, 0]),
               build_example_B([-1, 0, 1], Poly([1, 0, 1]), [0, 0, 0], [0, 0])):
        assert check_infinity_data(ex.pdm).ok


def test_example_input_validation():
    with pytest.raises(ModuleError):
        build_example_A([0, 0], [1, 1], [0, 0], [0, 0])
    with pytest.raises(ModuleError):
        build_example_A([0], [1], [0], [0, 0])
    with pytest.raises(ModuleError):
        build_example_B([0, 1, 2], Poly([1]), [0, 0, 0], [0, 0])
    with pytest.raises(ModuleError):
        build_example_B([], Poly([1]), [], [0, 0])
    assert build_example_A([0], [2], [0], [0, 0]).warnings


def test_direct_sum_is_additive():
    a = build_example_A([0], [1], [F(1, 4)], [F(1, 4)]).pdm
    m1 = DifferenceModule([[b - 2]], 0, 1)
    c = make_pdm(m1, [standard_parabolic(m1, 2, F(1, 3))], d=[F(1, 2)])
    s = direct_sum(a, c)
    assert s.rank == 3
    assert parabolic_degree(s) == parabolic_degree(a) + parabolic_degree(c)


def test_diag_unstable_witness():
    mod = DifferenceModule([[b, RatFunc()], [RatFunc(), RatFunc.of(1)]], 0, 1)
    pdm = make_pdm(mod, [standard_parabolic(mod, 0, 0)])
    assert parabolic_degree(pdm) == -F(3, 2)
    v = stability_check(pdm)
    assert v.status == UNSTABLE and v.certified
    assert v.witness.name == "e2" and v.witness.mu == 0
    sub = induced_submodule(pdm, [v.witness.vector])
    assert parabolic_degree(sub) == 0


def test_equal_summands_are_semistable():
    mod = DifferenceModule([[b, RatFunc()], [RatFunc(), b]], 0, 1)
    pdm = make_pdm(mod, [standard_parabolic(mod, 0, 0)])
    assert stability_check(pdm).status == SEMISTABLE


def test_stable_examples():
    assert stability_check(build_example_A([0], [3], [0], [0]).pdm).status == STABLE
    ex = build_example_B([-1, 0, 1], Poly([1, 0, 1]), [0, F(1, 3), F(1, 2)], [0, 0])
    assert stability_check(ex.pdm).status == STABLE


def test_rank_limits():
    mod = DifferenceModule([[b, RatFunc(), RatFunc()], [RatFunc(), RatFunc.of(1), RatFunc()],
                            [RatFunc(), RatFunc(), RatFunc.of(1)]], 0, 1)
    with pytest.raises(StabilityError):
        stability_check(make_pdm(mod, [standard_parabolic(mod, 0, 0)]))
    assert stability_check(make_pdm(DifferenceModule([[b]], 0, 1), [])).status == STABLE


def test_riccati_and_pade_recover_invariant_line():
    # phi = [[1, 0], [g - g', ...]] style: the line e1 + g e2 with g = 1/(b - 1) is invariant
    g = RatFunc.of(1) / (b - 1)
    nu = GaussQ(0, 2)
    mod = DifferenceModule([[RatFunc.of(1), RatFunc()], [g - g.shift(nu) * b, b]], 1, 1)
    assert riccati_holds(mod, g)
    assert pade(g.series_at_infinity(12), 2) == g
    assert not riccati_holds(mod, g + 1)


def test_lambda_nonzero_unstable_diag():
    mod = DifferenceModule([[b, RatFunc()], [RatFunc(), RatFunc.of(1)]], I, 1)
    v = stability_check(make_pdm(mod, [standard_parabolic(mod, 0, 0)]))
    assert v.status == UNSTABLE and v.witness.name == "e2"
