import dataclasses
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp

from dmkh import monopoles as M
from dmkh.algebra import GaussQ

t, X, Y = M.SYMBOLS
LAMS = (0, 1, 1j, 0.5 + 0.25j)


def families(lam):
    return [
        M.basic_lp_ell(2, 1, lam),
        M.basic_lp_ell(1, -2, lam, T=2.0),
        M.frobenius([0, F(1, 2), F(1, 3)], 2, lam),
        M.frobenius([0, 1j], 1, lam),
        M.tame(F(1, 2), 1j, lam),
        M.tame(-1, F(1, 3) - 2j, lam, T=0.5),
        M.global_gamma(F(1, 3) + 0.5j, lam),
    ]


def test_hodge_star_relations_are_exact():
    assert M.hodge_identities()["ok"]


@pytest.mark.parametrize("lam", [0.5 + 0.25j, 2 - 1j, 1j])
def test_chart_round_trip(lam):
    rng = np.random.default_rng(0)
    tt, w = rng.uniform(0, 1, 20), rng.normal(size=20) + 1j * rng.normal(size=20)
    t1, b1 = M.chart_to_1(lam, tt, w)
    t_back, w_back = M.chart_from_1(lam, t1, b1)
    assert np.max(np.abs(t_back - tt)) < 1e-12
    assert np.max(np.abs(w_back - w)) < 1e-12


@pytest.mark.parametrize("lam", LAMS)
def test_families_solve_bogomolny_and_glue(lam):
    for model in families(lam):
        pts = M.sample_points(model, 24)
        assert np.max(M.bogomolny_residual(model, pts)) < 1e-12, model.family
        rep = M.frame_check(model, pts).max()
        assert rep["holomorphic"] < 1e-10, (model.family, rep)
        assert rep["cocycle"] < 1e-10, (model.family, rep)
        if rep["norm"] is not None:
            assert rep["norm"] < 1e-10


def test_gauge_transform_preserves_everything():
    base = M.tame(F(1, 2), 1j, 1)
    model = M.gauge_transform(base, M.default_gauge(base.T))
    pts = M.sample_points(model, 16)
    assert np.max(M.bogomolny_residual(model, pts)) < 1e-12
    assert M.frame_check(model, pts).max()["holomorphic"] < 1e-10
    assert np.max(M.g_operator_check(model, pts).deviation) < 1e-10


def test_printed_tame_frame_sign_fails():
    model = M.tame(F(1, 2), 1j, 0)
    al = sp.I
    wrong = dict(model.exprs, E=2 * sp.I * al * t / (X + sp.I * Y), factor=2 * sp.I * al * 1 / (X + sp.I * Y))
    bad = dataclasses.replace(model, exprs=wrong)
    pts = M.sample_points(bad, 16)
    assert M.frame_check(bad, pts).max()["holomorphic"] > 0.1
    assert M.frame_check(model, pts).max()["holomorphic"] < 1e-12


@pytest.mark.parametrize("lam", [0, 1, 1j, 0.5 + 0.25j, 2 - 1j])
def test_g_identity_off_shell(lam):
    # integrable but not Bogomolny: the identity still holds, the printed sign does not
    model = M.integrable_rank1(t ** 2 / 3 + X * Y / 5 + t * X / 7 + t * Y / 6 + sp.sin(Y) / 4, lam)
    pts = M.sample_points(model, 16, radius=3.0)
    assert np.max(M.bogomolny_residual(model, pts)) > 1e-3
    rep = M.g_operator_check(model, pts)
    assert np.max(rep.deviation) < 1e-10
    assert np.max(rep.printed_sign_deviation) > 1e-3


def test_g_identity_on_families():
    for lam in (0, 1, 1j):
        for model in families(lam):
            pts = M.sample_points(model, 16)
            assert np.max(M.g_operator_check(model, pts).deviation) < 1e-10


def test_finite_differences_are_second_order():
    model = M.frobenius([0, F(1, 2), F(1, 3)], 2, 1j)
    pts = M.sample_points(model, 4)
    rep = M.fd_convergence(model, pts)
    assert not rep.exact and 3.5 <= rep.ratio <= 4.5
    flat = M.global_gamma(2j, 0)
    assert M.fd_convergence(flat, M.sample_points(flat, 4)).exact


def test_sample_points_respect_region_and_sheets():
    model = M.tame(1, 1j, 1)
    tt, XX, YY = M.sample_points(model, 40)
    assert np.all(model.region(tt, XX, YY))
    assert np.all(model.region(tt + model.T, XX, YY))
    lp = M.basic_lp_ell(3, 1, 0)
    _, lx, ly = M.sample_points(lp, 30)
    args = np.angle(lx + 1j * ly)
    assert np.ptp(args) > np.pi / 2
    again = M.sample_points(model, 40)
    assert all(np.array_equal(a, b) for a, b in zip((tt, XX, YY), again))


def test_domain_errors():
    model = M.tame(1, 1j, 0)
    with pytest.raises(M.DomainError):
        model.check_domain((np.array([0.1]), np.array([0.1]), np.array([0.1])))
    with pytest.raises(M.DomainError):
        model.check_domain((np.array([0.1]), np.array([0.0]), np.array([0.0])))


def test_monodromy_matches_exponential_and_warns():
    f = np.array([[0.2, 0.1j], [0.3, -0.1]])
    assert np.max(np.abs(M.monodromy(f, 1.0, 2000) - M.monodromy_expected(f, 1.0))) < 1e-10
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        M.monodromy(f, 1.0, 50)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    At, phi = M.scattering_field(f)
    assert np.allclose(At, -At.conj().T) and np.allclose(phi, -phi.conj().T)


def test_global_degrees():
    assert M.global_degree(M.DiracL(F(1, 3), GaussQ(1, 1), 3, F(1, 5))) == F(-17, 10)
    assert M.global_degree(M.global_gamma(1j), F(2, 7)) == F(-2, 7)
    with pytest.raises(M.UnsupportedError):
        M.global_degree(M.tame(1, 1j))
    with pytest.raises(ValueError):
        M.DiracL(F(3, 2), 0, 1, 0)


def test_sweep_report():
    rep = M.sweep(M.basic_lp_ell(2, 1, 1j), samples=16)
    assert rep.bogomolny < 1e-12 and rep.g_identity < 1e-10
    assert rep.frame["holomorphic"] < 1e-10
    assert 3.5 <= rep.fd.ratio <= 4.5
