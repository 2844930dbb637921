import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from voxpopuli import distributions as dist
from voxpopuli.distributions import (
    AstParams,
    ModelKind,
    NormalParams,
    TwoPieceNormalParams,
    ag_skewness_ast,
    ag_skewness_tpn,
    ast_cdf,
    ast_pdf,
    ast_quantile,
    ast_sample,
    normal_cdf,
    normal_pdf,
    t_cdf,
    t_kernel,
    t_pdf,
    t_quantile,
    tpn_cdf,
    tpn_moments,
    tpn_pdf,
    tpn_quantile,
)
from voxpopuli.errors import DomainError, ParameterError

import oracles

GALTON_LIKE = AstParams(0.66, 4.97, 2.73, 1210.0, 30.0)

alphas = st.floats(0.05, 0.95)
nus = st.floats(0.5, 60.0)
mus = st.floats(-1e3, 1e3)
sigmas = st.floats(0.05, 50.0)


@st.composite
def ast_params(draw):
    return AstParams(draw(alphas), draw(nus), draw(nus), draw(mus), draw(sigmas))


@st.composite
def tpn_params(draw):
    return TwoPieceNormalParams(draw(mus), draw(sigmas), draw(sigmas))


# -- kernels -------------------------------------------------------------------


def test_t_kernel_cauchy():
    assert t_kernel(1) == pytest.approx(1 / math.pi, rel=1e-14)


def test_t_kernel_against_gamma_ratio():
    # frozen from mpmath at 40 digits
    assert t_kernel(5) == pytest.approx(0.379606689822494431, rel=1e-13)
    for nu in (0.1, 0.7, 2.73, 4.97, 30.0, 1e3):
        assert t_kernel(nu) == pytest.approx(oracles.t_normaliser(nu), rel=1e-12)


def test_t_kernel_normal_limit():
    assert abs(t_kernel(1e6) - 1 / math.sqrt(2 * math.pi)) < 1e-6


@pytest.mark.parametrize("nu", [0.0, -1.0])
def test_t_kernel_domain(nu):
    with pytest.raises(DomainError):
        t_kernel(nu)


def test_standard_kernels():
    assert normal_pdf(0.0, 1.0, 0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert t_cdf(1, 0.0) == 0.5
    assert t_pdf(1, 0.0) == pytest.approx(1 / math.pi)
    assert normal_cdf(0.0, 1.0, 0.0) == 0.5


def test_t_quantile_bisection_oracle():
    # bisection against a quadrature t CDF in mpmath
    assert t_quantile(5, 0.975) == pytest.approx(2.5705818356363148, abs=1e-10)


@pytest.mark.parametrize("nu", [0.3, 1.0, 2.73, 4.97, 25.0])
def test_t_quantile_inverts_cdf(nu):
    q = np.array([1e-6, 1e-3, 0.1, 0.5, 0.8, 0.999])
    assert np.max(np.abs(t_cdf(nu, t_quantile(nu, q)) - q)) < 1e-10


def test_t_cdf_matches_quadrature():
    for nu, y in [(2.0, -1.3), (4.97, 0.7), (0.5, 3.0)]:
        f = lambda s: oracles.student_density(nu, 0.0, 1.0, s)
        expect, _ = integrate.quad(f, -np.inf, y, epsabs=1e-13, epsrel=1e-12, limit=500)
        assert t_cdf(nu, y) == pytest.approx(expect, abs=1e-10)


@pytest.mark.parametrize(
    "call",
    [
        lambda: normal_pdf(0, 0, 1),
        lambda: t_cdf(0, 1),
        lambda: t_quantile(3, 1.0),
        lambda: t_quantile(3, 0.0),
    ],
)
def test_kernel_domain_errors(call):
    with pytest.raises(DomainError):
        call()


# -- parameter types -----------------------------------------------------------


@pytest.mark.parametrize(
    "args",
    [
        (0.0, 5, 5, 0, 1),
        (1.0, 5, 5, 0, 1),
        (0.5, 0.05, 5, 0, 1),
        (0.5, 5, 2e6, 0, 1),
        (0.5, 5, 5, 0, 0),
        (0.5, 5, 5, math.inf, 1),
    ],
)
def test_ast_params_validation(args):
    with pytest.raises(ParameterError):
        AstParams(*args)


def test_other_params_validation():
    with pytest.raises(ParameterError):
        NormalParams(0, -1)
    with pytest.raises(ParameterError):
        TwoPieceNormalParams(0, 1, 0)


def test_model_kind_counts():
    assert [k.k for k in ModelKind] == [2, 3, 3, 4, 5]


def test_check_kind_constraints():
    dist.check_kind(ModelKind.STUDENT_T, AstParams.student_t(4, 0, 1))
    with pytest.raises(ParameterError):
        dist.check_kind(ModelKind.STUDENT_T, AstParams(0.4, 4, 4, 0, 1))
    with pytest.raises(ParameterError):
        dist.check_kind(ModelKind.TWO_PIECE_T, AstParams(0.4, 4, 5, 0, 1))
    with pytest.raises(ParameterError):
        dist.check_kind(ModelKind.NORMAL, TwoPieceNormalParams(0, 1, 1))


def test_alpha_star_in_unit_interval():
    assert 0 < GALTON_LIKE.alpha_star < 1


# -- AST -----------------------------------------------------------------------


def test_ast_cauchy_reduction():
    p = AstParams(0.5, 1, 1, 0, 1)
    assert ast_pdf(p, 0.0) == pytest.approx(1 / math.pi, rel=1e-14)
    assert ast_cdf(p, 1.0) == pytest.approx(0.75, abs=1e-14)


@pytest.mark.parametrize("nu", [0.5, 1.0, 3.0, 7.5, 40.0])
def test_ast_symmetric_reduction(nu):
    p = AstParams.student_t(nu, 3.0, 2.0)
    y = np.linspace(-30, 30, 121)
    expect = stats.t.pdf(y, nu, loc=3.0, scale=2.0)
    assert np.max(np.abs(ast_pdf(p, y) - expect)) < 1e-12


def test_ast_pdf_matches_piecewise_formula():
    for y in (1100.0, 1200.0, 1210.0, 1211.0, 1400.0):
        assert ast_pdf(GALTON_LIKE, y) == pytest.approx(oracles.ast_density(0.66, 4.97, 2.73, 1210.0, 30.0, y), rel=1e-12)


def test_ast_mode_value_from_both_pieces():
    p = GALTON_LIKE
    expect = (p.alpha * t_kernel(p.nu1) + (1 - p.alpha) * t_kernel(p.nu2)) / p.sigma
    assert ast_pdf(p, p.mu) == pytest.approx(expect, rel=1e-14)
    eps = 1e-9
    assert abs(ast_pdf(p, p.mu - eps) - ast_pdf(p, p.mu + eps)) < 1e-10


def test_ast_integrates_to_one():
    p = GALTON_LIKE
    total = oracles.integrate_density(lambda y: ast_pdf(p, y), p.mu)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_ast_cdf_matches_quadrature_on_grid():
    p = GALTON_LIKE
    grid = np.linspace(1000, 1450, 20)
    f = lambda y: oracles.ast_density(p.alpha, p.nu1, p.nu2, p.mu, p.sigma, y)
    for y in grid:
        if y <= p.mu:
            expect, _ = integrate.quad(f, -np.inf, y, epsabs=1e-13, epsrel=1e-12, limit=500)
        else:
            tail, _ = integrate.quad(f, y, np.inf, epsabs=1e-13, epsrel=1e-12, limit=500)
            expect = 1 - tail
        assert abs(ast_cdf(p, y) - expect) < 1e-7


@given(ast_params())
def test_ast_cdf_at_mode_is_alpha(p):
    assert ast_cdf(p, p.mu) == p.alpha


@given(ast_params(), st.sampled_from([1e-4, 0.01, 0.25, 0.5, 0.75, 0.99, 1 - 1e-4]))
def test_ast_quantile_round_trip(p, q):
    assert abs(ast_cdf(p, ast_quantile(p, q)) - q) < 1e-9


def test_ast_quantile_at_alpha_is_mode():
    assert ast_quantile(GALTON_LIKE, 0.66) == pytest.approx(GALTON_LIKE.mu, abs=1e-12)
    assert ast_quantile(AstParams.student_t(4, 7.0, 2.0), 0.5) == pytest.approx(7.0, abs=1e-12)


def test_ast_quantile_domain():
    with pytest.raises(DomainError):
        ast_quantile(GALTON_LIKE, 1.0)


@given(ast_params(), st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_ast_cdf_monotone(p, a, b):
    lo, hi = min(a, b), max(a, b)
    assert ast_cdf(p, lo) <= ast_cdf(p, hi)


def test_ast_cdf_limits():
    assert ast_cdf(GALTON_LIKE, -1e12) < 1e-12
    assert ast_cdf(GALTON_LIKE, 1e12) > 1 - 1e-12


def test_ag_skewness_ast():
    assert ag_skewness_ast(AstParams(0.5, 3, 3, 0, 1)) == 0
    assert ag_skewness_ast(GALTON_LIKE) == pytest.approx(-0.32, abs=1e-15)
    assert ag_skewness_ast(AstParams(0.25, 3, 9, 0, 1)) == 0.5


def test_ag_sign_matches_quadrature_areas():
    for p in (GALTON_LIKE, AstParams(0.3, 2, 9, 0, 1)):
        f = lambda y: ast_pdf(p, y)
        below, _ = integrate.quad(f, -np.inf, p.mu, epsabs=1e-12)
        above, _ = integrate.quad(f, p.mu, np.inf, epsabs=1e-12)
        assert math.copysign(1, ag_skewness_ast(p)) == math.copysign(1, above - below)
        assert ag_skewness_ast(p) == pytest.approx(above - below, abs=1e-8)


# -- sampling ------------------------------------------------------------------


def test_sample_single_draw_finite():
    x = ast_sample(GALTON_LIKE, 1, seed=3)
    assert x.shape == (1,) and np.isfinite(x[0])


def test_sample_deterministic():
    assert np.array_equal(ast_sample(GALTON_LIKE, 50, 7), ast_sample(GALTON_LIKE, 50, 7))
    assert not np.array_equal(ast_sample(GALTON_LIKE, 50, 7), ast_sample(GALTON_LIKE, 50, 8))


def test_sample_rejects_empty():
    with pytest.raises(DomainError):
        ast_sample(GALTON_LIKE, 0, 1)


def test_symmetric_sample_skewness():
    x = ast_sample(AstParams.student_t(9.0, 0.0, 1.0), 100_000, seed=11)
    assert abs(stats.skew(x)) < 0.1


def test_sample_mass_below_mode():
    x = ast_sample(GALTON_LIKE, 100_000, seed=5)
    assert abs(np.mean(x <= GALTON_LIKE.mu) - 0.66) < 0.01


def test_sample_ks_single_seed():
    x = ast_sample(GALTON_LIKE, 10_000, seed=1)
    d = stats.kstest(x, lambda y: ast_cdf(GALTON_LIKE, y)).statistic
    assert d < oracles.ks_critical_1pct(x.size)


# -- two-piece normal ----------------------------------------------------------


def test_tpn_symmetric_reduction():
    y = np.linspace(-10, 10, 101)
    p = TwoPieceNormalParams(1.0, 2.0, 2.0)
    assert np.max(np.abs(tpn_pdf(p, y) - normal_pdf(1.0, 2.0, y))) < 1e-12


def test_tpn_mode_value():
    p = TwoPieceNormalParams(0.0, 1.0, 2.0)
    assert tpn_pdf(p, 0.0) == pytest.approx(0.26596152026762179, rel=1e-14)


def test_tpn_integrates_to_one():
    p = TwoPieceNormalParams(0.0, 1.0, 2.0)
    assert oracles.integrate_density(lambda y: tpn_pdf(p, y), 0.0) == pytest.approx(1.0, abs=1e-10)


def test_tpn_cdf_mass_at_mode():
    assert tpn_cdf(TwoPieceNormalParams(3.0, 2.0, 2.0), 3.0) == 0.5
    assert tpn_cdf(TwoPieceNormalParams(0.0, 1.0, 2.0), 0.0) == pytest.approx(1 / 3, abs=1e-16)


@given(tpn_params())
def test_tpn_cdf_mass_identity(p):
    assert abs(tpn_cdf(p, p.mu) - p.sigma1 / (p.sigma1 + p.sigma2)) < 1e-15


@given(tpn_params(), st.sampled_from([1e-4, 0.05, 0.3, 0.5, 0.95, 1 - 1e-4]))
def test_tpn_round_trip(p, q):
    assert abs(tpn_cdf(p, tpn_quantile(p, q)) - q) < 1e-9


def test_tpn_quantile_grid():
    p = TwoPieceNormalParams(1200.0, 66.7, 43.0)
    q = np.arange(1, 20) / 20
    assert np.max(np.abs(tpn_cdf(p, tpn_quantile(p, q)) - q)) < 1e-9


def test_tpn_moments_symmetric():
    mean, var, beta2 = tpn_moments(TwoPieceNormalParams(5.0, 2.0, 2.0))
    assert mean == pytest.approx(5.0, abs=1e-12)
    assert var == pytest.approx(4.0, rel=1e-12)
    assert beta2 == pytest.approx(3.0, abs=1e-6)


def test_tpn_moments_mean_and_variance_against_quadrature():
    p = TwoPieceNormalParams(0.0, 1.0, 2.0)
    mean, var, _ = tpn_moments(p)
    assert mean == pytest.approx(0.79788456080286536, abs=1e-10)
    m = oracles.integrate_density(lambda y: y * tpn_pdf(p, y), 0.0)
    v = oracles.integrate_density(lambda y: (y - m) ** 2 * tpn_pdf(p, y), 0.0)
    assert mean == pytest.approx(m, abs=1e-9)
    assert var == pytest.approx(v, rel=1e-9)


@pytest.mark.parametrize("ratio", [1, 2, 5, 10, 100])
def test_tpn_beta2_bounds(ratio):
    _, _, beta2 = tpn_moments(TwoPieceNormalParams(0.0, 1.0, float(ratio)))
    assert 3 - 1e-6 <= beta2 <= 3.87


def test_tpn_beta2_mirror_symmetric():
    a = tpn_moments(TwoPieceNormalParams(0.0, 1.0, 4.0))[2]
    b = tpn_moments(TwoPieceNormalParams(0.0, 4.0, 1.0))[2]
    assert a == pytest.approx(b, rel=1e-9)


def test_ag_skewness_tpn():
    assert ag_skewness_tpn(TwoPieceNormalParams(0, 2, 2)) == 0
    assert ag_skewness_tpn(TwoPieceNormalParams(0, 1, 3)) == 0.5
    # sigma = probable error 45, 29 over 0.67449
    assert ag_skewness_tpn(TwoPieceNormalParams(1200, 66.71, 42.99)) == pytest.approx(-0.21622607110300820, abs=1e-12)


# -- dispatch ------------------------------------------------------------------


def test_kind_of():
    assert dist.kind_of(NormalParams(0, 1)) is ModelKind.NORMAL
    assert dist.kind_of(TwoPieceNormalParams(0, 1, 2)) is ModelKind.TWO_PIECE_NORMAL
    assert dist.kind_of(AstParams.student_t(3, 0, 1)) is ModelKind.STUDENT_T
    assert dist.kind_of(AstParams(0.3, 3, 3, 0, 1)) is ModelKind.TWO_PIECE_T
    assert dist.kind_of(GALTON_LIKE) is ModelKind.AST


def test_scalar_and_array_returns():
    assert isinstance(dist.pdf(GALTON_LIKE, 1200.0), float)
    assert dist.pdf(GALTON_LIKE, [1200.0, 1300.0]).shape == (2,)


def test_logpdf_consistent_with_pdf():
    y = np.linspace(900, 1500, 31)
    for p in (GALTON_LIKE, NormalParams(1197, 61.9), TwoPieceNormalParams(1208, 66.7, 43.0)):
        assert np.allclose(np.exp(dist.logpdf(p, y)), dist.pdf(p, y), rtol=1e-14, atol=0)


@pytest.mark.slow
@pytest.mark.parametrize("p", [GALTON_LIKE, TwoPieceNormalParams(0.0, 1.0, 3.0)], ids=["ast", "tpn"])
def test_sample_ks_across_seeds(p):
    crit = oracles.ks_critical_1pct(10_000)
    below = sum(stats.kstest(dist.sample(p, 10_000, seed=s), lambda y: dist.cdf(p, y)).statistic < crit for s in range(100))
    assert below >= 95
