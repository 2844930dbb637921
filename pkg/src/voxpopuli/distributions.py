"""Density, distribution, quantile and sampling kernels for the model ladder.

The ladder runs from the normal distribution through Student-t, the two-piece
(Fechner) normal and the two-piece t, up to the five-parameter asymmetric
Student-t (AST) of Zhu and Galbraith.  Student-t and two-piece t models are
represented as constrained :class:`AstParams`.

All functions accept scalars or array-likes for the evaluation point and
return a ``float`` for scalar input, an ``ndarray`` otherwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, special

from .errors import DomainError, ParameterError

NU_MIN = 0.1
NU_MAX = 1e6

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ModelKind(str, enum.Enum):
    NORMAL = "normal"
    STUDENT_T = "t"
    TWO_PIECE_NORMAL = "tpn"
    TWO_PIECE_T = "tpt"
    AST = "ast"

    @property
    def k(self) -> int:
        """Number of free parameters."""
        return _PARAM_COUNT[self]

    @property
    def label(self) -> str:
        return _LABELS[self]


_PARAM_COUNT = {
    ModelKind.NORMAL: 2,
    ModelKind.STUDENT_T: 3,
    ModelKind.TWO_PIECE_NORMAL: 3,
    ModelKind.TWO_PIECE_T: 4,
    ModelKind.AST: 5,
}

_LABELS = {
    ModelKind.NORMAL: "Normal",
    ModelKind.STUDENT_T: "Student-t",
    ModelKind.TWO_PIECE_NORMAL: "Two-piece normal",
    ModelKind.TWO_PIECE_T: "Two-piece t",
    ModelKind.AST: "Asymmetric Student-t",
}


def _check_nu(name: str, nu: float) -> None:
    if not (NU_MIN <= nu <= NU_MAX):
        raise ParameterError(f"{name} must lie in [{NU_MIN}, {NU_MAX:g}], got {nu!r}")


def _check_positive(name: str, value: float) -> None:
    if not (value > 0.0 and math.isfinite(value)):
        raise ParameterError(f"{name} must be positive and finite, got {value!r}")


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class NormalParams:
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        _check_finite("mu", self.mu)
        _check_positive("sigma", self.sigma)


@dataclass(frozen=True)
class TwoPieceNormalParams:
    """Two-piece normal with mode ``mu`` and half-specific scales."""

    mu: float
    sigma1: float
    sigma2: float

    def __post_init__(self) -> None:
        _check_finite("mu", self.mu)
        _check_positive("sigma1", self.sigma1)
        _check_positive("sigma2", self.sigma2)


@dataclass(frozen=True)
class AstParams:
    """Asymmetric Student-t parameters.

    ``alpha`` is the probability mass below the mode ``mu``; ``nu1`` and
    ``nu2`` are the left and right tail degrees of freedom.
    """

    alpha: float
    nu1: float
    nu2: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        _check_nu("nu1", self.nu1)
        _check_nu("nu2", self.nu2)
        _check_finite("mu", self.mu)
        _check_positive("sigma", self.sigma)

    @classmethod
    def student_t(cls, nu: float, mu: float, sigma: float) -> AstParams:
        return cls(0.5, nu, nu, mu, sigma)

    @classmethod
    def two_piece_t(cls, alpha: float, nu: float, mu: float, sigma: float) -> AstParams:
        return cls(alpha, nu, nu, mu, sigma)

    @property
    def alpha_star(self) -> float:
        a1 = self.alpha * t_kernel(self.nu1)
        a2 = (1.0 - self.alpha) * t_kernel(self.nu2)
        return a1 / (a1 + a2)

    @property
    def mode_density(self) -> float:
        return (
            self.alpha * t_kernel(self.nu1) + (1.0 - self.alpha) * t_kernel(self.nu2)
        ) / self.sigma


Params = Union[NormalParams, TwoPieceNormalParams, AstParams]


def check_kind(kind: ModelKind, params: Params) -> None:
    """Raise :class:`ParameterError` unless ``params`` satisfies ``kind``'s constraints."""
    kind = ModelKind(kind)
    expected = {
        ModelKind.NORMAL: NormalParams,
        ModelKind.TWO_PIECE_NORMAL: TwoPieceNormalParams,
    }.get(kind, AstParams)
    if not isinstance(params, expected):
        raise ParameterError(f"{kind.value} requires {expected.__name__}, got {type(params).__name__}")
    if kind is ModelKind.STUDENT_T and not (params.alpha == 0.5 and params.nu1 == params.nu2):
        raise ParameterError("Student-t requires alpha = 1/2 and nu1 = nu2")
    if kind is ModelKind.TWO_PIECE_T and params.nu1 != params.nu2:
        raise ParameterError("two-piece t requires nu1 = nu2")


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check_prob(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if not np.all((q > 0.0) & (q < 1.0)):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    return q


# -- standard kernels ---------------------------------------------------------


def log_t_kernel(nu: float) -> float:
    if not nu > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {nu!r}")
    # log Gamma((nu+1)/2) - log Gamma(nu/2) - log sqrt(pi nu), via the beta function
    return float(-0.5 * math.log(nu) - special.betaln(0.5 * nu, 0.5))


def t_kernel(nu: float) -> float:
    """Normalising constant of the standard Student-t density, i.e. its value at 0."""
    return math.exp(log_t_kernel(nu))


def normal_logpdf(mu: float, sigma: float, y):
    if not sigma > 0.0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    z = (np.asarray(y, dtype=float) - mu) / sigma
    return _out(-0.5 * z * z - _LOG_SQRT_2PI - math.log(sigma))


def normal_pdf(mu: float, sigma: float, y):
    return _out(np.exp(normal_logpdf(mu, sigma, y)))


def normal_cdf(mu: float, sigma: float, y):
    if not sigma > 0.0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    return _out(special.ndtr((np.asarray(y, dtype=float) - mu) / sigma))


def normal_quantile(mu: float, sigma: float, q):
    if not sigma > 0.0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    return _out(mu + sigma * special.ndtri(_check_prob(q)))


def t_logpdf(nu: float, y):
    y = np.asarray(y, dtype=float)
    return _out(log_t_kernel(nu) - 0.5 * (nu + 1.0) * np.log1p(y * y / nu))


def t_pdf(nu: float, y):
    return _out(np.exp(t_logpdf(nu, y)))


def t_cdf(nu: float, y):
    if not nu > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {nu!r}")
    return _out(special.stdtr(nu, np.asarray(y, dtype=float)))


def t_quantile(nu: float, q):
    if not nu > 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {nu!r}")
    return _out(special.stdtrit(nu, _check_prob(q)))


# -- asymmetric Student-t ------------------------------------------------------


def ast_logpdf(p: AstParams, y):
    y = np.asarray(y, dtype=float)
    a_star = p.alpha_star
    z = (y - p.mu) / p.sigma
    left = z <= 0.0
    # piece scales are 2*alpha_star and 2*(1 - alpha_star) in units of sigma
    u = np.where(left, z / (2.0 * a_star), z / (2.0 * (1.0 - a_star)))
    nu = np.where(left, p.nu1, p.nu2)
    log_c = math.log(p.mode_density)
    return _out(log_c - 0.5 * (nu + 1.0) * np.log1p(u * u / nu))


def ast_pdf(p: AstParams, y):
    return _out(np.exp(ast_logpdf(p, y)))


def ast_cdf(p: AstParams, y):
    y = np.asarray(y, dtype=float)
    a_star = p.alpha_star
    z = (y - p.mu) / p.sigma
    left = z <= 0.0
    lo = 2.0 * p.alpha * special.stdtr(p.nu1, np.minimum(z, 0.0) / (2.0 * a_star))
    # upper piece written with the survival function to keep tail accuracy
    hi = 1.0 - 2.0 * (1.0 - p.alpha) * special.stdtr(
        p.nu2, -np.maximum(z, 0.0) / (2.0 * (1.0 - a_star))
    )
    return _out(np.where(left, lo, hi))


def ast_quantile(p: AstParams, q):
    q = _check_prob(q)
    a_star = p.alpha_star
    left = q <= p.alpha
    ql = np.where(left, q / (2.0 * p.alpha), 0.5)
    qr = np.where(left, 0.5, (1.0 - q) / (2.0 * (1.0 - p.alpha)))
    lo = p.mu + 2.0 * a_star * p.sigma * special.stdtrit(p.nu1, ql)
    hi = p.mu - 2.0 * (1.0 - a_star) * p.sigma * special.stdtrit(p.nu2, qr)
    return _out(np.where(left, lo, hi))


def ag_skewness_ast(p: AstParams) -> float:
    """Arnold-Groeneveld skewness: mass above the mode minus mass below it."""
    return 1.0 - 2.0 * p.alpha


# -- two-piece normal ----------------------------------------------------------


def tpn_logpdf(p: TwoPieceNormalParams, y):
    y = np.asarray(y, dtype=float)
    d = y - p.mu
    s = np.where(d <= 0.0, p.sigma1, p.sigma2)
    log_a = math.log(2.0 / (p.sigma1 + p.sigma2)) - _LOG_SQRT_2PI
    return _out(log_a - 0.5 * (d / s) ** 2)


def tpn_pdf(p: TwoPieceNormalParams, y):
    return _out(np.exp(tpn_logpdf(p, y)))


def tpn_cdf(p: TwoPieceNormalParams, y):
    y = np.asarray(y, dtype=float)
    total = p.sigma1 + p.sigma2
    d = y - p.mu
    lo = 2.0 * p.sigma1 / total * special.ndtr(np.minimum(d, 0.0) / p.sigma1)
    hi = 1.0 - 2.0 * p.sigma2 / total * special.ndtr(-np.maximum(d, 0.0) / p.sigma2)
    return _out(np.where(d <= 0.0, lo, hi))


def tpn_quantile(p: TwoPieceNormalParams, q):
    q = _check_prob(q)
    total = p.sigma1 + p.sigma2
    w1 = p.sigma1 / total
    left = q <= w1
    ql = np.where(left, q / (2.0 * w1), 0.5)
    qr = np.where(left, 0.5, (1.0 - q) / (2.0 * (1.0 - w1)))
    lo = p.mu + p.sigma1 * special.ndtri(ql)
    hi = p.mu - p.sigma2 * special.ndtri(qr)
    return _out(np.where(left, lo, hi))


def tpn_moments(p: TwoPieceNormalParams) -> tuple[float, float, float]:
    """Mean, variance and beta2 kurtosis of a two-piece normal.

    Mean and variance are closed form; the fourth central moment comes from
    adaptive quadrature of each half on the infinite half-line (quad maps
    the half-line onto a bounded interval, so no truncation error arises).
    """
    s1, s2 = p.sigma1, p.sigma2
    mean = p.mu + math.sqrt(2.0 / math.pi) * (s2 - s1)
    var = (1.0 - 2.0 / math.pi) * (s2 - s1) ** 2 + s1 * s2

    def central(order: int) -> float:
        f = lambda y: (y - mean) ** order * tpn_pdf(p, y)
        lo, _ = integrate.quad(f, -np.inf, p.mu, epsabs=0.0, epsrel=1e-11, limit=200)
        hi, _ = integrate.quad(f, p.mu, np.inf, epsabs=0.0, epsrel=1e-11, limit=200)
        return lo + hi

    m2 = central(2)
    m4 = central(4)
    return mean, var, m4 / (m2 * m2)


def ag_skewness_tpn(p: TwoPieceNormalParams) -> float:
    return (p.sigma2 - p.sigma1) / (p.sigma1 + p.sigma2)


# -- dispatch ------------------------------------------------------------------


def kind_of(params: Params) -> ModelKind:
    """Smallest model kind whose constraints ``params`` satisfies."""
    if isinstance(params, NormalParams):
        return ModelKind.NORMAL
    if isinstance(params, TwoPieceNormalParams):
        return ModelKind.TWO_PIECE_NORMAL
    if params.nu1 != params.nu2:
        return ModelKind.AST
    return ModelKind.STUDENT_T if params.alpha == 0.5 else ModelKind.TWO_PIECE_T


def logpdf(params: Params, y):
    if isinstance(params, NormalParams):
        return normal_logpdf(params.mu, params.sigma, y)
    if isinstance(params, TwoPieceNormalParams):
        return tpn_logpdf(params, y)
    return ast_logpdf(params, y)


def pdf(params: Params, y):
    return _out(np.exp(logpdf(params, y)))


def cdf(params: Params, y):
    if isinstance(params, NormalParams):
        return normal_cdf(params.mu, params.sigma, y)
    if isinstance(params, TwoPieceNormalParams):
        return tpn_cdf(params, y)
    return ast_cdf(params, y)


def quantile(params: Params, q):
    if isinstance(params, NormalParams):
        return normal_quantile(params.mu, params.sigma, q)
    if isinstance(params, TwoPieceNormalParams):
        return tpn_quantile(params, q)
    return ast_quantile(params, q)


def mode(params: Params) -> float:
    return params.mu


def ag_skewness(params: Params) -> float:
    if isinstance(params, NormalParams):
        return 0.0
    if isinstance(params, TwoPieceNormalParams):
        return ag_skewness_tpn(params)
    return ag_skewness_ast(params)


def _uniforms(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise DomainError(f"sample size must be at least 1, got {n!r}")
    rng = np.random.default_rng(seed)
    # strictly inside (0, 1): midpoints of a 2**52 grid
    return (rng.integers(0, 2**52, size=n).astype(float) + 0.5) / 2.0**52


def sample(params: Params, n: int, seed: int) -> np.ndarray:
    """Inverse-transform sample of size ``n``; deterministic in ``seed``."""
    return np.asarray(quantile(params, _uniforms(n, seed)), dtype=float).reshape(n)


def ast_sample(p: AstParams, n: int, seed: int) -> np.ndarray:
    return sample(p, n, seed)
