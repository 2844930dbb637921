"""Fitting the model ladder: maximum likelihood, moments, percentiles, and AIC.

Maximum-likelihood fits run a multi-start Nelder-Mead simplex over an
unconstrained reparameterisation (``logit(alpha)``, inverse tail index
``1/nu``, raw location, ``log(sigma)``).  The inverse tail index puts the
Gaussian limit at a finite point, so t-family fits to light-tailed data
converge instead of drifting along a flat ridge towards ``nu = inf``.  Data are standardised by the median and the
probable-error scale before optimising, which makes fits equivariant under
affine changes of units.  Each model is also started from the optimum of
every model nested inside it, so the optimised log-likelihoods respect the
nesting order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy import optimize, special

from . import distributions as dist
from .dataset import EntrySet, percentile
from .distributions import (
    AstParams,
    ModelKind,
    NormalParams,
    Params,
    TwoPieceNormalParams,
    check_kind,
)
from .errors import EstimationError, ParameterError

log = logging.getLogger(__name__)

LADDER = (
    ModelKind.NORMAL,
    ModelKind.STUDENT_T,
    ModelKind.TWO_PIECE_NORMAL,
    ModelKind.TWO_PIECE_T,
    ModelKind.AST,
)

# sub-models whose optima seed each model, lifted into its parameter space
NESTED = {
    ModelKind.NORMAL: (),
    ModelKind.STUDENT_T: (ModelKind.NORMAL,),
    ModelKind.TWO_PIECE_NORMAL: (ModelKind.NORMAL,),
    ModelKind.TWO_PIECE_T: (ModelKind.STUDENT_T, ModelKind.TWO_PIECE_NORMAL),
    ModelKind.AST: (ModelKind.TWO_PIECE_T, ModelKind.STUDENT_T, ModelKind.TWO_PIECE_NORMAL),
}

# degrees of freedom used when lifting a Gaussian optimum into a t family
_LIFT_NU = 1e4
_POLISH_ROUNDS = 4


def probable_error_constant() -> float:
    """Standard normal upper quartile, about 0.674490."""
    return float(special.ndtri(0.75))


@dataclass(frozen=True)
class FitOptions:
    restarts: int = 8
    max_iterations: int = 2000
    ftol: float = 1e-10
    xtol: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts < 0 or self.max_iterations < 1 or not self.ftol > 0 or not self.xtol > 0:
            raise EstimationError("fit options must be positive")


@dataclass(frozen=True)
class FitResult:
    kind: ModelKind
    params: Params
    log_likelihood: float
    k: int
    aic: float
    converged: bool
    iterations: int = 0
    restarts_used: int = 0
    method: str = "mle"


@dataclass(frozen=True)
class MomentSummary:
    n: int
    mean: float
    sd: float
    beta2: float
    median: float
    q1: float
    q3: float
    probable_error: float


@dataclass(frozen=True)
class ModelSelection:
    """ML fits ranked by ascending AIC, plus the classical normal fits."""

    ranked: tuple[FitResult, ...]
    extras: dict[str, FitResult] = field(default_factory=dict)

    def by_kind(self, kind: ModelKind) -> FitResult:
        kind = ModelKind(kind)
        return next(r for r in self.ranked if r.kind is kind)

    @property
    def best(self) -> FitResult:
        return self.ranked[0]


def aic(k: int, log_likelihood: float) -> float:
    if k < 1:
        raise EstimationError(f"parameter count must be at least 1, got {k}")
    return 2.0 * k - 2.0 * log_likelihood


def log_likelihood(kind: ModelKind, params: Params, data: Union[EntrySet, np.ndarray]) -> float:
    check_kind(kind, params)
    values = data.values if isinstance(data, EntrySet) else np.asarray(data, dtype=float)
    if values.size == 0:
        raise EstimationError("log-likelihood needs at least one observation")
    return float(np.sum(dist.logpdf(params, values)))


def _moments(values: np.ndarray) -> tuple[float, float, float, float]:
    """Mean and population central moments m2, m3, m4."""
    mean = math.fsum(values) / values.size
    d = values - mean
    d2 = d * d
    return mean, float(np.mean(d2)), float(np.mean(d2 * d)), float(np.mean(d2 * d2))


def moment_summary(data: EntrySet) -> MomentSummary:
    if data.n < 4:
        raise EstimationError(f"moment summary needs at least 4 entries, got {data.n}")
    mean, m2, _, m4 = _moments(data.values)
    if not m2 > 0:
        raise EstimationError("all entries are equal; moments are degenerate")
    q1, med, q3 = (percentile(data, p) for p in (0.25, 0.5, 0.75))
    return MomentSummary(
        n=data.n,
        mean=mean,
        sd=math.sqrt(m2),
        beta2=m4 / (m2 * m2),
        median=med,
        q1=q1,
        q3=q3,
        probable_error=(q3 - q1) / 2.0,
    )


def _classical_result(params: NormalParams, data: EntrySet, method: str) -> FitResult:
    ll = log_likelihood(ModelKind.NORMAL, params, data)
    return FitResult(ModelKind.NORMAL, params, ll, 2, aic(2, ll), True, 0, 0, method)


def fit_normal_moments(data: EntrySet) -> FitResult:
    """Normal with the sample mean and population standard deviation."""
    if data.n < 2:
        raise EstimationError(f"moment fit needs at least 2 entries, got {data.n}")
    mean, m2, _, _ = _moments(data.values)
    try:
        params = NormalParams(mean, math.sqrt(m2))
    except ParameterError as exc:
        raise EstimationError(f"moment fit is degenerate: {exc}") from None
    return _classical_result(params, data, "moments")


def fit_normal_percentiles(data: EntrySet) -> FitResult:
    """Normal centred at the median with sigma = probable error / 0.6745."""
    if data.n < 4:
        raise EstimationError(f"percentile fit needs at least 4 entries, got {data.n}")
    q1, med, q3 = (percentile(data, p) for p in (0.25, 0.5, 0.75))
    try:
        params = NormalParams(med, (q3 - q1) / 2.0 / probable_error_constant())
    except ParameterError as exc:
        raise EstimationError(f"percentile fit is degenerate: {exc}") from None
    return _classical_result(params, data, "percentiles")


# -- unconstrained parameterisation ---------------------------------------------


def encode(kind: ModelKind, p: Params) -> np.ndarray:
    """Map params to the unconstrained optimisation vector."""
    kind = ModelKind(kind)
    if kind is ModelKind.NORMAL:
        return np.array([p.mu, math.log(p.sigma)])
    if kind is ModelKind.TWO_PIECE_NORMAL:
        return np.array([p.mu, math.log(p.sigma1), math.log(p.sigma2)])
    if kind is ModelKind.STUDENT_T:
        return np.array([_xi(p.nu1), p.mu, math.log(p.sigma)])
    logit = float(special.logit(p.alpha))
    if kind is ModelKind.TWO_PIECE_T:
        return np.array([logit, _xi(p.nu1), p.mu, math.log(p.sigma)])
    return np.array([logit, _xi(p.nu1), _xi(p.nu2), p.mu, math.log(p.sigma)])


_XI_RANGE = (1.0 / dist.NU_MAX, 1.0 / dist.NU_MIN)


def _xi(nu: float) -> float:
    return 1.0 / nu


def _nu(x: float) -> float:
    # projection onto the valid range keeps the objective flat, not infinite, past the bounds
    return 1.0 / min(max(x, _XI_RANGE[0]), _XI_RANGE[1])


def decode(kind: ModelKind, x: np.ndarray) -> Params:
    """Inverse of :func:`encode`.

    Tail indices are clamped to the valid range; other out-of-bounds values
    raise :class:`ParameterError`.
    """
    kind = ModelKind(kind)
    x = [float(v) for v in x]
    if kind is ModelKind.NORMAL:
        return NormalParams(x[0], math.exp(x[1]))
    if kind is ModelKind.TWO_PIECE_NORMAL:
        return TwoPieceNormalParams(x[0], math.exp(x[1]), math.exp(x[2]))
    if kind is ModelKind.STUDENT_T:
        return AstParams.student_t(_nu(x[0]), x[1], math.exp(x[2]))
    alpha = float(special.expit(x[0]))
    if kind is ModelKind.TWO_PIECE_T:
        return AstParams.two_piece_t(alpha, _nu(x[1]), x[2], math.exp(x[3]))
    return AstParams(alpha, _nu(x[1]), _nu(x[2]), x[3], math.exp(x[4]))


def lift(params: Params, target: ModelKind) -> Params:
    """Express a nested model's params in ``target``'s space (exactly, where possible)."""
    target = ModelKind(target)
    if isinstance(params, NormalParams):
        if target is ModelKind.TWO_PIECE_NORMAL:
            return TwoPieceNormalParams(params.mu, params.sigma, params.sigma)
        params = TwoPieceNormalParams(params.mu, params.sigma, params.sigma)
    if isinstance(params, TwoPieceNormalParams):
        s1, s2 = params.sigma1, params.sigma2
        # equal-nu AST pieces have scales 2*alpha*sigma and 2*(1-alpha)*sigma
        alpha = s1 / (s1 + s2)
        sigma = 0.5 * (s1 + s2)
        if target is ModelKind.STUDENT_T:
            return AstParams.student_t(_LIFT_NU, params.mu, sigma)
        return AstParams.two_piece_t(alpha, _LIFT_NU, params.mu, sigma)
    if target is ModelKind.STUDENT_T:
        return AstParams.student_t(params.nu1, params.mu, params.sigma)
    if target is ModelKind.TWO_PIECE_T:
        return AstParams.two_piece_t(params.alpha, params.nu1, params.mu, params.sigma)
    return params


def _standardiser(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    sorted_data = EntrySet(values)
    center = percentile(sorted_data, 0.5) if n > 1 else float(values[0])
    spread = 0.0
    if n >= 4:
        spread = (percentile(sorted_data, 0.75) - percentile(sorted_data, 0.25)) / 2.0 / probable_error_constant()
    if not spread > 0:
        spread = float(np.std(values))
    if not spread > 0:
        spread = 1.0
    return center, spread


def _to_std(p: Params, center: float, spread: float) -> Params:
    if isinstance(p, TwoPieceNormalParams):
        return replace(p, mu=(p.mu - center) / spread, sigma1=p.sigma1 / spread, sigma2=p.sigma2 / spread)
    return replace(p, mu=(p.mu - center) / spread, sigma=p.sigma / spread)


def _from_std(p: Params, center: float, spread: float) -> Params:
    if isinstance(p, TwoPieceNormalParams):
        return replace(p, mu=center + spread * p.mu, sigma1=spread * p.sigma1, sigma2=spread * p.sigma2)
    return replace(p, mu=center + spread * p.mu, sigma=spread * p.sigma)


def _initial_guess(kind: ModelKind, z: np.ndarray) -> Params:
    """Moment-based start on standardised data (median 0, probable-error scale 1)."""
    mean, m2, m3, _ = _moments(z)
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    alpha = 0.5 * (1.0 - math.copysign(1.0, skew) * min(abs(skew), 1.0) * 0.5) if skew else 0.5
    median = float(np.median(z))
    if kind is ModelKind.NORMAL:
        return NormalParams(mean, math.sqrt(m2) if m2 > 0 else 1.0)
    if kind is ModelKind.TWO_PIECE_NORMAL:
        return TwoPieceNormalParams(median, 2.0 * alpha, 2.0 * (1.0 - alpha))
    if kind is ModelKind.STUDENT_T:
        return AstParams.student_t(8.0, median, 1.0)
    if kind is ModelKind.TWO_PIECE_T:
        return AstParams.two_piece_t(alpha, 8.0, median, 1.0)
    return AstParams(alpha, 8.0, 8.0, median, 1.0)


_JITTER_SD = {"logit": 0.5, "xi": 0.1, "mu": 0.3, "logsigma": 0.2}


def _jitter_scales(kind: ModelKind) -> np.ndarray:
    j = _JITTER_SD
    return {
        ModelKind.NORMAL: [j["mu"], j["logsigma"]],
        ModelKind.TWO_PIECE_NORMAL: [j["mu"], j["logsigma"], j["logsigma"]],
        ModelKind.STUDENT_T: [j["xi"], j["mu"], j["logsigma"]],
        ModelKind.TWO_PIECE_T: [j["logit"], j["xi"], j["mu"], j["logsigma"]],
        ModelKind.AST: [j["logit"], j["xi"], j["xi"], j["mu"], j["logsigma"]],
    }[kind]


def _simplex(x0: np.ndarray, step: float = 0.25) -> np.ndarray:
    return np.vstack([x0] + [x0 + step * e for e in np.eye(x0.size)])


@dataclass
class _Run:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


class _Objective:
    def __init__(self, kind: ModelKind, z: np.ndarray):
        self.kind = kind
        self.z = z

    def __call__(self, x: np.ndarray) -> float:
        try:
            p = decode(self.kind, x)
        except (ParameterError, OverflowError, ValueError):
            return math.inf
        with np.errstate(all="ignore"):
            v = -float(np.sum(dist.logpdf(p, self.z)))
        return v if math.isfinite(v) else math.inf


def _nelder_mead(f: _Objective, x0: np.ndarray, opts: FitOptions) -> _Run:
    f0 = f(x0)
    fatol = opts.ftol * max(1.0, abs(f0) if math.isfinite(f0) else 1.0)
    res = optimize.minimize(
        f,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": opts.max_iterations,
            "maxfev": 4 * opts.max_iterations,
            "xatol": opts.xtol,
            "fatol": fatol,
            "initial_simplex": _simplex(x0),
        },
    )
    x = np.asarray(res.x, dtype=float)
    fun = float(res.fun)
    if not fun <= f0:  # the simplex keeps its best vertex, so this is a safeguard only
        x, fun = x0, f0
    return _Run(x, fun, int(res.nit), bool(res.success))


def _polish(f: _Objective, run: _Run, opts: FitOptions) -> _Run:
    """Restart the simplex at the incumbent until it stops improving."""
    for _ in range(_POLISH_ROUNDS):
        nxt = _nelder_mead(f, run.x, opts)
        improved = run.fun - nxt.fun
        run = _Run(nxt.x, nxt.fun, run.iterations + nxt.iterations, nxt.converged)
        if improved <= opts.ftol * max(1.0, abs(run.fun)):
            break
    return run


def _fit_std(kind: ModelKind, z: np.ndarray, opts: FitOptions, nested: dict[ModelKind, Params]) -> tuple[Params, _Run, int]:
    """Multi-start ML fit on standardised data; returns params, winning run and start count."""
    f = _Objective(kind, z)
    bases = [_initial_guess(kind, z)]
    bases += [lift(nested[sub], kind) for sub in NESTED[kind] if sub in nested]
    starts = [encode(kind, b) for b in bases]
    rng = np.random.default_rng([opts.seed, LADDER.index(kind)])
    scales = np.asarray(_jitter_scales(kind))
    for i in range(opts.restarts):
        starts.append(starts[i % len(bases)] + scales * rng.standard_normal(scales.size))

    best: Optional[_Run] = None
    for x0 in starts:
        if not math.isfinite(f(x0)):
            continue
        run = _nelder_mead(f, x0, opts)
        # strict improvement keeps the lowest start index on ties
        if best is None or run.fun < best.fun:
            best = run
    if best is None:
        raise EstimationError(f"no finite starting point for {kind.value}")
    best = _polish(f, best, opts)
    return decode(kind, best.x), best, len(starts)


def _check_size(kind: ModelKind, n: int) -> None:
    # the Gaussian MLE is closed form, so it only needs a nonzero spread
    if kind is ModelKind.NORMAL:
        if n < 2:
            raise EstimationError(f"normal fit needs at least 2 entries, got {n}")
        return
    if n < 10 * kind.k:
        raise EstimationError(f"{kind.value} needs at least {10 * kind.k} entries, got {n}")


def _fit_chain(kinds, data: EntrySet, opts: FitOptions) -> dict[ModelKind, FitResult]:
    z_center, z_spread = _standardiser(data.values)
    z = (data.values - z_center) / z_spread
    shift = data.n * math.log(z_spread)
    std_optima: dict[ModelKind, Params] = {}
    results: dict[ModelKind, FitResult] = {}
    for kind in LADDER:
        if kind not in kinds:
            continue
        if kind is ModelKind.NORMAL:
            # closed-form Gaussian MLE
            mean, m2, _, _ = _moments(z)
            p_std = NormalParams(mean, math.sqrt(m2))
            run = _Run(encode(kind, p_std), -float(np.sum(dist.logpdf(p_std, z))), 0, True)
            used = 0
        else:
            try:
                p_std, run, used = _fit_std(kind, z, opts, std_optima)
            except (EstimationError, ParameterError) as exc:
                log.warning("%s fit failed: %s", kind.value, exc)
                continue
        std_optima[kind] = p_std
        params = _from_std(p_std, z_center, z_spread)
        ll = -run.fun - shift
        if not run.converged:
            log.warning("%s fit did not converge after %d iterations", kind.value, run.iterations)
        results[kind] = FitResult(kind, params, ll, kind.k, aic(kind.k, ll), run.converged, run.iterations, used)
    return results


def _required(kind: ModelKind) -> set[ModelKind]:
    out = {kind}
    for sub in NESTED[kind]:
        out |= _required(sub)
    return out


def fit_mle(kind: ModelKind, data: EntrySet, opts: FitOptions = FitOptions()) -> FitResult:
    """Maximum-likelihood fit of one ladder model.

    Nested sub-models are fitted first and their optima used as starts, so
    the result dominates every restricted model on the same data.
    Non-convergence is reported through ``converged`` rather than raised.
    """
    kind = ModelKind(kind)
    _check_size(kind, data.n)
    results = _fit_chain(_required(kind), data, opts)
    if kind not in results:
        raise EstimationError(f"{kind.value} fit failed to produce any finite likelihood")
    return results[kind]


def model_select(data: EntrySet, opts: FitOptions = FitOptions()) -> ModelSelection:
    """Fit the whole ladder by ML and rank by AIC (lowest first; ties by ladder order)."""
    _check_size(ModelKind.AST, data.n)
    results = _fit_chain(set(LADDER), data, opts)
    ranked = sorted(results.values(), key=lambda r: (r.aic, LADDER.index(r.kind)))
    extras = {
        "percentiles": fit_normal_percentiles(data),
        "moments": fit_normal_moments(data),
    }
    return ModelSelection(tuple(ranked), extras)


def unconstrained_gradient(result: FitResult, data: EntrySet, h: float = 1e-5) -> np.ndarray:
    """Centred finite-difference gradient of the log-likelihood at a fit.

    Taken in the optimiser's unconstrained coordinates with raw (unstandardised)
    location.
    """
    x0 = encode(result.kind, result.params)
    grad = np.empty_like(x0)
    for i in range(x0.size):
        step = h * max(1.0, abs(x0[i]))
        xp, xm = x0.copy(), x0.copy()
        xp[i] += step
        xm[i] -= step
        lp = log_likelihood(result.kind, decode(result.kind, xp), data)
        lm = log_likelihood(result.kind, decode(result.kind, xm), data)
        grad[i] = (lp - lm) / (2.0 * step)
    return grad
