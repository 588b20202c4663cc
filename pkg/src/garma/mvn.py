"""Multivariate-normal engine: factorisation, log-density, conditioning,
rectangle probabilities, and sampling.

All linear algebra goes through Cholesky factors and triangular solves;
covariance matrices are never inverted explicitly.  Densities are computed in
log space throughout, since even moderate dimensions underflow the natural
scale.  Probabilities use a closed form in one dimension, a deterministic
Gauss-Legendre quadrature in two, and randomized quasi-Monte Carlo with a
separation-of-variables transform in three or more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .errors import (
    AllConditionedError,
    AllMarginalisedError,
    CondOnMissingError,
    DimensionMismatchError,
    InvalidParamError,
    NotPositiveDefiniteError,
    ToleranceNotReachedError,
)

__all__ = [
    "GaussianParams",
    "ConditionalMoments",
    "CdfResult",
    "DEFAULT_CDF_SEED",
    "cholesky",
    "log_density",
    "conditional_moments",
    "mvn_cdf",
    "sample",
]

_LOG_2PI = math.log(2.0 * math.pi)

# Diagonal inflation schedule tried after a failed factorisation, as a
# fraction of the mean diagonal entry.
_INFLATION_EPS = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)

# Documented default seed for the quasi-Monte Carlo CDF path.
DEFAULT_CDF_SEED = 1000003
_DEFAULT_MAX_POINTS = 10_000_000
_QMC_BATCHES = 10


def _check_square_sym(cov):
    c = np.asarray(cov, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionMismatchError(f"covariance must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InvalidParamError("covariance entries must all be finite")
    scale = max(1.0, float(np.abs(c).max()) if c.size else 1.0)
    if c.size and float(np.abs(c - c.T).max()) > 1e-8 * scale:
        raise InvalidParamError("covariance must be symmetric")
    return c


@dataclass(frozen=True)
class GaussianParams:
    """Mean vector and covariance matrix of a multivariate normal."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if mean.ndim != 1:
            raise InvalidParamError("mean must be one-dimensional")
        if not np.all(np.isfinite(mean)):
            raise InvalidParamError("mean entries must all be finite")
        cov = _check_square_sym(self.cov)
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatchError(
                f"mean has length {mean.shape[0]}, covariance is {cov.shape[0]}x{cov.shape[1]}"
            )
        mean = mean.copy()
        cov = cov.copy()
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class ConditionalMoments:
    """Mean and covariance of the free coordinates given the conditioned ones."""

    cond_mean: np.ndarray
    cond_cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.cond_mean, dtype=float)
        cov = np.asarray(self.cond_cov, dtype=float)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "cond_mean", mean)
        object.__setattr__(self, "cond_cov", cov)


@dataclass(frozen=True)
class CdfResult:
    """Rectangle probability with an error estimate and the method used.

    ``method`` is one of ``closed_form_1d``, ``quadrature_2d``, or ``qmc``.
    ``error_estimate`` is one estimated standard error for the qmc method and
    a conservative accuracy bound for the deterministic methods.
    """

    value: float
    error_estimate: float
    method: str

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        if not 0.0 <= self.value <= 1.0:
            raise InvalidParamError(f"probability out of range: {self.value!r}")


def cholesky(cov) -> np.ndarray:
    """Lower-triangular Cholesky factor of ``cov``.

    On failure the diagonal is inflated by ``eps * mean(diag)`` for ``eps``
    escalating from 1e-14 to 1e-8 before giving up.
    """
    c = _check_square_sym(cov)
    c = 0.5 * (c + c.T)
    n = c.shape[0]
    mean_diag = float(np.mean(np.diag(c))) if n else 0.0
    for eps in _INFLATION_EPS:
        try:
            if eps:
                return np.linalg.cholesky(c + (eps * mean_diag) * np.eye(n))
            return np.linalg.cholesky(c)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError(
        "covariance is not positive definite, even after diagonal inflation "
        f"up to {_INFLATION_EPS[-1]:g} of the mean diagonal"
    )


def log_density(x, params: GaussianParams):
    """Log-density of ``x`` (one vector, or a matrix of row vectors).

    Returns a float for vector input and a 1-D array for matrix input.
    """
    p = params if isinstance(params, GaussianParams) else GaussianParams(*params)
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.shape[1] != p.dim:
        raise DimensionMismatchError(
            f"x has {rows.shape[1]} columns, distribution has dimension {p.dim}"
        )
    factor = cholesky(p.cov)
    z = solve_triangular(factor, (rows - p.mean).T, lower=True)
    quad = np.einsum("ij,ij->j", z, z)
    out = -0.5 * p.dim * _LOG_2PI - float(np.sum(np.log(np.diag(factor)))) - 0.5 * quad
    return float(out[0]) if single else out


def _conditional_batch(mean, cov, free_idx, cond_idx, value_rows):
    """Conditional moments for several conditioning-value rows at once.

    The conditional covariance does not depend on the values, so it is
    computed once; one triangular solve then yields every conditional mean.
    """
    factor = cholesky(cov[np.ix_(cond_idx, cond_idx)])
    cross = solve_triangular(factor, cov[np.ix_(cond_idx, free_idx)], lower=True)
    cond_cov = cov[np.ix_(free_idx, free_idx)] - cross.T @ cross
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    dev = solve_triangular(factor, (value_rows - mean[cond_idx]).T, lower=True)
    cond_means = mean[free_idx] + (cross.T @ dev).T
    return cond_means, cond_cov


def _schur_complement(cov, free_idx, cond_idx):
    zeros = np.zeros((1, len(cond_idx)))
    _, cond_cov = _conditional_batch(np.zeros(cov.shape[0]), cov, free_idx, cond_idx, zeros)
    return cond_cov


def conditional_moments(params: GaussianParams, pattern, values=None) -> ConditionalMoments:
    """Moments of the free coordinates given the conditioned ones.

    Marginalised coordinates are dropped first (rows and columns deleted),
    then the conditioned block is absorbed by a Schur complement.  With no
    conditioned or marginalised coordinates the inputs are returned exactly.

    ``values`` supplies the conditioning values; it may have one entry per
    conditioned position, or the full pattern length (entries at conditioned
    positions are used).  When omitted, the values bound in ``pattern`` are
    used.
    """
    from .conditioning import CondPattern

    p = params if isinstance(params, GaussianParams) else GaussianParams(*params)
    if not isinstance(pattern, CondPattern):
        raise InvalidParamError("pattern must be a CondPattern (see build_pattern)")
    if len(pattern) != p.dim:
        raise DimensionMismatchError(
            f"pattern has length {len(pattern)}, distribution has dimension {p.dim}"
        )
    free_idx = np.nonzero(pattern.free_mask)[0]
    cond_idx = np.nonzero(pattern.cond_mask)[0]
    marg_idx = np.nonzero(pattern.marg_mask)[0]
    if free_idx.size == 0 and cond_idx.size == 0:
        raise AllMarginalisedError("every coordinate is marginalised")
    if free_idx.size == 0:
        raise AllConditionedError("no free coordinate remains")
    if cond_idx.size == 0:
        if marg_idx.size == 0:
            return ConditionalMoments(cond_mean=p.mean, cond_cov=p.cov)
        return ConditionalMoments(
            cond_mean=p.mean[free_idx], cond_cov=p.cov[np.ix_(free_idx, free_idx)]
        )

    if values is None:
        vals = pattern.values[cond_idx]
        if not np.all(np.isfinite(vals)):
            raise CondOnMissingError(
                "pattern has conditioned positions without bound values; "
                "pass them via the values argument"
            )
    else:
        vals = np.atleast_1d(np.asarray(values, dtype=float))
        if vals.shape[0] == p.dim and p.dim != cond_idx.size:
            vals = vals[cond_idx]
        elif vals.shape[0] != cond_idx.size:
            raise DimensionMismatchError(
                f"{cond_idx.size} conditioning values needed, got {vals.shape[0]}"
            )
        if not np.all(np.isfinite(vals)):
            raise CondOnMissingError("conditioning values must all be finite")
    cond_means, cond_cov = _conditional_batch(p.mean, p.cov, free_idx, cond_idx, vals[None, :])
    return ConditionalMoments(cond_mean=cond_means[0], cond_cov=cond_cov)


# --- bivariate normal quadrature -------------------------------------------
# Gauss-Legendre half-tables (weights, nodes) at 6, 12, and 20 points.

_GL_TABLES = {
    6: (
        np.array([0.1713244923791705, 0.3607615730481384, 0.4679139345726904]),
        np.array([0.9324695142031522, 0.6612093864662647, 0.2386191860831970]),
    ),
    12: (
        np.array([
            0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
            0.2031674267230659, 0.2334925365383547, 0.2491470458134029,
        ]),
        np.array([
            0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
            0.5873179542866171, 0.3678314989981802, 0.1252334085114692,
        ]),
    ),
    20: (
        np.array([
            0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
            0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
            0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
            0.1527533871307259,
        ]),
        np.array([
            0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
            0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
            0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
            0.07652652113349733,
        ]),
    ),
}


def _phid(z):
    return float(ndtr(z))


def _bvn_upper(dh, dk, r):
    """P(X > dh, Y > dk) for standard normals with correlation ``r``.

    Gauss-Legendre quadrature of Drezner-Wesolowsky's single-integral form,
    with the transformed expansion for |r| near 1; absolute error is below
    1e-14.
    """
    if abs(r) < 0.3:
        w, x = _GL_TABLES[6]
    elif abs(r) < 0.75:
        w, x = _GL_TABLES[12]
    else:
        w, x = _GL_TABLES[20]
    h, k = float(dh), float(dk)
    hk = h * k
    bvn = 0.0
    if abs(r) < 0.925:
        if abs(r) > 0.0:
            hs = (h * h + k * k) / 2.0
            asr = math.asin(r)
            for wi, xi in zip(w, x):
                for sgn in (-1.0, 1.0):
                    sn = math.sin(asr * (sgn * xi + 1.0) / 2.0)
                    bvn += wi * math.exp((sn * hk - hs) / (1.0 - sn * sn))
            bvn = bvn * asr / (4.0 * math.pi)
        bvn += _phid(-h) * _phid(-k)
    else:
        if r < 0.0:
            k = -k
            hk = -hk
        if abs(r) < 1.0:
            a_sq = (1.0 - r) * (1.0 + r)
            a = math.sqrt(a_sq)
            b_sq = (h - k) ** 2
            c = (4.0 - hk) / 8.0
            d = (12.0 - hk) / 16.0
            asr = -(b_sq / a_sq + hk) / 2.0
            if asr > -100.0:
                bvn = a * math.exp(asr) * (
                    1.0
                    - c * (b_sq - a_sq) * (1.0 - d * b_sq / 5.0) / 3.0
                    + c * d * a_sq * a_sq / 5.0
                )
            if -hk < 100.0:
                b = math.sqrt(b_sq)
                bvn -= (
                    math.exp(-hk / 2.0)
                    * math.sqrt(2.0 * math.pi)
                    * _phid(-b / a)
                    * b
                    * (1.0 - c * b_sq * (1.0 - d * b_sq / 5.0) / 3.0)
                )
            a /= 2.0
            for wi, xi in zip(w, x):
                for sgn in (-1.0, 1.0):
                    xs = (a * (sgn * xi + 1.0)) ** 2
                    rs = math.sqrt(1.0 - xs)
                    asr = -(b_sq / xs + hk) / 2.0
                    if asr > -100.0:
                        bvn += (
                            a
                            * wi
                            * math.exp(asr)
                            * (
                                math.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                                - (1.0 + c * xs * (1.0 + d * xs))
                            )
                        )
            bvn = -bvn / (2.0 * math.pi)
        if r > 0.0:
            bvn += _phid(-max(h, k))
        else:
            bvn = -bvn + max(0.0, _phid(-h) - _phid(-k))
    return min(max(bvn, 0.0), 1.0)


# --- quasi-Monte Carlo path --------------------------------------------------


def _ordered_cholesky(corr, upper):
    """Cholesky factor with variables reordered so that the most sharply
    truncated coordinates come first, which concentrates the integrand's
    variation in the leading quasi-Monte Carlo dimensions."""
    n = len(upper)
    c = np.array(corr, dtype=float)
    u = np.array(upper, dtype=float)
    ell = np.zeros((n, n))
    y = np.zeros(n)
    for k in range(n):
        res = np.maximum(np.diag(c)[k:] - np.einsum("ij,ij->i", ell[k:, :k], ell[k:, :k]), 1e-30)
        partial = ell[k:, :k] @ y[:k]
        widths = ndtr((u[k:] - partial) / np.sqrt(res))
        j = k + int(np.argmin(widths))
        if j != k:
            c[[k, j], :] = c[[j, k], :]
            c[:, [k, j]] = c[:, [j, k]]
            ell[[k, j], :k] = ell[[j, k], :k]
            u[[k, j]] = u[[j, k]]
        diag_res = c[k, k] - float(ell[k, :k] @ ell[k, :k])
        dk = math.sqrt(max(diag_res, 1e-30))
        ell[k, k] = dk
        if k + 1 < n:
            ell[k + 1:, k] = (c[k + 1:, k] - ell[k + 1:, :k] @ ell[k, :k]) / dk
        hat = (u[k] - float(ell[k, :k] @ y[:k])) / dk
        ek = float(ndtr(hat))
        if hat >= 40.0:
            y[k] = 0.0
        elif ek > 1e-300:
            # mean of a standard normal truncated to (-inf, hat]
            y[k] = -math.exp(-0.5 * hat * hat) / (math.sqrt(2.0 * math.pi) * ek)
        else:
            y[k] = max(hat, -40.0)
    return ell, u


def _sov_mean(ell, u, pts):
    """Average of the separation-of-variables integrand over unit-cube points."""
    n = len(u)
    e = np.full(pts.shape[0], float(ndtr(u[0] / ell[0, 0])))
    pv = e.copy()
    y = np.empty((n - 1, pts.shape[0]))
    for i in range(1, n):
        z = np.clip(e * pts[:, i - 1], 1e-300, 1.0 - 1e-16)
        y[i - 1] = np.clip(ndtri(z), -40.0, 40.0)
        e = ndtr((u[i] - ell[i, :i] @ y[:i]) / ell[i, i])
        pv = pv * e
    return float(pv.mean())


def _qmc_cdf(corr, upper, tol, seed, max_points):
    ell, u = _ordered_cholesky(corr, upper)
    dim = len(u) - 1
    rng = np.random.default_rng(seed)
    exponent = 10
    total = 0
    while True:
        estimates = np.empty(_QMC_BATCHES)
        for b in range(_QMC_BATCHES):
            engine = qmc.Sobol(d=dim, scramble=True, seed=rng)
            estimates[b] = _sov_mean(ell, u, engine.random_base2(exponent))
        total += _QMC_BATCHES << exponent
        value = float(estimates.mean())
        err = float(estimates.std(ddof=1) / math.sqrt(_QMC_BATCHES))
        if err <= tol:
            return CdfResult(value=min(max(value, 0.0), 1.0), error_estimate=err, method="qmc")
        if total + (_QMC_BATCHES << (exponent + 2)) > max_points:
            raise ToleranceNotReachedError(value, err)
        exponent += 2


def mvn_cdf(upper, params: GaussianParams, tol: float = 1e-5, seed=DEFAULT_CDF_SEED,
            max_points: int = _DEFAULT_MAX_POINTS) -> CdfResult:
    """P(X <= upper), componentwise, for X ~ N(mean, cov).

    ``+inf`` components are dropped (they do not constrain), and any ``-inf``
    component makes the probability exactly 0.  One dimension uses the normal
    CDF, two use deterministic quadrature, three or more use seeded randomized
    quasi-Monte Carlo iterated until the estimated standard error is at most
    ``tol`` or ``max_points`` integrand evaluations have been spent.  The
    default seed is a fixed documented constant so repeated calls agree;
    pass ``seed=None`` for a fresh nondeterministic stream.

    Raises
    ------
    ToleranceNotReachedError
        If the point cap is hit first; the best estimate and its error ride
        along on the exception.
    """
    p = params if isinstance(params, GaussianParams) else GaussianParams(*params)
    u = np.atleast_1d(np.asarray(upper, dtype=float))
    if u.ndim != 1 or u.shape[0] != p.dim:
        raise DimensionMismatchError(
            f"upper has shape {u.shape}, distribution has dimension {p.dim}"
        )
    if np.any(np.isnan(u)):
        raise InvalidParamError("upper bounds must not be NaN")
    if not tol > 0.0:
        raise InvalidParamError(f"tol must be > 0, got {tol!r}")
    if np.any(u == -np.inf):
        return CdfResult(value=0.0, error_estimate=0.0, method="closed_form_1d")
    keep = np.nonzero(np.isfinite(u))[0]
    if keep.size == 0:
        return CdfResult(value=1.0, error_estimate=0.0, method="closed_form_1d")
    mean = p.mean[keep]
    cov = p.cov[np.ix_(keep, keep)]
    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0.0):
        raise NotPositiveDefiniteError("covariance has a non-positive diagonal entry")
    z = (u[keep] - mean) / sd
    m = keep.size
    if m == 1:
        return CdfResult(value=_phid(z[0]), error_estimate=1e-16, method="closed_form_1d")
    if m == 2:
        rho = float(np.clip(cov[0, 1] / (sd[0] * sd[1]), -1.0, 1.0))
        value = _bvn_upper(-z[0], -z[1], rho)
        return CdfResult(value=value, error_estimate=1e-14, method="quadrature_2d")
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return _qmc_cdf(corr, z, tol, seed, max_points)


def sample(params: GaussianParams, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` rows from N(mean, cov), reproducibly for a given seed."""
    p = params if isinstance(params, GaussianParams) else GaussianParams(*params)
    if not isinstance(count, (int, np.integer)) or count < 0:
        raise InvalidParamError(f"count must be a non-negative integer, got {count!r}")
    factor = cholesky(p.cov)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((int(count), p.dim))
    return p.mean + z @ factor.T
