"""Density, distribution function, and sampler for finite stretches of a
stationary Gaussian ARMA series.

A stretch of length ``m`` is multivariate normal with constant mean and a
Toeplitz covariance built from the autocovariances.  NaN entries in a data
row marginalise those positions (drop rows and columns); boolean flags turn
positions into conditioning values, so ``dgarma``/``pgarma`` evaluate the
conditional density/CDF of the remaining free positions.  ``rgarma`` draws
rows whose conditioned positions reproduce the requested values exactly.
"""

from __future__ import annotations

import warnings

import numpy as np

from .arma import ArmaSpec, autocovariance, validate_stationary
from .conditioning import build_pattern
from .errors import (
    AllConditionedWarning,
    DimensionMismatchError,
    InvalidParamError,
)
from .mvn import (
    DEFAULT_CDF_SEED,
    GaussianParams,
    cholesky,
    log_density,
    mvn_cdf,
    _conditional_batch,
)

__all__ = ["dgarma", "pgarma", "rgarma", "as_series_matrix"]


def as_series_matrix(x) -> np.ndarray:
    """Coerce a vector or matrix to a 2-D float array of series rows."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatchError(
            f"x must be a vector or a matrix of series rows, got ndim={arr.ndim}"
        )
    if arr.shape[1] < 1:
        raise DimensionMismatchError("series must contain at least one position")
    if np.any(np.isinf(arr)):
        raise InvalidParamError("series values must be finite or NaN")
    return arr


def _shared_masks(rows, cond):
    """Validate the shared missing mask and conditioning flags for a matrix
    of series rows; returns (missing, flags)."""
    miss = np.isnan(rows)
    if rows.shape[0] > 1 and not np.all(miss == miss[0]):
        raise DimensionMismatchError(
            "all rows must share one missing pattern; found rows that disagree"
        )
    missing = miss[0]
    m = rows.shape[1]
    if cond is None or cond is False:
        flags = np.zeros(m, dtype=bool)
    else:
        flags = np.atleast_1d(np.asarray(cond))
        if flags.dtype != bool:
            if not np.all(np.isin(flags, (0, 1))):
                raise InvalidParamError("cond flags must be boolean")
            flags = flags.astype(bool)
        if flags.shape != (m,):
            raise DimensionMismatchError(
                f"cond has length {flags.size}, series has length {m}"
            )
    return missing, flags


def _degenerate_unit(kind, count, log):
    warnings.warn(
        f"every non-missing position is a conditioning value; {kind} set to "
        "one by convention",
        AllConditionedWarning,
        stacklevel=3,
    )
    out = np.zeros(count) if log else np.ones(count)
    return out


def _toeplitz_submatrix(gamma, idx):
    return gamma[np.abs(idx[:, None] - idx[None, :])]


def _free_cond_setup(rows, spec, cond):
    """Common marginalise/condition plumbing for dgarma and pgarma.

    Returns None when the query is degenerate (no free position), else a
    tuple (free_values, cond_mean_rows, cond_cov).
    """
    missing, flags = _shared_masks(rows, cond)
    free_mask = ~missing & ~flags
    if not free_mask.any():
        return None
    # Validates flag/missing consistency (CondOnMissingError on overlap).
    build_pattern(missing=missing, cond_flags=flags)
    m = rows.shape[1]
    gamma = autocovariance(spec, m - 1).values
    kept = np.nonzero(~missing)[0]
    cov = _toeplitz_submatrix(gamma, kept)
    mean = np.full(kept.size, spec.mean)
    free_local = np.nonzero(free_mask[kept])[0]
    cond_local = np.nonzero(flags[kept])[0]
    free_values = rows[:, kept[free_local]]
    if cond_local.size == 0:
        cond_means = np.broadcast_to(mean, free_values.shape)
        return free_values, cond_means, cov
    cond_values = rows[:, kept[cond_local]]
    cond_means, cond_cov = _conditional_batch(mean, cov, free_local, cond_local, cond_values)
    return free_values, cond_means, cond_cov


def dgarma(x, spec: ArmaSpec, cond=None, log: bool = False):
    """Density of each series row, after marginalising missing positions and
    conditioning on flagged ones.

    Parameters
    ----------
    x : array
        One series, or a matrix with one series per row.  NaN marks a
        position to marginalise; every row must share one missing pattern.
    spec : ArmaSpec
        Stationary model parameters.
    cond : bool array, optional
        Positions whose (non-missing) values are conditioned on rather than
        evaluated.
    log : bool
        Return log-densities instead of densities.

    Returns
    -------
    numpy.ndarray
        One density (or log-density) per row.

    Notes
    -----
    When no free position remains, the density is 1 (log-density 0) by
    convention and an :class:`AllConditionedWarning` is emitted.
    """
    rows = as_series_matrix(x)
    validate_stationary(spec)
    setup = _free_cond_setup(rows, spec, cond)
    if setup is None:
        return _degenerate_unit("density", rows.shape[0], log)
    free_values, cond_means, cond_cov = setup
    factor = cholesky(cond_cov)
    centred = free_values - cond_means
    from scipy.linalg import solve_triangular

    z = solve_triangular(factor, centred.T, lower=True)
    quad = np.einsum("ij,ij->j", z, z)
    k = free_values.shape[1]
    logdens = -0.5 * k * np.log(2.0 * np.pi) - np.sum(np.log(np.diag(factor))) - 0.5 * quad
    return logdens if log else np.exp(logdens)


def pgarma(x, spec: ArmaSpec, cond=None, log: bool = False,
           tol: float = 1e-5, seed=DEFAULT_CDF_SEED):
    """P(free positions <= their values in each row), conditioned and
    marginalised exactly as in :func:`dgarma`.

    ``tol`` and ``seed`` configure the quasi-Monte Carlo CDF used when three
    or more free positions remain; the default seed is a fixed documented
    constant, so repeated calls agree.
    """
    rows = as_series_matrix(x)
    validate_stationary(spec)
    setup = _free_cond_setup(rows, spec, cond)
    if setup is None:
        return _degenerate_unit("probability", rows.shape[0], log)
    free_values, cond_means, cond_cov = setup
    out = np.empty(rows.shape[0])
    for i in range(rows.shape[0]):
        row_seed = np.random.SeedSequence(entropy=seed, spawn_key=(i,)) if seed is not None else None
        result = mvn_cdf(
            free_values[i],
            GaussianParams(mean=np.asarray(cond_means)[i], cov=cond_cov),
            tol=tol,
            seed=row_seed,
        )
        out[i] = result.value
    return np.log(out) if log else out


def rgarma(n: int, m: int, spec: ArmaSpec, condvals=None, seed=None) -> np.ndarray:
    """Draw ``n`` series of length ``m``; positions with finite ``condvals``
    entries are pinned to those values exactly (bit for bit) and the free
    positions follow their conditional distribution.

    With every position conditioned the output is just ``n`` copies of
    ``condvals`` and no randomness is consumed.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParamError(f"n must be a positive integer, got {n!r}")
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidParamError(f"m must be a positive integer, got {m!r}")
    n, m = int(n), int(m)
    validate_stationary(spec)
    if condvals is None:
        pattern = None
        cond_idx = np.empty(0, dtype=int)
    else:
        pattern = build_pattern(condvals=condvals)
        if len(pattern) != m:
            raise DimensionMismatchError(
                f"condvals has length {len(pattern)}, series length is {m}"
            )
        cond_idx = np.nonzero(pattern.cond_mask)[0]
    free_idx = np.setdiff1d(np.arange(m), cond_idx)

    out = np.empty((n, m))
    if cond_idx.size:
        out[:, cond_idx] = pattern.values[cond_idx]
    if free_idx.size == 0:
        return out

    gamma = autocovariance(spec, m - 1).values
    mean = np.full(m, spec.mean)
    cov = _toeplitz_submatrix(gamma, np.arange(m))
    if cond_idx.size:
        cond_means, cond_cov = _conditional_batch(
            mean, cov, free_idx, cond_idx, pattern.values[cond_idx][None, :]
        )
        free_mean, free_cov = cond_means[0], cond_cov
    else:
        free_mean, free_cov = mean, cov
    factor = cholesky(free_cov)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, free_idx.size))
    out[:, free_idx] = free_mean + z @ factor.T
    return out
