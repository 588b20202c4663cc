"""Shared test helpers: independent oracles and random model generation.

The oracles here deliberately avoid the library's own code paths: the DFT
oracle is the quadratic-time defining sum, the simulation oracle runs the
ARMA recursion directly as a linear filter, and the conditional-moments
oracle partitions an explicitly inverted covariance.
"""

import numpy as np
from scipy.signal import lfilter

from garma import ArmaSpec


def naive_dft(x):
    """O(n^2) evaluation of X_k = sum_t x_t exp(-2i*pi*k*t/n)."""
    x = np.asarray(x)
    n = x.shape[-1]
    t = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(t, t) / n)
    return x @ basis


def simulate_series(spec, steps, burn, rng):
    """Run the ARMA recursion directly from zero initial conditions and drop
    a burn-in prefix; an independent check of the distributional code."""
    eps = rng.normal(0.0, np.sqrt(spec.error_var), size=steps + burn)
    b = np.concatenate(([1.0], np.asarray(spec.ma, dtype=float)))
    a = np.concatenate(([1.0], -np.asarray(spec.ar, dtype=float)))
    return spec.mean + lfilter(b, a, eps)[burn:]


def brute_conditional(mean, cov, free_idx, cond_idx, values):
    """Conditional moments through an explicit inverse (oracle only)."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    saa = cov[np.ix_(cond_idx, cond_idx)]
    sfa = cov[np.ix_(free_idx, cond_idx)]
    sff = cov[np.ix_(free_idx, free_idx)]
    inv = np.linalg.inv(saa)
    cmean = mean[free_idx] + sfa @ inv @ (np.asarray(values, dtype=float) - mean[cond_idx])
    ccov = sff - sfa @ inv @ sfa.T
    return cmean, ccov


def random_stationary_spec(rng, p_max=2, q_max=2, min_root=1.25, with_mean=True):
    """Draw a random stationary model by rejection on the AR root moduli."""
    p = int(rng.integers(0, p_max + 1))
    q = int(rng.integers(0, q_max + 1))
    while True:
        ar = rng.uniform(-1.2, 1.2, size=p)
        ma = rng.uniform(-1.0, 1.0, size=q)
        mean = float(rng.uniform(-2.0, 2.0)) if with_mean else 0.0
        error_var = float(rng.uniform(0.5, 2.0))
        spec = ArmaSpec(ar=ar, ma=ma, mean=mean, error_var=error_var)
        if p == 0:
            return spec
        coeffs = np.concatenate(([1.0], -ar))
        nz = np.nonzero(coeffs)[0]
        coeffs = coeffs[: nz[-1] + 1]
        if len(coeffs) == 1:
            return spec
        roots = np.polynomial.polynomial.polyroots(coeffs)
        if np.abs(roots).min() >= min_root:
            return spec
