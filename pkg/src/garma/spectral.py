"""Fourier intensity of a series and the permutation-spectrum test.

The intensity at frequency k/n is |X_k| / sqrt(n), where X is the discrete
Fourier transform of the (optionally centred and scaled) series.  The test
statistic is the largest intensity over nonzero frequencies; its null
distribution under exchangeability is built by permuting the series, and the
p-value is the add-one permutation estimate.
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInputError,
    InvalidParamError,
    ZeroVarianceError,
)

__all__ = ["IntensityVector", "SpectrumTestResult", "dft", "intensity", "spectrum_test"]

# Rows per permutation chunk are capped so a chunk stays around 32 MB; the
# chunk layout is a pure function of (n, sims), never of the worker count,
# which keeps results independent of parallelism.
_CHUNK_CELLS = 1 << 22

ALTERNATIVE_TEXT = (
    "distribution of time-series vector is not exchangeable "
    "(at least one periodic signal is present)"
)


@dataclass(frozen=True)
class IntensityVector:
    """Intensities at frequencies 0/n .. (nfreq-1)/n.

    ``values`` has the input's leading shape: a vector input gives a 1-D
    array, a matrix input one row of intensities per series row.  ``dof`` is
    the sum of squared scaled intensities over the full (untruncated)
    frequency range: n-1 when centred, n when not.
    """

    values: np.ndarray
    frequencies: np.ndarray
    centred: bool
    scaled: bool
    nyquist_truncated: bool
    dof: int
    series_len: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        f = np.asarray(self.frequencies, dtype=float)
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "frequencies", f)

    @property
    def labels(self):
        n = self.series_len
        return [f"Freq[{k}/{n}]" for k in range(self.frequencies.size)]

    def __str__(self):
        rows = np.atleast_2d(self.values)
        width = max(max(len(lab) for lab in self.labels) + 2, 12)
        head = "".join(lab.rjust(width) for lab in self.labels)
        body = "\n".join("".join(f"{v:{width}.7f}" for v in row) for row in rows)
        return head + "\n" + body


@dataclass(frozen=True)
class SpectrumTestResult:
    """Result of the permutation-spectrum test.

    ``null_sample`` holds the simulated maxima (in simulation order) so the
    null distribution can be plotted; ``intensity`` is the observed intensity
    used for the statistic.
    """

    statistic: float
    p_value: float
    sims: int
    null_sample: np.ndarray
    seed: int
    series_len: int
    intensity: IntensityVector

    def __post_init__(self):
        ns = np.asarray(self.null_sample, dtype=float)
        ns.setflags(write=False)
        object.__setattr__(self, "null_sample", ns)

    def __str__(self):
        return (
            "Permutation-Spectrum Test\n"
            f"data: time-series vector with {self.series_len} values\n"
            f"maximum scaled intensity = {self.statistic:.4f}, "
            f"p-value = {self.p_value:.4f}\n"
            f"alternative hypothesis: {ALTERNATIVE_TEXT}"
        )


def dft(x) -> np.ndarray:
    """Discrete Fourier transform X_k = sum_t x_t exp(-2*pi*i*k*t/n).

    Accepts a vector (or a matrix, transformed row by row) and always returns
    a complex array of the same shape.
    """
    arr = np.asarray(x)
    if arr.size == 0:
        raise EmptyInputError("dft needs at least one observation")
    if arr.ndim not in (1, 2):
        raise InvalidParamError(f"dft input must be 1- or 2-dimensional, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParamError("dft input must be finite")
    return np.fft.fft(arr, axis=-1)


def _standardize(rows, centred, scaled):
    """Centre/scale series rows; returns (rows, dof). Raises ZeroVarianceError
    if scaling is requested and a row has no spread."""
    n = rows.shape[1]
    out = rows.astype(complex if np.iscomplexobj(rows) else float)
    if centred:
        out = out - out.mean(axis=1, keepdims=True)
        dof = n - 1
    else:
        dof = n
    if scaled:
        ssq = np.sum(np.abs(out) ** 2, axis=1)
        if np.any(ssq <= 0.0):
            raise ZeroVarianceError(
                "series has zero variance; cannot scale a constant series"
            )
        out = out / np.sqrt(ssq / dof)[:, None]
    return out, dof


def intensity(x, centred: bool = True, scaled: bool = True, nyquist: bool = True) -> IntensityVector:
    """Fourier intensity of a real or complex series (or matrix of rows).

    Parameters
    ----------
    x : array
        Series of length n >= 2, or a matrix with one series per row.
    centred : bool
        Subtract the mean first; the zero-frequency intensity is then
        exactly 0.
    scaled : bool
        Divide by s with s**2 = sum(|x'|**2) / dof, where dof is n-1 when
        centred and n otherwise; the squared intensities then sum to dof over
        the full frequency range.
    nyquist : bool
        For real input only, keep frequencies 0/n .. floor(n/2)/n; the upper
        half duplicates the lower by symmetry.  Complex input is never
        truncated.

    Raises
    ------
    EmptyInputError
        If the series has no observations.
    ZeroVarianceError
        If ``scaled`` and the series is constant.
    """
    arr = np.asarray(x)
    if arr.size == 0:
        raise EmptyInputError("intensity needs at least two observations")
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.ndim != 2:
        raise InvalidParamError(f"x must be 1- or 2-dimensional, got ndim={arr.ndim}")
    n = rows.shape[1]
    if n < 2:
        raise InvalidParamError("intensity needs at least two observations per series")
    if not np.all(np.isfinite(rows)):
        raise InvalidParamError("intensity input must be finite")
    is_complex = np.iscomplexobj(rows)
    work, dof = _standardize(rows, centred, scaled)
    values = np.abs(np.fft.fft(work, axis=1)) / np.sqrt(n)
    if centred:
        # The mean was removed, so the zero-frequency coefficient is exactly
        # zero in exact arithmetic; pin it for the floating-point remainder.
        values[:, 0] = 0.0
    truncated = bool(nyquist) and not is_complex
    if truncated:
        values = values[:, : n // 2 + 1]
    freqs = np.arange(values.shape[1]) / n
    return IntensityVector(
        values=values[0] if single else values,
        frequencies=freqs,
        centred=bool(centred),
        scaled=bool(scaled),
        nyquist_truncated=truncated,
        dof=dof,
        series_len=n,
    )


def _chunk_sizes(sims, n):
    chunk = max(1, min(8192, _CHUNK_CELLS // max(n, 1)))
    edges = list(range(0, sims, chunk)) + [sims]
    return [edges[i + 1] - edges[i] for i in range(len(edges) - 1)]


def _null_maxima_chunk(values, chunk_index, size, seed, use_rfft):
    """Maxima of the permutation null for one chunk: seeded by the chunk
    index alone, so any partition of chunks over workers yields identical
    results."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,)))
    n = values.shape[0]
    tiles = np.tile(values, (size, 1))
    rng.permuted(tiles, axis=1, out=tiles)
    if use_rfft:
        spec = np.fft.rfft(tiles, axis=1)
    else:
        spec = np.fft.fft(tiles, axis=1)
    return np.abs(spec[:, 1:]).max(axis=1) / np.sqrt(n)


def _emit_progress(progress, done, total):
    if progress is True:
        sys.stderr.write(f"\rpermutations: {done}/{total}")
        sys.stderr.flush()
        if done == total:
            sys.stderr.write("\n")
    elif callable(progress):
        progress(done, total)


def spectrum_test(x, sims: int = 1_000_000, seed=None, progress=True,
                  workers: int = 1) -> SpectrumTestResult:
    """Permutation test for a periodic signal in an exchangeable series.

    The statistic is the maximum centred-and-scaled intensity over nonzero
    frequencies.  ``sims`` random permutations of the series build the null
    sample, and the p-value is ``(1 + #{null >= observed}) / (sims + 1)``.

    Parameters
    ----------
    x : array
        One series of length n >= 3 with at least two distinct values.
    sims : int
        Number of permutations (>= 1).
    seed : int, optional
        Seed for the permutation stream.  Omitted, one is drawn from OS
        entropy; the seed actually used is recorded on the result either way.
    progress : bool or callable
        True writes a progress line to stderr; a callable receives
        ``(done, total)`` after each internal chunk; False is silent.
    workers : int
        Worker threads for the permutation chunks.  The chunk seeding makes
        the result identical for every worker count.
    """
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise InvalidParamError("spectrum_test expects a single series vector")
    if arr.size == 0:
        raise EmptyInputError("spectrum_test needs at least three observations")
    n = arr.size
    if n < 3:
        raise InvalidParamError(f"spectrum_test needs n >= 3, got n={n}")
    if not isinstance(sims, (int, np.integer)) or sims < 1:
        raise InvalidParamError(f"sims must be a positive integer, got {sims!r}")
    if not isinstance(workers, (int, np.integer)) or workers < 1:
        raise InvalidParamError(f"workers must be a positive integer, got {workers!r}")
    sims = int(sims)

    observed = intensity(arr, centred=True, scaled=True, nyquist=True)
    statistic = float(np.max(observed.values[1:]))

    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (1 << 63))
    seed = int(seed)

    standardized, _ = _standardize(np.atleast_2d(arr), centred=True, scaled=True)
    values = standardized[0]
    use_rfft = not np.iscomplexobj(values)

    sizes = _chunk_sizes(sims, n)
    pieces = []
    done = 0
    if workers == 1:
        for index, size in enumerate(sizes):
            pieces.append(_null_maxima_chunk(values, index, size, seed, use_rfft))
            done += size
            _emit_progress(progress, done, sims)
    else:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            futures = [
                pool.submit(_null_maxima_chunk, values, index, size, seed, use_rfft)
                for index, size in enumerate(sizes)
            ]
            for future, size in zip(futures, sizes):
                pieces.append(future.result())
                done += size
                _emit_progress(progress, done, sims)
    null_sample = np.concatenate(pieces)
    p_value = (1.0 + float(np.count_nonzero(null_sample >= statistic))) / (sims + 1.0)
    return SpectrumTestResult(
        statistic=statistic,
        p_value=p_value,
        sims=sims,
        null_sample=null_sample,
        seed=seed,
        series_len=n,
        intensity=observed,
    )
