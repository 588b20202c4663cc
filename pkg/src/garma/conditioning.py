"""Index patterns for distribution queries.

Every query over an ``m``-dimensional Gaussian classifies each index as one
of three states:

* FREE          - the query ranges over this coordinate;
* CONDITIONED   - this coordinate is pinned to a known value;
* MARGINALISED  - this coordinate is integrated out (dropped).

Marginalisation is applied before conditioning, which for a Gaussian just
means deleting rows and columns before taking the Schur complement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllMarginalisedError,
    CondOnMissingError,
    DimensionMismatchError,
    InvalidParamError,
)

__all__ = ["FREE", "CONDITIONED", "MARGINALISED", "CondPattern", "build_pattern"]

FREE = 0
CONDITIONED = 1
MARGINALISED = 2


@dataclass(frozen=True)
class CondPattern:
    """Per-index states plus conditioning values.

    ``values`` is NaN everywhere except at conditioned positions.  A pattern
    whose conditioned positions all carry finite values is *bound* and can be
    used directly; an unbound pattern only fixes the states, with values
    supplied later (for example row by row from a data matrix).
    """

    state: np.ndarray
    values: np.ndarray = None

    def __post_init__(self):
        state = np.asarray(self.state, dtype=np.int8)
        if state.ndim != 1:
            raise InvalidParamError("pattern state must be one-dimensional")
        if not np.all((state >= FREE) & (state <= MARGINALISED)):
            raise InvalidParamError("pattern state codes must be 0, 1, or 2")
        if self.values is None:
            values = np.full(state.shape, np.nan)
        else:
            values = np.array(self.values, dtype=float)
            if values.shape != state.shape:
                raise DimensionMismatchError(
                    f"pattern values have shape {values.shape}, "
                    f"state has shape {state.shape}"
                )
        values[state != CONDITIONED] = np.nan
        state.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.state)

    @property
    def free_mask(self):
        return self.state == FREE

    @property
    def cond_mask(self):
        return self.state == CONDITIONED

    @property
    def marg_mask(self):
        return self.state == MARGINALISED

    @property
    def is_bound(self):
        """True when every conditioned position carries a finite value."""
        return bool(np.all(np.isfinite(self.values[self.cond_mask])))


def build_pattern(missing=None, cond_flags=None, condvals=None, values=None) -> CondPattern:
    """Normalise the two conditioning syntaxes into one :class:`CondPattern`.

    Either pass ``condvals`` (finite entry = conditioned at that value, NaN =
    free; the value-list style), or pass a ``missing`` mask and optional
    boolean ``cond_flags`` (the flag style; missing positions are
    marginalised).  With the flag style, ``values`` optionally binds the
    conditioning values from a data row.

    Raises
    ------
    CondOnMissingError
        If a position is flagged as conditioning but is missing, or a
        conditioning value is non-finite.
    AllMarginalisedError
        If nothing survives marginalisation.
    DimensionMismatchError
        If the arguments disagree in length.
    """
    if condvals is not None:
        if cond_flags is not None:
            raise InvalidParamError("pass either condvals or cond_flags, not both")
        vals = np.atleast_1d(np.asarray(condvals, dtype=float))
        if vals.ndim != 1:
            raise InvalidParamError("condvals must be one-dimensional")
        if np.any(np.isinf(vals)):
            raise InvalidParamError("condvals entries must be finite or NaN")
        if missing is not None:
            miss = np.atleast_1d(np.asarray(missing, dtype=bool))
            if miss.shape != vals.shape:
                raise DimensionMismatchError(
                    f"missing mask has length {miss.size}, condvals has length {vals.size}"
                )
            if np.any(miss & np.isfinite(vals)):
                raise CondOnMissingError(
                    "a missing position cannot carry a conditioning value"
                )
        state = np.where(np.isfinite(vals), CONDITIONED, FREE).astype(np.int8)
        if missing is not None:
            state[miss] = MARGINALISED
            if np.all(state == MARGINALISED):
                raise AllMarginalisedError("every position is marginalised")
        return CondPattern(state=state, values=vals)

    if missing is None and cond_flags is None:
        raise InvalidParamError("build_pattern needs missing, cond_flags, or condvals")
    if missing is not None:
        miss = np.atleast_1d(np.asarray(missing, dtype=bool))
    else:
        miss = np.zeros(np.atleast_1d(np.asarray(cond_flags)).shape, dtype=bool)
    if cond_flags is None:
        flags = np.zeros(miss.shape, dtype=bool)
    else:
        flags = np.atleast_1d(np.asarray(cond_flags, dtype=bool))
    if flags.shape != miss.shape:
        raise DimensionMismatchError(
            f"cond flags have length {flags.size}, missing mask has length {miss.size}"
        )
    if np.any(flags & miss):
        raise CondOnMissingError(
            "conditioning flag set on a missing position "
            f"(positions {np.nonzero(flags & miss)[0] + 1})"
        )
    state = np.full(miss.shape, FREE, dtype=np.int8)
    state[flags] = CONDITIONED
    state[miss] = MARGINALISED
    if np.all(state == MARGINALISED):
        raise AllMarginalisedError("every position is marginalised")
    if values is not None:
        row = np.atleast_1d(np.asarray(values, dtype=float))
        if row.shape != state.shape:
            raise DimensionMismatchError(
                f"values have length {row.size}, pattern has length {state.size}"
            )
        if np.any(~np.isfinite(row[flags])):
            raise CondOnMissingError("a flagged position carries no finite value")
        return CondPattern(state=state, values=row)
    return CondPattern(state=state)
