"""Series preprocessing: trend/residual decomposition, normalization, encoding.

Three steps prepare a raw speed series for the information-theoretic
estimator:

1. ``decompose`` splits the series into a one-sided moving-average trend and
   a residual, so the residual can be modeled as a stationary chain.
2. ``normalize`` maps a (bootstrap) series into a comparable range.  The
   ``nonlinear`` method pushes each sample through the standard normal CDF
   after robust standardization against window-local percentiles; ``minmax``
   and ``zscore`` are the familiar alternatives, also window-local.  Note
   that ``minmax`` here divides by the window maximum only; it does not
   subtract the window minimum as textbook min-max rescaling does.
3. ``encode`` discretizes a series into integer symbols using
   empirical-quantile bin bounds, by default isolating the lowest 5% and
   highest 5% of values into their own bins.  ``encode_fixed`` instead
   codes against caller-fixed cutoffs, the right choice for CDF-normalized
   values whose scale is already calibrated.

Window-local statistics use the *forefront window*: the ``w`` most recent
samples ending at the current step.  Near the start of a series, where fewer
than ``w`` samples exist, all available samples are used instead of
truncating the warm-up region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtr

from .core import FULL_WINDOW, InvalidArgumentError, NORM_METHODS, SpeedSeries

_CDF_FLOOR = np.nextafter(0.0, 1.0)
_CDF_CEIL = np.nextafter(1.0, 0.0)

__all__ = [
    "Decomposition",
    "WindowStats",
    "SymbolSeries",
    "decompose",
    "window_percentiles",
    "normalize",
    "encode",
    "encode_fixed",
]


def _two_sum(a, b):
    """Rounded sum of two float arrays plus its exact rounding error."""
    s = a + b
    bv = s - a
    err = (a - (s - bv)) + (b - bv)
    return s, err


@dataclass(frozen=True)
class Decomposition:
    """Additive split of a series into trend and residual.

    In exact arithmetic ``trend[t] + residual[t] + residual_low[t]`` equals
    the original sample.  ``residual_low`` carries the sub-ulp rounding
    remainder of the residual subtraction (zero for most samples, and
    negligible against ``residual`` everywhere); ``reconstruct`` folds it
    back with compensated summation, so the round trip through a
    decomposition reproduces the original series bit for bit.
    """

    trend: np.ndarray
    residual: np.ndarray
    order: int
    residual_low: np.ndarray = None

    def __post_init__(self):
        if self.residual_low is None:
            object.__setattr__(self, "residual_low", np.zeros_like(self.residual))
        for name in ("trend", "residual", "residual_low"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def reconstruct(self) -> np.ndarray:
        s, err = _two_sum(self.trend, self.residual)
        # err + residual_low is tiny against ulp(s), so the outer sum rounds
        # to the exact total
        return s + (err + self.residual_low)


@dataclass(frozen=True)
class WindowStats:
    """The 25th/50th/75th percentiles of a forefront window."""

    f25: float
    f50: float
    f75: float

    def __post_init__(self):
        if not (self.f25 <= self.f50 <= self.f75):
            raise InvalidArgumentError(
                f"percentiles must be ordered: {self.f25}, {self.f50}, {self.f75}"
            )

    @property
    def iqr(self) -> float:
        return self.f75 - self.f25


@dataclass(frozen=True)
class SymbolSeries:
    """A discretized series: integer symbols in ``1..n`` plus the bin bounds.

    ``bounds`` holds the ``n - 1`` increasing quantile cut points.  A value
    at or below the first bound maps to symbol 1, a value at or above the
    last bound maps to symbol ``n``, and interior values map to the open
    interval they fall in.
    """

    symbols: np.ndarray
    n: int
    bounds: np.ndarray

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.int64)
        bounds = np.asarray(self.bounds, dtype=float)
        symbols.flags.writeable = False
        bounds.flags.writeable = False
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "bounds", bounds)

    def __len__(self) -> int:
        return self.symbols.size


def decompose(series: Union[SpeedSeries, Sequence[float]], m: int) -> Decomposition:
    """Split a series into an order-``m`` one-sided moving-average trend and residual.

    The trend at step ``t`` is the mean of the ``m`` most recent samples
    including the current one; the first ``m - 1`` steps average over the
    shorter available prefix.  ``m = 1`` makes the trend the series itself.

    Parameters
    ----------
    series : SpeedSeries or sequence of float
    m : int
        Moving-average order, at least 1.

    Returns
    -------
    Decomposition
    """
    values = series.values if isinstance(series, SpeedSeries) else np.asarray(
        series, dtype=float
    )
    if values.size == 0:
        raise InvalidArgumentError("cannot decompose an empty series")
    if m < 1:
        raise InvalidArgumentError(f"moving-average order must be >= 1: got {m}")

    l = values.size
    cs = np.concatenate(([0.0], np.cumsum(values)))
    counts = np.minimum(np.arange(1, l + 1), m)
    starts = np.arange(1, l + 1) - counts
    trend = (cs[1:] - cs[starts]) / counts
    residual, residual_low = _two_sum(values, -trend)
    return Decomposition(
        trend=trend, residual=residual, order=int(m), residual_low=residual_low
    )


def window_percentiles(prefix: Sequence[float], t: int, w: int) -> WindowStats:
    """Percentiles of the forefront window ending at index ``t`` (0-based, inclusive).

    The window covers the last ``min(t + 1, w)`` samples of ``prefix`` up to
    and including position ``t``; at ``t = 0`` it degenerates to the single
    first sample.  Percentiles interpolate linearly between the closest order
    statistics.
    """
    values = np.asarray(prefix, dtype=float)
    if t < 0 or t >= values.size:
        raise InvalidArgumentError(f"index {t} out of range for length {values.size}")
    if w != FULL_WINDOW and w < 1:
        raise InvalidArgumentError(f"window must be >= 1 or {FULL_WINDOW!r}: got {w}")
    lo = 0 if w == FULL_WINDOW else max(0, t - w + 1)
    f25, f50, f75 = np.percentile(values[lo : t + 1], [25.0, 50.0, 75.0])
    return WindowStats(f25=float(f25), f50=float(f50), f75=float(f75))


def _window_bounds(l: int, t: int, w: Union[int, str]) -> int:
    return 0 if w == FULL_WINDOW else max(0, t - w + 1)


def normalize(
    series: Sequence[float],
    method: str = "nonlinear",
    w: Union[int, str] = FULL_WINDOW,
) -> np.ndarray:
    """Normalize a series by one of the supported methods with a sliding window.

    For each step ``t`` the statistics are taken over the forefront window of
    size ``w`` ending at ``t`` (the whole prefix when fewer samples exist,
    the whole series when ``w`` is ``"full"``):

    - ``nonlinear``: standard normal CDF of ``0.5 * (x - median) / IQR``.
      Output lies strictly inside (0, 1).  A degenerate window with zero IQR
      standardizes to 0, giving 0.5.
    - ``minmax``: ``x / max(window)`` (scaling only; the window minimum is
      not subtracted).  A window maximum of exactly 0 gives 0.
    - ``zscore``: ``(x - mean(window)) / std(window)``, population standard
      deviation.  Zero dispersion gives 0.
    - ``none``: the series unchanged.

    Returns
    -------
    numpy.ndarray
        Normalized values, same length as the input.
    """
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("cannot normalize an empty series")
    if method not in NORM_METHODS:
        raise InvalidArgumentError(
            f"method must be one of {NORM_METHODS}: got {method!r}"
        )
    if w != FULL_WINDOW and w < 1:
        raise InvalidArgumentError(f"window must be >= 1 or {FULL_WINDOW!r}: got {w}")

    if method == "none":
        return values.copy()

    l = values.size
    out = np.empty(l)
    if method == "nonlinear":
        for t in range(l):
            lo = _window_bounds(l, t, w)
            f25, f50, f75 = np.percentile(values[lo : t + 1], [25.0, 50.0, 75.0])
            iqr = f75 - f25
            z = 0.0 if iqr == 0.0 else 0.5 * (values[t] - f50) / iqr
            # ndtr saturates to exactly 0 or 1 for |z| beyond ~8.3; pull the
            # result back inside the open interval the contract promises
            out[t] = min(max(ndtr(z), _CDF_FLOOR), _CDF_CEIL)
    elif method == "minmax":
        for t in range(l):
            lo = _window_bounds(l, t, w)
            top = values[lo : t + 1].max()
            out[t] = 0.0 if top == 0.0 else values[t] / top
    else:  # zscore
        for t in range(l):
            lo = _window_bounds(l, t, w)
            window = values[lo : t + 1]
            sd = window.std()
            out[t] = 0.0 if sd == 0.0 else (values[t] - window.mean()) / sd
    return out


def encode(
    series: Sequence[float],
    n: int = 3,
    quantile_probs: Sequence[float] = (0.05, 0.95),
) -> SymbolSeries:
    """Discretize a series into ``n`` integer symbols by empirical quantiles.

    Bin bounds are the empirical quantiles of the input at the given
    probabilities (linear interpolation).  Values at or below the lowest
    bound map to symbol 1, values at or above the highest bound to symbol
    ``n``; a value exactly equal to an interior bound joins the bin below it.

    Low-variance data can produce coinciding bounds; the resulting empty
    bins are collapsed with a warning, shrinking the effective alphabet.  A
    constant series encodes entirely to symbol 1.

    Returns
    -------
    SymbolSeries
    """
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("cannot encode an empty series")
    if n < 2:
        raise InvalidArgumentError(f"need at least 2 bins: got {n}")
    probs = np.asarray(quantile_probs, dtype=float)
    if probs.size != n - 1:
        raise InvalidArgumentError(
            f"need n-1={n - 1} quantile probabilities: got {probs.size}"
        )
    if np.any(probs <= 0.0) or np.any(probs >= 1.0) or np.any(np.diff(probs) <= 0.0):
        raise InvalidArgumentError(
            "quantile probabilities must be strictly increasing within (0, 1)"
        )

    bounds = np.quantile(values, probs)
    unique_bounds = np.unique(bounds)
    if unique_bounds.size < bounds.size:
        if unique_bounds.size == 1 and np.all(values == values[0]):
            warnings.warn(
                "degenerate data: all values equal, every symbol assigned to bin 1",
                stacklevel=2,
            )
        else:
            warnings.warn(
                f"duplicate bin bounds on low-variance data: collapsed "
                f"{bounds.size - unique_bounds.size} empty bin(s)",
                stacklevel=2,
            )
        bounds = unique_bounds
    n_eff = bounds.size + 1
    return SymbolSeries(
        symbols=_assign_symbols(values, bounds), n=int(n_eff), bounds=bounds.copy()
    )


def encode_fixed(series: Sequence[float], bounds: Sequence[float]) -> SymbolSeries:
    """Discretize a series against caller-fixed bin bounds.

    The right coder for series whose scale already carries meaning, such as
    CDF-normalized values in (0, 1): a cutoff like 0.05 marks the same
    severity in every series and every resample, so the coded extremes stay
    comparable where data-driven quantile bounds would drift with each
    input.  Boundary rules match ``encode``: at or below the lowest bound
    maps to 1, at or above the highest to ``len(bounds) + 1``.

    Returns
    -------
    SymbolSeries
    """
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("cannot encode an empty series")
    cuts = np.asarray(bounds, dtype=float)
    if cuts.size == 0:
        raise InvalidArgumentError("need at least one bin bound")
    if np.any(np.diff(cuts) <= 0.0):
        raise InvalidArgumentError("bin bounds must be strictly increasing")
    return SymbolSeries(
        symbols=_assign_symbols(values, cuts), n=int(cuts.size + 1), bounds=cuts.copy()
    )


def _assign_symbols(values: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    symbols = 1 + np.searchsorted(bounds, values, side="left").astype(np.int64)
    symbols[values >= bounds[-1]] = bounds.size + 1
    symbols[values <= bounds[0]] = 1
    return symbols
