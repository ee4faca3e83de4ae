"""One-step-ahead forecasters for intermittent demand.

Two routes compute the same traces. The state classes (:class:`SesState`,
:class:`CrostonState`) step through a series one observation at a time.
:func:`run_forecaster` runs the same recursions as linear filters over
whole arrays, which is what the experiment harness uses.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

METHODS = ("SES", "CR", "RW", "ZF")
INITIAL_LEVEL = 1.0


def _check_smoothing(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class SesState:
    alpha: float
    smoothed: float = INITIAL_LEVEL

    def __post_init__(self):
        _check_smoothing("alpha", self.alpha)

    def forecast(self) -> float:
        return self.smoothed


def ses_update(state: SesState, y: float) -> SesState:
    return replace(state, smoothed=state.alpha * y + (1.0 - state.alpha) * state.smoothed)


@dataclass(frozen=True)
class CrostonState:
    """Croston sizes/intervals state; forecasts carry the Syntetos-Boylan factor."""

    alpha: float
    beta: float
    smoothed_size: float = INITIAL_LEVEL
    smoothed_interval: float = INITIAL_LEVEL
    periods_since_demand: int = 0

    def __post_init__(self):
        _check_smoothing("alpha", self.alpha)
        _check_smoothing("beta", self.beta)

    def forecast(self) -> float:
        return croston_forecast(self)


def croston_update(state: CrostonState, y: float) -> CrostonState:
    if y < 0:
        raise ValueError("demand must be non-negative")
    if y == 0:
        return replace(state, periods_since_demand=state.periods_since_demand + 1)
    interval = state.periods_since_demand + 1
    return replace(
        state,
        smoothed_size=state.alpha * y + (1.0 - state.alpha) * state.smoothed_size,
        smoothed_interval=state.beta * interval + (1.0 - state.beta) * state.smoothed_interval,
        periods_since_demand=0,
    )


def croston_forecast(state: CrostonState) -> float:
    return (1.0 - state.beta / 2.0) * state.smoothed_size / state.smoothed_interval


def rw_forecast(previous_demand: float) -> float:
    return previous_demand


def zf_forecast() -> float:
    return 0.0


@dataclass(frozen=True)
class Forecaster:
    """A forecasting method with its smoothing parameters bound."""

    method: str
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method in ("SES", "CR"):
            if self.alpha is None:
                raise ValueError(f"{self.method} needs alpha")
            _check_smoothing("alpha", self.alpha)
        elif self.alpha is not None:
            raise ValueError(f"{self.method} takes no alpha")
        if self.method == "CR":
            if self.beta is None:
                raise ValueError("CR needs beta")
            _check_smoothing("beta", self.beta)
        elif self.beta is not None:
            raise ValueError(f"{self.method} takes no beta")

    @property
    def label(self) -> str:
        if self.method == "SES":
            return f"SES(alpha={self.alpha})"
        if self.method == "CR":
            return f"CR(alpha={self.alpha},beta={self.beta})"
        return self.method

    def initial_state(self):
        if self.method == "SES":
            return SesState(self.alpha)
        if self.method == "CR":
            return CrostonState(self.alpha, self.beta)
        return None


def _smooth(values: np.ndarray, weight: float, initial: float) -> np.ndarray:
    """Exponential smoothing levels after each of ``values``, starting at ``initial``."""
    if values.size == 0:
        return values.astype(float)
    levels, _ = lfilter([weight], [1.0, weight - 1.0], values, zi=[(1.0 - weight) * initial])
    return levels


def run_forecaster(forecaster: Forecaster, series, warmup=()) -> np.ndarray:
    """Forecast each period of ``series`` after first consuming ``warmup``.

    The forecast for a period is recorded before its demand is observed.
    RW forecasts the first evaluation period with the last warm-up demand,
    or 0 when there is no warm-up.
    """
    y = np.asarray(getattr(series, "demands", series), dtype=float)
    w = np.asarray(getattr(warmup, "demands", warmup), dtype=float)
    n, nw = y.size, w.size
    if n < 1:
        raise ValueError("series must be nonempty")
    method = forecaster.method
    if method == "ZF":
        return np.zeros(n)
    x = np.concatenate([w, y])
    if method == "RW":
        prev = np.concatenate([[0.0], x[:-1]])
        return prev[nw:]
    if method == "SES":
        levels = np.concatenate([[INITIAL_LEVEL], _smooth(x, forecaster.alpha, INITIAL_LEVEL)])
        return levels[nw:nw + n]

    # CR: the state only moves at nonzero demands, so smooth the sizes and
    # intervals of those demands and index by how many preceded each period.
    pos = np.flatnonzero(x > 0)
    intervals = np.diff(pos, prepend=-1).astype(float)
    sizes = _smooth(x[pos], forecaster.alpha, INITIAL_LEVEL)
    gaps = _smooth(intervals, forecaster.beta, INITIAL_LEVEL)
    factor = 1.0 - forecaster.beta / 2.0
    ratios = factor * np.concatenate([[INITIAL_LEVEL], sizes]) / np.concatenate([[INITIAL_LEVEL], gaps])
    seen = np.concatenate([[0], np.cumsum(x > 0)])
    return ratios[seen[nw:nw + n]]


def run_streaming(forecaster: Forecaster, series, warmup=()) -> np.ndarray:
    """Reference route: forecast-then-update, one observation at a time."""
    y = [float(v) for v in getattr(series, "demands", series)]
    w = [float(v) for v in getattr(warmup, "demands", warmup)]
    method = forecaster.method
    if method == "ZF":
        return np.array([zf_forecast() for _ in y])
    if method == "RW":
        prev = w[-1] if w else 0.0
        out = []
        for v in y:
            out.append(rw_forecast(prev))
            prev = v
        return np.array(out)
    update = ses_update if method == "SES" else croston_update
    state = forecaster.initial_state()
    for v in w:
        state = update(state, v)
    out = []
    for v in y:
        out.append(state.forecast())
        state = update(state, v)
    return np.array(out)


def write_trace_csv(path_or_buf, trace) -> None:
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "forecast"])
        for t, f in enumerate(np.asarray(trace, dtype=float), 1):
            w.writerow([t, repr(float(f))])
    finally:
        if own:
            fh.close()


def read_trace_csv(path_or_buf) -> np.ndarray:
    if isinstance(path_or_buf, (str, Path)):
        lines = Path(path_or_buf).read_text(encoding="utf-8").splitlines()
    else:
        lines = path_or_buf.read().splitlines()
    rows = list(csv.DictReader(lines))
    if not rows or "forecast" not in rows[0]:
        raise ValueError("forecast CSV needs a header 't,forecast'")
    return np.array([float(r["forecast"]) for r in rows])
