"""Estimate the process-mean path of a demand series whose generator is unknown."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demandgen import MeanPath

ESTIMATORS = ("series-mean", "moving-window", "linear-regression", "known")


@dataclass(frozen=True)
class MeanEstimatorSpec:
    kind: str = "series-mean"
    window: int | None = None

    def __post_init__(self):
        if self.kind not in ESTIMATORS:
            raise ValueError(f"unknown mean estimator {self.kind!r}; expected one of {ESTIMATORS}")
        if self.kind == "moving-window":
            if self.window is None or self.window < 1 or self.window % 2 == 0:
                raise ValueError(f"moving window must be an odd positive integer, got {self.window}")
        elif self.window is not None:
            raise ValueError(f"{self.kind} takes no window")

    @classmethod
    def parse(cls, text: str) -> MeanEstimatorSpec:
        """Parse the CLI form: ``series-mean``, ``window:K``, ``regression`` or ``known``."""
        text = text.strip()
        if text.startswith("window:"):
            return cls("moving-window", int(text.split(":", 1)[1]))
        if text == "regression":
            return cls("linear-regression")
        return cls(text)

    def __str__(self) -> str:
        if self.kind == "moving-window":
            return f"window:{self.window}"
        if self.kind == "linear-regression":
            return "regression"
        return self.kind


def _moving_window(y: np.ndarray, window: int) -> np.ndarray:
    # Centered, truncated at the ends and averaged over the periods that exist.
    half = window // 2
    n = y.size
    csum = np.concatenate([[0.0], np.cumsum(y)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def _regression(y: np.ndarray) -> np.ndarray:
    t = np.arange(1, y.size + 1, dtype=float)
    tc = t - t.mean()
    slope = np.dot(tc, y - y.mean()) / np.dot(tc, tc)
    return np.maximum(y.mean() + slope * tc, 0.0)


def estimate_mean_path(spec: MeanEstimatorSpec, series, known: MeanPath | None = None) -> MeanPath:
    """Mean path for ``series`` by the estimator in ``spec``.

    ``known`` supplies the generator's analytic path and is required (and
    passed through unchanged) for the ``known`` estimator.
    """
    y = np.asarray(getattr(series, "demands", series), dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("series must be a nonempty 1-d sequence")
    if spec.kind == "known":
        if known is None:
            raise ValueError("the 'known' estimator needs the generator's mean path")
        if len(known) != y.size:
            raise ValueError("known mean path does not match the series length")
        return known
    if spec.kind == "series-mean":
        means = np.full(y.size, y.mean())
    elif spec.kind == "moving-window":
        means = _moving_window(y, spec.window)
    else:
        if y.size < 2:
            raise ValueError("regression needs at least two periods")
        means = _regression(y)
    return MeanPath(means, "sample-estimated")
