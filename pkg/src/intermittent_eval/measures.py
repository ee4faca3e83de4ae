"""Forecast error measures and their mean-based lifts.

Each measure has a *point* form, scored against observed demands, and a
*mean* form (the ``m``-prefixed name, e.g. ``mMAE``), scored against the
mean of the demand-generating process. A measure that cannot be computed
(division by zero, empty sample, ...) returns an undefined
:class:`MeasureValue` tagged with a reason. It never returns inf or nan.

All kernels work along the last axis, so a whole stack of series can be
scored in one call via :func:`evaluate_arrays`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SCALE_DEPENDENT = ("ME", "MSE", "RMSE", "MAE", "MdAE")
PERCENTAGE = ("MAPE", "iMAPE", "MdAPE", "RMSPE", "RMdSPE", "sMAPE", "sMdAPE")
RELATIVE_ERROR = ("MRAE", "MdRAE", "GMRAE")
RELATIVE = ("RelMAE", "RelMSE", "RelRMSE", "U2", "LMR")
PERCENT_BETTER = ("PB", "PBt")
SCALED = ("MASE", "RMSSE", "MdASE", "MMR")
BASE_MEASURES = SCALE_DEPENDENT + PERCENTAGE + RELATIVE_ERROR + RELATIVE + PERCENT_BETTER + SCALED

NEEDS_BASELINE = frozenset(RELATIVE_ERROR + RELATIVE + ("PB",))
NEEDS_INSAMPLE = frozenset(SCALED)
HIGHER_BETTER = frozenset(PERCENT_BETTER)

ZERO_DENOMINATOR = "zero-denominator"
EMPTY_AFTER_EXCLUSION = "empty-after-exclusion"
IDENTICAL_INSAMPLE = "identical-insample"
ZERO_RELATIVE_ERROR = "zero-relative-error"
_REASONS = ("", ZERO_DENOMINATOR, EMPTY_AFTER_EXCLUSION, IDENTICAL_INSAMPLE, ZERO_RELATIVE_ERROR)
_ZD, _EE, _II, _ZR = 1, 2, 3, 4


@dataclass(frozen=True)
class MeasureValue:
    """A finite value, or an undefined result carrying a reason."""

    value: float | None = None
    reason: str | None = None

    def __post_init__(self):
        if (self.value is None) == (self.reason is None):
            raise ValueError("exactly one of value and reason must be set")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError(f"measure values must be finite, got {self.value}")
        if self.reason is not None and self.reason not in _REASONS[1:]:
            raise ValueError(f"unknown undefinedness reason {self.reason!r}")

    @classmethod
    def undefined(cls, reason: str) -> MeasureValue:
        return cls(reason=reason)

    @property
    def defined(self) -> bool:
        return self.value is not None

    def __str__(self) -> str:
        return f"{self.value:.5f}" if self.defined else f"Undefined({self.reason})"


@dataclass(frozen=True)
class MeasureId:
    base: str
    target: str = "point"

    def __post_init__(self):
        if self.base not in BASE_MEASURES:
            raise ValueError(f"unknown measure {self.base!r}")
        if self.target not in ("point", "mean"):
            raise ValueError(f"target must be 'point' or 'mean', got {self.target!r}")

    @classmethod
    def parse(cls, name: str | MeasureId) -> MeasureId:
        """``"mMAE"`` -> ``MeasureId("MAE", "mean")``. Names are case-sensitive."""
        if isinstance(name, MeasureId):
            return name
        if name in BASE_MEASURES:
            return cls(name)
        if name.startswith("m") and name[1:] in BASE_MEASURES:
            return cls(name[1:], "mean")
        raise ValueError(f"unknown measure name {name!r}")

    @property
    def name(self) -> str:
        return ("m" if self.target == "mean" else "") + self.base

    @property
    def orientation(self) -> str:
        return "higher-better" if self.base in HIGHER_BETTER else "lower-better"

    @property
    def higher_is_better(self) -> bool:
        return self.base in HIGHER_BETTER

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ErrorSample:
    """Actuals (demands or process means) with the forecasts scored against them."""

    actuals: np.ndarray
    forecasts: np.ndarray
    baseline_forecasts: np.ndarray | None = None
    insample: np.ndarray | None = None

    def __post_init__(self):
        a = _vector(self.actuals, "actuals")
        f = _vector(self.forecasts, "forecasts")
        if a.size == 0 or a.size != f.size:
            raise ValueError("actuals and forecasts need equal positive length")
        object.__setattr__(self, "actuals", a)
        object.__setattr__(self, "forecasts", f)
        if self.baseline_forecasts is not None:
            b = _vector(self.baseline_forecasts, "baseline_forecasts")
            if b.size != a.size:
                raise ValueError("baseline forecasts must match actuals in length")
            object.__setattr__(self, "baseline_forecasts", b)
        if self.insample is not None:
            object.__setattr__(self, "insample", _vector(self.insample, "insample"))

    @property
    def errors(self) -> np.ndarray:
        return self.actuals - self.forecasts

    @property
    def baseline_errors(self) -> np.ndarray:
        if self.baseline_forecasts is None:
            raise ValueError("this measure needs baseline forecasts")
        return self.actuals - self.baseline_forecasts


def _vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


# --- kernels: arrays of shape (..., n) -> (values, reason codes) of shape (...)

def _div(num, den):
    return num / np.where(den == 0, 1.0, den)


def _defined(values):
    return values, np.zeros(np.shape(values), dtype=np.int8)


def _where_bad(values, bad, code):
    codes = np.where(bad, code, 0).astype(np.int8)
    return np.where(bad, 0.0, values), codes


def _scale_dependent(base, e):
    if base == "ME":
        return _defined(np.mean(e, axis=-1))
    if base == "MSE":
        return _defined(np.mean(e * e, axis=-1))
    if base == "RMSE":
        return _defined(np.sqrt(np.mean(e * e, axis=-1)))
    if base == "MAE":
        return _defined(np.mean(np.abs(e), axis=-1))
    return _defined(np.median(np.abs(e), axis=-1))


def _percentage(base, y, f):
    e = y - f
    if base in ("sMAPE", "sMdAPE"):
        den = y + f
        bad = np.any(den == 0, axis=-1)
        s = 200.0 * _div(np.abs(e), den)
        agg = np.mean if base == "sMAPE" else np.median
        return _where_bad(agg(s, axis=-1), bad, _ZD)
    zero = y == 0
    p = 100.0 * _div(e, y)
    if base == "iMAPE":
        kept = ~zero
        count = kept.sum(axis=-1)
        total = np.sum(np.where(kept, np.abs(p), 0.0), axis=-1)
        return _where_bad(_div(total, count), count == 0, _EE)
    bad = np.any(zero, axis=-1)
    if base == "MAPE":
        v = np.mean(np.abs(p), axis=-1)
    elif base == "MdAPE":
        v = np.median(np.abs(p), axis=-1)
    elif base == "RMSPE":
        v = np.sqrt(np.mean(p * p, axis=-1))
    else:
        v = np.sqrt(np.median(p * p, axis=-1))
    return _where_bad(v, bad, _ZD)


def _relative_error(base, e, eb):
    bad = np.any(eb == 0, axis=-1)
    r = np.abs(_div(e, eb))
    if base == "MRAE":
        return _where_bad(np.mean(r, axis=-1), bad, _ZD)
    if base == "MdRAE":
        return _where_bad(np.median(r, axis=-1), bad, _ZD)
    has_zero = np.any(r == 0, axis=-1) & ~bad
    v = np.exp(np.mean(np.log(np.where(r > 0, r, 1.0)), axis=-1))
    v, codes = _where_bad(v, bad, _ZD)
    return np.where(has_zero, 0.0, v), np.where(has_zero, _ZR, codes).astype(np.int8)


def _relative(base, e, eb):
    if base == "RelMAE":
        num, den = np.mean(np.abs(e), axis=-1), np.mean(np.abs(eb), axis=-1)
        return _where_bad(_div(num, den), den == 0, _ZD)
    num, den = np.mean(e * e, axis=-1), np.mean(eb * eb, axis=-1)
    ratio = _div(num, den)
    if base == "RelMSE":
        return _where_bad(ratio, den == 0, _ZD)
    if base in ("RelRMSE", "U2"):
        return _where_bad(np.sqrt(ratio), den == 0, _ZD)
    # LMR
    zero = (num == 0) & (den != 0)
    v, codes = _where_bad(np.log(np.where(ratio > 0, ratio, 1.0)), den == 0, _ZD)
    return np.where(zero, 0.0, v), np.where(zero, _ZR, codes).astype(np.int8)


def _percent_better(e, eb):
    wins = np.abs(e) < np.abs(eb)
    return _defined(100.0 * wins.sum(axis=-1) / e.shape[-1])


def _percent_best(errs):
    """``errs`` has shape (methods, ..., n); returns shape (methods, ...)."""
    a = np.abs(errs)
    best = a.min(axis=0)
    at_best = a == best
    unique = at_best.sum(axis=0) == 1
    wins = (at_best & unique).sum(axis=-1)
    return _defined(100.0 * wins / errs.shape[-1])


def _scaled(base, e, insample):
    if base == "MMR":
        level = np.mean(insample, axis=-1)
        return _where_bad(_div(np.mean(np.abs(e), axis=-1), level), level == 0, _ZD)
    if insample.shape[-1] < 2:
        raise ValueError("scaled errors need at least two in-sample periods")
    scale = np.mean(np.abs(np.diff(insample, axis=-1)), axis=-1)
    q = _div(e, scale[..., None])
    if base == "MASE":
        v = np.mean(np.abs(q), axis=-1)
    elif base == "RMSSE":
        v = np.sqrt(np.mean(q * q, axis=-1))
    else:
        v = np.median(np.abs(q), axis=-1)
    return _where_bad(v, scale == 0, _II)


def _kernel(base, actuals, forecasts, baseline=None, insample=None, competitors=None):
    e = actuals - forecasts
    if base in SCALE_DEPENDENT:
        return _scale_dependent(base, e)
    if base in PERCENTAGE:
        return _percentage(base, actuals, forecasts)
    if base in SCALED:
        if insample is None:
            raise ValueError(f"{base} needs an in-sample window")
        return _scaled(base, e, insample)
    if base == "PBt":
        others = competitors if competitors is not None else ([] if baseline is None else [baseline])
        if not others:
            raise ValueError("PBt needs at least one competing forecast")
        stack = np.stack([e] + [actuals - o for o in others])
        values, codes = _percent_best(stack)
        return values[0], codes[0]
    if baseline is None:
        raise ValueError(f"{base} needs baseline forecasts")
    eb = actuals - baseline
    if base in RELATIVE_ERROR:
        return _relative_error(base, e, eb)
    if base in RELATIVE:
        return _relative(base, e, eb)
    return _percent_better(e, eb)


def _finish(values, codes):
    # Overflow from near-zero denominators is reported as a zero denominator.
    with np.errstate(invalid="ignore"):
        overflow = ~np.isfinite(values) & (codes == 0)
    codes = np.where(overflow, _ZD, codes)
    values = np.where(codes == 0, values, 0.0)
    return values, np.asarray(_REASONS, dtype=object)[codes]


def evaluate_arrays(measure, demands, forecasts, mean_path=None, baseline=None,
                    insample=None, competitors=None):
    """Vectorised :func:`evaluate` along the last axis.

    Returns ``(values, reasons)``. ``reasons`` is ``""`` where the measure is
    defined; undefined entries hold ``0.0`` in ``values``.
    """
    mid = MeasureId.parse(measure)
    forecasts = np.asarray(forecasts, dtype=float)
    if mid.target == "mean":
        if mean_path is None:
            raise ValueError(f"{mid.name} needs a mean path")
        actuals = np.asarray(mean_path, dtype=float)
    else:
        actuals = np.asarray(demands, dtype=float)
    actuals = np.broadcast_to(actuals, forecasts.shape)
    if baseline is not None:
        baseline = np.broadcast_to(np.asarray(baseline, dtype=float), forecasts.shape)
    if insample is not None:
        insample = np.asarray(insample, dtype=float)
    if competitors is not None:
        competitors = [np.broadcast_to(np.asarray(c, dtype=float), forecasts.shape)
                       for c in competitors]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        values, codes = _kernel(mid.base, actuals, forecasts, baseline, insample, competitors)
    return _finish(np.asarray(values, dtype=float), np.asarray(codes))


def _wrap(values, reasons) -> MeasureValue:
    reason = reasons.item() if isinstance(reasons, np.ndarray) else reasons
    if reason:
        return MeasureValue.undefined(reason)
    return MeasureValue(float(values))


def _check_base(base: str, family: Sequence[str]) -> str:
    base = MeasureId.parse(base).base if base not in family else base
    if base not in family:
        raise ValueError(f"{base} is not one of {family}")
    return base


def _run(base, sample: ErrorSample, baseline=None, insample=None) -> MeasureValue:
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        values, codes = _kernel(base, sample.actuals, sample.forecasts, baseline, insample)
    return _wrap(*_finish(np.asarray(values, dtype=float), np.asarray(codes)))


def errors(sample: ErrorSample) -> np.ndarray:
    return sample.errors


def scale_dependent(base: str, sample: ErrorSample) -> MeasureValue:
    return _run(_check_base(base, SCALE_DEPENDENT), sample)


def percentage(base: str, sample: ErrorSample) -> MeasureValue:
    return _run(_check_base(base, PERCENTAGE), sample)


def relative_error(base: str, sample: ErrorSample) -> MeasureValue:
    base = _check_base(base, RELATIVE_ERROR)
    if sample.baseline_forecasts is None:
        _missing_baseline()
    return _run(base, sample, baseline=sample.baseline_forecasts)


def relative(base: str, sample: ErrorSample, baseline_sample: ErrorSample | None = None) -> MeasureValue:
    """Ratio of a method's scale-dependent measure to the baseline's.

    The baseline comes from ``baseline_sample.forecasts`` when given, else
    from ``sample.baseline_forecasts``.
    """
    base = _check_base(base, RELATIVE)
    if baseline_sample is not None:
        if not np.array_equal(baseline_sample.actuals, sample.actuals):
            raise ValueError("method and baseline must be scored on identical actuals")
        baseline = baseline_sample.forecasts
    elif sample.baseline_forecasts is not None:
        baseline = sample.baseline_forecasts
    else:
        baseline = _missing_baseline()
    return _run(base, sample, baseline=baseline)


def percent_better(sample: ErrorSample) -> MeasureValue:
    if sample.baseline_forecasts is None:
        _missing_baseline()
    return _run("PB", sample, baseline=sample.baseline_forecasts)


def percent_best(samples: Sequence[ErrorSample]) -> list[MeasureValue]:
    """Share of periods in which each method alone has the smallest absolute error."""
    if not samples:
        raise ValueError("need at least one method")
    actuals = samples[0].actuals
    for s in samples[1:]:
        if not np.array_equal(s.actuals, actuals):
            raise ValueError("all methods must be scored on identical actuals")
    values, _ = _percent_best(np.stack([s.errors for s in samples]))
    return [MeasureValue(float(v)) for v in values]


def scaled(base: str, sample: ErrorSample) -> MeasureValue:
    base = _check_base(base, SCALED)
    if sample.insample is None:
        raise ValueError(f"{base} needs an in-sample window")
    if base != "MMR" and sample.insample.size < 2:
        raise ValueError("scaled errors need at least two in-sample periods")
    if sample.insample.size < 1:
        raise ValueError("MMR needs a nonempty in-sample window")
    return _run(base, sample, insample=sample.insample)


def _missing_baseline():
    raise ValueError("this measure needs baseline forecasts")


def evaluate(measure, demands, forecasts, mean_path=None, baseline=None, insample=None,
             competitors=None) -> MeasureValue:
    """Score one forecast trace with any point or mean-based measure.

    Parameters
    ----------
    measure : str or MeasureId
        e.g. ``"MAE"``, ``"mMAE"``, ``"iMAPE"``, ``"mGMRAE"``.
    demands : array_like or DemandSeries
        Observed demands over the evaluation horizon.
    forecasts : array_like
        One-step-ahead forecasts aligned with ``demands``.
    mean_path : array_like or MeanPath, optional
        Process mean per period; required for mean-based measures.
    baseline : array_like, optional
        Baseline (usually RW) forecasts for relative, relative-error and PB
        measures. Its errors are taken against the same target as the method.
    insample : array_like, optional
        Historical demands for the scaled measures.
    competitors : list of array_like, optional
        Other methods' forecasts for PBt; defaults to ``[baseline]``.
    """
    mid = MeasureId.parse(measure)
    y = _vector(getattr(demands, "demands", demands), "demands")
    f = _vector(forecasts, "forecasts")
    if y.size == 0 or y.size != f.size:
        raise ValueError("demands and forecasts need equal positive length")
    m = None
    if mean_path is not None:
        m = _vector(getattr(mean_path, "means", mean_path), "mean_path")
        if m.size != y.size:
            raise ValueError("mean path must match demands in length")
    if mid.target == "mean" and m is None:
        raise ValueError(f"{mid.name} needs a mean path")
    b = None
    if baseline is not None:
        b = _vector(baseline, "baseline")
        if b.size != y.size:
            raise ValueError("baseline must match demands in length")
    if mid.base in NEEDS_BASELINE and b is None:
        raise ValueError(f"{mid.name} needs baseline forecasts")
    s = None
    if insample is not None:
        s = _vector(getattr(insample, "demands", insample), "insample")
    if mid.base in NEEDS_INSAMPLE:
        if s is None:
            raise ValueError(f"{mid.name} needs an in-sample window")
        if s.size < (1 if mid.base == "MMR" else 2):
            raise ValueError(f"{mid.name} in-sample window is too short")
    comps = None
    if competitors is not None:
        comps = [_vector(c, "competitor") for c in competitors]
        if any(c.size != y.size for c in comps):
            raise ValueError("competitor forecasts must match demands in length")
    return _wrap(*evaluate_arrays(mid, y, f, m, b, s, comps))
