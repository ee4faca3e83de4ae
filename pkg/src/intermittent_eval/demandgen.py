"""Artificial intermittent demand series and their true process-mean paths."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .rng import (
    LogarithmicParams,
    RandomStream,
    bernoulli_variates,
    geometric_variates,
    logarithmic_mean,
    logarithmic_variates,
)

KINDS = (
    "bernoulli-logarithmic",
    "bernoulli-geometric-size",
    "regular-intermittent",
    "markov2",
    "obsolescence",
)
PROFILES = ("linear-to-zero", "abrupt-to-zero")

_REQUIRED = {
    "bernoulli-logarithmic": {"p0", "ell"},
    "bernoulli-geometric-size": {"p0", "size_p"},
    "regular-intermittent": {"period", "size"},
    "markov2": {"p01", "p10"},
    "obsolescence": {"p0", "ell", "profile", "change", "end"},
}
_FIELDS = ("p0", "ell", "size_p", "period", "size", "p01", "p10", "profile", "change", "end")


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one demand-generating process.

    Only the fields used by ``kind`` may be set; see the ``_REQUIRED`` table.
    ``obsolescence`` draws logarithmic sizes and lets the nonzero probability
    fall from ``p0`` to zero: linearly between periods ``change`` and ``end``
    (``linear-to-zero``), or in one step at ``change`` (``abrupt-to-zero``,
    where ``end`` must equal ``change``).
    """

    kind: str
    p0: float | None = None
    ell: float | None = None
    size_p: float | None = None
    period: int | None = None
    size: float | None = None
    p01: float | None = None
    p10: float | None = None
    profile: str | None = None
    change: int | None = None
    end: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        required = _REQUIRED[self.kind]
        present = {f for f in _FIELDS if getattr(self, f) is not None}
        if missing := required - present:
            raise ValueError(f"{self.kind} requires {sorted(missing)}")
        if extra := present - required:
            raise ValueError(f"{self.kind} does not take {sorted(extra)}")

        if self.p0 is not None and not 0.0 < self.p0 <= 1.0:
            raise ValueError(f"p0 must lie in (0, 1], got {self.p0}")
        for name in ("ell", "size_p", "p01", "p10"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.period is not None and (int(self.period) != self.period or self.period < 1):
            raise ValueError(f"period must be a positive integer, got {self.period}")
        if self.size is not None and self.size <= 0:
            raise ValueError(f"size must be positive, got {self.size}")
        if self.kind == "obsolescence":
            if self.profile not in PROFILES:
                raise ValueError(f"profile must be one of {PROFILES}, got {self.profile!r}")
            if self.change < 1:
                raise ValueError("change period must be >= 1")
            if self.profile == "linear-to-zero" and self.end <= self.change:
                raise ValueError("linear profile needs end > change")
            if self.profile == "abrupt-to-zero" and self.end != self.change:
                raise ValueError("abrupt profile needs end == change")

    @classmethod
    def bernoulli_logarithmic(cls, p0: float, ell: float) -> GeneratorSpec:
        return cls("bernoulli-logarithmic", p0=p0, ell=ell)

    @classmethod
    def bernoulli_geometric_size(cls, p0: float, size_p: float) -> GeneratorSpec:
        return cls("bernoulli-geometric-size", p0=p0, size_p=size_p)

    @classmethod
    def regular_intermittent(cls, period: int | None = None, size: float = 1.0,
                             p0: float | None = None) -> GeneratorSpec:
        """Fixed-size demand every ``period`` periods; ``period`` defaults to ``round(1/p0)``."""
        if period is None:
            if p0 is None:
                raise ValueError("give either period or p0")
            period = max(1, round(1.0 / p0))
        return cls("regular-intermittent", period=int(period), size=size)

    @classmethod
    def markov2(cls, p01: float, p10: float) -> GeneratorSpec:
        return cls("markov2", p01=p01, p10=p10)

    @classmethod
    def obsolescence(cls, p0: float, ell: float, profile: str, change: int,
                     end: int | None = None) -> GeneratorSpec:
        if end is None and profile == "abrupt-to-zero":
            end = change
        return cls("obsolescence", p0=p0, ell=ell, profile=profile, change=change, end=end)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> GeneratorSpec:
        return cls(**{k: v for k, v in data.items() if k == "kind" or k in _FIELDS})

    @property
    def key(self) -> str:
        """Stable identifier, used for seed derivation."""
        return ";".join(f"{k}={v!r}" for k, v in self.to_dict().items())


@dataclass(frozen=True)
class DemandSeries:
    demands: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.demands, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("a demand series needs at least one period")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("demands must be finite and non-negative")
        object.__setattr__(self, "demands", d)

    def __len__(self) -> int:
        return self.demands.size


@dataclass(frozen=True)
class MeanPath:
    means: np.ndarray
    provenance: str = "analytic"

    def __post_init__(self):
        m = np.asarray(self.means, dtype=float)
        if m.ndim != 1 or not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("a mean path is a 1-d array of finite non-negative values")
        if self.provenance not in ("analytic", "sample-estimated"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "means", m)

    def __len__(self) -> int:
        return self.means.size


def _size_mean(spec: GeneratorSpec) -> float:
    if spec.kind in ("bernoulli-logarithmic", "obsolescence"):
        return logarithmic_mean(spec.ell)
    if spec.kind == "bernoulli-geometric-size":
        return 1.0 / spec.size_p
    raise ValueError(f"{spec.kind} has no random size distribution")


def nonzero_probability(spec: GeneratorSpec, t) -> np.ndarray:
    """Per-period probability of nonzero demand for ``obsolescence``; periods count from 1."""
    t = np.asarray(t, dtype=float)
    if spec.profile == "abrupt-to-zero":
        return np.where(t < spec.change, spec.p0, 0.0)
    frac = np.clip((spec.end - t) / (spec.end - spec.change), 0.0, 1.0)
    return spec.p0 * frac


def analytic_mean_path(spec: GeneratorSpec, n: int, start: int = 1) -> np.ndarray:
    """Process mean for periods ``start .. start + n - 1``."""
    t = np.arange(start, start + n)
    if spec.kind == "obsolescence":
        return nonzero_probability(spec, t) * _size_mean(spec)
    if spec.kind in ("bernoulli-logarithmic", "bernoulli-geometric-size"):
        level = spec.p0 * _size_mean(spec)
    elif spec.kind == "regular-intermittent":
        level = spec.size / spec.period
    else:
        level = spec.p01 / (spec.p01 + spec.p10)
    return np.full(n, level)


def analytic_mean(spec: GeneratorSpec, t: int) -> float:
    return float(analytic_mean_path(spec, 1, start=t)[0])


def _markov2(spec: GeneratorSpec, n: int, stream: RandomStream) -> np.ndarray:
    stationary = spec.p01 / (spec.p01 + spec.p10)
    u = stream.uniforms(n).tolist()
    out = np.empty(n, dtype=np.int64)
    state = int(u[0] < stationary)
    out[0] = state
    p01, p10 = spec.p01, spec.p10
    for i in range(1, n):
        if state:
            state = 0 if u[i] < p10 else 1
        else:
            state = 1 if u[i] < p01 else 0
        out[i] = state
    return out


def generate(spec: GeneratorSpec, n: int, stream: RandomStream) -> tuple[DemandSeries, MeanPath]:
    """Draw ``n`` periods of demand from ``spec`` together with the analytic mean path.

    Occurrence uniforms for all ``n`` periods are drawn first, then one size
    uniform per nonzero period, in period order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    kind = spec.kind
    if kind == "regular-intermittent":
        t = np.arange(1, n + 1)
        demands = np.where(t % spec.period == 0, float(spec.size), 0.0)
    elif kind == "markov2":
        demands = _markov2(spec, n, stream).astype(float)
    else:
        if kind == "obsolescence":
            p = nonzero_probability(spec, np.arange(1, n + 1))
        else:
            p = spec.p0
        occurs = bernoulli_variates(stream, p, n).astype(bool)
        m = int(occurs.sum())
        if kind == "bernoulli-geometric-size":
            sizes = geometric_variates(stream, spec.size_p, m)
        else:
            sizes = logarithmic_variates(stream, LogarithmicParams(spec.ell), m)
        demands = np.zeros(n)
        demands[occurs] = sizes
    return DemandSeries(demands), MeanPath(analytic_mean_path(spec, n), "analytic")


def _fmt(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def write_series_csv(path_or_buf, series: DemandSeries, mean_path: MeanPath | None = None) -> None:
    """Write ``t,demand[,mean]`` rows, ``t`` counting from 1."""
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        if mean_path is None:
            w.writerow(["t", "demand"])
            for t, y in enumerate(series.demands, 1):
                w.writerow([t, _fmt(y)])
        else:
            if len(mean_path) != len(series):
                raise ValueError("mean path and series differ in length")
            w.writerow(["t", "demand", "mean"])
            for t, (y, m) in enumerate(zip(series.demands, mean_path.means), 1):
                w.writerow([t, _fmt(y), repr(float(m))])
    finally:
        if own:
            fh.close()


def read_series_csv(path_or_buf) -> tuple[DemandSeries, MeanPath | None]:
    if isinstance(path_or_buf, (str, Path)):
        text = Path(path_or_buf).read_text(encoding="utf-8")
    else:
        text = path_or_buf.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or "demand" not in rows[0]:
        raise ValueError("series CSV needs a header with at least 't,demand'")
    demands = [float(r["demand"]) for r in rows]
    mean = None
    if "mean" in rows[0] and all(r.get("mean") not in (None, "") for r in rows):
        mean = MeanPath([float(r["mean"]) for r in rows], "analytic")
    return DemandSeries(demands), mean
