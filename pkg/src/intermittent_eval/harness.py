"""Simulation experiments: generate demand, grid-search smoothing parameters,
score every measure and rank the forecasters."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .demandgen import GeneratorSpec, MeanPath, generate
from .forecast import METHODS, Forecaster, run_forecaster
from .meanest import MeanEstimatorSpec, estimate_mean_path
from .measures import NEEDS_INSAMPLE, MeasureId, MeasureValue, evaluate_arrays
from .rng import RandomStream, derive_seed

DEFAULT_SEED = 20100
DEFAULT_GRID = (0.1, 0.2, 0.3)
DEFAULT_MEASURES = (
    "MAE", "MdAE", "MSE", "iMAPE", "PB",
    "mMAE", "mMdAE", "mMSE", "mMAPE", "mPB", "mGMRAE",
)
DEFAULT_FORECASTERS = ("SES", "CR", "ZF")
AXIOM = ("CR", "SES", "ZF")

TABLE_SETTINGS = {
    1: GeneratorSpec.bernoulli_logarithmic(0.2, 0.001),
    2: GeneratorSpec.bernoulli_logarithmic(0.5, 0.001),
    3: GeneratorSpec.bernoulli_logarithmic(0.2, 0.9),
    4: GeneratorSpec.bernoulli_logarithmic(0.5, 0.9),
    5: GeneratorSpec.markov2(0.3, 0.3),
}
TABLE_CAPTIONS = {
    1: "artificial demand with p0=0.2 and ell=0.001",
    2: "artificial demand with p0=0.5 and ell=0.001",
    3: "artificial demand with p0=0.2 and ell=0.9",
    4: "artificial demand with p0=0.5 and ell=0.9",
    5: "autocorrelated demand with p01=p10=0.3",
}


@dataclass(frozen=True)
class ExperimentSpec:
    generator: GeneratorSpec
    warmup_len: int = 10_000
    eval_len: int = 100_000
    grid: tuple[float, ...] = DEFAULT_GRID
    measures: tuple[str, ...] = DEFAULT_MEASURES
    forecasters: tuple[str, ...] = DEFAULT_FORECASTERS
    mean_estimator: MeanEstimatorSpec = field(default_factory=MeanEstimatorSpec)
    master_seed: int = DEFAULT_SEED
    replication: int = 0

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        object.__setattr__(self, "measures", tuple(self.measures))
        object.__setattr__(self, "forecasters", tuple(self.forecasters))
        if self.warmup_len < 0 or self.eval_len < 1:
            raise ValueError("need warmup_len >= 0 and eval_len >= 1")
        if not self.grid or not all(0.0 < g < 1.0 for g in self.grid):
            raise ValueError(f"grid values must lie in (0, 1), got {self.grid}")
        if not self.measures or not self.forecasters:
            raise ValueError("measures and forecasters must be nonempty")
        for m in self.measures:
            mid = MeasureId.parse(m)
            if mid.base in NEEDS_INSAMPLE and self.warmup_len < 2:
                raise ValueError(f"{m} scales by the warm-up window, which needs >= 2 periods")
        for f in self.forecasters:
            if f not in METHODS:
                raise ValueError(f"unknown forecaster {f!r}")
        if len(set(self.forecasters)) != len(self.forecasters):
            raise ValueError("forecasters must be distinct")

    @property
    def setting_id(self) -> str:
        return self.generator.key

    @property
    def seed(self) -> int:
        return derive_seed(self.master_seed, self.setting_id, self.replication)

    @classmethod
    def from_config(cls, cfg: dict) -> ExperimentSpec:
        """Build from a flat mapping: generator fields plus experiment fields."""
        cfg = dict(cfg)
        kwargs = {}
        for key in ("warmup_len", "eval_len", "master_seed", "replication"):
            if key in cfg:
                kwargs[key] = int(cfg.pop(key))
        for key in ("grid", "measures", "forecasters"):
            if key in cfg:
                val = cfg.pop(key)
                if isinstance(val, str):
                    val = [v.strip() for v in val.split(",") if v.strip()]
                kwargs[key] = tuple(float(v) for v in val) if key == "grid" else tuple(val)
        if "mean_estimator" in cfg:
            kwargs["mean_estimator"] = MeanEstimatorSpec.parse(str(cfg.pop("mean_estimator")))
        generator = GeneratorSpec.from_dict(cfg)
        leftover = set(cfg) - set(generator.to_dict())
        if leftover:
            raise ValueError(f"unknown config keys: {sorted(leftover)}")
        return cls(generator, **kwargs)


def forecaster_grid(method: str, grid: Sequence[float]) -> list[Forecaster]:
    if method == "SES":
        return [Forecaster("SES", a) for a in grid]
    if method == "CR":
        return [Forecaster("CR", a, b) for a in grid for b in grid]
    return [Forecaster(method)]


@dataclass(frozen=True)
class Cell:
    """Best grid point of one forecaster under one measure."""

    measure: str
    method: str
    best: Forecaster | None
    value: MeasureValue
    grid_values: tuple[tuple[Forecaster, MeasureValue], ...]


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    cells: dict[tuple[str, str], Cell]
    rankings: dict[str, tuple[tuple[str, ...], ...]]
    nonzero_fraction: float
    mean_level: float

    def cell(self, measure: str, method: str) -> Cell:
        return self.cells[(measure, method)]

    def ranking_text(self, measure: str) -> str:
        return " > ".join(" = ".join(group) for group in self.rankings[measure])


def _better(a: float, b: float, higher: bool) -> bool:
    return a > b if higher else a < b


def select_best(values: Sequence[MeasureValue], higher_is_better: bool) -> int | None:
    """Index of the orientation-best defined value; the first wins ties."""
    best = None
    for i, v in enumerate(values):
        if v.defined and (best is None or _better(v.value, values[best].value, higher_is_better)):
            best = i
    return best


def rank_forecasters(values: dict[str, MeasureValue], higher_is_better: bool) -> tuple[tuple[str, ...], ...]:
    """Best-first groups of equal-valued forecasters; undefined values share last place."""
    defined = [(m, v.value) for m, v in values.items() if v.defined]
    undefined = tuple(m for m, v in values.items() if not v.defined)
    defined.sort(key=lambda mv: -mv[1] if higher_is_better else mv[1])
    groups: list[list[str]] = []
    last = None
    for m, v in defined:
        if groups and v == last:
            groups[-1].append(m)
        else:
            groups.append([m])
        last = v
    out = [tuple(g) for g in groups]
    if undefined:
        out.append(undefined)
    return tuple(out)


def simulate(spec: ExperimentSpec):
    """One shared realization: ``(warmup, series, mean_path)`` for the evaluation horizon."""
    stream = RandomStream(spec.seed)
    total = spec.warmup_len + spec.eval_len
    series, analytic = generate(spec.generator, total, stream)
    warmup = series.demands[:spec.warmup_len]
    evals = series.demands[spec.warmup_len:]
    known = MeanPath(analytic.means[spec.warmup_len:], "analytic")
    mean_path = estimate_mean_path(spec.mean_estimator, evals, known=known)
    return warmup, evals, mean_path


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    warmup, y, mean_path = simulate(spec)
    baseline = run_forecaster(Forecaster("RW"), y, warmup)

    candidates: list[tuple[str, Forecaster]] = []
    for method in spec.forecasters:
        candidates.extend((method, f) for f in forecaster_grid(method, spec.grid))
    traces = np.stack([run_forecaster(f, y, warmup) for _, f in candidates])

    cells: dict[tuple[str, str], Cell] = {}
    rankings: dict[str, tuple[tuple[str, ...], ...]] = {}
    for name in spec.measures:
        mid = MeasureId.parse(name)
        values, reasons = evaluate_arrays(
            mid, y, traces, mean_path.means, baseline=baseline,
            insample=warmup if mid.base in NEEDS_INSAMPLE else None,
        )
        scored = [MeasureValue.undefined(r) if r else MeasureValue(float(v))
                  for v, r in zip(values, reasons)]
        best_values = {}
        for method in spec.forecasters:
            idx = [i for i, (m, _) in enumerate(candidates) if m == method]
            grid_values = tuple((candidates[i][1], scored[i]) for i in idx)
            pick = select_best([v for _, v in grid_values], mid.higher_is_better)
            if pick is None:
                best, value = None, grid_values[0][1]
            else:
                best, value = grid_values[pick]
            cells[(name, method)] = Cell(name, method, best, value, grid_values)
            best_values[method] = value
        rankings[name] = rank_forecasters(best_values, mid.higher_is_better)

    return ExperimentReport(
        spec=spec,
        cells=cells,
        rankings=rankings,
        nonzero_fraction=float(np.mean(y > 0)),
        mean_level=float(np.mean(mean_path.means)),
    )


def check_axiom(report: ExperimentReport, order: Sequence[str] = AXIOM) -> dict[str, str]:
    """Per measure: ``pass`` for a strict CR > SES > ZF ranking, ``tie`` if any
    two of them share a place, otherwise ``fail``."""
    missing = set(order) - set(report.spec.forecasters)
    if missing:
        raise ValueError(f"report lacks forecasters {sorted(missing)}")
    verdicts = {}
    for measure, groups in report.rankings.items():
        place = {m: i for i, g in enumerate(groups) for m in g}
        ranks = [place[m] for m in order]
        if len(set(ranks)) < len(ranks):
            verdicts[measure] = "tie"
        elif all(a < b for a, b in zip(ranks, ranks[1:])):
            verdicts[measure] = "pass"
        else:
            verdicts[measure] = "fail"
    return verdicts


# --- rendering

def _num(v: MeasureValue) -> str:
    return f"{v.value:.5f}" if v.defined else "undef"


def _param(x: float | None) -> str:
    return "-" if x is None else f"{x:.1f}" if round(x, 1) == x else repr(x)


def _columns(method: str) -> list[str]:
    if method == "SES":
        return ["alpha", "error"]
    if method == "CR":
        return ["alpha", "beta", "error"]
    return ["error"]


def render_text(report: ExperimentReport, title: str | None = None) -> str:
    spec = report.spec
    header = ["measure"]
    for method in spec.forecasters:
        header += [f"{method} {c}" for c in _columns(method)]
    header.append("ranking")
    rows = []
    for measure in spec.measures:
        row = [measure]
        for method in spec.forecasters:
            cell = report.cell(measure, method)
            best = cell.best
            for c in _columns(method):
                if c == "error":
                    row.append(_num(cell.value))
                else:
                    row.append(_param(getattr(best, c) if best else None))
        row.append(report.ranking_text(measure))
        rows.append(row)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]

    def fmt(r):
        cells = [r[0].ljust(widths[0])]
        cells += [r[i].rjust(widths[i]) for i in range(1, len(r) - 1)]
        cells.append(r[-1])
        return "  ".join(cells).rstrip()

    lines = []
    if title:
        lines.append(title)
    lines.append(
        f"seed={spec.master_seed} replication={spec.replication} warmup={spec.warmup_len} "
        f"eval={spec.eval_len} mean-est={spec.mean_estimator}"
    )
    lines.append(fmt(header))
    lines.append("-" * len(fmt(header)))
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines) + "\n"


CSV_HEADER = ["measure", "forecaster", "alpha", "beta", "value", "undefined_reason", "ranking"]


def csv_rows(report: ExperimentReport) -> list[list[str]]:
    rows = []
    for measure in report.spec.measures:
        for method in report.spec.forecasters:
            cell = report.cell(measure, method)
            best = cell.best
            rows.append([
                measure, method,
                "" if best is None or best.alpha is None else repr(best.alpha),
                "" if best is None or best.beta is None else repr(best.beta),
                f"{cell.value.value:.5f}" if cell.value.defined else "",
                "" if cell.value.defined else cell.value.reason,
                report.ranking_text(measure),
            ])
    return rows


def render_csv(reports: Sequence[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    multi = len(reports) > 1
    w.writerow((["replication"] if multi else []) + CSV_HEADER)
    for report in reports:
        for row in csv_rows(report):
            w.writerow(([str(report.spec.replication)] if multi else []) + row)
    return buf.getvalue()


def ranking_stability(reports: Sequence[ExperimentReport]) -> dict[str, Counter]:
    """How often each ranking occurred per measure across replications."""
    out: dict[str, Counter] = {}
    for report in reports:
        for measure in report.spec.measures:
            out.setdefault(measure, Counter())[report.ranking_text(measure)] += 1
    return out


def render_stability(reports: Sequence[ExperimentReport]) -> str:
    stab = ranking_stability(reports)
    n = len(reports)
    width = max(len(m) for m in stab)
    lines = [f"ranking stability over {n} replications"]
    for measure, counts in stab.items():
        parts = ", ".join(f"{r} ({c}/{n})" for r, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
        lines.append(f"{measure.ljust(width)}  {parts}")
    return "\n".join(lines) + "\n"


def table_spec(table_id: int, master_seed: int = DEFAULT_SEED, replication: int = 0,
               mean_estimator: MeanEstimatorSpec | None = None, **overrides) -> ExperimentSpec:
    if table_id not in TABLE_SETTINGS:
        raise ValueError(f"table must be one of {sorted(TABLE_SETTINGS)}, got {table_id}")
    spec = ExperimentSpec(TABLE_SETTINGS[table_id], master_seed=master_seed, replication=replication)
    if mean_estimator is not None:
        overrides["mean_estimator"] = mean_estimator
    return replace(spec, **overrides) if overrides else spec


def reproduce_table(table_id: int, master_seed: int = DEFAULT_SEED, replications: int = 1,
                    mean_estimator: MeanEstimatorSpec | None = None, **overrides):
    """Run the canonical experiment behind one results table.

    Returns ``(reports, text)``: one report per replication and the rendered
    table of the first, followed by a ranking-stability summary when
    ``replications > 1``.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    reports = [
        run_experiment(table_spec(table_id, master_seed, r, mean_estimator, **overrides))
        for r in range(replications)
    ]
    text = render_text(reports[0], title=f"Table {table_id}: results for {TABLE_CAPTIONS[table_id]}")
    if replications > 1:
        text += "\n" + render_stability(reports)
    return reports, text
