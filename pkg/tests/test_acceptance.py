"""Acceptance criteria 1-10, each checked at its stated tolerance.

Every test records a one-line verdict that is printed in the pytest terminal
summary (and immediately, when run with ``-s``).
"""
import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE
from intermittent_eval.cli import main
from intermittent_eval.demandgen import GeneratorSpec, generate
from intermittent_eval.forecast import Forecaster, run_forecaster
from intermittent_eval.harness import (
    DEFAULT_SEED,
    ExperimentSpec,
    check_axiom,
    render_text,
    reproduce_table,
    run_experiment,
    table_spec,
)
from intermittent_eval.measures import BASE_MEASURES, NEEDS_INSAMPLE, MeasureId, evaluate, evaluate_arrays
from intermittent_eval.rng import (
    LogarithmicParams,
    RandomStream,
    geometric_variates,
    logarithmic_mean,
    logarithmic_variates,
)
from oracle import agree, measure as oracle_measure

SEEDS = tuple(range(DEFAULT_SEED, DEFAULT_SEED + 10))
SETTINGS = (1, 2, 3, 4, 5)
MEAN_BASED = ("mMAE", "mMdAE", "mMSE", "mMAPE", "mPB", "mGMRAE")


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, detail


@pytest.fixture(scope="module")
def seeded_reports():
    """Full-protocol reports for every table setting under ten master seeds."""
    return {(t, s): run_experiment(table_spec(t, master_seed=s)) for t in SETTINGS for s in SEEDS}


@pytest.fixture(scope="module")
def default_tables():
    return {t: reproduce_table(t) for t in SETTINGS}


def ranks_first(report, measure, method):
    return report.rankings[measure][0] == (method,)


def place(report, measure, method):
    return next(i for i, g in enumerate(report.rankings[measure]) if method in g)


@pytest.mark.slow
def test_criterion_01_mean_based_rankings(seeded_reports):
    misses = []
    for t in SETTINGS:
        for m in MEAN_BASED:
            verdicts = [check_axiom(seeded_reports[(t, s)])[m] for s in SEEDS]
            wins = verdicts.count("pass")
            if wins < 9:
                misses.append(f"setting {t} {m}: {wins}/10 ({verdicts.count('tie')} ties)")
    record(1, not misses, "CR > SES > ZF in >= 9/10 seeds for all 30 setting/measure pairs"
           + ("" if not misses else "; short: " + "; ".join(misses)))


@pytest.mark.slow
def test_criterion_02_classical_measure_failures(seeded_reports):
    def count(pred, t):
        return sum(pred(seeded_reports[(t, s)]) for s in SEEDS)

    checks = {}
    for t in (1, 3, 4):
        checks[f"(a) MAE ZF first, setting {t}"] = count(lambda r: ranks_first(r, "MAE", "ZF"), t)
        checks[f"(a) MdAE ZF first, setting {t}"] = count(lambda r: ranks_first(r, "MdAE", "ZF"), t)
    checks["(b) MdAE ZF first, setting 2"] = count(lambda r: ranks_first(r, "MdAE", "ZF"), 2)
    checks["(c) MSE SES above CR, setting 5"] = count(
        lambda r: place(r, "MSE", "SES") < place(r, "MSE", "CR"), 5)
    short = [f"{k}: {v}/10" for k, v in checks.items() if v < 9]
    record(2, not short, f"{len(checks) - len(short)}/{len(checks)} sub-claims hold in >= 9/10 seeds"
           + ("" if not short else "; short: " + "; ".join(short)))


@pytest.mark.slow
def test_criterion_03_analytic_zf_values(default_tables):
    problems = []
    for t in (1, 2, 3, 4):
        spec = table_spec(t).generator
        want = spec.p0 * logarithmic_mean(spec.ell)
        got = default_tables[t][0][0].cell("MAE", "ZF").value.value
        if abs(got - want) > 0.01 * want:
            problems.append(f"setting {t} ZF MAE {got:.5f} vs {want:.5f} ({100 * (got / want - 1):+.2f}%)")
    for t in SETTINGS:
        report, text = default_tables[t][0][0], default_tables[t][1]
        for m in ("mMAPE", "iMAPE"):
            value = report.cell(m, "ZF").value
            line = next(l for l in text.splitlines() if l.split()[0] == m)
            zf_column = line.split()[6]
            if not (value.defined and value.value == 100.0 and zf_column == "100.00000"):
                problems.append(f"setting {t} ZF {m} rendered {zf_column}")
    record(3, not problems, "ZF MAE within 1% of p0*mu(ell); ZF mMAPE and iMAPE render 100.00000"
           + ("" if not problems else "; " + "; ".join(problems)))


@pytest.mark.slow
def test_criterion_04_zf_mdae_zero(seeded_reports):
    checked, problems = 0, []
    for t in (1, 2, 3, 4):
        for s in SEEDS:
            r = seeded_reports[(t, s)]
            if r.nonzero_fraction < 0.5:
                checked += 1
                v = r.cell("MdAE", "ZF").value
                if not (v.defined and v.value == 0.0):
                    problems.append(f"setting {t} seed {s}: {v}")
    record(4, checked > 0 and not problems,
           f"ZF MdAE == 0 in all {checked} runs with nonzero fraction < 0.5"
           + ("" if not problems else "; " + "; ".join(problems)))


def test_criterion_05_undefinedness():
    rng = np.random.default_rng(5)
    problems = []
    for _ in range(2000):
        n = int(rng.integers(2, 40))
        y = rng.integers(0, 4, size=n).astype(float)
        f = rng.uniform(0, 3, size=n)
        y[rng.integers(0, n)] = 0.0
        if evaluate("MAPE", y, f).reason != "zero-denominator":
            problems.append(f"MAPE on {y.tolist()}")
        warm = rng.integers(0, 4, size=3).astype(float)
        k = int(rng.integers(1, n))
        y[k] = y[k - 1]
        rw = run_forecaster(Forecaster("RW"), y, warm)
        if evaluate("GMRAE", y, f, baseline=rw).defined:
            problems.append(f"GMRAE on {y.tolist()}")
        flat = np.full(int(rng.integers(2, 20)), float(rng.integers(0, 5)))
        if evaluate("MASE", y, f, insample=flat).reason != "identical-insample":
            problems.append(f"MASE with in-sample {flat.tolist()}")

    nonfinite = 0
    for _ in range(500):
        n = int(rng.integers(1, 12))
        y = rng.integers(0, 3, size=n).astype(float)
        f = rng.integers(0, 3, size=n).astype(float) * rng.choice([1.0, 1e-300, 1e300])
        b = rng.integers(0, 3, size=n).astype(float)
        s = rng.integers(0, 3, size=int(rng.integers(2, 6))).astype(float)
        for name in BASE_MEASURES:
            for mid in (MeasureId(name), MeasureId(name, "mean")):
                v = evaluate(mid, y, f, mean_path=np.full(n, y.mean()), baseline=b,
                             insample=s if name in NEEDS_INSAMPLE else None)
                if v.defined and not math.isfinite(v.value):
                    nonfinite += 1
    if nonfinite:
        problems.append(f"{nonfinite} non-finite values")
    record(5, not problems, "MAPE/GMRAE/MASE undefined where required; no inf or NaN produced"
           + ("" if not problems else "; " + "; ".join(problems[:5])))


@pytest.mark.slow
def test_criterion_06_oracle_equivalence():
    checked, mismatches = 0, []
    for length in range(1, 7):
        seqs = np.array(list(itertools.product((0.0, 1.0, 2.0), repeat=length)))
        y = np.repeat(seqs, len(seqs), axis=0)
        f = np.tile(seqs, (len(seqs), 1))
        # RW baseline with a zero before the first period; that zero also opens the in-sample window
        rw = np.concatenate([np.zeros((len(y), 1)), y[:, :-1]], axis=1)
        insample = np.concatenate([np.zeros((len(y), 1)), y], axis=1)
        zero = np.zeros_like(y)
        means = y.mean(axis=1, keepdims=True)
        computed = {}
        for base in BASE_MEASURES:
            for target in ("point", "mean"):
                mid = MeasureId(base, target)
                computed[mid] = evaluate_arrays(mid, y, f, means, baseline=rw, insample=insample,
                                                competitors=[rw, zero] if base == "PBt" else None)
        yl, fl, bl, il, ml = y.tolist(), f.tolist(), rw.tolist(), insample.tolist(), means[:, 0].tolist()
        zl = [0.0] * length
        for i in range(len(yl)):
            mean_row = [ml[i]] * length
            for mid, (values, reasons) in computed.items():
                actuals = yl[i] if mid.target == "point" else mean_row
                want, reason = oracle_measure(mid.base, actuals, fl[i], baseline=bl[i], insample=il[i],
                                              competitors=[bl[i], zl] if mid.base == "PBt" else None)
                checked += 1
                if reason is not None:
                    ok = reasons[i] == reason
                else:
                    ok = not reasons[i] and agree(values[i], want)
                if not ok:
                    mismatches.append(f"{mid.name} y={yl[i]} f={fl[i]}: {values[i]!r}/{reasons[i]!r} vs {want!r}/{reason!r}")
    record(6, not mismatches, f"{checked} measure evaluations agree to 12 significant digits"
           + ("" if not mismatches else f"; {len(mismatches)} mismatches, e.g. {mismatches[0]}"))


def random_generator(rng) -> GeneratorSpec:
    kind = rng.integers(0, 3)
    if kind == 0:
        return GeneratorSpec.bernoulli_logarithmic(round(rng.uniform(0.05, 0.9), 3), round(rng.uniform(0.01, 0.95), 3))
    if kind == 1:
        return GeneratorSpec.bernoulli_geometric_size(round(rng.uniform(0.05, 0.9), 3), round(rng.uniform(0.1, 0.9), 3))
    return GeneratorSpec.markov2(round(rng.uniform(0.05, 0.9), 3), round(rng.uniform(0.05, 0.9), 3))


@pytest.mark.slow
def test_criterion_07_monotone_families():
    families = (("MSE", "RMSE", "RelMSE", "LMR"), ("MAE", "RelMAE", "MMR", "MASE"))
    rng = np.random.default_rng(7)
    disagreements = []
    for k in range(100):
        spec = ExperimentSpec(random_generator(rng), warmup_len=500, eval_len=2000,
                              measures=families[0] + families[1], forecasters=("SES", "CR", "ZF", "RW"),
                              master_seed=int(rng.integers(0, 2**32)))
        report = run_experiment(spec)
        for family in families:
            rankings = {report.rankings[m] for m in family}
            if len(rankings) != 1:
                disagreements.append(f"report {k} ({spec.generator.key}): {family[0]} family")
    record(7, not disagreements, "identical rankings within each monotone family on 100 random reports"
           + ("" if not disagreements else "; " + "; ".join(disagreements[:5])))


def chi_squared_p(draws: np.ndarray, pmf) -> float:
    """Goodness-of-fit p-value with a pooled upper tail so every bin expects >= 5 draws."""
    n = draws.size
    k, probs = 1, []
    while True:
        p = pmf(k)
        if n * (1 - sum(probs) - p) < 5 or n * p < 5:
            break
        probs.append(p)
        k += 1
    observed = [np.count_nonzero(draws == j) for j in range(1, k)] + [np.count_nonzero(draws >= k)]
    expected = [n * p for p in probs] + [n * (1 - sum(probs))]
    if len(observed) == 1 or expected[-1] < 5:
        observed[-2] += observed.pop()
        expected[-2] += expected.pop()
    if len(observed) == 1:
        return 1.0
    return float(stats.chisquare(observed, expected).pvalue)


@pytest.mark.slow
def test_criterion_08_distributions():
    n = 10**5
    results = {}
    for ell in (0.001, 0.5, 0.9):
        params = LogarithmicParams(ell)
        draws = logarithmic_variates(RandomStream(800 + int(ell * 1000)), params, n)
        results[f"logarithmic ell={ell}"] = chi_squared_p(draws, params.pmf)
    for q in (0.2, 0.5):
        draws = geometric_variates(RandomStream(900 + int(q * 10)), q, n)
        results[f"geometric p={q}"] = chi_squared_p(draws, lambda k: q * (1 - q) ** (k - 1))
    problems = [f"{k} p={p:.2g}" for k, p in results.items() if not p > 0.001]
    for p01, p10 in ((0.3, 0.3), (0.1, 0.4)):
        series, _ = generate(GeneratorSpec.markov2(p01, p10), n, RandomStream(77))
        pi = p01 / (p01 + p10)
        rho = 1 - p01 - p10
        sigma = math.sqrt(pi * (1 - pi) / n * (1 + rho) / (1 - rho))
        freq = float(np.mean(series.demands > 0))
        if abs(freq - pi) > 3 * sigma:
            problems.append(f"markov2 ({p01},{p10}) frequency {freq:.4f} vs {pi:.4f}")
    record(8, not problems, "chi-squared p > 0.001 for " + ", ".join(f"{k} (p={v:.3f})" for k, v in results.items())
           + "; markov2 frequency within 3 sigma" + ("" if not problems else "; " + "; ".join(problems)))


@pytest.mark.slow
def test_criterion_09_performance():
    times = {}
    for t in SETTINGS:
        start = time.perf_counter()
        code = main(["reproduce", "--table", str(t)], out=_Sink(), err=_Sink())
        times[t] = time.perf_counter() - start
        assert code in (0, 2)
    total = sum(times.values())
    slow = [t for t, s in times.items() if s >= 10]
    record(9, not slow and total < 60,
           "per table " + ", ".join(f"{t}: {s:.2f}s" for t, s in times.items()) + f"; total {total:.2f}s")


class _Sink:
    def write(self, text):
        return len(text)


@pytest.mark.slow
def test_criterion_10_determinism():
    cmd = [sys.executable, "-m", "intermittent_eval", "reproduce", "--table", "3", "--seed", "42"]
    a = subprocess.run(cmd, capture_output=True, check=False)
    b = subprocess.run(cmd, capture_output=True, check=False)
    same = a.stdout == b.stdout and a.stderr == b.stderr and a.returncode == b.returncode
    record(10, same and len(a.stdout) > 0, f"two runs of reproduce --table 3 --seed 42 byte-identical ({len(a.stdout)} bytes)")
