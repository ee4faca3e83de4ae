"""Seedable random streams and the discrete samplers used by the demand generators.

Every sampler consumes exactly one uniform variate per draw, so the scalar
and vectorised routes map the same uniforms to the same integers.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

#: Bit generator behind every stream. numpy guarantees stream stability of
#: PCG64 across releases, which keeps golden outputs reproducible.
ALGORITHM = "PCG64"


class RandomStream:
    """Single-owner stream of uniform variates on ``[0, 1)``."""

    def __init__(self, seed: int):
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, algorithm={ALGORITHM!r})"


def derive_seed(master_seed: int, *parts) -> int:
    """Hash a master seed and an identifying tuple into a 64-bit seed.

    Distinct ``parts`` (setting id, replication index, ...) give
    independent streams without any central bookkeeping.
    """
    key = repr((int(master_seed),) + tuple(parts)).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def logarithmic_mean(ell: float) -> float:
    """Mean of the logarithmic distribution, ``-ell / ((1 - ell) ln(1 - ell))``."""
    return -ell / ((1.0 - ell) * math.log1p(-ell))


@dataclass(frozen=True)
class LogarithmicParams:
    ell: float

    def __post_init__(self):
        if not 0.0 < self.ell < 1.0:
            raise ValueError(f"logarithmic parameter must lie in (0, 1), got {self.ell}")

    @property
    def mean(self) -> float:
        return logarithmic_mean(self.ell)

    def pmf(self, k: int) -> float:
        if k < 1:
            return 0.0
        return -(self.ell**k) / (k * math.log1p(-self.ell))


@lru_cache(maxsize=64)
def _logarithmic_cdf(ell: float) -> np.ndarray:
    # Same accumulation order as sample_logarithmic; stops once the sum saturates.
    term = -ell / math.log1p(-ell)
    cdf = [term]
    total = term
    k = 1
    while True:
        term *= ell * k / (k + 1)
        k += 1
        nxt = total + term
        if nxt == total:
            break
        total = nxt
        cdf.append(total)
    table = np.array(cdf)
    table.flags.writeable = False
    return table


def sample_logarithmic(stream: RandomStream, params: LogarithmicParams) -> int:
    """Draw ``k >= 1`` with ``Pr[k] = -ell**k / (k ln(1 - ell))`` by inverse-CDF search."""
    ell = params.ell
    u = stream.uniform()
    term = -ell / math.log1p(-ell)
    total = term
    k = 1
    while u > total:
        term *= ell * k / (k + 1)
        k += 1
        nxt = total + term
        if nxt == total:
            return k - 1
        total = nxt
    return k


def logarithmic_variates(stream: RandomStream, params: LogarithmicParams, size: int) -> np.ndarray:
    """Vectorised :func:`sample_logarithmic`; identical output for identical uniforms."""
    cdf = _logarithmic_cdf(params.ell)
    u = stream.uniforms(size)
    idx = np.searchsorted(cdf, u, side="left")
    return np.minimum(idx + 1, len(cdf)).astype(np.int64)


def _check_geometric(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"geometric parameter must lie in (0, 1), got {p}")


def sample_geometric(stream: RandomStream, p: float) -> int:
    """Number of Bernoulli(p) trials up to and including the first success."""
    _check_geometric(p)
    u = stream.uniform()
    return int(math.floor(math.log1p(-u) / math.log1p(-p))) + 1


def geometric_variates(stream: RandomStream, p: float, size: int) -> np.ndarray:
    _check_geometric(p)
    u = stream.uniforms(size)
    return (np.floor(np.log1p(-u) / math.log1p(-p)) + 1).astype(np.int64)


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")


def sample_bernoulli(stream: RandomStream, p: float) -> int:
    _check_probability(p)
    return int(stream.uniform() < p)


def bernoulli_variates(stream: RandomStream, p, size: int) -> np.ndarray:
    """``p`` may be a scalar or a per-draw array of probabilities."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    return (stream.uniforms(size) < p).astype(np.int64)
