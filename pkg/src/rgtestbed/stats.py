"""Statistical tools for comparing solution quality distributions (SQDs)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats as sps
from scipy.stats import rankdata

BOOTSTRAP_REPLICATES = 2500
KS_ALPHA = 0.05
# cap on bootstrap index-matrix entries generated at once
_CHUNK_ENTRIES = 2_000_000


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class SQD:
    """Sorted sample of one metric, with where it came from."""

    metric: str
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    @classmethod
    def of(cls, metric: str, values, **provenance) -> SQD:
        v = np.sort(np.asarray(values, dtype=float))
        v.setflags(write=False)
        return cls(metric, v, provenance)

    def __len__(self):
        return len(self.values)


def _values(x) -> np.ndarray:
    v = x.values if isinstance(x, SQD) else np.asarray(x, dtype=float)
    if v.size == 0:
        raise DegenerateInputError("empty sample")
    return v


# ---------------------------------------------------------------------------
# Bootstrap


@dataclass(frozen=True)
class BootstrapCI:
    statistic: str
    lower: float
    upper: float
    l: int
    k: int
    seed: int

    def overlaps(self, other: BootstrapCI) -> bool:
        return self.lower <= other.upper and other.lower <= self.upper


def _statistic(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """Row-wise statistic over a (k, l) matrix: 'mean' or 'quantile:<q>'."""
    if name == "mean":
        return lambda a: a.mean(axis=1)
    if name.startswith("quantile:"):
        q = float(name.split(":", 1)[1])
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"quantile out of range: {q}")
        return lambda a: np.quantile(a, q, axis=1)
    raise ValueError(f"unknown statistic {name!r}")


def bootstrap_replicates(sample, statistic: str = "mean", l: int | None = None, k: int = BOOTSTRAP_REPLICATES, seed: int = 0) -> np.ndarray:
    x = _values(sample)
    m = x.size
    if m < 2:
        raise DegenerateInputError("bootstrap needs at least two observations")
    l = m // 2 if l is None else int(l)
    if l < 1:
        raise ValueError("subsample size must be positive")
    stat = _statistic(statistic)
    rng = np.random.default_rng(seed)
    rows = max(1, _CHUNK_ENTRIES // l)
    out = np.empty(k)
    for start in range(0, k, rows):
        stop = min(k, start + rows)
        idx = rng.integers(0, m, size=(stop - start, l))
        out[start:stop] = stat(x[idx])
    return out


def bootstrap_ci(
    sample,
    statistic: str = "mean",
    l: int | None = None,
    k: int = BOOTSTRAP_REPLICATES,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapCI:
    """Percentile interval from ``k`` with-replacement subsamples of size ``l``."""
    x = _values(sample)
    l_eff = x.size // 2 if l is None else int(l)
    reps = bootstrap_replicates(x, statistic, l_eff, k, seed)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(reps, [tail, 100.0 - tail])
    return BootstrapCI(statistic, float(lo), float(hi), l_eff, k, seed)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


@dataclass(frozen=True)
class KSResult:
    D: float
    critical: float
    reject: bool


def ks_critical_coefficient(alpha: float = KS_ALPHA) -> float:
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


def ks_statistic(a, b) -> float:
    """sup |F_a - F_b|, computed from integer counts so it is exact."""
    x = np.sort(_values(a))
    y = np.sort(_values(b))
    na, nb = x.size, y.size
    pts = np.concatenate([x, y])
    ca = np.searchsorted(x, pts, side="right").astype(np.int64)
    cb = np.searchsorted(y, pts, side="right").astype(np.int64)
    num = int(np.max(np.abs(ca * nb - cb * na)))
    return num / (na * nb)


def ks_two_sample(a, b, alpha: float = KS_ALPHA) -> KSResult:
    na, nb = _values(a).size, _values(b).size
    D = ks_statistic(a, b)
    crit = ks_critical_coefficient(alpha) * math.sqrt((na + nb) / (na * nb))
    return KSResult(D, crit, D > crit)


# ---------------------------------------------------------------------------
# Spearman


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p: float
    significant: bool


def spearman(x, y, alpha: float = 0.05) -> SpearmanResult:
    """Spearman's rho with average ranks for ties and a t-approximation p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman needs two paired 1-D samples")
    n = x.size
    if n < 3:
        raise DegenerateInputError("spearman needs at least three pairs")
    # doubled average ranks are integers, so the moments below are exact
    rx = [int(v) for v in np.rint(2 * rankdata(x))]
    ry = [int(v) for v in np.rint(2 * rankdata(y))]
    mx = Fraction(sum(rx), n)
    my = Fraction(sum(ry), n)
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("a variable is constant; rho is undefined")
    if sxx == syy:
        rho = float(sxy / sxx)
    else:
        rho = float(sxy) / math.sqrt(float(sxx) * float(syy))
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = float(2.0 * sps.t.sf(abs(t), n - 2))
    return SpearmanResult(rho, p, p < alpha)


# ---------------------------------------------------------------------------
# Probabilistic domination

A_DOMINATES = "a_dominates_b"
B_DOMINATES = "b_dominates_a"
NO_DOMINANCE = "none"


@dataclass(frozen=True)
class DominanceResult:
    relation: str  # weak everywhere, strict somewhere
    strict: bool  # strict at every grid point


def quantile_grid(na: int, nb: int) -> np.ndarray:
    N = min(na, nb)
    return np.arange(1, N) / N


def prob_dominance(a, b) -> DominanceResult:
    """Compare empirical quantile functions (linear interpolation) on a grid."""
    x = _values(a)
    y = _values(b)
    grid = quantile_grid(x.size, y.size)
    if grid.size == 0:
        return DominanceResult(NO_DOMINANCE, False)
    qa = np.quantile(x, grid)
    qb = np.quantile(y, grid)
    if np.all(qa >= qb) and np.any(qa > qb):
        return DominanceResult(A_DOMINATES, bool(np.all(qa > qb)))
    if np.all(qb >= qa) and np.any(qb > qa):
        return DominanceResult(B_DOMINATES, bool(np.all(qb > qa)))
    return DominanceResult(NO_DOMINANCE, False)


# ---------------------------------------------------------------------------
# Moments


def skewness(sample) -> float:
    """Adjusted Fisher-Pearson sample skewness."""
    x = _values(sample)
    if x.size < 3:
        raise DegenerateInputError("skewness needs at least three observations")
    if np.all(x == x[0]):
        raise DegenerateInputError("skewness of a constant sample is undefined")
    return float(sps.skew(x, bias=False))


# ---------------------------------------------------------------------------
# Sampling-scheme variance


@dataclass(frozen=True)
class SchemeVariance:
    var_independent: float
    var_stratified: float
    se_independent: float
    se_stratified: float

    def difference_in_se(self) -> float:
        """(stratified - independent) in units of their combined standard error."""
        return (self.var_stratified - self.var_independent) / math.hypot(self.se_independent, self.se_stratified)


def _variance_and_se(est: np.ndarray) -> tuple[float, float]:
    c = est - est.mean()
    var = float(np.mean(c**2) * est.size / (est.size - 1))
    m4 = float(np.mean(c**4))
    return var, math.sqrt(max(m4 - var * var, 0.0) / est.size)


def sampling_scheme_variance_demo(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_total: int = 100,
    strata: int = 10,
    replications: int = 10_000,
    seed: int = 0,
) -> SchemeVariance:
    """Variance of a mean-metric estimator under two ways of spending n runs.

    Independent: n fresh (match, seed) pairs.  Stratified: ``strata`` matches,
    each run with n / strata seeds.  Matches ``mu`` and seeds ``zeta`` are
    standard normal.  Standard errors are those of the variance estimates.
    """
    if n_total % strata:
        raise ValueError("n_total must be divisible by the number of strata")
    rng = np.random.default_rng(seed)
    mu = rng.standard_normal((replications, n_total))
    zeta = rng.standard_normal((replications, n_total))
    independent = f(mu, zeta).mean(axis=1)
    mu_s = np.repeat(rng.standard_normal((replications, strata)), n_total // strata, axis=1)
    zeta_s = rng.standard_normal((replications, n_total))
    stratified = f(mu_s, zeta_s).mean(axis=1)
    vi, si = _variance_and_se(independent)
    vs, ss = _variance_and_se(stratified)
    return SchemeVariance(vi, vs, si, ss)
