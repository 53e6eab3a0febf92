"""Closed-form curves for the subcritical ensemble: decay rates, spectral-edge
bounds, cluster-size distribution, finite-N probabilities, Poisson moments,
and the heuristic replica rate.

Everything here is a pure function of its arguments.  Combinatorial
probabilities are evaluated in log-space with lgamma so that moderate sizes
do not underflow, and series are truncated adaptively against certified
tail majorants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

__all__ = [
    "FORMULA_VERSION",
    "TruncationBudgetError",
    "BoundCurve",
    "TauTable",
    "MomentInequalityReport",
    "decay_f",
    "decay_F",
    "m_of_E",
    "M_of_E",
    "zeta_three_halves_minus_one",
    "upper_bound_U",
    "lower_bound_L",
    "tau_n",
    "tau_tail_bound",
    "tau_normalization",
    "linear_prob_finite",
    "linear_prob_limit",
    "tree_prob_finite",
    "poisson_moment",
    "replica_q",
    "replica_g",
    "moment_inequality_check",
    "bound_curve",
    "tau_table",
]

FORMULA_VERSION = "1"

TWO_SQRT3 = 2.0 * math.sqrt(3.0)


class TruncationBudgetError(RuntimeError):
    """Raised when a series cannot reach the requested tolerance within its cap."""


def _check_p_positive(p: float) -> float:
    p = float(p)
    if not p > 0.0 or not math.isfinite(p):
        raise ValueError(f"p must be positive and finite, got {p!r}")
    return p


def _check_p_subcritical(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in the open interval (0, 1), got {p!r}")
    return p


def decay_f(p: float) -> float:
    """Tail decay rate p - 1 - ln p of the cluster-size distribution.

    Strictly positive except at p = 1, where it vanishes.
    """
    p = _check_p_positive(p)
    return p - 1.0 - math.log(p)


def decay_F(p: float) -> float:
    """Chain decay rate p - ln p, subcritical only; equals decay_f(p) + 1."""
    p = _check_p_subcritical(p)
    return p - math.log(p)


def m_of_E(E: float) -> int:
    """Smallest cluster size that can carry a nonzero eigenvalue <= E.

    Defined as max(2, floor(E^{-1/2})); any connected cluster on n vertices
    keeps its smallest nonzero eigenvalue at or above 1/n^2.
    """
    E = float(E)
    if not E > 0.0:
        raise ValueError(f"energy must be positive, got {E!r}")
    return max(2, math.floor(1.0 / math.sqrt(E)))


def M_of_E(E: float) -> int:
    """Smallest integer chain length whose spectral gap upper bound 12/n^2
    falls below E: floor(sqrt(12/E)) + 1, clamped to >= 2.

    Near-integer arguments resolve by the floor of the computed double;
    when sqrt(12/E) lands exactly on an integer k the result is k + 1.
    """
    E = float(E)
    if not E > 0.0:
        raise ValueError(f"energy must be positive, got {E!r}")
    return max(2, math.floor(math.sqrt(12.0 / E)) + 1)


_ZETA32_CACHE: float | None = None


def zeta_three_halves_minus_one() -> float:
    """sum_{n>=2} n^{-3/2}, by direct summation plus a midpoint integral tail.

    One million explicit terms leave a remainder integral whose midpoint
    correction is below 1e-15, so the value is good to full double accuracy
    without any special-function dependency.
    """
    global _ZETA32_CACHE
    if _ZETA32_CACHE is None:
        cutoff = 1_000_000
        ns = np.arange(2, cutoff + 1, dtype=np.float64)
        _ZETA32_CACHE = float(np.sum(ns**-1.5) + 2.0 / math.sqrt(cutoff + 0.5))
    return _ZETA32_CACHE


def upper_bound_U(E, p: float):
    """Explicit upper envelope for sigma(E) - sigma(0) at subcritical p.

    exp(-f(p) (E^{-1/2} - 1)) * (zeta(3/2) - 1) / sqrt(2 pi p), whose log is
    exactly linear in E^{-1/2} with slope -decay_f(p).  Accepts scalar or
    array E.
    """
    p = _check_p_subcritical(p)
    e = np.asarray(E, dtype=np.float64)
    if np.any(e <= 0.0):
        raise ValueError("energy must be positive")
    f = decay_f(p)
    val = np.exp(-f * (e**-0.5 - 1.0)) * (zeta_three_halves_minus_one() / math.sqrt(2.0 * math.pi * p))
    return float(val) if np.isscalar(E) else val


def lower_bound_L(E, p: float, mode: str = "staircase"):
    """Lower envelope for sigma(E) - sigma(0) from minimal linear chains.

    ``staircase`` evaluates exp(-(p - ln p) M(E)) / (2p), piecewise constant
    in E; ``smooth`` evaluates e^{-F(p)}/(2p) exp(-2 sqrt(3) F(p) E^{-1/2}),
    which never exceeds the staircase value.  Accepts scalar or array E.
    """
    p = _check_p_subcritical(p)
    e = np.asarray(E, dtype=np.float64)
    if np.any(e <= 0.0):
        raise ValueError("energy must be positive")
    F = decay_F(p)
    if mode == "staircase":
        m_big = np.maximum(2, np.floor(np.sqrt(12.0 / e)).astype(np.int64) + 1)
        val = np.exp(-F * m_big) / (2.0 * p)
    elif mode == "smooth":
        val = math.exp(-F) / (2.0 * p) * np.exp(-TWO_SQRT3 * F * e**-0.5)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'staircase' or 'smooth'")
    return float(val) if np.isscalar(E) else val


def tau_n(p: float, n):
    """Limiting mean number density of clusters with n vertices.

    n^{n-2} p^{n-1} e^{-np} / n!, evaluated as
    exp((n-2) ln n + (n-1) ln p - n p - lgamma(n+1)).  Accepts scalar or
    array n.
    """
    p = _check_p_subcritical(p)
    narr = np.asarray(n)
    if np.any(narr < 1) or not np.issubdtype(narr.dtype, np.integer) and np.any(narr != np.floor(narr)):
        raise ValueError("cluster size n must be a positive integer")
    nf = narr.astype(np.float64)
    logv = (nf - 2.0) * np.log(nf) + (nf - 1.0) * math.log(p) - nf * p - gammaln(nf + 1.0)
    val = np.exp(logv)
    return float(val) if np.isscalar(n) else val


def tau_tail_bound(p: float, n):
    """Exponential majorant of tau_n: n^{-5/2} e^{-n f(p)} / (p sqrt(2 pi)).

    This is the exact consequence of the Stirling inequality
    n! >= (n/e)^n sqrt(2 pi n) applied to the cluster-size density, so it
    dominates tau_n for every n >= 1, with ratio shrinking to 1 like the
    Stirling correction e^{1/(12n)}.
    """
    p = _check_p_subcritical(p)
    narr = np.asarray(n)
    if np.any(narr < 1):
        raise ValueError("cluster size n must be a positive integer")
    nf = narr.astype(np.float64)
    f = decay_f(p)
    # single-exp log-space form: the margin over tau_n is only e^{1/(12n)},
    # so both sides must ride the same monotone exp to keep the ordering
    # intact down to the underflow floor
    logv = -nf * f - 2.5 * np.log(nf) - math.log(p) - 0.5 * math.log(2.0 * math.pi)
    val = np.exp(logv)
    return float(val) if np.isscalar(n) else val


def _tau_tail_sum_bound(p: float, cutoff: int) -> float:
    """Certified bound on sum_{n > cutoff} n tau_n(p) via the tail majorant.

    n tau_n <= c n^{-3/2} e^{-nf}; bound n^{-3/2} by cutoff^{-3/2} and sum
    the geometric remainder.
    """
    f = decay_f(p)
    c = 1.0 / (p * math.sqrt(2.0 * math.pi))
    return c * (cutoff + 1.0) ** -1.5 * math.exp(-(cutoff + 1.0) * f) / -math.expm1(-f)


def tau_normalization(p: float, tol: float, n_cap: int = 2_000_000) -> tuple[float, int]:
    """Partial sum of n tau_n(p) truncated so the certified tail is < tol/10.

    Returns (partial_sum, n_used).  The full series sums to one; the partial
    sum must land within tol of it.  Raises :class:`TruncationBudgetError`
    when p is so close to 1 that the required cutoff exceeds ``n_cap``.
    """
    p = _check_p_subcritical(p)
    tol = float(tol)
    if not tol > 0.0:
        raise ValueError("tolerance must be positive")
    cutoff = 8
    while _tau_tail_sum_bound(p, cutoff) >= tol / 10.0:
        cutoff *= 2
        if cutoff > n_cap:
            raise TruncationBudgetError(
                f"truncation budget exceeded: tail below {tol!r} needs more than "
                f"{n_cap} terms at p={p!r}"
            )
    ns = np.arange(1, cutoff + 1, dtype=np.int64)
    partial = float(np.sum(ns * tau_n(p, ns)))
    return partial, cutoff


def linear_prob_finite(N: int, p: float, m: int) -> float:
    """Probability that a fixed vertex's cluster is a linear chain of m vertices
    in the N-vertex ensemble, from the explicit counting formula.

    C(N-1, m-1) (m!/2) (p/N)^{m-1} (1 - p/N)^{(N-3)(m-2) + 2(N-2)},
    evaluated in log-space.
    """
    N = int(N)
    m = int(m)
    if N < 2:
        raise ValueError("N must be at least 2")
    if not 2 <= m <= N:
        raise ValueError(f"chain length m must lie in [2, N], got {m}")
    p = float(p)
    if not 0.0 < p < N:
        raise ValueError(f"p must satisfy 0 < p < N, got {p!r}")
    logv = (
        _log_choose(N - 1, m - 1)
        + gammaln(m + 1.0)
        - math.log(2.0)
        + (m - 1.0) * (math.log(p) - math.log(N))
        + ((N - 3.0) * (m - 2.0) + 2.0 * (N - 2.0)) * math.log1p(-p / N)
    )
    return float(math.exp(logv))


def linear_prob_limit(p: float, m: int) -> float:
    """Large-N limit of :func:`linear_prob_finite`: (m/2) p^{m-1} e^{-pm}."""
    p = _check_p_subcritical(p)
    m = int(m)
    if m < 2:
        raise ValueError("chain length m must be at least 2")
    return 0.5 * m * math.exp((m - 1.0) * math.log(p) - p * m)


def tree_prob_finite(N: int, p: float, n: int) -> float:
    """Mean number density of n-vertex tree clusters in the N-vertex ensemble.

    (1/N) C(N, n) n^{n-2} (p/N)^{n-1} (1 - p/N)^{n(N-n) + C(n,2) - n + 1};
    converges to tau_n(p) as N grows.
    """
    N = int(N)
    n = int(n)
    if N < 2:
        raise ValueError("N must be at least 2")
    if not 1 <= n <= N:
        raise ValueError(f"tree size n must lie in [1, N], got {n}")
    p = float(p)
    if not 0.0 < p < N:
        raise ValueError(f"p must satisfy 0 < p < N, got {p!r}")
    exponent = n * (N - n) + n * (n - 1) // 2 - n + 1
    logv = (
        -math.log(N)
        + _log_choose(N, n)
        + (n - 2.0) * math.log(n)
        + (n - 1.0) * (math.log(p) - math.log(N))
        + exponent * math.log1p(-p / N)
    )
    return float(math.exp(logv))


def _log_choose(n: int, k: int) -> float:
    return float(gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0))


MAX_POISSON_POWER = 24


def poisson_moment(p: float, k: int) -> float:
    """k-th raw moment of a Poisson(p) variable by adaptive series summation.

    e^{-p} sum_n p^n n^k / n!, truncated once the terms are past their peak
    and negligible relative to the running sum.
    """
    p = _check_p_positive(p)
    if not isinstance(k, (int, np.integer)) or k < 0 or k > MAX_POISSON_POWER:
        raise ValueError(f"moment order must be an integer in [0, {MAX_POISSON_POWER}]")
    if k == 0:
        return 1.0
    total = 0.0
    n = 1
    while True:
        term = math.exp(n * math.log(p) - math.lgamma(n + 1.0) + k * math.log(n))
        total += term
        if n > p + 1.0 and n > k and term < 1e-17 * total:
            break
        n += 1
        if n > 100_000:
            raise TruncationBudgetError("poisson moment series failed to converge")
    return math.exp(-p) * total


def replica_q(p: float, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Largest nonnegative root of Q = 1 - e^{-pQ}.

    Zero is the only nonnegative root for p <= 1; beyond that the root is
    found by fixed-point iteration from Q = 1, which approaches it from
    above.
    """
    p = _check_p_positive(p)
    if p <= 1.0:
        return 0.0
    q = 1.0
    for _ in range(max_iter):
        q_next = -math.expm1(-p * q)
        if abs(q_next - q) < 0.25 * tol:
            q = q_next
            break
        q = q_next
    residual = abs(q - 1.0 + math.exp(-p * q))
    if residual >= tol:
        raise TruncationBudgetError(
            f"fixed-point iteration for Q at p={p!r} stalled with residual {residual!r}"
        )
    return q


def replica_g(p: float) -> float:
    """Heuristic (non-rigorous) spectral-edge decay rate from replica theory.

    -[1 - p(1 - Q_p)]^{1/2} ln[p(1 - Q_p)]; for subcritical p this collapses
    to -(1-p)^{1/2} ln p and sits between decay_f(p) and
    2 sqrt(3) decay_F(p).
    """
    p = _check_p_positive(p)
    if p < 1.0:
        return -math.sqrt(1.0 - p) * math.log(p)
    q = replica_q(p)
    x = p * (1.0 - q)
    return -math.sqrt(1.0 - x) * math.log(x)


def _stirling_second_kind(k: int) -> list[list[int]]:
    """Table S(i, j) for i, j <= k via the standard recurrence (exact ints)."""
    table = [[0] * (k + 1) for _ in range(k + 1)]
    table[0][0] = 1
    for i in range(1, k + 1):
        for j in range(1, i + 1):
            table[i][j] = j * table[i - 1][j] + table[i - 1][j - 1]
    return table


def poisson_moment_touchard(p: float, k: int) -> float:
    """Poisson moment via the Touchard polynomial sum_j S(k, j) p^j.

    Exact rational arithmetic in the coefficients; serves as an independent
    cross-check of the series route.
    """
    p = _check_p_positive(p)
    if k == 0:
        return 1.0
    table = _stirling_second_kind(k)
    acc = Fraction(0)
    pf = Fraction(p)
    for j in range(1, k + 1):
        acc += table[k][j] * pf**j
    return float(acc)


@dataclass(frozen=True)
class MomentInequalityReport:
    """Empirical check of M^Delta_{2k} <= 2^{2k-1} (M^D_{2k} + M^A_{2k})."""

    k: int
    n: int
    p: float
    n_reps: int
    lap_mean: float
    lap_se: float
    deg_mean: float
    deg_se: float
    adj_mean: float
    adj_se: float
    rhs_mean: float
    slack_mean: float
    slack_se: float
    satisfied: bool


def moment_inequality_check(moments, p: float, k: int) -> MomentInequalityReport:
    """Check the even-moment inequality on collected samples at power 2k.

    ``moments`` must expose n, p, n_reps, mean_se(kind, two_k) and
    slack_samples(k) (see :class:`erlap.spectral.MomentSamples`).  The
    inequality is a limit statement, so the finite-N verdict is statistical:
    satisfied means the mean slack stays above -4 standard errors.
    """
    p = float(p)
    if moments.p != p:
        raise ValueError(f"moment samples were collected at p={moments.p!r}, not {p!r}")
    if not 1 <= k <= 4:
        raise ValueError("k must lie in [1, 4]")
    two_k = 2 * k
    lap_mean, lap_se = moments.mean_se("laplacian", two_k)
    deg_mean, deg_se = moments.mean_se("degree", two_k)
    adj_mean, adj_se = moments.mean_se("adjacency", two_k)
    slack = moments.slack_samples(k)
    slack_mean = float(slack.mean())
    slack_se = (
        float(slack.std(ddof=1) / math.sqrt(moments.n_reps))
        if moments.n_reps >= 2
        else math.nan
    )
    rhs = (2.0 ** (two_k - 1)) * (deg_mean + adj_mean)
    ok = bool(slack_mean >= -4.0 * slack_se) if math.isfinite(slack_se) else bool(slack_mean >= 0)
    return MomentInequalityReport(
        k=k,
        n=moments.n,
        p=p,
        n_reps=moments.n_reps,
        lap_mean=lap_mean,
        lap_se=lap_se,
        deg_mean=deg_mean,
        deg_se=deg_se,
        adj_mean=adj_mean,
        adj_se=adj_se,
        rhs_mean=rhs,
        slack_mean=slack_mean,
        slack_se=slack_se,
        satisfied=ok,
    )


@dataclass(frozen=True)
class BoundCurve:
    """Spectral-edge bound curves on an energy grid for one subcritical p."""

    p: float
    energies: np.ndarray
    lower: np.ndarray
    lower_smooth: np.ndarray
    upper: np.ndarray
    f: float
    F: float

    def __post_init__(self):
        if abs(self.F - self.f - 1.0) > 1e-12:
            raise ValueError("decay parameters must satisfy F = f + 1")
        if np.any(self.lower <= 0.0) or np.any(self.upper <= 0.0):
            raise ValueError("bound values must be positive")


def bound_curve(p: float, energies) -> BoundCurve:
    """Evaluate both lower forms and the upper bound on a grid."""
    e = np.asarray(energies, dtype=np.float64)
    return BoundCurve(
        p=float(p),
        energies=e,
        lower=lower_bound_L(e, p, "staircase"),
        lower_smooth=lower_bound_L(e, p, "smooth"),
        upper=upper_bound_U(e, p),
        f=decay_f(p),
        F=decay_F(p),
    )


@dataclass(frozen=True)
class TauTable:
    """Cluster-size densities tau_n, their tail bounds, and partial sums."""

    p: float
    n_max: int
    tau: np.ndarray
    tail_bound: np.ndarray
    partial_sums: np.ndarray

    def __post_init__(self):
        if np.any(self.tau <= 0.0):
            raise ValueError("tau values must be positive")
        if np.any(self.tau > self.tail_bound):
            raise ValueError("tail bound must dominate tau everywhere")
        if self.partial_sums[-1] > 1.0 + 1e-9:
            raise ValueError("partial sums of n tau_n cannot exceed 1")


def tau_table(p: float, n_max: int) -> TauTable:
    """Tabulate tau_n, the tail majorant, and cumulative sums of n tau_n."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    ns = np.arange(1, n_max + 1, dtype=np.int64)
    tau = tau_n(p, ns)
    return TauTable(
        p=float(p),
        n_max=int(n_max),
        tau=tau,
        tail_bound=tau_tail_bound(p, ns),
        partial_sums=np.cumsum(ns * tau),
    )
