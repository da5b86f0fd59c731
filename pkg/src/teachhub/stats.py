"""Statistical tests for the behavioural analyses.

Conventions (also printed in report headers so numbers are interpretable):

* Mann-Whitney U is reported as min(U1, U2); z uses the normal approximation
  with tie and continuity corrections; rank-based effect size r = z / sqrt(N).
* Wilcoxon signed-rank drops zero differences, reports min(W+, W-), uses the
  tie- and continuity-corrected z, and r = z / sqrt(n_nonzero).
* Exact p-values come from full enumeration (group labelings for U, sign
  assignments for W) whenever the sample is small enough (N <= 12 pairs a
  group-size sum); the approximate z is still reported alongside.
* The sign of z and r always follows the first argument: positive means the
  first sample (or the positive differences) dominates.
* t-test is pooled-variance with df = n1 + n2 - 2; Cohen's d uses the pooled
  standard deviation.
* Spearman's rho is the Pearson correlation of average ranks, p from the
  t approximation with df = n - 2.
* Shapiro-Wilk follows Royston's approximation, valid for 3 <= n <= 50 here.

All tests are two-sided by default; pass ``alternative="greater"``/``"less"``
for one-sided p-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from scipy.special import ndtri, stdtr

EXACT_LIMIT_U = 12  # enumerate labelings when n1 + n2 <= this
EXACT_LIMIT_W = 12  # enumerate sign vectors when n_nonzero <= this

ALTERNATIVES = ("two-sided", "greater", "less")


@dataclass(frozen=True)
class StatReport:
    """One test outcome: statistic, significance and effect size."""

    test: str
    statistic: float
    p_value: float
    effect_size: float | None = None
    effect_size_name: str | None = None
    z: float | None = None
    df: float | None = None
    n1: int = 0
    n2: int = 0
    method: str = ""
    alternative: str = "two-sided"

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0 + 1e-12:
            raise ValueError(f"p_value out of range: {self.p_value}")


def _check_alternative(alternative: str) -> None:
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")


def rank_average(values) -> list[float]:
    """Ranks 1..n with ties sharing the average of their rank positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _tie_counts(values) -> list[int]:
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return [c for c in counts.values() if c > 1]


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2))


def _t_sf(t: float, df: float) -> float:
    return float(stdtr(df, -t))


def _continuity_corrected_z(delta: float, sigma: float) -> float:
    if sigma == 0:
        return 0.0
    adjusted = max(abs(delta) - 0.5, 0.0)
    return math.copysign(adjusted, delta) / sigma


def _p_from_z(z: float, alternative: str) -> float:
    if alternative == "two-sided":
        return min(1.0, 2 * _norm_sf(abs(z)))
    if alternative == "greater":
        return _norm_sf(z)
    return _norm_sf(-z)


def _p_from_tails(p_low: float, p_high: float, alternative: str) -> float:
    if alternative == "two-sided":
        return min(1.0, 2 * min(p_low, p_high))
    if alternative == "greater":
        return p_high
    return p_low


# ---------------------------------------------------------------------------
# Mann-Whitney U
# ---------------------------------------------------------------------------


def mann_whitney_u(xs, ys, alternative: str = "two-sided", method: str = "auto") -> StatReport:
    """Rank-sum test for two independent samples."""
    _check_alternative(alternative)
    xs, ys = list(map(float, xs)), list(map(float, ys))
    n1, n2 = len(xs), len(ys)
    if n1 < 1 or n2 < 1:
        raise ValueError("both groups must be non-empty")
    pooled = xs + ys
    n = n1 + n2
    ranks = rank_average(pooled)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2
    u2 = n1 * n2 - u1
    u_min = min(u1, u2)

    mu = n1 * n2 / 2
    ties = _tie_counts(pooled)
    tie_term = sum(t**3 - t for t in ties) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12 * ((n + 1) - tie_term)
    sigma = math.sqrt(var) if var > 0 else 0.0
    z = _continuity_corrected_z(u1 - mu, sigma)

    use_exact = method == "exact" or (method == "auto" and n <= EXACT_LIMIT_U)
    if use_exact:
        rank_list = ranks
        offset = n1 * (n1 + 1) / 2
        total = le = ge = 0
        eps = 1e-9
        for subset in combinations(range(n), n1):
            u = sum(rank_list[i] for i in subset) - offset
            total += 1
            if u <= u1 + eps:
                le += 1
            if u >= u1 - eps:
                ge += 1
        p = _p_from_tails(le / total, ge / total, alternative)
        used = "exact"
    else:
        p = _p_from_z(z, alternative)
        used = "normal_approximation"

    r = z / math.sqrt(n)
    return StatReport(
        test="mann_whitney_u",
        statistic=u_min,
        p_value=p,
        effect_size=r,
        effect_size_name="rank_biserial_r",
        z=z,
        n1=n1,
        n2=n2,
        method=used,
        alternative=alternative,
    )


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank
# ---------------------------------------------------------------------------


def wilcoxon_signed_rank(pairs, alternative: str = "two-sided", method: str = "auto") -> StatReport:
    """Signed-rank test for paired samples; differences are first - second."""
    _check_alternative(alternative)
    diffs = [float(a) - float(b) for a, b in pairs]
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    if n == 0:
        raise ValueError("all differences are zero; the signed-rank test is undefined")
    magnitudes = [abs(d) for d in nonzero]
    ranks = rank_average(magnitudes)
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, nonzero) if d < 0)
    w_min = min(w_plus, w_minus)

    mu = n * (n + 1) / 4
    tie_term = sum(t**3 - t for t in _tie_counts(magnitudes)) / 48
    var = n * (n + 1) * (2 * n + 1) / 24 - tie_term
    sigma = math.sqrt(var) if var > 0 else 0.0
    z = _continuity_corrected_z(w_plus - mu, sigma)

    use_exact = method == "exact" or (method == "auto" and n <= EXACT_LIMIT_W)
    if use_exact:
        le = ge = 0
        total = 1 << n
        eps = 1e-9
        for mask in range(total):
            w = 0.0
            for i in range(n):
                if mask & (1 << i):
                    w += ranks[i]
            if w <= w_plus + eps:
                le += 1
            if w >= w_plus - eps:
                ge += 1
        p = _p_from_tails(le / total, ge / total, alternative)
        used = "exact"
    else:
        p = _p_from_z(z, alternative)
        used = "normal_approximation"

    r = z / math.sqrt(n)
    return StatReport(
        test="wilcoxon_signed_rank",
        statistic=w_min,
        p_value=p,
        effect_size=r,
        effect_size_name="rank_biserial_r",
        z=z,
        n1=n,
        n2=n,
        method=used,
        alternative=alternative,
    )


# ---------------------------------------------------------------------------
# t-test and Cohen's d
# ---------------------------------------------------------------------------


def _pooled_sd(xs, ys) -> float:
    n1, n2 = len(xs), len(ys)
    m1 = sum(xs) / n1
    m2 = sum(ys) / n2
    ss1 = sum((x - m1) ** 2 for x in xs)
    ss2 = sum((y - m2) ** 2 for y in ys)
    return math.sqrt((ss1 + ss2) / (n1 + n2 - 2))


def t_test_ind(xs, ys, alternative: str = "two-sided") -> StatReport:
    """Independent-samples t-test with pooled variance."""
    _check_alternative(alternative)
    xs, ys = list(map(float, xs)), list(map(float, ys))
    n1, n2 = len(xs), len(ys)
    if n1 < 2 or n2 < 2:
        raise ValueError("each group needs at least 2 observations")
    sp = _pooled_sd(xs, ys)
    if sp == 0:
        raise ValueError("zero pooled variance; t statistic undefined")
    df = n1 + n2 - 2
    t = (sum(xs) / n1 - sum(ys) / n2) / (sp * math.sqrt(1 / n1 + 1 / n2))
    if alternative == "two-sided":
        p = min(1.0, 2 * _t_sf(abs(t), df))
    elif alternative == "greater":
        p = _t_sf(t, df)
    else:
        p = _t_sf(-t, df)
    return StatReport(
        test="t_test_ind",
        statistic=t,
        p_value=p,
        effect_size=cohens_d(xs, ys),
        effect_size_name="cohens_d",
        df=float(df),
        n1=n1,
        n2=n2,
        method="t",
        alternative=alternative,
    )


def cohens_d(xs, ys) -> float:
    """Mean difference over the pooled standard deviation."""
    xs, ys = list(map(float, xs)), list(map(float, ys))
    if len(xs) < 2 or len(ys) < 2:
        raise ValueError("each group needs at least 2 observations")
    m1 = sum(xs) / len(xs)
    m2 = sum(ys) / len(ys)
    if m1 == m2:
        return 0.0
    sp = _pooled_sd(xs, ys)
    if sp == 0:
        raise ValueError("zero pooled variance; d undefined")
    return (m1 - m2) / sp


# ---------------------------------------------------------------------------
# Spearman's rho
# ---------------------------------------------------------------------------


def spearman_rho(xs, ys, alternative: str = "two-sided") -> StatReport:
    """Rank correlation: Pearson correlation of average ranks, t-approximated p."""
    _check_alternative(alternative)
    xs, ys = list(map(float, xs)), list(map(float, ys))
    if len(xs) != len(ys):
        raise ValueError("samples must have equal length")
    n = len(xs)
    if n < 3:
        raise ValueError("need at least 3 pairs")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise ValueError("constant input; rank correlation undefined")
    rx, ry = rank_average(xs), rank_average(ys)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    rho = cov / math.sqrt(vx * vy)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        t, p = math.inf if rho > 0 else -math.inf, 0.0
        if alternative == "greater" and rho < 0:
            p = 1.0
        if alternative == "less" and rho > 0:
            p = 1.0
    else:
        df = n - 2
        t = rho * math.sqrt(df / (1 - rho * rho))
        if alternative == "two-sided":
            p = min(1.0, 2 * _t_sf(abs(t), df))
        elif alternative == "greater":
            p = _t_sf(t, df)
        else:
            p = _t_sf(-t, df)
    return StatReport(
        test="spearman_rho",
        statistic=rho,
        p_value=p,
        effect_size=rho,
        effect_size_name="rho",
        df=float(n - 2),
        n1=n,
        n2=n,
        method="t_approximation",
        alternative=alternative,
    )


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston's approximation)
# ---------------------------------------------------------------------------

SHAPIRO_MIN_N = 3
SHAPIRO_MAX_N = 50

_SW_C1 = (-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, 0.0)
_SW_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)


def _poly(coeffs, x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def shapiro_wilk(xs) -> StatReport:
    """W statistic plus approximate p for normality, for 3 <= n <= 50."""
    xs = sorted(map(float, xs))
    n = len(xs)
    if not SHAPIRO_MIN_N <= n <= SHAPIRO_MAX_N:
        raise ValueError(f"shapiro_wilk supports {SHAPIRO_MIN_N} <= n <= {SHAPIRO_MAX_N}, got {n}")
    if xs[0] == xs[-1]:
        raise ValueError("constant input; W undefined")

    m = [float(ndtri((i - 0.375) / (n + 0.25))) for i in range(1, n + 1)]
    msq = sum(v * v for v in m)
    c = [v / math.sqrt(msq) for v in m]
    u = 1 / math.sqrt(n)

    a = [0.0] * n
    if n == 3:
        a[0], a[2] = -math.sqrt(0.5), math.sqrt(0.5)
    elif n <= 5:
        an = _poly(_SW_C1, u) + c[-1]
        phi = (msq - 2 * m[-1] ** 2) / (1 - 2 * an**2)
        a[-1], a[0] = an, -an
        for i in range(1, n - 1):
            a[i] = m[i] / math.sqrt(phi)
    else:
        an = _poly(_SW_C1, u) + c[-1]
        an1 = _poly(_SW_C2, u) + c[-2]
        phi = (msq - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * an**2 - 2 * an1**2)
        a[-1], a[0] = an, -an
        a[-2], a[1] = an1, -an1
        for i in range(2, n - 2):
            a[i] = m[i] / math.sqrt(phi)

    mean = sum(xs) / n
    ssq = sum((x - mean) ** 2 for x in xs)
    w = sum(ai * xi for ai, xi in zip(a, xs)) ** 2 / ssq
    w = min(w, 1.0)

    if n == 3:
        p = 6 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        z = None
    elif n <= 11:
        gamma = 0.459 * n - 2.273
        g = -math.log(gamma - math.log1p(-w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        z = (g - mu) / sigma
        p = _norm_sf(z)
    else:
        g = math.log1p(-w)
        ln_n = math.log(n)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n**2 + 0.0038915 * ln_n**3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n**2)
        z = (g - mu) / sigma
        p = _norm_sf(z)

    return StatReport(
        test="shapiro_wilk",
        statistic=w,
        p_value=p,
        z=z,
        n1=n,
        method="royston",
        alternative="two-sided",
    )
