"""Distribution-free risk intervals from observed solution complexity.

Given ``N`` scenarios, an observed complexity ``k`` and a confidence parameter
``beta``, the certified risk interval ``[eps_lower(k), eps_upper(k)]`` is
obtained by root-finding on a polynomial equation whose two nonnegative roots
``t_low <= t_high`` yield ``eps_lower = max(0, 1 - t_high)`` and
``eps_upper = 1 - t_low``.  For ``k == N`` a separate single-root equation
gives ``t_high`` while ``t_low = 0`` by definition, so ``eps_upper(N) = 1``.

All polynomial sums are evaluated in the log domain (the binomial
coefficients overflow float64 for sample sizes in the thousands).  Closed-form
explicit caps and floors around ``k/N`` are provided as an independent sanity
envelope for the root-finding.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._accel import njit, use_numba

__all__ = [
    "BoundQuery",
    "RiskInterval",
    "ExplicitBoundPair",
    "log_binomial",
    "certificate_residual_sign",
    "epsilon_bounds",
    "epsilon_table",
    "explicit_upper_bound",
    "explicit_lower_bound",
    "explicit_bound_pair",
    "binomial_tail_phi",
    "exact_root_oracle",
    "interval_table_csv",
]

# Bisection: tighter than the documented 1e-10 so that the log-domain residual
# at the returned root stays below 1e-8 relative even at N in the thousands.
_BISECT_TOL = 1e-13
_MAX_BISECT = 200
_MAX_SCAN = 200


@dataclass(frozen=True)
class BoundQuery:
    """A (sample size, complexity, confidence) triple."""

    n_scenarios: int
    complexity: int
    confidence_param: float

    def __post_init__(self):
        n, k, beta = self.n_scenarios, self.complexity, self.confidence_param
        if n < 1:
            raise ValueError(f"n_scenarios must be positive, got {n}")
        if not 0 <= k <= n:
            raise ValueError(f"complexity must be in [0, {n}], got {k}")
        if not 0.0 < beta < 1.0:
            raise ValueError(f"confidence_param must be in (0, 1), got {beta}")


@dataclass(frozen=True)
class RiskInterval:
    """Certified range for the violation probability at a given complexity.

    ``root_lower_t`` is the larger polynomial root (it produces the lower
    endpoint), ``root_upper_t`` the smaller one.
    """

    lower: float
    upper: float
    query: BoundQuery
    root_lower_t: float
    root_upper_t: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(
                f"invalid interval [{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True)
class ExplicitBoundPair:
    """Closed-form cap/floor envelope around k/N."""

    upper_cap: float
    lower_floor: float
    lambda_used: float = field(default=math.nan)
    g_value: float = field(default=math.nan)


def log_binomial(n, k):
    """ln C(n, k) via log-gamma.

    Accepts scalars or arrays; requires 0 <= k <= n elementwise.
    """
    n_arr = np.asarray(n, dtype=float)
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0) or np.any(k_arr > n_arr):
        raise ValueError("log_binomial requires 0 <= k <= n")
    out = gammaln(n_arr + 1.0) - gammaln(k_arr + 1.0) - gammaln(n_arr - k_arr + 1.0)
    if np.isscalar(n) and np.isscalar(k):
        return float(out)
    return out


@njit(cache=True)
def _logsum_numba(c, w, u):  # pragma: no cover - exercised via dispatch
    m = -np.inf
    for i in range(c.shape[0]):
        t = c[i] + w[i] * u
        if t > m:
            m = t
    s = 0.0
    for i in range(c.shape[0]):
        s += np.exp(c[i] + w[i] * u - m)
    return m + np.log(s)


def _logsum_numpy(c, w, u):
    t = c + w * u
    m = t.max()
    return m + np.log(np.exp(t - m).sum())


def _logsum(c, w, u):
    if use_numba():
        return _logsum_numba(c, w, u)
    return _logsum_numpy(c, w, u)


class _Residual:
    """Log-domain evaluator of (tail sums) - (leading term) in the v variable.

    For v <= 1 every summand is positive (for v < 0 the base 1-v exceeds 1),
    so the sign of the difference equals the sign of the log-domain gap.
    """

    def __init__(self, n: int, k: int, beta: float):
        if not k < n:
            raise ValueError("residual evaluation requires complexity < n_scenarios")
        i1 = np.arange(k, n)
        i2 = np.arange(n + 1, 4 * n + 1)
        c1 = log_binomial(i1, k) + math.log(beta / (2.0 * n))
        c2 = log_binomial(i2, k) + math.log(beta / (6.0 * n))
        self.c = np.ascontiguousarray(np.concatenate([c1, c2]))
        self.w = np.ascontiguousarray(
            np.concatenate([i1 - k, i2 - k]).astype(np.float64)
        )
        self.log_lead = float(log_binomial(n, k))
        self.lead_pow = float(n - k)

    def log_diff(self, v: float) -> float:
        if v > 1.0:
            raise ValueError(f"residual is only defined for v <= 1, got {v}")
        if v == 1.0:
            return np.inf  # tail side is beta/2N > 0, leading term vanishes
        u = math.log1p(-v)
        return _logsum(self.c, self.w, u) - (self.log_lead + self.lead_pow * u)

    def sign(self, v: float) -> int:
        d = self.log_diff(v)
        if d > 0.0:
            return 1
        if d < 0.0:
            return -1
        return 0


def certificate_residual_sign(query: BoundQuery, v: float) -> int:
    """Sign of the defining-equation residual at v (-1, 0 or +1).

    Positive near v = 1, negative strictly between the two roots, positive
    again as v -> -inf where the highest-degree tail term dominates.
    """
    return _Residual(
        query.n_scenarios, query.complexity, query.confidence_param
    ).sign(v)


def _bisect(sign_fn, lo, hi, s_lo, s_hi):
    """Bisection on a sign function; returns interval midpoint at tolerance."""
    if s_lo == 0:
        return lo
    if s_hi == 0:
        return hi
    if s_lo * s_hi > 0:
        raise RuntimeError("bisection bracket does not straddle a sign change")
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        s_mid = sign_fn(mid)
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def _interior_negative(res: _Residual, v0: float):
    """Find a point where the residual is negative, scanning out from v0."""
    s0 = res.sign(v0)
    if s0 < 0:
        return v0
    gap_up = 1.0 - v0
    step = max(gap_up, 1e-3)
    for j in range(_MAX_SCAN):
        vu = 1.0 - gap_up * 0.5 ** (j + 1)
        if res.sign(vu) < 0:
            return vu
        vd = v0 - step * 2.0**j
        if res.sign(vd) < 0:
            return vd
    raise RuntimeError("no interior sign change found (should not happen)")


def _roots_below_n(n: int, k: int, beta: float):
    """Both v-roots for k < n: (lower root, upper root)."""
    res = _Residual(n, k, beta)
    v0 = _interior_negative(res, k / n)
    v_up = _bisect(res.sign, v0, 1.0, -1, 1)
    step = max(1.0 / n, 1e-3)
    lo = v0 - step
    for _ in range(_MAX_SCAN):
        if res.sign(lo) > 0:
            break
        step *= 2.0
        lo = v0 - step
    else:
        raise RuntimeError("lower bracket expansion failed (should not happen)")
    v_low = _bisect(res.sign, lo, v0, 1, -1)
    return v_low, v_up


def _root_at_n(n: int, beta: float) -> float:
    """Single positive t-root of the k = N equation."""
    i2 = np.arange(n + 1, 4 * n + 1)
    c2 = np.ascontiguousarray(log_binomial(i2, n) + math.log(beta / (6.0 * n)))
    w2 = np.ascontiguousarray((i2 - n).astype(np.float64))

    def sgn(t: float) -> int:
        if t <= 0.0:
            return -1
        d = _logsum(c2, w2, math.log(t))
        return 1 if d > 0.0 else (-1 if d < 0.0 else 0)

    hi = 1.0
    for _ in range(_MAX_SCAN):
        if sgn(hi) > 0:
            break
        hi *= 2.0
    else:
        raise RuntimeError("upper bracket expansion failed (should not happen)")
    return _bisect(sgn, 0.0, hi, -1, 1)


def epsilon_bounds(query: BoundQuery) -> RiskInterval:
    """Certified risk interval for an observed complexity.

    For ``k < N`` the two roots are bracketed around ``k/N`` (interior
    negative-residual point found by geometric scan) and bisected; for
    ``k == N`` the single-root equation is solved and the upper endpoint is
    exactly 1.
    """
    n, k, beta = query.n_scenarios, query.complexity, query.confidence_param
    if k == n:
        t_high = _root_at_n(n, beta)
        return RiskInterval(
            lower=max(0.0, 1.0 - t_high),
            upper=1.0,
            query=query,
            root_lower_t=t_high,
            root_upper_t=0.0,
        )
    v_low, v_up = _roots_below_n(n, k, beta)
    return RiskInterval(
        lower=max(0.0, v_low),
        upper=v_up,
        query=query,
        root_lower_t=1.0 - v_low,
        root_upper_t=1.0 - v_up,
    )


def epsilon_table(n_scenarios: int, confidence_param: float):
    """One RiskInterval per complexity k = 0..N."""
    return [
        epsilon_bounds(BoundQuery(n_scenarios, k, confidence_param))
        for k in range(n_scenarios + 1)
    ]


def interval_table_csv(rows) -> str:
    """Serialize intervals as ``k,eps_lower,eps_upper`` (12 significant digits)."""
    lines = ["k,eps_lower,eps_upper"]
    for r in rows:
        lines.append(f"{r.query.complexity},{r.lower:.12g},{r.upper:.12g}")
    return "\n".join(lines) + "\n"


def explicit_upper_bound(query: BoundQuery) -> float:
    """Closed-form cap on the upper interval endpoint.

    Uses the exact lambda expression rather than its relaxation lambda <= 2;
    dedicated expression at k = 0, exactly 1 at k = N.
    """
    n, k, beta = query.n_scenarios, query.complexity, query.confidence_param
    if k == n:
        return 1.0
    if k == 0:
        return (2.0 / n) * (math.log(beta / 2.0 + math.e) + math.log(2.0 / beta))
    sk = math.sqrt(k)
    lam = math.log(beta / (2.0 * (k + 1)) + math.exp(1.0 / sk)) + sk / (sk + 1.0)
    return k / n + (sk + 1.0) / n * (lam + math.log(2.0 / beta) + math.log(k + 1.0))


def _g_value(n: int, k: int, beta: float) -> float:
    sk = math.sqrt(k)
    rhs = (
        k * (1.0 - 1.0 / (2.0 * sk))
        - sk * (math.log(12.0 / beta) + math.log(beta / 6.0 + k + 1.0))
    ) / (n + 1.0)
    return k / n - rhs


def explicit_lower_bound(query: BoundQuery) -> float:
    """Closed-form floor on the lower interval endpoint (clamped at 0)."""
    n, k, beta = query.n_scenarios, query.complexity, query.confidence_param
    if k == 0:
        return 0.0
    return max(0.0, k / n - 2.0 * _g_value(n, k, beta))


def explicit_bound_pair(query: BoundQuery) -> ExplicitBoundPair:
    """Cap and floor together with the constants they were built from."""
    n, k, beta = query.n_scenarios, query.complexity, query.confidence_param
    if k == 0:
        return ExplicitBoundPair(
            upper_cap=explicit_upper_bound(query), lower_floor=0.0
        )
    sk = math.sqrt(k)
    lam = math.log(beta / (2.0 * (k + 1)) + math.exp(1.0 / sk)) + sk / (sk + 1.0)
    g = _g_value(n, k, beta)
    return ExplicitBoundPair(
        upper_cap=explicit_upper_bound(query),
        lower_floor=explicit_lower_bound(query),
        lambda_used=lam,
        g_value=g,
    )


def binomial_tail_phi(h: int, k: int, v: float) -> float:
    """Sum of C(i,k)(1-v)^(i-k) for i = k..H-1, via its binomial-tail form.

    Evaluates ``sum_{i=k+1}^{H} C(H,i) v^i (1-v)^(H-i) / v^(k+1)`` in the log
    domain; requires k <= H-1 and 0 < v <= 1.
    """
    if not 0 <= k <= h - 1:
        raise ValueError(f"need 0 <= k <= H-1, got H={h}, k={k}")
    if not 0.0 < v <= 1.0:
        raise ValueError(f"v must be in (0, 1], got {v}")
    i = np.arange(k + 1, h + 1)
    log_c = log_binomial(np.full_like(i, h), i)
    terms = log_c + i * math.log(v)
    back = h - i
    if v < 1.0:
        terms = terms + back * math.log1p(-v)
    else:
        terms = np.where(back > 0, -np.inf, terms)
    m = terms.max()
    log_num = m + math.log(np.exp(terms - m).sum())
    return math.exp(log_num - (k + 1) * math.log(v))


# ----------------------------------------------------------------------------
# High-precision oracle (verification only; not used by the production path).

_ORACLE_MAX_N = 30
_ORACLE_TOL = 1e-12


def _oracle_sign_below_n(n, k, beta_mp, v, mp):
    one = mp.mpf(1)
    base = one - v
    lhs = mp.mpf(0)
    for i in range(k, n):
        lhs += math.comb(i, k) * base ** (i - k)
    lhs *= beta_mp / (2 * n)
    tail = mp.mpf(0)
    for i in range(n + 1, 4 * n + 1):
        tail += math.comb(i, k) * base ** (i - k)
    lhs += beta_mp / (6 * n) * tail
    rhs = math.comb(n, k) * base ** (n - k)
    d = lhs - rhs
    return 1 if d > 0 else (-1 if d < 0 else 0)


def _oracle_bisect(sign_fn, lo, hi, s_lo, mp):
    for _ in range(300):
        mid = (lo + hi) / 2
        s = sign_fn(mid)
        if s == 0:
            return mid
        if s == s_lo:
            lo = mid
        else:
            hi = mid
        if hi - lo <= mp.mpf(_ORACLE_TOL):
            break
    return (lo + hi) / 2


def exact_root_oracle(query: BoundQuery) -> RiskInterval:
    """Root-finding with exact binomial coefficients at 60 decimal digits.

    Refuses n_scenarios > 30.  Test harness use only; the production path
    never calls this.
    """
    import mpmath

    n, k, beta = query.n_scenarios, query.complexity, query.confidence_param
    if n > _ORACLE_MAX_N:
        raise ValueError(f"exact_root_oracle refuses n_scenarios > {_ORACLE_MAX_N}")
    with mpmath.workdps(60):
        mp = mpmath
        beta_mp = mp.mpf(beta)
        if k == n:
            def sgn_t(t):
                acc = mp.mpf(0)
                for i in range(n + 1, 4 * n + 1):
                    acc += math.comb(i, n) * t ** (i - n)
                d = beta_mp / (6 * n) * acc - 1
                return 1 if d > 0 else (-1 if d < 0 else 0)

            hi = mp.mpf(1)
            while sgn_t(hi) < 0:
                hi *= 2
            t_high = _oracle_bisect(sgn_t, mp.mpf(0), hi, -1, mp)
            return RiskInterval(
                lower=float(max(0, 1 - t_high)),
                upper=1.0,
                query=query,
                root_lower_t=float(t_high),
                root_upper_t=0.0,
            )

        def sgn(v):
            return _oracle_sign_below_n(n, k, beta_mp, v, mp)

        v0 = mp.mpf(k) / n
        if sgn(v0) >= 0:
            found = None
            gap = 1 - v0
            step = max(gap, mp.mpf("1e-3"))
            for j in range(200):
                vu = 1 - gap / 2 ** (j + 1)
                if sgn(vu) < 0:
                    found = vu
                    break
                vd = v0 - step * 2**j
                if sgn(vd) < 0:
                    found = vd
                    break
            if found is None:
                raise RuntimeError("oracle: no interior point found")
            v0 = found
        v_up = _oracle_bisect(sgn, v0, mp.mpf(1), -1, mp)
        step = mp.mpf(1) / n
        lo = v0 - step
        while sgn(lo) <= 0:
            step *= 2
            lo = v0 - step
        v_low = _oracle_bisect(sgn, lo, v0, 1, mp)
        return RiskInterval(
            lower=float(max(0, v_low)),
            upper=float(v_up),
            query=query,
            root_lower_t=float(1 - v_low),
            root_upper_t=float(1 - v_up),
        )
