"""Closed forms and explicit bounds for the Yule tree.

Everything here is a pure function of its arguments. Infinite series are
summed term by term until a term drops below ``SERIES_TOL``; the number of
terms used is reported wherever a bound is returned with details.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import optimize, special

SERIES_TOL = 1e-16
_MAX_TERMS = 10**6


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class DivergenceError(ArithmeticError):
    """A moment generating function is infinite at the requested point."""


class OutOfReach(ValueError):
    """The target disk cannot be reached in the given time."""


# --- leaf count -------------------------------------------------------------

def fs_pmf(y, k):
    """First-success pmf ``y (1-y)^(k-1)``; ``k`` may be an array."""
    if not 0.0 < y < 1.0:
        raise DomainError(f"y must lie in (0, 1), got {y}")
    k = np.asarray(k)
    if np.any(k < 1):
        raise DomainError("k must be >= 1")
    out = y * np.exp((k - 1) * math.log1p(-y))
    return float(out) if out.ndim == 0 else out


def fs_cdf(y, m):
    """``P(N <= m) = 1 - (1-y)^m`` for ``N ~ Fs(y)``."""
    if not 0.0 < y < 1.0:
        raise DomainError(f"y must lie in (0, 1), got {y}")
    m = np.floor(np.asarray(m, float))
    out = -np.expm1(np.maximum(m, 0.0) * math.log1p(-y))
    return float(out) if out.ndim == 0 else out


def leaf_mean(rate, horizon):
    return math.exp(rate * horizon)


# --- total length -----------------------------------------------------------

def length_mean(rate, horizon):
    """``E[L] = (e^{rate t} - 1)/rate``, equal to ``t`` at rate 0."""
    if rate < 0 or horizon < 0:
        raise DomainError("rate and horizon must be non-negative")
    return horizon * float(special.exprel(rate * horizon))


def mgf_singularity(rate, horizon):
    """Left end of the divergence region of the length MGF.

    The denominator ``x e^{(rate-x)t} - rate`` vanishes at ``x = rate``
    (a removable zero) and at one other point ``x*``, which is where the MGF
    blows up. The two coincide when ``rate * t == 1``. Returns ``inf`` at
    rate 0 (the MGF is ``e^{xt}``).
    """
    if rate < 0 or horizon <= 0:
        raise DomainError("need rate >= 0 and horizon > 0")
    if rate == 0:
        return math.inf
    a = rate * horizon
    if a == 1.0:
        return rate
    # h(z) = log x + (rate - x) t - log rate with x = e^z, monotone on each side of 1/t
    log_rate = math.log(rate)

    def h(z):
        return z + (rate - math.exp(z)) * horizon - log_rate

    z_mid = -math.log(horizon)
    if a > 1.0:
        z_lo = log_rate - a - 1.0
        return math.exp(optimize.brentq(h, z_lo, z_mid, xtol=1e-15, rtol=1e-15))
    z_hi = z_mid + 1.0
    while h(z_hi) > 0:
        z_hi += 1.0
    return math.exp(optimize.brentq(h, z_mid, z_hi, xtol=1e-15, rtol=1e-15))


def length_mgf(rate, horizon, x):
    """MGF of the total length, ``(x - rate)/(x e^{(rate-x)t} - rate)``.

    Evaluated through ``1/(e^{-ut} - rate t exprel(-ut))`` with ``u = x - rate``,
    which is smooth across the removable point ``x = rate``. Raises
    :class:`DivergenceError` for ``x >= mgf_singularity(rate, horizon)``.
    """
    if rate < 0 or horizon <= 0:
        raise DomainError("need rate >= 0 and horizon > 0")
    if x == 0:
        return 1.0
    if rate == 0:
        return math.exp(x * horizon)
    xs = mgf_singularity(rate, horizon)
    if x >= xs:
        raise DivergenceError(f"MGF diverges for x >= {xs:.12g}")
    ut = (x - rate) * horizon
    denom = math.exp(-ut) - rate * horizon * float(special.exprel(-ut))
    if denom <= 0:
        raise DivergenceError(f"MGF diverges at x = {x}")
    return 1.0 / denom


# --- miss probability without branching and the equation kernels --------------

def miss_given_no_branch(t, d, r):
    """Probability that a single ray of length ``t`` from the origin misses the
    closed disk of radius ``r`` centred at distance ``d`` (planar case)."""
    if not (d > r > 0):
        raise DomainError(f"need d > r > 0, got d={d}, r={r}")
    if t < d - r:
        raise OutOfReach(f"t={t} < d - r = {d - r}")
    seam = math.sqrt(d * d - r * r)
    if t >= seam:
        return 1.0 - math.asin(r / d) / math.pi
    c = min(1.0, max(-1.0, (d * d + t * t - r * r) / (2.0 * t * d)))
    return 1.0 - math.acos(c) / math.pi


class FeKernels(NamedTuple):
    alpha0: float
    s0: float
    D: float


def fe_alpha0(d, r):
    if not (d >= r > 0):
        raise DomainError(f"need d >= r > 0, got d={d}, r={r}")
    return math.asin(r / d)


def fe_s0(d, r, alpha):
    """Distance along direction ``alpha`` to the near side of the disk."""
    a0 = fe_alpha0(d, r)
    if abs(alpha) > a0 * (1 + 1e-15):
        raise DomainError(f"|alpha| = {abs(alpha)} exceeds alpha0 = {a0}")
    rad = max(r * r - (d * math.sin(alpha)) ** 2, 0.0)
    return d * math.cos(alpha) - math.sqrt(rad)


def fe_distance(d, s, alpha):
    return math.sqrt(max(d * d + s * s - 2.0 * d * s * math.cos(alpha), 0.0))


def fe_kernels(d, r, s, alpha):
    return FeKernels(fe_alpha0(d, r), fe_s0(d, r, alpha), fe_distance(d, s, alpha))


# --- series helper ----------------------------------------------------------

class SeriesSum(NamedTuple):
    value: float
    terms: int


def power_series(log_q, start, shift, scale=1.0):
    """``scale * sum_{n >= start} q^n / (n + shift)`` with ``q = e^{log_q} < 1``.

    Summed in blocks until a term falls below ``SERIES_TOL``. Terms decrease
    monotonically, so the neglected tail is below ``tol * q / (1 - q)``.
    Beyond ``_MAX_TERMS`` terms the remainder is added in closed form
    (only reached when ``q`` is within about 1e-5 of 1).
    """
    if log_q >= 0:
        return SeriesSum(math.inf, 0)
    total = 0.0
    n0 = start
    block = 4096
    used = 0
    while used < _MAX_TERMS:
        n = np.arange(n0, n0 + block, dtype=float)
        terms = scale * np.exp(n * log_q) / (n + shift)
        small = np.flatnonzero(terms < SERIES_TOL)
        if small.size:
            cut = int(small[0])
            total += float(terms[:cut].sum())
            return SeriesSum(total, used + cut)
        total += float(terms.sum())
        used += block
        n0 += block
        block = min(block * 2, 1 << 20)
    # closed-form remainder of sum_{n>=n0} q^n/(n+shift) for integer shift
    q = math.exp(log_q)
    full = _power_closed(q, shift)
    head = _power_closed_head(q, shift, n0)
    return SeriesSum(total + scale * (full - head), used)


def _power_closed(q, shift):
    # sum_{n>=1} q^n/(n+shift) for shift in {0, 1}
    s1 = -math.log1p(-q)
    if shift == 0:
        return s1
    if shift == 1:
        return (s1 - q) / q
    raise ValueError("closed form only for shift 0 or 1")


def _power_closed_head(q, shift, n_end):
    n = np.arange(1, n_end, dtype=float)
    return float((np.exp(n * math.log(q)) / (n + shift)).sum())


# --- radius bounds ----------------------------------------------------------

class RadiusBound(NamedTuple):
    value: float
    factors: tuple
    C: float
    C_tilde: float
    terms: int


def radius_bound_terms(rate, eps):
    """Factors of the explicit lower bound on ``P(R_rate(1) >= 1/2 - eps)``."""
    if rate <= 0 or not 0 < eps < 0.5:
        raise DomainError("need rate > 0 and 0 < eps < 1/2")
    log_q = -rate * (0.5 + eps)
    c_sum = power_series(log_q, 1, 1)
    tail = power_series(log_q, 2, 0)
    # C~ = exp(-e^{rate/2} tail / 4) / (1 - q), kept in logs against overflow
    log_ct = -0.25 * _exp_times(rate / 2.0, tail.value) - math.log1p(-math.exp(log_q))
    c_tilde = math.exp(log_ct)
    f1 = 1.0 - math.exp(-eps * rate) * (1.0 + c_sum.value)
    f2 = -math.expm1(-0.125 * _exp_times(rate / 2.0, 1.0))
    f3 = 1.0 - math.exp(log_ct - 0.25 * _exp_times(eps * rate, 1.0))
    return RadiusBound(f1 * f2 * f3, (f1, f2, f3), c_sum.value, c_tilde,
                       max(c_sum.terms, tail.terms))


def radius_lower_bound_product(rate, eps):
    """Three-factor lower bound on ``P(R_rate(1) >= 1/2 - eps)`` (unclamped)."""
    return radius_bound_terms(rate, eps).value


def radius_lower_bound_conditional(rate, eps, beta, d, p):
    """Two-factor lower bound on ``P(R_rate(1) >= d - eps)``.

    Assumes ``P(R(1 - eps/2) >= d - eps/2) >= p``. ``p = 1`` is accepted as
    the limit where the first factor equals 1. At rate 0 the inner series
    diverges and ``-inf`` is returned.
    """
    if not (0 < p <= 1 and 0 < eps < d <= 1 and 0 < beta < 1 and rate >= 0):
        raise DomainError("need 0 < p <= 1, 0 < eps < d <= 1, 0 < beta < 1, rate >= 0")
    if rate == 0:
        return -math.inf
    if p == 1:
        f1 = 1.0
    else:
        f1 = -math.expm1(-_exp_times((1 - beta) * eps * rate / 2.0, -math.log1p(-p)))
    s = power_series(-eps * rate / 2.0, 1, 1)
    f2 = 1.0 - math.exp(-eps * beta * rate / 2.0) * (1.0 + s.value)
    return f1 * f2


def _exp_times(a, b):
    # e^a * b for b >= 0 without overflow to nan
    if b == 0:
        return 0.0
    v = a + math.log(b)
    return math.exp(v) if v < 709 else math.inf


# --- appendix bounds --------------------------------------------------------

def fs_tail_bound(y, a, b):
    """Upper bound ``b sum_{n>=1} y^{n-a}/n`` on ``P(N_y <= b y^{-a})``."""
    if not (0 < y < 1 and 0 < a < 1 and b > 0):
        raise DomainError("need 0 < y < 1, 0 < a < 1, b > 0")
    scale = b * y ** (-a)
    return power_series(math.log(y), 1, 0, scale).value


def fs_tail_exact(y, a, b):
    """``P(N_y <= b y^{-a}) = 1 - (1-y)^{floor(b y^{-a})}``."""
    return fs_cdf(y, math.floor(b * y ** (-a)))


def exp_max_bound(a, b, c, x, log=False):
    """Upper bound ``C exp(-b e^{(a-c)x})`` on ``P(max_{j <= b e^{ax}} T_j <= c)``
    for i.i.d. ``T_j ~ Exp(x)``, where
    ``C = exp(-b e^{ax} sum_{n>=2} e^{-ncx}/n) / (1 - e^{-cx})``.
    """
    if not (a > c > 0 and b > 0 and x > 0):
        raise DomainError(f"need a > c > 0, b > 0, x > 0; got a={a}, b={b}, c={c}, x={x}")
    tail = power_series(-c * x, 2, 0)
    log_c = -b * _exp_times(a * x, tail.value) - math.log1p(-math.exp(-c * x))
    val = log_c - b * math.exp((a - c) * x)
    return val if log else math.exp(val)


def exp_max_exact(a, b, c, x):
    """``(1 - e^{-cx})^{floor(b e^{ax})}``."""
    n = math.floor(b * math.exp(a * x))
    return math.exp(n * math.log1p(-math.exp(-c * x)))


def exp_max_constant(a, b, c, x):
    tail = power_series(-c * x, 2, 0)
    return math.exp(-b * _exp_times(a * x, tail.value)) / -math.expm1(-c * x)


# --- hole bound and scaling ---------------------------------------------------

def hole_bound(rate, t, d, delta, dim, a=0.5, alpha=1.0):
    """``C delta^{-2D} exp(-(1-a) rate delta t / 16)`` with ``C = 8 d^2 (1 + alpha)``.

    Upper bound on the probability that some point of ``B(0, t d)`` is farther
    than ``delta t`` from the tree, valid for large ``rate``.
    """
    if not (0 < delta < 1 and 0 < d and 0 < a < 1 and alpha > 0 and dim >= 1):
        raise DomainError("need 0 < delta < 1, d > 0, 0 < a < 1, alpha > 0")
    const = 8.0 * d * d * (1.0 + alpha)
    return const * delta ** (-2 * dim) * math.exp(-(1 - a) * rate * delta * t / 16.0)


def scaled_probe(rate, t, r, x, s):
    """Parameters with the same hit probability after rescaling time to ``s``:
    ``(rate t/s, s, r s/t, x s/t)``."""
    if s <= 0 or t <= 0:
        raise DomainError("need s > 0 and t > 0")
    k = s / t
    return rate / k, s, r * k, np.asarray(x, float) * k


# --- reporting ----------------------------------------------------------------

@dataclass
class BoundReport:
    """One evaluated bound, optionally compared with an empirical estimate.

    ``direction`` says which side the bound is on: ``"upper"`` bounds must
    dominate the empirical value, ``"lower"`` bounds must be dominated. The
    comparison allows ``n_sigma`` standard errors of slack.
    """

    name: str
    params: dict
    bound_value: float
    direction: str = "upper"
    empirical_value: Optional[float] = None
    stderr: float = 0.0
    n_sigma: float = 3.0
    terms: int = 0
    satisfied: Optional[bool] = field(default=None, init=False)

    def __post_init__(self):
        if self.direction not in ("upper", "lower"):
            raise ValueError("direction must be 'upper' or 'lower'")
        if not math.isfinite(self.bound_value) and self.bound_value != -math.inf:
            raise ValueError(f"bound {self.name} is not finite")
        if self.empirical_value is not None:
            slack = self.n_sigma * self.stderr
            if self.direction == "upper":
                self.satisfied = self.empirical_value <= self.bound_value + slack
            else:
                self.satisfied = self.empirical_value >= self.bound_value - slack

    @property
    def clamped(self):
        """The bound restricted to [0, 1], as a probability statement."""
        return min(1.0, max(0.0, self.bound_value))

    @property
    def vacuous(self):
        return (self.direction == "upper" and self.bound_value >= 1.0) or (
            self.direction == "lower" and self.bound_value <= 0.0)

    def row(self):
        return {
            "name": self.name,
            "params": ";".join(f"{k}={v:g}" for k, v in self.params.items()),
            "bound": self.bound_value,
            "clamped": self.clamped,
            "direction": self.direction,
            "empirical": self.empirical_value,
            "stderr": self.stderr,
            "terms": self.terms,
            "satisfied": self.satisfied,
        }
