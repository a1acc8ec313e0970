"""Special functions used by the closed-form channel and error-probability results.

Everything here is real-valued and deterministic. Series truncation is governed
by an explicit :class:`SeriesControl` passed by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DomainError, TruncationError, UnsupportedArgumentError

__all__ = [
    "SeriesControl",
    "DEFAULT_CONTROL",
    "pochhammer",
    "lower_incomplete_gamma",
    "digamma",
    "q_function",
    "q_function_inv",
    "hyp1f1_integer_m",
    "hyp1f1_series",
    "hyp2f1",
]


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for infinite series.

    A series is declared converged once a term falls below ``rel_tol`` times
    the running sum. Hitting ``max_terms`` first raises :class:`TruncationError`.
    ``fallback_terms`` is the larger budget granted to the direct
    hypergeometric series when a faster transformation is ill-conditioned.
    """

    rel_tol: float = 1e-12
    max_terms: int = 500
    fallback_terms: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and math.isfinite(self.rel_tol)):
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms}")
        if self.fallback_terms < self.max_terms:
            raise DomainError("fallback_terms must be at least max_terms")


DEFAULT_CONTROL = SeriesControl()

_INT_TOL = 1e-12


def _is_nonpos_int(x: float) -> bool:
    return x <= _INT_TOL and abs(x - round(x)) < _INT_TOL


def pochhammer(q: float, l: int) -> float:
    """Rising factorial ``q (q+1) ... (q+l-1)``; equals 1 for ``l = 0``."""
    if l < 0 or int(l) != l:
        raise DomainError(f"pochhammer order must be a nonnegative integer, got {l}")
    out = 1.0
    for j in range(int(l)):
        out *= q + j
    return out


# ---------------------------------------------------------------------------
# incomplete gamma


def _gamma_series(a: float, x: float, ctl: SeriesControl) -> float:
    # gamma(a, x) = x^a e^{-x} sum_k x^k / (a (a+1) ... (a+k))
    term = 1.0 / a
    total = term
    for k in range(1, ctl.max_terms + 1):
        term *= x / (a + k)
        total += term
        if term <= ctl.rel_tol * total:
            return math.exp(a * math.log(x) - x) * total
    raise TruncationError(
        f"incomplete gamma series did not converge for a={a}, x={x}",
        partial=math.exp(a * math.log(x) - x) * total,
        tail_bound=math.exp(a * math.log(x) - x) * term * (a + k) / max(a + k - x, 1e-300),
    )


def _upper_gamma_cf(a: float, x: float, ctl: SeriesControl) -> float:
    # modified Lentz evaluation of the continued fraction for Gamma(a, x)
    tiny = 1e-300
    bcoef = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / bcoef if bcoef != 0 else 1.0 / tiny
    h = d
    for i in range(1, ctl.max_terms + 1):
        an = -i * (i - a)
        bcoef += 2.0
        d = an * d + bcoef
        d = tiny if abs(d) < tiny else d
        c = bcoef + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= ctl.rel_tol * 0.1:
            return math.exp(a * math.log(x) - x) * h
    raise TruncationError(
        f"incomplete gamma continued fraction did not converge for a={a}, x={x}",
        partial=math.exp(a * math.log(x) - x) * h,
    )


def _lower_gamma_scalar(a: float, x: float, ctl: SeriesControl) -> float:
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.gamma(a)
    if x < a + 1.0:
        return _gamma_series(a, x, ctl)
    return math.gamma(a) - _upper_gamma_cf(a, x, ctl)


def lower_incomplete_gamma(a: float, x, ctl: SeriesControl = DEFAULT_CONTROL):
    """Lower incomplete gamma function ``gamma(a, x)`` (not regularized).

    Uses the power series below ``x = a + 1`` and the continued fraction for
    the upper function above it. Accepts scalar or array ``x``.
    """
    if not a > 0:
        raise DomainError(f"incomplete gamma needs a > 0, got {a}")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or np.any(np.isnan(xs)):
        raise DomainError("incomplete gamma needs x >= 0")
    if xs.ndim == 0:
        return _lower_gamma_scalar(float(a), float(xs), ctl)
    out = np.empty_like(xs)
    for idx, xv in np.ndenumerate(xs):
        out[idx] = _lower_gamma_scalar(float(a), float(xv), ctl)
    return out


# ---------------------------------------------------------------------------
# digamma

# Bernoulli-number coefficients B_{2k} / (2k) of the asymptotic expansion
_DIGAMMA_ASYMP = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x: float) -> float:
    """Digamma function for positive real ``x``.

    Shifts the argument above 10 with the recurrence and then sums the
    asymptotic Bernoulli series.
    """
    x = float(x)
    if not x > 0 or math.isnan(x):
        raise DomainError(f"digamma needs x > 0, got {x}")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    poly = 0.0
    for coef in reversed(_DIGAMMA_ASYMP):
        poly = poly * inv2 + coef
    return shift + math.log(x) - 0.5 / x - poly * inv2


# ---------------------------------------------------------------------------
# Gaussian tail


def q_function(x):
    """Gaussian tail probability ``Q(x) = erfc(x / sqrt 2) / 2``."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    return 0.5 * _sp.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def q_function_inv(p):
    """Inverse of :func:`q_function` on the open interval (0, 1)."""
    ps = np.asarray(p, dtype=float)
    if np.any(~((ps > 0) & (ps < 1))):
        raise DomainError("inverse Q-function needs 0 < p < 1")
    out = math.sqrt(2.0) * _sp.erfcinv(2.0 * ps)
    return float(out) if ps.ndim == 0 else out


# ---------------------------------------------------------------------------
# confluent hypergeometric function with integer first parameter


def hyp1f1_integer_m(m: int, z):
    """``1F1(m; 1; z)`` for a nonnegative integer ``m`` via its finite form.

    ``1F1(m; 1; z) = e^z sum_{l<m} (-1)^l (1-m)_l z^l / (l!)^2`` and
    the case ``m = 0`` returns 1.
    """
    if int(m) != m or m < 0:
        raise DomainError(f"m must be a nonnegative integer, got {m}")
    m = int(m)
    zs = np.asarray(z, dtype=float)
    if m == 0:
        out = np.ones_like(zs)
    else:
        total = np.zeros_like(zs)
        for l in range(m):
            coef = (-1.0) ** l * pochhammer(1 - m, l) / math.factorial(l) ** 2
            total = total + coef * zs**l
        out = np.exp(zs) * total
    return float(out) if zs.ndim == 0 else out


def hyp1f1_series(a: float, c: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Direct power series for ``1F1(a; c; z)``; used as a cross-check."""
    term = 1.0
    total = 1.0
    for k in range(ctl.max_terms):
        term *= (a + k) * z / ((c + k) * (k + 1))
        total += term
        if term == 0.0 or abs(term) <= ctl.rel_tol * abs(total):
            return total
    raise TruncationError("1F1 power series did not converge", partial=total, tail_bound=abs(term))


# ---------------------------------------------------------------------------
# Gauss hypergeometric function

_SERIES_LIMIT = 0.8
# connection-formula results whose two terms cancel by more than this factor
# are replaced by the (slow but sign-stable) direct series
_CANCELLATION_LIMIT = 1e3


def _gauss_terms(a, b, c, z, ctl, budget):
    """Direct Gauss series returning ``(sum, sum of absolute terms)``.

    Terms are only charged against the budget once the term ratio has dropped
    below one, so large parameters with a long growth phase do not exhaust it.
    """
    term = 1.0
    total = 1.0
    abs_total = 1.0
    small = 0
    charged = 0
    l = 0
    ratio = 0.0
    while charged < budget:
        ratio = (a + l) * (b + l) / ((c + l) * (l + 1)) * z
        term *= ratio
        total += term
        abs_total += abs(term)
        l += 1
        if term == 0.0:
            return total, abs_total
        if abs(ratio) < 1.0:
            charged += 1
        if abs(term) <= ctl.rel_tol * abs(total):
            small += 1
            if small >= 2:
                return total, abs_total
        else:
            small = 0
    raise TruncationError(
        f"2F1 series did not converge for a={a}, b={b}, c={c}, z={z}",
        partial=total,
        tail_bound=abs(term) * abs(ratio) / max(1.0 - abs(ratio), 1e-300),
    )


def _gauss_series(a: float, b: float, c: float, z: float, ctl: SeriesControl, budget=None) -> float:
    return _gauss_terms(a, b, c, z, ctl, ctl.max_terms if budget is None else budget)[0]


def _gamma_ratio(num, den) -> float:
    """``prod Gamma(num) / prod Gamma(den)`` computed in log space with signs."""
    logv = 0.0
    sign = 1.0
    for v in num:
        if _is_nonpos_int(v):
            return math.inf
        logv += _sp.gammaln(v)
        sign *= _sp.gammasgn(v)
    for v in den:
        if _is_nonpos_int(v):
            return 0.0
        logv -= _sp.gammaln(v)
        sign *= _sp.gammasgn(v)
    return sign * math.exp(logv)


def _connection_near_one(a, b, c, z, ctl):
    """Expansion around ``z = 1``.

    Returns the value together with the magnitude of the largest contribution
    so the caller can judge how much cancellation occurred.
    """
    s = c - a - b
    w = 1.0 - z
    g1 = _gamma_ratio((c, s), (c - a, c - b))
    g2 = _gamma_ratio((c, -s), (a, b)) * w**s
    v1, m1 = _gauss_terms(a, b, 1.0 - s, w, ctl, ctl.max_terms) if g1 != 0.0 else (0.0, 0.0)
    v2, m2 = _gauss_terms(c - a, c - b, 1.0 + s, w, ctl, ctl.max_terms) if g2 != 0.0 else (0.0, 0.0)
    return g1 * v1 + g2 * v2, max(abs(g1) * m1, abs(g2) * m2)


def _near_one(a, b, c, z, ctl) -> float:
    # the direct series is sign-stable after finitely many terms, so use it
    # whenever it converges within the regular budget
    try:
        return _gauss_series(a, b, c, z, ctl)
    except TruncationError:
        pass
    s = c - a - b
    offset = s - round(s)
    if abs(offset) > 1e-4:
        value, scale = _connection_near_one(a, b, c, z, ctl)
    else:
        # c - a - b (nearly) an integer: the connection terms are singular.
        # Average two perturbations of a, second-order accurate in h.
        h = 1e-4
        a0 = a + offset
        lo, slo = _connection_near_one(a0 - h, b, c, z, ctl)
        hi, shi = _connection_near_one(a0 + h, b, c, z, ctl)
        value, scale = 0.5 * (lo + hi), max(slo, shi)
    if scale <= _CANCELLATION_LIMIT * abs(value):
        return value
    # heavy cancellation; the direct series is reliable, only slow
    return _gauss_series(a, b, c, z, ctl, budget=ctl.fallback_terms)


def _hyp2f1_unit(a, b, c, z, ctl) -> float:
    """Evaluate for ``-0.5 <= z < 1``."""
    if abs(z) <= _SERIES_LIMIT or _is_nonpos_int(a) or _is_nonpos_int(b):
        return _gauss_series(a, b, c, z, ctl)
    if _is_nonpos_int(c - a) or _is_nonpos_int(c - b):
        # Euler transform turns the series into a polynomial
        return (1.0 - z) ** (c - a - b) * _gauss_series(c - a, c - b, c, z, ctl)
    return _near_one(a, b, c, z, ctl)


def hyp2f1(a: float, b: float, c: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for real ``z < 1``.

    Arguments below -0.5 are mapped into ``[1/3, 1)`` with the Pfaff transform
    ``2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))``. Arguments close to 1
    use the Euler transform when it terminates and the connection formula
    around ``z = 1`` otherwise.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if _is_nonpos_int(c):
        raise DomainError(f"2F1 undefined for nonpositive integer c={c}")
    if z == 0.0:
        return 1.0
    if not z < 1.0 or math.isnan(z):
        raise UnsupportedArgumentError(f"2F1 only supports real z < 1, got z={z}")
    if z >= -0.5:
        return _hyp2f1_unit(a, b, c, z, ctl)
    w = z / (z - 1.0)
    if not 0.0 <= w < 1.0:
        raise UnsupportedArgumentError(f"transformed argument {w} is outside [0, 1)")
    # two Pfaff variants; prefer one whose new series terminates
    if _is_nonpos_int(c - a) and not _is_nonpos_int(c - b):
        return (1.0 - z) ** (-b) * _hyp2f1_unit(c - a, b, c, w, ctl)
    return (1.0 - z) ** (-a) * _hyp2f1_unit(a, c - b, c, w, ctl)
