"""Satellite link model: shadowed-Rician fading, link budget and the SINR law.

The received SINR is ``gamma = phi * P_s * |h|^2 / (I + 1)`` where ``phi`` is
the free-space link response, ``P_s`` the noise-normalized transmit power,
``|h|^2`` the shadowed-Rician power gain and ``I`` the aggregate interference.
The closed forms drop the ``+1`` (interference-dominated regime). The
``*_with_noise`` variants keep it and integrate numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import specfun
from .errors import DomainError, TruncationError
from .interference import GammaFit, InterferenceConfig, interference_pdf
from .specfun import DEFAULT_CONTROL, SeriesControl

__all__ = [
    "SPEED_OF_LIGHT",
    "ShadowedRicianParams",
    "LinkGeometry",
    "SinrModel",
    "SHADOWING_PRESETS",
    "db_to_linear",
    "linear_to_db",
    "link_response",
    "shadowed_rician_pdf",
    "shadowed_rician_cdf",
    "shadowed_rician_mixture",
    "shadowed_rician_mean",
    "sinr_cdf",
    "sinr_cdf_series",
    "sinr_pdf",
    "sinr_cdf_with_noise",
    "sinr_pdf_with_noise",
    "sinr_quantile",
]

SPEED_OF_LIGHT = 299_792_458.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (float(db) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class ShadowedRicianParams:
    """Shadowed-Rician fade law.

    ``b`` is half the average scatter power, ``m`` the integer Nakagami
    parameter of the line-of-sight amplitude and ``omega`` its average power.
    ``m = 0`` is Rayleigh fading.
    """

    b: float
    m: int
    omega: float

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"b must be positive, got {self.b}")
        if int(self.m) != self.m or self.m < 0:
            raise DomainError(f"m must be a nonnegative integer, got {self.m}")
        if not self.omega >= 0:
            raise DomainError(f"omega must be nonnegative, got {self.omega}")
        object.__setattr__(self, "m", int(self.m))
        if self.m > 0 and not self.beta > self.delta:
            raise DomainError("fade parameters give beta <= delta")

    @property
    def alpha(self) -> float:
        if self.m == 0:
            return self.beta
        return (2 * self.b * self.m / (2 * self.b * self.m + self.omega)) ** self.m / (2 * self.b)

    @property
    def beta(self) -> float:
        return 1.0 / (2 * self.b)

    @property
    def delta(self) -> float:
        if self.m == 0:
            return 0.0
        return self.omega / (2 * self.b * (2 * self.b * self.m + self.omega))


# Commonly used land-mobile-satellite fits, rounded to integer m.
SHADOWING_PRESETS = {
    "light": ShadowedRicianParams(b=0.158, m=19, omega=1.29),
    "average": ShadowedRicianParams(b=0.126, m=10, omega=0.835),
    "heavy": ShadowedRicianParams(b=0.063, m=1, omega=8.97e-4),
}


@dataclass(frozen=True)
class LinkGeometry:
    """Free-space link; antenna gains are given in dBi."""

    carrier_hz: float
    distance_m: float
    tx_gain_dbi: float = 0.0
    rx_gain_dbi: float = 0.0

    def __post_init__(self):
        if not (self.carrier_hz > 0 and self.distance_m > 0):
            raise DomainError("carrier frequency and distance must be positive")
        if not (math.isfinite(self.tx_gain_dbi) and math.isfinite(self.rx_gain_dbi)):
            raise DomainError("antenna gains must be finite")


def link_response(g: LinkGeometry) -> float:
    """Free-space power gain ``(c / (4 pi f d))^2 G_tx G_rx``."""
    wavelength_ratio = SPEED_OF_LIGHT / (4.0 * math.pi * g.carrier_hz * g.distance_m)
    return wavelength_ratio**2 * db_to_linear(g.tx_gain_dbi) * db_to_linear(g.rx_gain_dbi)


@dataclass(frozen=True)
class SinrModel:
    """SINR of the satellite link under Gamma-distributed interference.

    ``tx_snr`` is the linear noise-normalized transmit power. ``field`` is the
    interferer geometry the Gamma law was fitted to, kept for simulation.
    """

    sat_link: LinkGeometry
    fade: ShadowedRicianParams
    tx_snr: float
    interference: GammaFit
    field: InterferenceConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.tx_snr > 0:
            raise DomainError("tx_snr must be positive")

    @property
    def snr_scale(self) -> float:
        """``phi * P_s``: the SINR per unit channel power gain and unit interference."""
        return link_response(self.sat_link) * self.tx_snr


# ---------------------------------------------------------------------------
# channel power gain


def shadowed_rician_mixture(p: ShadowedRicianParams):
    """Write the density as ``sum_l c_l x^l exp(-kappa x)``; returns ``(c, kappa)``."""
    if p.m == 0:
        return np.array([p.alpha]), p.beta
    coef = np.array(
        [
            p.alpha * (-1.0) ** l * specfun.pochhammer(1 - p.m, l) * p.delta**l / math.factorial(l) ** 2
            for l in range(p.m)
        ]
    )
    return coef, p.beta - p.delta


def shadowed_rician_pdf(p: ShadowedRicianParams, x):
    """Density ``alpha e^{-beta x} 1F1(m; 1; delta x)`` of the power gain.

    The finite form of ``1F1`` is expanded so the two exponentials combine into
    ``e^{-(beta - delta) x}``, which avoids overflow for large ``x``.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("power gain must be nonnegative")
    coef, kappa = shadowed_rician_mixture(p)
    out = np.polynomial.polynomial.polyval(xs, coef) * np.exp(-kappa * xs)
    return float(out) if xs.ndim == 0 else out


def shadowed_rician_mean(p: ShadowedRicianParams) -> float:
    """``E|h|^2`` from the mixture form."""
    coef, kappa = shadowed_rician_mixture(p)
    return float(sum(c * math.factorial(l + 1) / kappa ** (l + 2) for l, c in enumerate(coef)))


def _rician_cdf_scalar(p: ShadowedRicianParams, x: float, ctl: SeriesControl) -> float:
    if x == 0.0:
        return 0.0
    bx = p.beta * x
    ratio = p.delta / p.beta
    # term_i = alpha/beta * (m)_i (delta/beta)^i / i! * P(i+1, beta x), with P regularized
    coef = p.alpha / p.beta
    total = 0.0
    small = 0
    for i in range(ctl.max_terms):
        if i > 0:
            coef *= (p.m + i - 1) * ratio / i
        if coef == 0.0:
            return total
        if i < 170:
            term = coef * specfun.lower_incomplete_gamma(i + 1, bx, ctl) / math.factorial(i)
        else:  # i! overflows; use the regularized function directly
            term = coef * float(special.gammainc(i + 1, bx))
        total += term
        if term <= ctl.rel_tol * total:
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise TruncationError(
        "shadowed-Rician CDF series did not converge", partial=total, tail_bound=coef / max(1 - ratio, 1e-300)
    )


def shadowed_rician_cdf(p: ShadowedRicianParams, x, ctl: SeriesControl = DEFAULT_CONTROL):
    """CDF ``alpha sum_{i>=0} (m)_i delta^i / ((i!)^2 beta^{i+1}) gamma(i+1, beta x)``.

    The sum starts at ``i = 0``; the zeroth term carries the unshadowed part of the law.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("power gain must be nonnegative")
    if xs.ndim == 0:
        return _rician_cdf_scalar(p, float(xs), ctl)
    return _rician_cdf_array(p, xs, ctl)


def _rician_cdf_array(p: ShadowedRicianParams, xs: np.ndarray, ctl: SeriesControl) -> np.ndarray:
    """The same series for many points at once, stopping on the worst point."""
    bx = p.beta * xs
    ratio = p.delta / p.beta
    coef = p.alpha / p.beta
    total = np.zeros_like(bx)
    small = 0
    for i in range(ctl.max_terms):
        if i > 0:
            coef *= (p.m + i - 1) * ratio / i
        if coef == 0.0:
            return total
        term = coef * special.gammainc(i + 1, bx)
        total += term
        if np.all(term <= ctl.rel_tol * total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise TruncationError(
        "shadowed-Rician CDF series did not converge", partial=total, tail_bound=coef / max(1 - ratio, 1e-300)
    )


def _mixture_cdf(p: ShadowedRicianParams, t):
    """``F_|h|^2`` from the finite mixture; vectorized, used inside quadratures."""
    coef, kappa = shadowed_rician_mixture(p)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for l, c in enumerate(coef):
        out = out + c * math.factorial(l) / kappa ** (l + 1) * special.gammainc(l + 1, kappa * t)
    return out


# ---------------------------------------------------------------------------
# SINR law, interference-dominated closed forms


def sinr_cdf_series(model: SinrModel, x: float, ctl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, float]:
    """SINR CDF from the fade-index series, with a tail estimate.

    For fade index ``i`` the inner sum over the interference expansion is
    ``Gamma(i+k+1)/Gamma(i+2) r^{i+1} (1-r)^k 2F1(i+k+1, 1; i+2; r)`` with
    ``r = s eta / (s eta + 1)`` and ``s = beta x / (phi P)``. It is evaluated in
    the equivalent bounded form ``r^{i+1} 2F1(1-k, i+1; i+2; r)``.
    """
    if x < 0:
        raise DomainError("SINR must be nonnegative")
    if x == 0:
        return 0.0, 0.0
    p, fit = model.fade, model.interference
    k, eta = fit.k, fit.eta
    s = p.beta * x / model.snr_scale
    r = s * eta / (s * eta + 1.0)
    ratio = p.delta / p.beta
    log_r = math.log(r)
    total = 0.0
    small = 0
    log_coef = math.log(p.alpha / p.beta)
    for i in range(ctl.max_terms):
        if i > 0:
            if p.m == 0:
                return total, 0.0
            log_coef += math.log((p.m + i - 1) * ratio / i)
        logw = (
            log_coef
            + special.gammaln(i + k + 1)
            - special.gammaln(k)
            - special.gammaln(i + 2)
            + (i + 1) * log_r
        )
        term = math.exp(logw) * specfun.hyp2f1(1.0 - k, i + 1.0, i + 2.0, r, ctl)
        total += term
        if abs(term) <= ctl.rel_tol * abs(total):
            small += 1
            if small >= 3:
                # remaining terms shrink at least geometrically with ratio ~ delta/beta * r
                q = min((p.m + i) / (i + 1) * ratio * r, 0.999999)
                return total, abs(term) * q / (1.0 - q)
        else:
            small = 0
    raise TruncationError("SINR CDF series did not converge", partial=total, tail_bound=abs(term))


def sinr_cdf(model: SinrModel, x, ctl: SeriesControl = DEFAULT_CONTROL):
    """CDF of the interference-dominated SINR ``phi P |h|^2 / I``."""
    xs = np.asarray(x, dtype=float)
    if xs.ndim == 0:
        return min(max(sinr_cdf_series(model, float(xs), ctl)[0], 0.0), 1.0)
    out = np.empty_like(xs)
    for idx, xv in np.ndenumerate(xs):
        out[idx] = min(max(sinr_cdf_series(model, float(xv), ctl)[0], 0.0), 1.0)
    return out


def sinr_pdf(model: SinrModel, x):
    """Density of the interference-dominated SINR.

    ``f(x) = 1/(phi P Gamma(k) eta^k) sum_l c_l (x/phi P)^l Gamma(l+k+1)
    (kappa x / phi P + 1/eta)^{-(l+k+1)}`` with the fade mixture ``(c_l, kappa)``.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("SINR must be nonnegative")
    coef, kappa = shadowed_rician_mixture(model.fade)
    fit = model.interference
    k, eta = fit.k, fit.eta
    sp = model.snr_scale
    u = xs / sp
    out = np.zeros_like(u)
    for l, c in enumerate(coef):
        with np.errstate(divide="ignore"):
            logt = (
                math.log(c)
                + l * np.log(u)
                + special.gammaln(l + k + 1)
                - special.gammaln(k)
                - k * math.log(eta)
                - (l + k + 1) * np.log(kappa * u + 1.0 / eta)
            )
        out = out + np.exp(logt)
    out = out / sp
    return float(out) if xs.ndim == 0 else out


def sinr_quantile(model: SinrModel, prob: float) -> float:
    """Inverse of :func:`sinr_cdf` by bracketing and bisection on a log scale."""
    from scipy import optimize

    if not 0 < prob < 1:
        raise DomainError("quantile level must be in (0, 1)")
    lo, hi = 1e-12, 1.0
    while sinr_cdf(model, hi) < prob:
        hi *= 10.0
    root = optimize.brentq(lambda lx: sinr_cdf(model, math.exp(lx)) - prob, math.log(lo), math.log(hi), xtol=1e-12)
    return math.exp(root)


# ---------------------------------------------------------------------------
# SINR law with the receiver noise kept


def _gamma_expectation(fit: GammaFit, func) -> float:
    """``E[func(Y)]`` for ``Y ~ Gamma(k, eta)`` by adaptive quadrature."""
    mean, sd = fit.mean, math.sqrt(fit.variance)
    brk = [0.0, max(mean - 3 * sd, 0.0), mean, mean + 3 * sd, mean + 40 * sd + 60 * fit.eta]
    brk = sorted(set(brk))
    total = 0.0
    for a, b in zip(brk[:-1], brk[1:]):
        val, _ = integrate.quad(lambda y: func(y) * interference_pdf(fit, y), a, b, epsabs=1e-14, epsrel=1e-11, limit=200)
        total += val
    return total


def sinr_cdf_with_noise(model: SinrModel, x):
    """CDF of ``phi P |h|^2 / (I + 1)``, integrating over the Gamma interference law."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    sp = model.snr_scale
    out = np.array([_gamma_expectation(model.interference, lambda y, xv=xv: float(_mixture_cdf(model.fade, xv * (y + 1.0) / sp))) for xv in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


def sinr_pdf_with_noise(model: SinrModel, x):
    """Density of ``phi P |h|^2 / (I + 1)``."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    sp = model.snr_scale
    fade = model.fade

    def inner(y, xv):
        return (y + 1.0) / sp * shadowed_rician_pdf(fade, xv * (y + 1.0) / sp)

    out = np.array([_gamma_expectation(model.interference, lambda y, xv=xv: inner(y, xv)) for xv in xs])
    return float(out[0]) if np.ndim(x) == 0 else out
