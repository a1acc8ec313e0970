"""Finite-blocklength decoding error probability over the SINR law.

Rates are in nats per channel use throughout. The error probability at
blocklength ``n`` and rate ``R`` is the normal approximation
``E[Q(sqrt(n) (C(g) - R) / sqrt(V(g)))]`` averaged over the SINR. The closed
form replaces the Q-function by a piecewise-linear ramp ``Psi`` centred at
the threshold SINR ``e^R - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import channel, specfun
from .channel import SinrModel
from .errors import DomainError, QuadratureError
from .specfun import DEFAULT_CONTROL, SeriesControl

__all__ = [
    "FbcConfig",
    "PsiThresholds",
    "FbcResult",
    "bits_to_nats",
    "nats_to_bits",
    "capacity_dispersion",
    "normal_approx_error",
    "psi_ramp",
    "psi_thresholds",
    "error_prob_normal",
    "error_prob_closed_form",
    "error_prob_asymptotic",
    "ramp_expression",
    "window_first_moment",
    "RAW_RANGE",
]

RAW_RANGE = (-0.05, 1.05)


def bits_to_nats(rate_bits: float) -> float:
    return rate_bits * math.log(2.0)


def nats_to_bits(rate_nats: float) -> float:
    return rate_nats / math.log(2.0)


@dataclass(frozen=True)
class FbcConfig:
    blocklength: float
    rate_nats: float

    def __post_init__(self):
        if not self.blocklength >= 1:
            raise DomainError("blocklength must be at least 1")
        if not self.rate_nats > 0:
            raise DomainError("rate must be positive")

    @classmethod
    def from_bits(cls, blocklength: float, rate_bits: float) -> "FbcConfig":
        return cls(blocklength, bits_to_nats(rate_bits))


@dataclass(frozen=True)
class PsiThresholds:
    """Slope and break points of the linearized Q-function ramp."""

    vartheta: float
    zeta_low: float
    zeta_up: float

    def __post_init__(self):
        if not (self.vartheta > 0 and self.zeta_low < self.zeta_up):
            raise DomainError("invalid ramp thresholds")

    @property
    def center(self) -> float:
        return 0.5 * (self.zeta_low + self.zeta_up)


@dataclass(frozen=True)
class FbcResult:
    """Error probability clamped to [0, 1] plus diagnostics.

    ``out_of_range`` flags a raw value outside ``RAW_RANGE``, which signals
    that the approximation has broken down rather than a rounding effect.
    """

    value: float
    raw: float
    truncation_error: float = 0.0
    out_of_range: bool = False

    def __float__(self):
        return self.value


def _result(raw: float, trunc: float = 0.0) -> FbcResult:
    return FbcResult(
        value=min(max(raw, 0.0), 1.0),
        raw=raw,
        truncation_error=trunc,
        out_of_range=not (RAW_RANGE[0] <= raw <= RAW_RANGE[1]),
    )


def capacity_dispersion(gamma, base: float = math.e):
    """Capacity ``log(1+g)`` in the given base and dispersion ``1 - (1+g)^-2``."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("SINR must be nonnegative")
    cap = np.log1p(g) / math.log(base)
    disp = 1.0 - 1.0 / (1.0 + g) ** 2
    if g.ndim == 0:
        return float(cap), float(disp)
    return cap, disp


def normal_approx_error(gamma, blocklength: float, rate_nats: float):
    """``Q(sqrt(n) (C(g) - R) / sqrt(V(g)))``; equals 1 where the SINR is zero."""
    g = np.asarray(gamma, dtype=float)
    cap, disp = capacity_dispersion(g)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.sqrt(blocklength) * (cap - rate_nats) / np.sqrt(disp)
    arg = np.where(disp > 0, arg, -np.inf)
    out = 0.5 * special.erfc(arg / math.sqrt(2.0))
    return float(out) if g.ndim == 0 else out


def psi_thresholds(rate_nats: float, blocklength: float, convention: str = "matched") -> PsiThresholds:
    """Ramp parameters for the linearized Q-function.

    ``"matched"`` uses the slope of the exact Q-term at ``g = e^R - 1``,
    ``vartheta = 1 / sqrt(2 pi (e^{2R} - 1))``. ``"two-pi"`` uses
    ``1 / (2 pi sqrt(e^{2R} - 1))``, which gives a wider ramp.
    Both centre the ramp at ``e^R - 1`` with width ``1 / (vartheta sqrt(n))``.
    """
    if not rate_nats > 0:
        raise DomainError("rate must be positive")
    if not blocklength >= 1:
        raise DomainError("blocklength must be at least 1")
    growth = math.expm1(2.0 * rate_nats)
    if convention == "matched":
        vartheta = 1.0 / math.sqrt(2.0 * math.pi * growth)
    elif convention == "two-pi":
        vartheta = 1.0 / (2.0 * math.pi * math.sqrt(growth))
    else:
        raise DomainError(f"unknown ramp convention {convention!r}")
    c0 = math.expm1(rate_nats)
    half = 1.0 / (2.0 * vartheta * math.sqrt(blocklength))
    return PsiThresholds(vartheta=vartheta, zeta_low=c0 - half, zeta_up=c0 + half)


def psi_ramp(gamma, th: PsiThresholds, blocklength: float):
    """The piecewise-linear surrogate of the Q-term."""
    g = np.asarray(gamma, dtype=float)
    out = np.clip(0.5 - th.vartheta * math.sqrt(blocklength) * (g - th.center), 0.0, 1.0)
    return float(out) if g.ndim == 0 else out


# ---------------------------------------------------------------------------
# averaged error probability


def _breakpoints(rate_nats: float, blocklength: float):
    th = psi_thresholds(rate_nats, blocklength)
    width = th.zeta_up - th.zeta_low
    c0 = th.center
    return sorted({max(c0 - 10 * width, 0.0), max(c0 - width, 0.0), c0, c0 + width, c0 + 10 * width})


def error_prob_normal(model: SinrModel, cfg: FbcConfig, include_noise: bool = False) -> FbcResult:
    """Normal-approximation error probability averaged over the SINR density.

    ``include_noise`` integrates against the SINR law that keeps the receiver
    noise term, which is markedly slower.
    """
    pdf = channel.sinr_pdf_with_noise if include_noise else channel.sinr_pdf
    cdf = channel.sinr_cdf_with_noise if include_noise else channel.sinr_cdf
    n, rate = cfg.blocklength, cfg.rate_nats
    pts = _breakpoints(rate, n)
    total = float(cdf(model, pts[0])) if pts[0] > 0 else 0.0
    # below the first break point the Q-term is 1 up to ~1e-20
    err_sum = 0.0
    edges = [pts[0]] + pts[1:]
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(
            lambda x: normal_approx_error(x, n, rate) * pdf(model, x), a, b, epsabs=1e-13, epsrel=1e-10, limit=200
        )
        total += val
        err_sum += err
    tail, err = integrate.quad(
        lambda x: normal_approx_error(x, n, rate) * pdf(model, x), edges[-1], np.inf, epsabs=1e-14, limit=200
    )
    total += tail
    err_sum += err
    if not math.isfinite(total) or err_sum > 1e-6:
        raise QuadratureError(f"error-probability quadrature failed (error estimate {err_sum:g})")
    return _result(total, err_sum)


def ramp_expression(cdf_low: float, cdf_up: float, first_moment: float, th: PsiThresholds, blocklength: float, rate_nats: float) -> float:
    """``F(zl) + [1/2 + v sqrt(n) c0] (F(zu) - F(zl)) - v sqrt(n) int_zl^zu x f(x) dx``."""
    vs = th.vartheta * math.sqrt(blocklength)
    return cdf_low + (0.5 + vs * math.expm1(rate_nats)) * (cdf_up - cdf_low) - vs * first_moment


def _first_moment_primitive(model: SinrModel, zeta: float, ctl: SeriesControl) -> float:
    """``int_0^zeta x f(x) dx`` for the interference-dominated SINR density."""
    if zeta <= 0:
        return 0.0
    coef, kappa = channel.shadowed_rician_mixture(model.fade)
    k, eta = model.interference.k, model.interference.eta
    sp = model.snr_scale
    z = zeta * eta * kappa / sp
    total = 0.0
    for l, c in enumerate(coef):
        # c_l Gamma(l+k+1) / (Gamma(k) eta^k sp^{l+1}) * eta^{l+k+1} zeta^{l+2}/(l+2) * 2F1(l+k+1, l+2; l+3; -z)
        logw = (
            math.log(c)
            + special.gammaln(l + k + 1)
            - special.gammaln(k)
            + (l + 1) * math.log(eta / sp)
            + (l + 2) * math.log(zeta)
            - math.log(l + 2)
        )
        total += math.exp(logw) * specfun.hyp2f1(l + k + 1.0, l + 2.0, l + 3.0, -z, ctl)
    return total


def window_first_moment(model: SinrModel, th: PsiThresholds, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Closed form of ``int_{zeta_low}^{zeta_up} x f(x) dx`` via ``2F1``; ``zeta_low`` clamped at 0."""
    lo = max(th.zeta_low, 0.0)
    return _first_moment_primitive(model, th.zeta_up, ctl) - _first_moment_primitive(model, lo, ctl)


def error_prob_closed_form(
    model: SinrModel,
    rate_nats: float,
    blocklength: float,
    ctl: SeriesControl = DEFAULT_CONTROL,
    convention: str = "matched",
) -> FbcResult:
    """Closed-form error probability with the ramp surrogate of the Q-function.

    Combines the series CDF at the ramp end points with the ``2F1`` form of
    the first moment of the SINR over the ramp.
    """
    th = psi_thresholds(rate_nats, blocklength, convention)
    lo = max(th.zeta_low, 0.0)
    f_lo, t_lo = channel.sinr_cdf_series(model, lo, ctl)
    f_up, t_up = channel.sinr_cdf_series(model, th.zeta_up, ctl)
    moment = window_first_moment(model, th, ctl)
    raw = ramp_expression(f_lo, f_up, moment, th, blocklength, rate_nats)
    vs = th.vartheta * math.sqrt(blocklength)
    trunc = t_lo + (0.5 + vs * th.center) * (t_lo + t_up)
    return _result(raw, trunc)


def error_prob_asymptotic(model: SinrModel, rate_nats: float, blocklength: float, convention: str = "matched") -> FbcResult:
    """High-SNR form: the SINR CDF near zero is ``A x`` with ``A = alpha k eta / (phi P)``.

    Integrating the ramp against that linear CDF gives ``A int_0^inf Psi(x) dx``,
    which is ``A (e^R - 1)`` whenever the ramp starts above zero.
    """
    th = psi_thresholds(rate_nats, blocklength, convention)
    fit = model.interference
    slope = model.fade.alpha * fit.k * fit.eta / model.snr_scale
    vs = th.vartheta * math.sqrt(blocklength)
    if th.zeta_low >= 0:
        area = th.center
    else:
        # only the part of the ramp above zero carries probability mass
        area = th.zeta_up * (0.5 + vs * th.center) - 0.5 * vs * th.zeta_up**2
    return _result(slope * area)
