"""Hard-core interferer field and the Gamma law for aggregate interference.

Interfering ground stations sit on an annulus ``r_in <= r <= r_out`` around
the receiver. Their positions follow a Matérn type-II hard-core process with
retained intensity ``lambda_m``. The aggregate interference
``I = sum_j P_t g_j r_j^{-a}`` is approximated by a Gamma law whose first two
moments match the Campbell-formula moments of the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree

from .errors import DomainError

__all__ = [
    "InterferenceConfig",
    "GammaFit",
    "parent_intensity",
    "retention_probability",
    "sample_mhcpp",
    "sample_mhcpp_batch",
    "aggregate_interference_samples",
    "aggregate_moments",
    "gamma_fit",
    "gamma_fit_from_config",
    "interference_pdf",
    "interference_cdf",
    "log_char_function",
    "annulus_area",
]


@dataclass(frozen=True)
class InterferenceConfig:
    """Geometry and power model of the interferer field.

    ``tx_snr_t`` is the interferer transmit power normalized by receiver noise,
    including the reference path gain at 1 m. Interferer power gains are
    Gamma(``pg_shape``, ``pg_scale``). The default shape 1 with scale
    ``2 * rayleigh_scale**2`` is Rayleigh fading with amplitude scale ``rayleigh_scale``.
    """

    lambda_m: float
    d_min: float
    r_in: float
    r_out: float
    path_loss_exp: float
    tx_snr_t: float
    rayleigh_scale: float = math.sqrt(0.5)
    pg_shape: float = 1.0
    pg_scale: Optional[float] = None

    def __post_init__(self):
        if not self.lambda_m > 0:
            raise DomainError("lambda_m must be positive")
        if not self.d_min >= 0:
            raise DomainError("d_min must be nonnegative")
        if not 0 < self.r_in < self.r_out:
            raise DomainError("need 0 < r_in < r_out")
        if not self.path_loss_exp > 2:
            raise DomainError("path_loss_exp must exceed 2 for finite cumulants")
        if not (self.tx_snr_t > 0 and self.rayleigh_scale > 0 and self.pg_shape > 0):
            raise DomainError("powers and gain parameters must be positive")
        if self.pg_scale is not None and not self.pg_scale > 0:
            raise DomainError("pg_scale must be positive")
        if self.d_min > 0 and self.lambda_m * math.pi * self.d_min**2 >= 1.0:
            raise DomainError(
                "lambda_m * pi * d_min^2 must stay below 1; a type-II hard-core field "
                "cannot reach that density"
            )

    @property
    def gain_scale(self) -> float:
        return 2.0 * self.rayleigh_scale**2 if self.pg_scale is None else self.pg_scale

    @property
    def mean_gain(self) -> float:
        return self.pg_shape * self.gain_scale


@dataclass(frozen=True)
class GammaFit:
    """Gamma law with shape ``k`` and scale ``eta``."""

    k: float
    eta: float

    def __post_init__(self):
        if not (self.k > 0 and self.eta > 0):
            raise DomainError(f"Gamma fit needs k > 0 and eta > 0, got {self.k}, {self.eta}")

    @property
    def mean(self) -> float:
        return self.k * self.eta

    @property
    def variance(self) -> float:
        return self.k * self.eta**2


def annulus_area(r_in: float, r_out: float) -> float:
    return math.pi * (r_out**2 - r_in**2)


def retention_probability(parent: float, d_min: float) -> float:
    """Probability that a type-II parent point survives hard-core thinning."""
    mu = parent * math.pi * d_min**2
    if mu == 0.0:
        return 1.0
    return -math.expm1(-mu) / mu


def parent_intensity(cfg: InterferenceConfig) -> float:
    """Parent Poisson intensity whose type-II thinning retains ``lambda_m``."""
    if cfg.d_min == 0:
        return cfg.lambda_m
    area = math.pi * cfg.d_min**2
    target = cfg.lambda_m * area  # retained mu, must be < 1
    # retained mu as a function of parent mu is 1 - e^{-mu}, so invert in closed form
    return -math.log1p(-target) / area


def _sample_annulus(rng, count, r_lo, r_hi):
    rad = np.sqrt(rng.uniform(r_lo**2, r_hi**2, size=count))
    ang = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return rad, ang


def sample_mhcpp(cfg: InterferenceConfig, seed) -> np.ndarray:
    """One realization of the hard-core field as an ``(N, 2)`` array of positions.

    Parents are drawn on the annulus dilated by ``d_min`` so that points near
    the boundary see their full set of competitors.
    """
    rng = np.random.default_rng(seed)
    return sample_mhcpp_batch(cfg, rng, 1)[0]


def sample_mhcpp_batch(cfg: InterferenceConfig, rng: np.random.Generator, batch: int):
    """``batch`` independent field realizations as a list of ``(N, 2)`` arrays."""
    pos, mask = _batch_fields(cfg, rng, batch)
    return [pos[b][mask[b]] for b in range(batch)]


def _batch_fields(cfg: InterferenceConfig, rng: np.random.Generator, batch: int):
    """Padded batch of retained points: positions ``(B, N, 2)`` and a validity mask."""
    lam_p = parent_intensity(cfg)
    lo = max(cfg.r_in - cfg.d_min, 0.0)
    hi = cfg.r_out + cfg.d_min
    counts = rng.poisson(lam_p * annulus_area(lo, hi), size=batch)
    width = max(int(counts.max()), 1)
    rad, ang = _sample_annulus(rng, (batch, width), lo, hi)
    marks = rng.uniform(size=(batch, width))
    exists = np.arange(width)[None, :] < counts[:, None]
    xy = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
    keep = exists.copy()
    if cfg.d_min > 0 and width > 1:
        # lay the fields side by side, far enough apart that no pair crosses fields
        fid, slot = np.nonzero(exists)
        pts = xy[fid, slot].copy()
        pts[:, 0] += fid * (2.0 * hi + 2.0 * cfg.d_min)
        pairs = cKDTree(pts).query_pairs(cfg.d_min, output_type="ndarray")
        if len(pairs):
            i, j = pairs[:, 0], pairs[:, 1]
            mi, mj = marks[fid[i], slot[i]], marks[fid[j], slot[j]]
            loser = np.where(mi > mj, i, j)
            keep[fid[loser], slot[loser]] = False
    inside = (rad >= cfg.r_in) & (rad <= cfg.r_out)
    return xy, keep & inside


def aggregate_interference_samples(cfg: InterferenceConfig, rng: np.random.Generator, count: int, batch: int = 4096):
    """Independent draws of the aggregate interference over fresh fields."""
    out = np.empty(count)
    done = 0
    while done < count:
        b = min(batch, count - done)
        xy, keep = _batch_fields(cfg, rng, b)
        dist = np.hypot(xy[..., 0], xy[..., 1])
        gains = rng.gamma(cfg.pg_shape, cfg.gain_scale, size=dist.shape)
        contrib = np.where(keep, cfg.tx_snr_t * gains * np.power(np.maximum(dist, cfg.r_in), -cfg.path_loss_exp), 0.0)
        out[done : done + b] = contrib.sum(axis=1)
        done += b
    return out


def aggregate_moments(cfg: InterferenceConfig) -> tuple[float, float]:
    """Mean and variance of the aggregate interference from Campbell's formula.

    The mean holds for any stationary field of intensity ``lambda_m``. The
    variance is the Poisson-field value, which overstates the spread of a
    hard-core field slightly.
    """
    a = cfg.path_loss_exp
    if abs(a - 2.0) < 1e-12 or abs(a - 1.0) < 1e-12:
        raise DomainError("path-loss exponent makes the annulus integral degenerate")
    k, eta = cfg.pg_shape, cfg.gain_scale
    lam, p = cfg.lambda_m, cfg.tx_snr_t
    mean = 2.0 * math.pi * lam * p * k * eta * (cfg.r_out ** (2 - a) - cfg.r_in ** (2 - a)) / (2 - a)
    var = math.pi * lam * p**2 * k * (1 + k) * eta**2 * (cfg.r_out ** (2 - 2 * a) - cfg.r_in ** (2 - 2 * a)) / (1 - a)
    return mean, var


def gamma_fit(mean: float, variance: float) -> GammaFit:
    """Moment-matched Gamma law: ``k = mean^2 / var`` and ``eta = var / mean``."""
    if not (mean > 0 and variance > 0):
        raise DomainError(f"gamma_fit needs positive mean and variance, got {mean}, {variance}")
    return GammaFit(k=mean * mean / variance, eta=variance / mean)


def gamma_fit_from_config(cfg: InterferenceConfig) -> GammaFit:
    return gamma_fit(*aggregate_moments(cfg))


def interference_pdf(fit: GammaFit, x):
    xs = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        logpdf = (fit.k - 1) * np.log(xs) - xs / fit.eta - special.gammaln(fit.k) - fit.k * math.log(fit.eta)
    out = np.where(xs > 0, np.exp(logpdf), 0.0)
    if fit.k < 1:
        out = np.where(xs == 0, np.inf, out)
    elif fit.k == 1:
        out = np.where(xs == 0, 1.0 / fit.eta, out)
    return float(out) if xs.ndim == 0 else out


def interference_cdf(fit: GammaFit, x):
    xs = np.asarray(x, dtype=float)
    out = special.gammainc(fit.k, np.maximum(xs, 0.0) / fit.eta)
    return float(out) if xs.ndim == 0 else out


def log_char_function(cfg: InterferenceConfig, omega: float) -> complex:
    """Log characteristic function of the aggregate interference (Poisson field).

    ``log E[e^{j w I}] = 2 pi lambda int (E_g[e^{j w P g r^-a}] - 1) r dr`` with the
    Gamma power-gain transform ``(1 - j w x eta)^{-k}`` evaluated by quadrature.
    """
    k, eta = cfg.pg_shape, cfg.gain_scale
    p, a = cfg.tx_snr_t, cfg.path_loss_exp

    def integrand(r, part):
        v = (1.0 - 1j * omega * p * r ** (-a) * eta) ** (-k) - 1.0
        return (v.real if part == 0 else v.imag) * r

    re, _ = integrate.quad(integrand, cfg.r_in, cfg.r_out, args=(0,), epsabs=0, epsrel=1e-9, limit=200)
    im, _ = integrate.quad(integrand, cfg.r_in, cfg.r_out, args=(1,), epsabs=0, epsrel=1e-9, limit=200)
    return 2.0 * math.pi * cfg.lambda_m * complex(re, im)
