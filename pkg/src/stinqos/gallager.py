"""Gallager random-coding function and the error-rate QoS exponent.

For a quasi-static SINR ``g`` and Gaussian inputs the random-coding function
is ``rho log(1 + g / (1 + rho))`` per channel use. Averaging the per-codeword
bound over the SINR law gives

    E0(rho) = -(1/n) log E[(1 + g / (1 + rho))^{-n rho}]

and the exponent ``theta_error = sup_rho {E0(rho) - rho R}`` so that the
decoding error probability is at most ``exp(-n theta_error)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import channel, specfun
from .channel import SinrModel
from .errors import DomainError, QuadratureError

__all__ = [
    "ExponentResult",
    "e0_exact",
    "e0_jensen",
    "jensen_components",
    "theta_error",
    "mean_channel_gain",
    "INTERFERER_MEAN_VARIANTS",
]

INTERFERER_MEAN_VARIANTS = ("amplitude", "power")


@dataclass(frozen=True)
class ExponentResult:
    theta_error: float
    rho_star: float
    e0_at_rho: float
    method: str = "exact"

    def error_bound(self, blocklength: float) -> float:
        """``exp(-n theta_error)``."""
        return math.exp(-blocklength * self.theta_error)


def _check_rho(rho: float):
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")


def e0_exact(model: SinrModel, rho: float, blocklength: float, grid_points: int = 8001) -> float:
    """``-(1/n) log E[(1 + g/(1+rho))^{-n rho}]`` by quadrature against the SINR density.

    Composite Simpson on a log-spaced grid; the half-resolution rule serves as
    the error check.
    """
    _check_rho(rho)
    if not blocklength >= 1:
        raise DomainError("blocklength must be at least 1")
    if rho == 0.0:
        return 0.0
    power = blocklength * rho
    scale = 1.0 + rho
    # integrate over t = log x: the weight (1 + x/(1+rho))^{-n rho} cuts off near
    # x ~ (1+rho)/(n rho) and the density tail decays polynomially
    knee = scale / power
    hi = max(model.snr_scale, knee) * 1e8
    t = np.linspace(math.log(knee * 1e-14), math.log(hi), grid_points)
    x = np.exp(t)
    vals = x * np.exp(-power * np.log1p(x / scale)) * channel.sinr_pdf(model, x)
    total = float(integrate.simpson(vals, x=t))
    coarse = float(integrate.simpson(vals[::2], x=t[::2]))
    if not (total > 0 and math.isfinite(total)) or abs(total - coarse) > 1e-6 * total:
        raise QuadratureError(f"E0 quadrature failed (value {total:g}, grid disagreement {abs(total - coarse):g})")
    return -math.log(total) / blocklength


def mean_channel_gain(p: channel.ShadowedRicianParams) -> float:
    """``E|h|^2 = alpha Gamma(2) 2F1(m, 2; 1; delta/beta) / beta^2``."""
    if p.m == 0:
        return p.alpha / p.beta**2
    return p.alpha * specfun.hyp2f1(p.m, 2.0, 1.0, p.delta / p.beta) / p.beta**2


def jensen_components(model: SinrModel, interferer_mean: str = "amplitude") -> tuple[float, float, float]:
    """Mean desired power, mean interference term and ``E[log I]`` used by :func:`e0_jensen`.

    ``"amplitude"`` weights the summed interferer link responses by the
    Rayleigh amplitude mean ``sqrt(pi/2) s``; ``"power"`` uses the power mean,
    which is the fitted interference mean ``k eta``.
    """
    fit = model.interference
    signal = model.snr_scale * mean_channel_gain(model.fade)
    if interferer_mean == "power":
        interf = fit.mean
    elif interferer_mean == "amplitude":
        field = model.field
        if field is None:
            raise DomainError("the amplitude-mean interferer term needs the interferer field configuration")
        link_sum = fit.mean / field.mean_gain  # E[sum_j phi_j P_t]
        interf = math.sqrt(math.pi / 2.0) * field.rayleigh_scale * link_sum
    else:
        raise DomainError(f"unknown interferer-mean variant {interferer_mean!r}")
    log_i = specfun.digamma(fit.k) + math.log(fit.eta)
    return signal, interf, log_i


def e0_jensen(model: SinrModel, rho: float, interferer_mean: str = "amplitude") -> float:
    """Closed-form ``E0`` from Jensen's inequality on the log of the SINR numerator.

    ``rho {log(S + (1+rho)(I + 1)) - E[log I]} - rho log(1+rho)`` with every
    random quantity replaced by its mean except ``E[log I] = psi(k) + log eta``.
    """
    _check_rho(rho)
    if rho == 0.0:
        return 0.0
    signal, interf, log_i = jensen_components(model, interferer_mean)
    return rho * math.log(signal + (1.0 + rho) * interf + 1.0 + rho) - rho * log_i - rho * math.log1p(rho)


def _exact_rho_search(objective, grid_points: int, tol: float):
    grid = np.linspace(0.0, 1.0, grid_points)
    vals = np.array([objective(r) for r in grid])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if objective(m1) < objective(m2):
            lo = m1
        else:
            hi = m2
    r = 0.5 * (lo + hi)
    fr = objective(r)
    return (float(r), float(fr)) if fr >= vals[i] else (float(grid[i]), float(vals[i]))


def theta_error(
    model: SinrModel,
    rate: float,
    blocklength: float,
    use_jensen: bool = False,
    interferer_mean: str = "amplitude",
    grid_points: int = 33,
    tol: float = 1e-6,
) -> ExponentResult:
    """``sup_{rho in [0,1]} {E0(rho) - rho R}``, floored at zero.

    The exact form is concave in ``rho``, so a bracketing grid is refined by
    ternary search. The Jensen form is maximized over the grid only.
    """
    if not rate > 0:
        raise DomainError("rate must be positive")
    if use_jensen:
        e0 = lambda r: e0_jensen(model, r, interferer_mean)
    else:
        cache = {}

        def e0(r):
            if r not in cache:
                cache[r] = e0_exact(model, r, blocklength)
            return cache[r]

    objective = lambda r: e0(float(r)) - float(r) * rate
    if use_jensen:
        grid = np.linspace(0.0, 1.0, grid_points)
        vals = np.array([objective(r) for r in grid])
        i = int(np.argmax(vals))
        rho, best = float(grid[i]), float(vals[i])
    else:
        rho, best = _exact_rho_search(objective, grid_points, tol)
    if best <= 0.0:
        return ExponentResult(0.0, 0.0, 0.0, "jensen" if use_jensen else "exact")
    return ExponentResult(best, rho, e0(rho), "jensen" if use_jensen else "exact")
