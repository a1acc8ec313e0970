"""Mellin-transform tail bounds for peak AoI and queueing delay.

Time quantities are in the units of ``HarqConfig.symbol_time`` (one round of
HARQ lasts ``n_hat * T``). A peak-AoI threshold ``a_th`` in channel uses at
blocklength ``n`` corresponds to ``a_th / n`` on the time axis, and every
peak-AoI bound decays as ``exp(-theta a_th / n)``.

Mellin transforms ``M_X(s) = E[X^{s-1}]`` are taken of exponentiated
quantities, so ``M_{e^T}(1 + theta) = E[e^{theta T}]``. Every Mellin helper
takes the full order ``s`` to keep the ``1 + theta`` / ``1 - theta`` bookkeeping
explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import fbc, harq
from .channel import SinrModel
from .errors import DomainError, StabilityError
from .specfun import DEFAULT_CONTROL, SeriesControl

__all__ = [
    "SigmaRhoEnvelope",
    "AoiQosQuery",
    "DelayQosQuery",
    "BoundResult",
    "gi_envelope",
    "mellin_exp_interarrival",
    "exp_interarrival_mgf",
    "peak_aoi_bound_gg",
    "peak_aoi_bound_gigi",
    "peak_aoi_poisson",
    "harq_service_mgf",
    "peak_aoi_harq",
    "peak_aoi_asymptotic",
    "service_mellin_fbc",
    "poisson_arrival_mellin",
    "delay_kernel",
    "delay_violation_bound",
    "harq_delay_bound",
    "optimize_theta",
    "optimized_peak_aoi_harq",
    "mean_peak_aoi",
    "VARIANTS",
]

VARIANTS = ("theorem", "paper")


@dataclass(frozen=True)
class SigmaRhoEnvelope:
    """Affine log-MGF envelope: ``log E[e^{t X(v,u)}] <= t [(u-v) rho(t) + sigma(t)]``.

    Both callables are evaluated at signed exponents; arrival envelopes are
    queried at ``-theta`` as well as ``theta``.
    """

    sigma: Callable[[float], float]
    rho: Callable[[float], float]


def gi_envelope(log_mgf: Callable[[float], float]) -> SigmaRhoEnvelope:
    """Envelope of an i.i.d. sequence: ``sigma = 0`` and ``rho(t) = log E[e^{tX}] / t``."""
    return SigmaRhoEnvelope(sigma=lambda t: 0.0, rho=lambda t: log_mgf(t) / t)


@dataclass(frozen=True)
class AoiQosQuery:
    theta_aoi: float
    a_th: float
    blocklength: float

    def __post_init__(self):
        if not self.theta_aoi > 0:
            raise DomainError("theta_aoi must be positive")
        if not self.a_th > 0:
            raise DomainError("a_th must be positive")
        if not self.blocklength >= 1:
            raise DomainError("blocklength must be at least 1")

    @property
    def threshold_time(self) -> float:
        return self.a_th / self.blocklength


@dataclass(frozen=True)
class DelayQosQuery:
    """Delay threshold ``d_th`` in slots; ``delta_s`` bounds Pr{queue non-empty}."""

    theta_delay: float
    d_th: float
    delta_s: float = 1.0

    def __post_init__(self):
        if not self.theta_delay > 0:
            raise DomainError("theta_delay must be positive")
        if not self.d_th >= 0:
            raise DomainError("d_th must be nonnegative")
        if not 0 < self.delta_s <= 1:
            raise DomainError("delta_s must lie in (0, 1]")


@dataclass(frozen=True)
class BoundResult:
    """A tail bound clamped to [0, 1].

    ``raw`` is the unclamped value and ``log_value`` its natural log, which
    stays finite and informative when ``raw`` under- or overflows.
    """

    value: float
    theta_used: float
    stability_margin: float
    log_value: float
    raw: float
    notes: tuple = field(default_factory=tuple)

    def __float__(self):
        return self.value


def _finish(log_raw: float, theta: float, margin: float, notes=()) -> BoundResult:
    if not margin > 0:
        raise StabilityError(f"stability condition violated (margin {margin:g})", margin=margin)
    notes = tuple(notes)
    raw = math.exp(min(log_raw, 700.0))
    if log_raw > 0:
        notes += ("clamped to 1",)
    return BoundResult(
        value=min(raw, 1.0), theta_used=theta, stability_margin=margin, log_value=log_raw, raw=raw, notes=notes
    )


# ---------------------------------------------------------------------------
# peak AoI


def exp_interarrival_mgf(lambda_s: float, t: float) -> float:
    """``E[e^{t T}]`` for exponential inter-arrival times with rate ``lambda_s`` (``t < lambda_s``)."""
    if not lambda_s > 0:
        raise DomainError("arrival rate must be positive")
    if not t < lambda_s:
        raise StabilityError(f"exponent {t} reaches the arrival-rate pole {lambda_s}", margin=lambda_s - t)
    return lambda_s / (lambda_s - t)


def mellin_exp_interarrival(lambda_s: float, theta: float) -> float:
    """Mellin transform of order ``1 + theta`` of ``e^T``, ``T ~ Exp(lambda_s)``: ``lambda/(lambda - theta)``."""
    return exp_interarrival_mgf(lambda_s, theta)


def peak_aoi_bound_gg(arr: SigmaRhoEnvelope, srv: SigmaRhoEnvelope, q: AoiQosQuery) -> BoundResult:
    """Peak-AoI bound ``xi e^{-theta a_th / n}`` for envelope-constrained inter-arrival and service times."""
    th = q.theta_aoi
    rho_i_neg = arr.rho(-th)
    rho_s = srv.rho(th)
    margin = rho_i_neg - rho_s
    if not margin > 0:
        raise StabilityError("need rho_S(theta) < rho_I(-theta)", margin=margin)
    log_num = th * (arr.rho(th) + arr.sigma(th)) + th * (arr.sigma(-th) + rho_s + srv.sigma(th))
    log_den = math.log(-math.expm1(-th * margin))
    return _finish(log_num - log_den - th * q.threshold_time, th, margin)


def peak_aoi_bound_gigi(m_interarrival: float, m_interarrival_neg: float, m_service: float, q: AoiQosQuery) -> BoundResult:
    """Peak-AoI bound for i.i.d. inter-arrival and service times.

    Arguments are ``E[e^{theta T_I}]``, ``E[e^{-theta T_I}]`` and ``E[e^{theta T_S}]``.
    """
    prod = m_interarrival_neg * m_service
    margin = 1.0 - prod
    if not margin > 0:
        raise StabilityError("need M_I(1-theta) M_S(1+theta) < 1", margin=margin)
    if m_service == 0.0:
        return BoundResult(0.0, q.theta_aoi, margin, -math.inf, 0.0)
    log_raw = math.log(m_interarrival) + math.log(m_service) - math.log(margin) - q.theta_aoi * q.threshold_time
    return _finish(log_raw, q.theta_aoi, margin)


def peak_aoi_poisson(lambda_s: float, m_service: float, q: AoiQosQuery, variant: str = "theorem") -> BoundResult:
    """Peak-AoI bound for Poisson status updates.

    ``"theorem"`` is the i.i.d. bound with exponential inter-arrivals.
    ``"paper"`` is ``lambda e^{-theta a/n} M_S / (lambda - theta)`` without the
    geometric-series denominator; it only needs ``theta < lambda``.
    """
    th = q.theta_aoi
    m_pos = exp_interarrival_mgf(lambda_s, th)
    if variant == "theorem":
        return peak_aoi_bound_gigi(m_pos, lambda_s / (lambda_s + th), m_service, q)
    if variant == "paper":
        log_raw = math.log(m_pos) + math.log(m_service) - th * q.threshold_time
        res = _finish(log_raw, th, lambda_s - th, ("no queueing denominator",))
        return res
    raise DomainError(f"unknown variant {variant!r}")


def harq_service_mgf(errs: Sequence[float], hcfg: harq.HarqConfig, theta: float) -> float:
    """``E[e^{theta S}]`` for HARQ service ``S = rounds * n_hat * T``."""
    pmf = harq.round_count_pmf(errs)
    rounds = np.arange(1, len(pmf) + 1)
    return float(np.dot(pmf, np.exp(theta * hcfg.round_duration * rounds)))


def _check_rounds(errs, hcfg):
    errs = np.asarray(errs, dtype=float)
    if len(errs) != hcfg.max_rounds - 1:
        raise DomainError(f"expected {hcfg.max_rounds - 1} round error probabilities, got {len(errs)}")
    return errs


def _harq_from_errs(errs, hcfg, lambda_s, q, variant, extra_notes=()):
    th = q.theta_aoi
    if variant == "theorem":
        res = peak_aoi_poisson(lambda_s, harq_service_mgf(errs, hcfg, th), q, "theorem")
    elif variant == "paper":
        # service enters through exp(theta * E-bound on service time)
        log_service = th * hcfg.round_duration * harq.expected_rounds_bound(errs)
        log_raw = math.log(exp_interarrival_mgf(lambda_s, th)) + log_service - th * q.threshold_time
        res = _finish(log_raw, th, lambda_s - th, ("no queueing denominator", "mean-service exponent"))
    else:
        raise DomainError(f"unknown variant {variant!r}")
    if extra_notes:
        res = BoundResult(res.value, res.theta_used, res.stability_margin, res.log_value, res.raw, res.notes + tuple(extra_notes))
    return res


def peak_aoi_harq(
    model: SinrModel,
    hcfg: harq.HarqConfig,
    lambda_s: float,
    q: AoiQosQuery,
    ctl: SeriesControl = DEFAULT_CONTROL,
    variant: str = "theorem",
    errs: Optional[Sequence[float]] = None,
) -> BoundResult:
    """Peak-AoI bound with HARQ-IR service.

    Round error probabilities come from the closed form at accumulated
    blocklength ``l * n_hat`` and rate ``R_in / l`` unless given in ``errs``.
    ``"theorem"`` uses the exact round-count law in ``E[e^{theta S}]`` together
    with the queueing denominator. ``"paper"`` uses
    ``lambda/(lambda-theta) e^{-theta a/n} exp(theta n_hat T (1 + sum eps))``.
    """
    if errs is None:
        errs = [
            fbc.error_prob_closed_form(model, harq.rate_after_round(hcfg, l), l * hcfg.sub_block_len, ctl).value
            for l in range(1, hcfg.max_rounds)
        ]
    errs = _check_rounds(errs, hcfg)
    return _harq_from_errs(errs, hcfg, lambda_s, q, variant)


def peak_aoi_asymptotic(
    model: SinrModel, hcfg: harq.HarqConfig, lambda_s: float, q: AoiQosQuery, variant: str = "theorem"
) -> BoundResult:
    """High-SNR form of :func:`peak_aoi_harq` with the asymptotic round error probabilities."""
    errs = [
        fbc.error_prob_asymptotic(model, harq.rate_after_round(hcfg, l), l * hcfg.sub_block_len).value
        for l in range(1, hcfg.max_rounds)
    ]
    return _harq_from_errs(np.asarray(errs), hcfg, lambda_s, q, variant)


# ---------------------------------------------------------------------------
# delay


def service_mellin_fbc(eps: float, codebook_bits: float, order: float) -> float:
    """Mellin transform of ``e^S`` for ``S = bits`` w.p. ``1-eps`` and 0 otherwise, at ``order``."""
    if not 0 <= eps <= 1:
        raise DomainError("eps must lie in [0, 1]")
    return eps + (1.0 - eps) * math.exp((order - 1.0) * codebook_bits)


def poisson_arrival_mellin(lam: float, order: float, unit: float = 1.0, literal: bool = False) -> float:
    """Mellin transform of ``e^{unit N}``, ``N ~ Poisson(lam)``: ``exp(lam (e^{(order-1) unit} - 1))``.

    ``literal=True`` evaluates the per-slot form as if the order had already
    been shifted by one, ``exp(lam (e^{(order-2) unit} - 1))``.
    """
    if not lam >= 0:
        raise DomainError("arrival rate must be nonnegative")
    shift = 2.0 if literal else 1.0
    try:
        return math.exp(lam * math.expm1((order - shift) * unit))
    except OverflowError:
        return math.inf


def delay_kernel(arrival_mellin, service_mellin, theta: float, d_th: float) -> tuple[float, float]:
    """``log K`` and the stability margin of ``M_S(1-t)^D / (1 - M_A(1+t) M_S(1-t))``."""
    ms = service_mellin(1.0 - theta)
    prod = arrival_mellin(1.0 + theta) * ms
    margin = 1.0 - prod
    if not margin > 0 or ms <= 0:
        return math.inf, margin
    log_k = (d_th * math.log(ms) if d_th > 0 else 0.0) - math.log(margin)
    return log_k, margin


def delay_violation_bound(arrival_mellin, service_mellin, q: DelayQosQuery, theta_grid: Optional[Sequence[float]] = None) -> BoundResult:
    """``delta_s * inf_theta K(theta, D_th)`` over ``theta_grid`` (default: the query's theta only)."""
    grid = [q.theta_delay] if theta_grid is None else list(theta_grid)
    best = (math.inf, None, -math.inf)
    worst_margin = -math.inf
    for t in grid:
        if not t > 0:
            continue
        log_k, margin = delay_kernel(arrival_mellin, service_mellin, t, q.d_th)
        worst_margin = max(worst_margin, margin)
        if log_k < best[0]:
            best = (log_k, t, margin)
    if best[1] is None:
        raise StabilityError("no exponent in the grid satisfies M_A(1+t) M_S(1-t) < 1", margin=worst_margin)
    return _finish(math.log(q.delta_s) + best[0], best[1], best[2])


def harq_delay_bound(
    errs: Sequence[float],
    hcfg: harq.HarqConfig,
    lambda_s: float,
    d_th: float,
    delta_s: float = 1.0,
    theta: Optional[float] = None,
    offset: float = 1.0,
) -> BoundResult:
    """Bound on ``Pr{sojourn >= d_th rounds}`` for the HARQ status-update queue.

    The queue is dominated by a slotted system with slot ``n_hat * T``: each
    slot serves one packet of ``B = R_in n_hat / ln 2`` bits with probability
    ``1 - max_l eps_l`` and Poisson(``lambda * slot``) packets arrive per slot.
    Slot alignment costs at most one slot, so the kernel is evaluated at
    ``d_th - offset``. ``theta`` (per bit) is optimized when not given.
    """
    errs = _check_rounds(errs, hcfg)
    eps_bar = float(np.max(errs)) if len(errs) else 0.0
    bits = hcfg.payload_nats / math.log(2.0)
    lam_slot = lambda_s * hcfg.round_duration
    arr = lambda s: poisson_arrival_mellin(lam_slot, s, bits)
    srv = lambda s: service_mellin_fbc(eps_bar, bits, s)
    d_eff = max(d_th - offset, 0.0)
    if theta is not None:
        return delay_violation_bound(arr, srv, DelayQosQuery(theta, d_eff, delta_s))

    def objective(t):
        return delay_kernel(arr, srv, t, d_eff)[0]

    t_best = optimize_theta(objective, 1e-4 / bits, 20.0 / bits)
    return delay_violation_bound(arr, srv, DelayQosQuery(t_best, d_eff, delta_s))


# ---------------------------------------------------------------------------
# exponent optimization


def optimize_theta(log_objective: Callable[[float], float], lo: float, hi: float, grid_points: int = 64, tol: float = 1e-10) -> float:
    """Minimize a log-bound over ``theta`` in ``[lo, hi]``.

    A log-spaced grid locates the best cell and golden-section search refines
    it. Infeasible exponents should return ``inf``.
    """
    if not 0 < lo < hi:
        raise DomainError("need 0 < lo < hi")
    grid = np.geomspace(lo, hi, grid_points)
    vals = np.array([log_objective(float(t)) for t in grid])
    if not np.any(np.isfinite(vals)):
        raise StabilityError("no feasible exponent on the search grid")
    i = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.inf)))
    a = math.log(grid[max(i - 1, 0)])
    b = math.log(grid[min(i + 1, grid_points - 1)])
    f = lambda u: log_objective(math.exp(u))
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    best_u = 0.5 * (a + b)
    return math.exp(best_u) if f(best_u) <= vals[i] else float(grid[i])


def optimized_peak_aoi_harq(errs, hcfg: harq.HarqConfig, lambda_s: float, a_th: float, blocklength: float) -> BoundResult:
    """Theorem-form HARQ peak-AoI bound minimized over ``theta in (0, lambda)``."""
    errs = _check_rounds(errs, hcfg)

    def objective(t):
        try:
            return _harq_from_errs(errs, hcfg, lambda_s, AoiQosQuery(t, a_th, blocklength), "theorem").log_value
        except StabilityError:
            return math.inf

    t_best = optimize_theta(objective, lambda_s * 1e-6, lambda_s * (1 - 1e-9))
    res = _harq_from_errs(errs, hcfg, lambda_s, AoiQosQuery(t_best, a_th, blocklength), "theorem")
    return BoundResult(res.value, res.theta_used, res.stability_margin, res.log_value, res.raw, res.notes + ("theta optimized",))


def mean_peak_aoi(errs: Sequence[float], hcfg: harq.HarqConfig, lambda_s: float) -> float:
    """Mean peak AoI of the M/G/1 status-update queue with HARQ service.

    Mean inter-arrival time plus mean sojourn from the Pollaczek-Khinchine formula.
    """
    pmf = harq.round_count_pmf(errs)
    rounds = np.arange(1, len(pmf) + 1) * hcfg.round_duration
    m1 = float(np.dot(pmf, rounds))
    m2 = float(np.dot(pmf, rounds**2))
    load = lambda_s * m1
    if not load < 1:
        raise StabilityError("queue load must stay below 1", margin=1 - load)
    return 1.0 / lambda_s + m1 + lambda_s * m2 / (2.0 * (1.0 - load))
