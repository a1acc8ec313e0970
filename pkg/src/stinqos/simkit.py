"""Monte Carlo ground truth for the analytic bounds.

Samplers for the fade, the interferer field and the SINR, the empirical
decoding error probability, and a FIFO status-update queue with HARQ-IR
service. Every random stream is derived from a master seed and a fixed stream
key, so results do not depend on call order or worker scheduling.

Queue times are in seconds: a round lasts ``n_hat * T``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import fbc
from .channel import ShadowedRicianParams, SinrModel
from .errors import DomainError
from .harq import HarqConfig, rate_after_round
from .interference import InterferenceConfig, aggregate_interference_samples

__all__ = [
    "SimConfig",
    "AoiTrace",
    "BatchMeans",
    "STREAMS",
    "rng_stream",
    "sample_channel_gain",
    "sample_interference",
    "sample_sinr",
    "empirical_error_prob",
    "lindley_departures",
    "sup_form_departures",
    "simulate_aoi_queue",
    "empirical_peak_aoi_violation",
    "empirical_delay_violation",
    "batch_means",
    "replicate",
]

STREAMS = {"fading": 0, "interference": 1, "arrivals": 2, "decode": 3, "replication": 4}


def rng_stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Counter-based generator for stream ``name`` (plus optional integer sub-keys) of ``seed``."""
    if name not in STREAMS:
        raise DomainError(f"unknown stream {name!r}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name],) + tuple(int(e) for e in extra))
    return np.random.Generator(np.random.Philox(ss))


def _as_rng(seed, name: str) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng_stream(seed, name)


@dataclass(frozen=True)
class SimConfig:
    """Sample counts and seed; ``warmup=None`` discards the first 10% of packets."""

    seed: int = 0
    n_samples: int = 100_000
    n_packets: int = 100_000
    warmup: Optional[int] = None

    def __post_init__(self):
        if self.n_samples < 1 or self.n_packets < 1:
            raise DomainError("n_samples and n_packets must be at least 1")
        if self.warmup is not None and not 0 <= self.warmup < self.n_packets:
            raise DomainError("warmup must lie in [0, n_packets)")

    @property
    def warmup_count(self) -> int:
        return self.n_packets // 10 if self.warmup is None else self.warmup


@dataclass
class AoiTrace:
    """Per-packet timeline of the status-update queue.

    ``peak_aoi[u] = (arrival[u] - arrival[u-1]) + sojourn[u]``, with the first
    inter-arrival time measured from time zero. ``warmup`` leading packets are
    excluded from the empirical statistics.
    """

    arrival: np.ndarray
    rounds: np.ndarray
    service: np.ndarray
    departure: np.ndarray
    sojourn: np.ndarray
    peak_aoi: np.ndarray
    warmup: int = 0

    CSV_COLUMNS = ("packet_id", "arrival", "rounds", "service", "departure", "sojourn", "peak_aoi")

    def __len__(self):
        return len(self.arrival)

    def steady(self, column: str) -> np.ndarray:
        vals = getattr(self, column)[self.warmup :]
        if len(vals) == 0:
            raise DomainError("trace is empty after the warmup discard")
        return vals

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_COLUMNS)
            for i in range(len(self)):
                w.writerow(
                    [i, repr(float(self.arrival[i])), int(self.rounds[i])]
                    + [repr(float(getattr(self, c)[i])) for c in ("service", "departure", "sojourn", "peak_aoi")]
                )


# ---------------------------------------------------------------------------
# samplers


def sample_channel_gain(p: ShadowedRicianParams, seed, n: int) -> np.ndarray:
    """Draws of ``|h|^2 = |A e^{j phi} + Z|^2``.

    The line-of-sight power ``A^2`` is Gamma(``m``, ``Omega/m``) (Nakagami-m
    amplitude) and the scatter ``Z`` is circular Gaussian with ``E|Z|^2 = 2b``.
    The phase is absorbed into the scatter by rotational symmetry.
    """
    rng = _as_rng(seed, "fading")
    scat = rng.normal(size=(2, n)) * math.sqrt(p.b)
    if p.m == 0:
        los = np.zeros(n)
    else:
        los = np.sqrt(rng.gamma(p.m, p.omega / p.m, size=n))
    return (los + scat[0]) ** 2 + scat[1] ** 2


def sample_interference(model: SinrModel, seed, n: int, source: Optional[str] = None) -> np.ndarray:
    """Aggregate interference draws from the hard-core field (``"field"``) or the Gamma fit (``"gamma"``).

    The default uses the field when the model carries one.
    """
    rng = _as_rng(seed, "interference")
    source = source or ("field" if model.field is not None else "gamma")
    if source == "field":
        if model.field is None:
            raise DomainError("model has no interferer field configuration")
        return aggregate_interference_samples(model.field, rng, n)
    if source == "gamma":
        return rng.gamma(model.interference.k, model.interference.eta, size=n)
    raise DomainError(f"unknown interference source {source!r}")


def sample_sinr(model: SinrModel, seed, n: int, include_noise: bool = True, source: Optional[str] = None) -> np.ndarray:
    """``phi P |h|^2 / (I + 1)``, or ``/ I`` without the noise term."""
    if isinstance(seed, np.random.Generator):
        fade_rng = intf_rng = seed
    else:
        fade_rng, intf_rng = rng_stream(seed, "fading"), rng_stream(seed, "interference")
    gain = sample_channel_gain(model.fade, fade_rng, n)
    intf = sample_interference(model, intf_rng, n, source)
    return model.snr_scale * gain / (intf + (1.0 if include_noise else 0.0))


def empirical_error_prob(
    model: SinrModel,
    rate_nats: float,
    blocklength: float,
    seed,
    n_samples: int,
    include_noise: bool = True,
    source: Optional[str] = None,
) -> tuple[float, float]:
    """Mean of the normal-approximation error over sampled SINRs, with its standard error."""
    g = sample_sinr(model, seed, n_samples, include_noise, source)
    q = fbc.normal_approx_error(g, blocklength, rate_nats)
    se = float(np.std(q, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.inf
    return float(np.mean(q)), se


# ---------------------------------------------------------------------------
# status-update queue


def lindley_departures(arrival: np.ndarray, service: np.ndarray) -> np.ndarray:
    """FIFO departures by the recursion ``D_u = max(D_{u-1}, A_u) + S_u``."""
    dep = np.empty(len(arrival))
    last = -math.inf
    for u in range(len(arrival)):
        last = max(last, arrival[u]) + service[u]
        dep[u] = last
    return dep


def sup_form_departures(arrival: np.ndarray, service: np.ndarray) -> np.ndarray:
    """FIFO departures as ``D_u = sup_{v <= u} (A_v + S_v + ... + S_u)``.

    With ``C_u = S_0 + ... + S_u`` this is ``C_u + max_{v <= u} (A_v - C_{v-1})``.
    """
    cum = np.cumsum(service)
    prev = np.concatenate([[0.0], cum[:-1]])
    return cum + np.maximum.accumulate(arrival - prev)


def _service_rounds(model: SinrModel, hcfg: HarqConfig, sim: SimConfig, source, include_noise) -> np.ndarray:
    n, L = sim.n_packets, hcfg.max_rounds
    if L == 1:
        return np.ones(n, dtype=np.int64)
    intf = sample_interference(model, rng_stream(sim.seed, "interference"), n, source)
    fade_rng = rng_stream(sim.seed, "fading")
    decode_rng = rng_stream(sim.seed, "decode")
    noise = 1.0 if include_noise else 0.0
    done = np.zeros(n, dtype=bool)
    rounds = np.full(n, L, dtype=np.int64)
    for l in range(1, L):
        gain = sample_channel_gain(model.fade, fade_rng, n)
        sinr = model.snr_scale * gain / (intf + noise)
        fail_p = fbc.normal_approx_error(sinr, l * hcfg.sub_block_len, rate_after_round(hcfg, l))
        ok = decode_rng.uniform(size=n) >= fail_p
        newly = ok & ~done
        rounds[newly] = l
        done |= ok
    return rounds


def simulate_aoi_queue(
    lambda_s: float,
    model: SinrModel,
    hcfg: HarqConfig,
    sim: SimConfig,
    source: Optional[str] = None,
    include_noise: bool = True,
) -> AoiTrace:
    """Poisson status updates served FIFO with HARQ-IR.

    Each packet sees one interferer-field draw; each round draws a fresh fade
    and fails with the normal-approximation error at accumulated blocklength
    ``l n_hat`` and rate ``R_in / l``. A packet still undecoded after
    ``L - 1`` rounds is delivered after round ``L``.
    """
    if not lambda_s > 0:
        raise DomainError("arrival rate must be positive")
    gaps = rng_stream(sim.seed, "arrivals").exponential(1.0 / lambda_s, size=sim.n_packets)
    arrival = np.cumsum(gaps)
    rounds = _service_rounds(model, hcfg, sim, source, include_noise)
    service = rounds * hcfg.round_duration
    departure = lindley_departures(arrival, service)
    sojourn = departure - arrival
    return AoiTrace(
        arrival=arrival,
        rounds=rounds,
        service=service,
        departure=departure,
        sojourn=sojourn,
        peak_aoi=gaps + sojourn,
        warmup=sim.warmup_count,
    )


def empirical_peak_aoi_violation(trace: AoiTrace, a_th_grid: Sequence[float], blocklength: float) -> np.ndarray:
    """Fraction of post-warmup packets with peak AoI above ``a_th / blocklength``."""
    peak = np.sort(trace.steady("peak_aoi"))
    thr = np.asarray(a_th_grid, dtype=float) / blocklength
    return 1.0 - np.searchsorted(peak, thr, side="right") / len(peak)


def empirical_delay_violation(trace: AoiTrace, d_th_grid: Sequence[float], slot: float = 1.0) -> np.ndarray:
    """Fraction of post-warmup packets with sojourn at least ``d_th * slot``."""
    soj = np.sort(trace.steady("sojourn"))
    thr = np.asarray(d_th_grid, dtype=float) * slot
    return 1.0 - np.searchsorted(soj, thr, side="left") / len(soj)


@dataclass(frozen=True)
class BatchMeans:
    mean: float
    stderr: float
    half_width: float
    n_batches: int


def batch_means(values: Sequence[float], n_batches: int = 20, confidence: float = 0.95) -> BatchMeans:
    """Batch-means estimate of the mean of a correlated sequence with a t-interval."""
    x = np.asarray(values, dtype=float)
    if n_batches < 2 or len(x) < n_batches:
        raise DomainError("need at least 2 batches and one value per batch")
    size = len(x) // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    se = float(np.std(means, ddof=1) / math.sqrt(n_batches))
    half = float(stats.t.ppf(0.5 + confidence / 2.0, n_batches - 1) * se)
    return BatchMeans(float(means.mean()), se, half, n_batches)


def replicate(func: Callable[[int], object], seed: int, count: int, workers: int = 1) -> list:
    """Run ``func(derived_seed)`` for ``count`` replications; results come back in replication order."""
    root = np.random.SeedSequence(int(seed), spawn_key=(STREAMS["replication"],))
    seeds = [int(s.generate_state(1, dtype=np.uint64)[0]) for s in root.spawn(count)]
    if workers <= 1:
        return [func(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, seeds))
