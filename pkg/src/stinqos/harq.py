"""HARQ with incremental redundancy: per-round rates and the round-count law.

A codeword of ``L * n_hat`` channel uses is sent in ``L`` sub-blocks of
``n_hat`` uses each. After round ``l`` the receiver has ``l * n_hat`` symbols,
so the effective rate is ``R_in / l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import fbc
from .channel import SinrModel
from .errors import DomainError

__all__ = [
    "HarqConfig",
    "rate_after_round",
    "round_count_pmf",
    "expected_rounds",
    "expected_rounds_bound",
    "round_error_probs",
]


@dataclass(frozen=True)
class HarqConfig:
    """``sub_block_len`` channel uses per round, at most ``max_rounds`` rounds.

    ``initial_rate`` is the first-round rate in nats per channel use and
    ``symbol_time`` the duration of one channel use in seconds.
    """

    sub_block_len: int
    max_rounds: int
    initial_rate: float
    symbol_time: float

    def __post_init__(self):
        if not self.sub_block_len >= 1:
            raise DomainError("sub_block_len must be at least 1")
        if int(self.max_rounds) != self.max_rounds or self.max_rounds < 1:
            raise DomainError("max_rounds must be a positive integer")
        if not (self.initial_rate > 0 and self.symbol_time > 0):
            raise DomainError("initial_rate and symbol_time must be positive")

    @property
    def round_duration(self) -> float:
        """Seconds taken by one round of ``sub_block_len`` channel uses."""
        return self.sub_block_len * self.symbol_time

    @property
    def payload_nats(self) -> float:
        return self.initial_rate * self.sub_block_len


def rate_after_round(cfg: HarqConfig, l: int) -> float:
    if int(l) != l or not 1 <= l <= cfg.max_rounds:
        raise DomainError(f"round index must be in 1..{cfg.max_rounds}, got {l}")
    return cfg.initial_rate / l


def _check_errs(errs: Sequence[float]) -> np.ndarray:
    e = np.asarray(errs, dtype=float).ravel()
    if np.any(~((e >= 0) & (e <= 1))):
        raise DomainError("round error probabilities must lie in [0, 1]")
    return e


def round_count_pmf(errs: Sequence[float]) -> np.ndarray:
    """Law of the number of rounds used, for ``errs`` = failure probability after rounds ``1..L-1``.

    Rounds fail independently with the given probabilities and the last round
    always ends the transmission. Entry ``l-1`` of the result is ``Pr{rounds = l}``.
    """
    e = _check_errs(errs)
    survive = np.concatenate([[1.0], np.cumprod(e)])  # Pr{first l rounds all fail}
    pmf = survive.copy()
    pmf[:-1] -= survive[1:]
    return pmf


def expected_rounds(errs: Sequence[float]) -> float:
    pmf = round_count_pmf(errs)
    return float(np.dot(np.arange(1, len(pmf) + 1), pmf))


def expected_rounds_bound(errs: Sequence[float]) -> float:
    """``1 + sum_l eps_l``, an upper bound on the mean number of rounds."""
    return 1.0 + float(np.sum(_check_errs(errs)))


def round_error_probs(model: SinrModel, cfg: HarqConfig, method: str = "closed-form") -> np.ndarray:
    """Failure probability after each of rounds ``1..L-1``.

    Round ``l`` is evaluated at accumulated blocklength ``l * n_hat`` and rate
    ``R_in / l``. ``method`` selects the closed form, the averaged normal
    approximation (``"normal"``) or the high-SNR form (``"asymptotic"``).
    """
    out = []
    for l in range(1, cfg.max_rounds):
        n = l * cfg.sub_block_len
        rate = rate_after_round(cfg, l)
        if method == "closed-form":
            out.append(fbc.error_prob_closed_form(model, rate, n).value)
        elif method == "normal":
            out.append(fbc.error_prob_normal(model, fbc.FbcConfig(n, rate)).value)
        elif method == "asymptotic":
            out.append(fbc.error_prob_asymptotic(model, rate, n).value)
        else:
            raise DomainError(f"unknown error-probability method {method!r}")
    return np.array(out, dtype=float)
