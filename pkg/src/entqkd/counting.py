"""Single-detector count statistics: correlated, uncorrelated and dark counts."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import ALICE, BOB, ExperimentConfig, derive_source_rates  # noqa: F401  (re-export)
from .polarization import JointProbabilityTable, joint_probabilities

# exact factorials below this count, lgamma above
_LOG_SPACE_N = 20


def poisson_pmf(rate: float, t: float, n: int) -> float:
    """Probability of ``n`` events of a Poisson process of ``rate`` over time ``t``."""
    if rate < 0 or t < 0 or n < 0:
        raise ValueError("rate, t and n must be non-negative")
    mean = rate * t
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    if n <= _LOG_SPACE_N:
        return mean**n * math.exp(-mean) / math.factorial(n)
    return math.exp(n * math.log(mean) - mean - math.lgamma(n + 1))


@dataclass(frozen=True)
class RateSet:
    """Per-detector rates (1/s) keyed by detector label."""

    lambda_sp: dict
    lambda_tot: dict
    xi: dict

    def alice(self, which: str = "lambda_tot") -> np.ndarray:
        d = getattr(self, which)
        return np.array([d[k] for k in ALICE])

    def bob(self, which: str = "lambda_tot") -> np.ndarray:
        d = getattr(self, which)
        return np.array([d[k] for k in BOB])


def _probabilities(config: ExperimentConfig, setting) -> JointProbabilityTable:
    return joint_probabilities(config.entanglement, config.pbs_a, config.pbs_b, setting)


def raw_channel_rates(config: ExperimentConfig, probs: JointProbabilityTable) -> tuple[float, float]:
    """Mean count rate per channel in the absence of dead time."""
    det = config.detectors
    lp = config.source.lambda_p
    pa, pb = probs.alice_marginal(), probs.bob_marginal()
    n_a = sum(pa[i] * det[d].efficiency * lp + det[d].efficiency * det[d].lambda_u + det[d].lambda_d for i, d in enumerate(ALICE))
    n_b = sum(pb[i] * det[d].efficiency * lp + det[d].efficiency * det[d].lambda_u + det[d].lambda_d for i, d in enumerate(BOB))
    return float(n_a), float(n_b)


def dead_time_corrections(config: ExperimentConfig, setting, probs: JointProbabilityTable | None = None):
    """Non-extending dead-time factors ``(pi_a, pi_b)``.

    Evaluated once from the dead-time-free channel rates, not iterated.
    """
    probs = probs if probs is not None else _probabilities(config, setting)
    n_a, n_b = raw_channel_rates(config, probs)
    d_a = config.channels["a"].dead_time
    d_b = config.channels["b"].dead_time
    t = config.timing.duration
    if max(d_a, d_b) > 0 and t < 1e3 * max(d_a, d_b):
        warnings.warn("measurement time is not much longer than the dead time", stacklevel=2)
    return 1.0 / (1.0 + n_a * d_a), 1.0 / (1.0 + n_b * d_b)


def singles_rates(config: ExperimentConfig, setting, probs: JointProbabilityTable | None = None) -> RateSet:
    probs = probs if probs is not None else _probabilities(config, setting)
    pi_a, pi_b = dead_time_corrections(config, setting, probs)
    lp = config.source.lambda_p
    marg = dict(zip(ALICE, probs.alice_marginal())) | dict(zip(BOB, probs.bob_marginal()))
    xi, sp, tot = {}, {}, {}
    for d, params in config.detectors.items():
        xi[d] = (pi_a if d in ALICE else pi_b) * params.efficiency
        sp[d] = xi[d] * marg[d] * lp
        tot[d] = sp[d] + xi[d] * params.lambda_u + params.lambda_d
    return RateSet(lambda_sp=sp, lambda_tot=tot, xi=xi)
