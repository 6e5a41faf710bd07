"""True, accidental and total coincidence rates for one analyzer setting.

Alice's detectors act as triggers: an accidental coincidence is an Alice
count with at least one uncorrelated Bob count inside the window ``w``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ALICE, BOB, ExperimentConfig
from .counting import RateSet, _probabilities, dead_time_corrections, singles_rates
from .polarization import PAIR_LABELS, JointProbabilityTable, pair_index


@dataclass(frozen=True)
class CoincidenceRates:
    """Pair rates (1/s) as 2x2 arrays ``[x_a, y_b]``."""

    true_rate: np.ndarray
    accidental_rate: np.ndarray
    singles: RateSet | None = None
    probabilities: JointProbabilityTable | None = None
    dead_time: tuple[float, float] | None = None

    @property
    def total_rate(self) -> np.ndarray:
        return self.true_rate + self.accidental_rate

    def __getitem__(self, pair) -> float:
        return float(self.total_rate[pair_index(pair)])

    def as_dict(self, which: str = "total_rate") -> dict:
        arr = getattr(self, which)
        return {label: float(arr[pair_index(label)]) for label in PAIR_LABELS}


def _true(config: ExperimentConfig, rates: RateSet, probs: JointProbabilityTable) -> np.ndarray:
    xa = rates.alice("xi")
    xb = rates.bob("xi")
    return np.outer(xa, xb) * probs.p * config.source.lambda_p


def _accidental(config: ExperimentConfig, rates: RateSet, true: np.ndarray) -> np.ndarray:
    w = config.timing.window
    tot_a = rates.alice()
    tot_b = rates.bob()
    acc = np.zeros((2, 2))
    for x in range(2):
        # Bob rates that can fire accidentally, relative to trigger detector x
        n_bob = np.maximum(tot_b - true[x], 0.0)
        q = -np.expm1(-n_bob * w)
        q_star = q * (1.0 - 0.5 * q[::-1])
        for y in range(2):
            n_alice = max(tot_a[x] - true[x, y], 0.0)
            acc[x, y] = q_star[y] * n_alice
    return acc


def true_coincidence_rates(config: ExperimentConfig, setting) -> np.ndarray:
    probs = _probabilities(config, setting)
    return _true(config, singles_rates(config, setting, probs), probs)


def accidental_rates(config: ExperimentConfig, setting) -> np.ndarray:
    probs = _probabilities(config, setting)
    rates = singles_rates(config, setting, probs)
    return _accidental(config, rates, _true(config, rates, probs))


def total_coincidence_rates(config: ExperimentConfig, setting) -> CoincidenceRates:
    probs = _probabilities(config, setting)
    rates = singles_rates(config, setting, probs)
    true = _true(config, rates, probs)
    return CoincidenceRates(
        true_rate=true,
        accidental_rate=_accidental(config, rates, true),
        singles=rates,
        probabilities=probs,
        dead_time=dead_time_corrections(config, setting, probs),
    )


def noise_rates(config: ExperimentConfig, setting) -> tuple[np.ndarray, np.ndarray]:
    """Pair-specific rates that can feed accidentals, ``(n_alice[x, y], n_bob[x, y])``."""
    c = total_coincidence_rates(config, setting)
    tot_a = np.array([c.singles.lambda_tot[d] for d in ALICE])
    tot_b = np.array([c.singles.lambda_tot[d] for d in BOB])
    return tot_a[:, None] - c.true_rate, tot_b[None, :] - c.true_rate
