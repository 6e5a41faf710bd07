"""CHSH and Wigner test parameters and their normalized security margins."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .protocols import RateFn, analytic_rates

S_QUANTUM = 2 * math.sqrt(2)
S_EVE = math.sqrt(2)
W_QUANTUM = -1 / 8
W_EVE = 1 / 16

# The Wigner eavesdropping bound only covers attacks on one photon of the
# pair; for total eavesdropping no bound exists and w_norm says nothing.
W_NORM_COVERS_TOTAL_EAVESDROPPING = False


class NormalizationError(ZeroDivisionError):
    """Raised when the total coincidence rate at a setting is zero."""


@dataclass(frozen=True)
class SecurityResult:
    s: float
    s_prime: float
    w_param: float
    s_norm: float
    w_norm: float
    w_norm_total_eavesdropping_bound: bool = W_NORM_COVERS_TOTAL_EAVESDROPPING


def _rates(config, rates):
    return rates or analytic_rates(config)


def normalized_coincidence(config: ExperimentConfig, theta_a: float, theta_b: float, *, rates: RateFn | None = None) -> np.ndarray:
    """Fraction of all coincidences at this setting seen by each pair, ``M[x, y]``."""
    lam = np.asarray(_rates(config, rates)(theta_a, theta_b).total_rate, dtype=float)
    total = lam.sum()
    if not total > 0:
        raise NormalizationError(f"no coincidences at setting ({theta_a:.6g}, {theta_b:.6g})")
    return lam / total


def _corr(m: np.ndarray) -> float:
    return float(m[0, 0] - m[0, 1] + m[1, 1] - m[1, 0])


def correlation(config: ExperimentConfig, theta_a: float, theta_b: float, *, rates: RateFn | None = None) -> float:
    return _corr(normalized_coincidence(config, theta_a, theta_b, rates=rates))


def chsh(config: ExperimentConfig, theta_a: float | None = None, *, rates: RateFn | None = None) -> tuple[float, float]:
    th = config.theta_a if theta_a is None else theta_a
    rates = _rates(config, rates)
    p8 = math.pi / 8

    def E(da, db):
        return correlation(config, th + da * p8, th + db * p8, rates=rates)

    s = E(0, 1) - E(0, 3) + E(2, 1) + E(2, 3)
    s_prime = E(1, 2) - E(1, 4) + E(3, 2) + E(3, 4)
    return s, s_prime


def wigner(config: ExperimentConfig, theta_a: float | None = None, *, rates: RateFn | None = None) -> float:
    th = config.theta_a if theta_a is None else theta_a
    rates = _rates(config, rates)
    p6 = math.pi / 6

    def m11(ta, tb):
        return normalized_coincidence(config, ta, tb, rates=rates)[0, 0]

    return float(m11(th - p6, th) + m11(th, th + p6) - m11(th - p6, th + p6))


def normalized_margins(s: float, s_prime: float, w: float) -> tuple[float, float]:
    """Map ``|S|`` and ``W`` onto [eavesdropping limit -> 0, quantum limit -> 1].

    ``s_prime`` is accepted for symmetry with :func:`chsh`; the margin uses ``S``.
    """
    s_norm = (abs(s) - S_EVE) / (S_QUANTUM - S_EVE)
    w_norm = (w - W_EVE) / (W_QUANTUM - W_EVE)
    return s_norm, w_norm


def evaluate(config: ExperimentConfig, theta_a: float | None = None, *, rates: RateFn | None = None) -> SecurityResult:
    rates = _rates(config, rates)
    s, s_prime = chsh(config, theta_a, rates=rates)
    w = wigner(config, theta_a, rates=rates)
    s_norm, w_norm = normalized_margins(s, s_prime, w)
    return SecurityResult(s, s_prime, w, s_norm, w_norm)
