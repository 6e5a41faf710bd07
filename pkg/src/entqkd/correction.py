"""Iterative pair-parity error correction on a sifted key.

Each pass groups the key into disjoint random pairs and compares pair
parities publicly. Pairs with differing parity are dropped; for pairs with
matching parity one bit is dropped (it is revealed by the parity) and one is
kept. A kept bit is wrong only if both bits of its pair were wrong.

Bits are tracked in three classes: wrong bits (all taken to come from
accidental coincidences), correct bits from accidental coincidences, and
correct bits from true coincidences. Parity comparison cannot tell the two
correct classes apart, so the accidental share of correct bits never drops.
"""
from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_TARGET = 0.01
DEFAULT_MAX_PASSES = 20


class UncorrectableError(ValueError):
    """QBER above 1/2: parity comparison amplifies errors instead of removing them."""


@dataclass(frozen=True)
class PassState:
    key: float
    qber: float
    qabr: float


@dataclass(frozen=True)
class CorrectionResult:
    passes: int
    corrected_key: float
    residual_qber: float
    residual_qabr: float
    target_qber: float
    converged: bool
    history: tuple = field(default=(), repr=False)


def parity_pass(key: float, qber: float, qabr: float) -> PassState:
    """Expected key size, QBER and QABR after one pair-parity pass."""
    e = qber
    acc_correct = max(qabr - qber, 0.0)
    agree = e * e + (1 - e) ** 2
    if agree == 0:
        return PassState(0.0, 0.0, 0.0)
    new_e = e * e / agree
    # correct kept bits keep their accidental share acc_correct / (1 - e)
    new_acc_correct = (1 - e) * acc_correct / agree
    return PassState(key * agree / 2, new_e, new_e + new_acc_correct)


def correct(
    key: float,
    qber: float,
    qabr: float,
    target: float = DEFAULT_TARGET,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> CorrectionResult:
    """Apply parity passes until the QBER is at or below ``target``."""
    if not 0.0 <= qber <= 0.5:
        raise UncorrectableError(f"QBER {qber:.4g} is outside [0, 1/2]")
    if target <= 0:
        raise ValueError("target must be positive")
    state = PassState(float(key), float(qber), float(qabr))
    history = [state]
    passes = 0
    while state.qber > target and passes < max_passes:
        state = parity_pass(state.key, state.qber, state.qabr)
        history.append(state)
        passes += 1
    return CorrectionResult(
        passes=passes,
        corrected_key=state.key,
        residual_qber=state.qber,
        residual_qabr=state.qabr,
        target_qber=target,
        converged=state.qber <= target,
        history=tuple(history),
    )
