"""Two-photon polarization state, analyzer rotations and real-PBS coupling.

Basis conventions used throughout the package:

* polarization space (4-dim): ``HH, HV, VH, VV`` with Alice's photon first;
* PBS port space (4-dim): ``(1a,1b), (1a,2b), (2a,1b), (2a,2b)`` where port 1
  is the transmitted output of a PBS (towards detector 1) and port 2 the
  reflected output (towards detector 2);
* the joint 16-dim space is ``port (outer) x polarization (inner)``, so the
  coupling unitary splits into 4x4 polarization-diagonal blocks indexed by
  (output ports, input ports).

Pair-indexed quantities are stored as 2x2 arrays ``[x_a, y_b]`` with index 0
for detector 1 and index 1 for detector 2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

DETECTORS = ("1a", "2a", "1b", "2b")
PAIRS = (("1a", "1b"), ("1a", "2b"), ("2a", "1b"), ("2a", "2b"))
PAIR_LABELS = tuple(a + b for a, b in PAIRS)

# |epsilon| above this is almost certainly a unit/typing mistake
EPSILON_WARN = 10.0


def pair_index(pair: str | tuple[str, str]) -> tuple[int, int]:
    """Map ``"1a2b"`` or ``("1a", "2b")`` to the 2x2 array index ``(0, 1)``."""
    if isinstance(pair, str):
        if len(pair) != 4:
            raise KeyError(pair)
        pair = (pair[:2], pair[2:])
    a, b = pair
    if a not in ("1a", "2a") or b not in ("1b", "2b"):
        raise KeyError(pair)
    return int(a[0]) - 1, int(b[0]) - 1


@dataclass(frozen=True)
class EntanglementParams:
    """Imbalance ``epsilon`` and decoherence factor ``zeta`` of the source state."""

    epsilon: complex = 1.0
    zeta: complex = 1.0

    def __post_init__(self):
        if abs(self.zeta) > 1.0 + 1e-12:
            raise ValueError(f"|zeta| must be <= 1, got {abs(self.zeta):.6g}")
        if abs(self.epsilon) > EPSILON_WARN:
            warnings.warn(f"|epsilon| = {abs(self.epsilon):.3g} is far from 1", stacklevel=3)


@dataclass(frozen=True)
class PbsParams:
    """Lossless polarizing beam splitter.

    ``t_mag`` and ``tperp_mag`` are the amplitude transmittances for H and V.
    Transmitted amplitudes are taken real and reflected amplitudes purely
    imaginary (``r/t = i|r|/|t|``), which makes the port coupling unitary.
    """

    t_mag: float = 1.0
    tperp_mag: float = 0.0

    def __post_init__(self):
        for name in ("t_mag", "tperp_mag"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def from_intensity(cls, t2: float, tperp2: float) -> "PbsParams":
        return cls(math.sqrt(t2), math.sqrt(tperp2))

    @classmethod
    def ideal(cls) -> "PbsParams":
        return cls(1.0, 0.0)

    @property
    def t(self) -> complex:
        return complex(self.t_mag)

    @property
    def r(self) -> complex:
        return 1j * math.sqrt(max(0.0, 1.0 - self.t_mag**2))

    @property
    def tperp(self) -> complex:
        return complex(self.tperp_mag)

    @property
    def rperp(self) -> complex:
        return 1j * math.sqrt(max(0.0, 1.0 - self.tperp_mag**2))

    def coupling(self) -> dict[str, tuple[complex, complex]]:
        """Scaled amplitudes ``(T, R)`` per polarization, ``T = t/(t^2 - r^2)``.

        Under the phase convention ``t^2 - r^2 = 1`` so ``T = t`` and ``R = r``.
        """
        out = {}
        for pol, (t, r) in {"H": (self.t, self.r), "V": (self.tperp, self.rperp)}.items():
            den = t * t - r * r
            out[pol] = (t / den, r / den)
        return out

    def port_matrix(self, pol: str) -> np.ndarray:
        """2x2 input-port -> output-port amplitude matrix for one polarization."""
        T, R = self.coupling()[pol]
        return np.array([[T, R], [R, T]], dtype=complex)

    def detector_weights(self) -> np.ndarray:
        """``w[x, pol]``: probability that a photon of polarization pol reaches detector x."""
        c = self.coupling()
        return np.array(
            [
                [abs(c["H"][0]) ** 2, abs(c["V"][0]) ** 2],
                [abs(c["H"][1]) ** 2, abs(c["V"][1]) ** 2],
            ]
        )


@dataclass(frozen=True)
class AnalyzerSetting:
    theta_a: float
    theta_b: float


@dataclass(frozen=True)
class JointProbabilityTable:
    """Lossless detection probabilities ``p[x_a, y_b]`` for one setting pair."""

    p: np.ndarray

    def __getitem__(self, pair) -> float:
        if isinstance(pair, tuple) and all(isinstance(i, (int, np.integer)) for i in pair):
            return float(self.p[pair])
        return float(self.p[pair_index(pair)])

    def __iter__(self) -> Iterator[tuple[str, float]]:
        for label in PAIR_LABELS:
            yield label, self[label]

    def total(self) -> float:
        return float(self.p.sum())

    def alice_marginal(self) -> np.ndarray:
        return self.p.sum(axis=1)

    def bob_marginal(self) -> np.ndarray:
        return self.p.sum(axis=0)


def make_state(ent: EntanglementParams) -> np.ndarray:
    """Density matrix of the partially mixed singlet-like source state.

    Only the ``HV``/``VH`` block is populated.
    """
    eps, zeta = complex(ent.epsilon), complex(ent.zeta)
    if abs(zeta) > 1.0 + 1e-12:
        raise ValueError(f"|zeta| must be <= 1, got {abs(zeta):.6g}")
    norm = 1.0 + abs(eps) ** 2
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = 1.0
    rho[2, 2] = abs(eps) ** 2
    rho[2, 1] = -eps * zeta
    rho[1, 2] = -np.conj(eps * zeta)
    return rho / norm


def pas_rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [s, -c]])


def pbs_unitary(pbs_a: PbsParams, pbs_b: PbsParams) -> np.ndarray:
    """16x16 coupling between polarization and PBS ports.

    Block ``(i, j)`` maps input-port combination ``j`` to output combination
    ``i`` and is diagonal in polarization, which reproduces the
    ``[[U1,U2,U3,U4],[U2,U1,U4,U3],[U3,U4,U1,U2],[U4,U3,U2,U1]]`` layout.
    """
    u = np.zeros((16, 16), dtype=complex)
    for k, (pol_a, pol_b) in enumerate((("H", "H"), ("H", "V"), ("V", "H"), ("V", "V"))):
        ports = np.kron(pbs_a.port_matrix(pol_a), pbs_b.port_matrix(pol_b))
        u[k::4, k::4] = ports
    return u


def _as_setting(setting) -> AnalyzerSetting:
    if isinstance(setting, AnalyzerSetting):
        return setting
    theta_a, theta_b = setting
    return AnalyzerSetting(float(theta_a), float(theta_b))


def joint_probabilities_trace(
    state: np.ndarray, pbs_a: PbsParams, pbs_b: PbsParams, setting
) -> JointProbabilityTable:
    """Detection probabilities from the full trace over the 16-dim space."""
    setting = _as_setting(setting)
    port_in = np.zeros((4, 4))
    port_in[0, 0] = 1.0  # both photons enter through port 1
    rho_in = np.kron(port_in, state)
    s = np.kron(np.eye(4), np.kron(pas_rotation(setting.theta_a), pas_rotation(setting.theta_b)))
    u = pbs_unitary(pbs_a, pbs_b) @ s
    rho_out = u @ rho_in @ u.conj().T
    p = np.empty((2, 2))
    for x in range(2):
        for y in range(2):
            blk = 2 * x + y
            proj = np.zeros((4, 4))
            proj[blk, blk] = 1.0
            P = np.kron(proj, np.eye(4))
            p[x, y] = np.trace(P @ rho_out @ P.conj().T).real
    return JointProbabilityTable(p)


def joint_probabilities_closed_form(
    ent: EntanglementParams, pbs_a: PbsParams, pbs_b: PbsParams, setting
) -> JointProbabilityTable:
    """Direct evaluation of the four analytic probability expressions.

    The interference term carries ``sin(2 theta_a) sin(2 theta_b)``; this is
    the form that reproduces the ideal-PBS limit ``sin^2(theta_a - theta_b)/2``.
    """
    setting = _as_setting(setting)
    eps, zeta = complex(ent.epsilon), complex(ent.zeta)
    e2 = abs(eps) ** 2
    wa, wb = pbs_a.detector_weights(), pbs_b.detector_weights()
    ca, sa = math.cos(setting.theta_a) ** 2, math.sin(setting.theta_a) ** 2
    cb, sb = math.cos(setting.theta_b) ** 2, math.sin(setting.theta_b) ** 2
    cross = math.sin(2 * setting.theta_a) * math.sin(2 * setting.theta_b) * (eps * zeta / 2).real
    p = np.empty((2, 2))
    for x in range(2):
        aH, aV = wa[x]
        for y in range(2):
            bH, bV = wb[y]
            p[x, y] = (
                cb * (ca * (aH * bV + aV * bH * e2) + sa * (aV * bV + aH * bH * e2))
                + sb * (ca * (aH * bH + aV * bV * e2) + sa * (aV * bH + aH * bV * e2))
                + cross * (-aH * bH + aV * bH + aH * bV - aV * bV)
            )
    return JointProbabilityTable(p / (1.0 + e2))


def joint_probabilities(ent, pbs_a, pbs_b, setting, method: str = "closed") -> JointProbabilityTable:
    if method == "closed":
        return joint_probabilities_closed_form(ent, pbs_a, pbs_b, setting)
    if method == "trace":
        return joint_probabilities_trace(make_state(ent), pbs_a, pbs_b, setting)
    raise ValueError(f"unknown probability method {method!r}")
