"""Event-level Monte-Carlo of the detection chain.

Independent of the analytic rate formulas: photon pairs, uncorrelated photons
and dark counts are generated as Poisson streams from exponential
inter-arrival times, pair photons are routed to a detector pair by sampling
the lossless joint probabilities and lost independently on each side with
probability ``1 - eta*tau``. Each channel then applies a non-extending dead
time to its merged timeline (both detectors share it). Alice's surviving
counts trigger a window of width ``w`` centred on the count; a coincidence is
tallied with whichever Bob detector fired inside it (one at random if both).

Dead time is applied before windowing, so a Bob count suppressed by dead time
never forms a coincidence.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .coincidence import CoincidenceRates
from .config import ALICE, BOB, ExperimentConfig
from .counting import _probabilities
from .polarization import PAIR_LABELS, pair_index

RNG_ALGORITHM = f"numpy.random.PCG64 (numpy {np.__version__})"

# target number of generated events per processing chunk
_CHUNK_EVENTS = 2_000_000


@dataclass
class EventTally:
    singles: dict
    coincidences: np.ndarray
    true_coincidences: np.ndarray
    accidental_coincidences: np.ndarray
    live_time: dict
    duration: float
    seed: int
    setting: tuple = (0.0, 0.0)
    rng: str = RNG_ALGORITHM
    raw_singles: dict = field(default_factory=dict)

    @property
    def total_rate(self) -> np.ndarray:
        return self.coincidences / self.duration

    @property
    def true_rate(self) -> np.ndarray:
        return self.true_coincidences / self.duration

    @property
    def accidental_rate(self) -> np.ndarray:
        return self.accidental_coincidences / self.duration

    def live_fraction(self, channel: str) -> float:
        return self.live_time[channel] / self.duration

    def normalized(self) -> np.ndarray:
        total = self.coincidences.sum()
        return self.coincidences / total if total else np.full((2, 2), np.nan)


def apply_dead_time(times: np.ndarray, dead: float, last_kept: float = -np.inf) -> np.ndarray:
    """Mask of counts surviving a non-extending dead time.

    ``times`` must be sorted; ``last_kept`` is the last surviving count before
    ``times[0]`` (from a previous chunk) and must not exceed ``times[0]``.
    """
    n = len(times)
    keep = np.ones(n, dtype=bool)
    if dead <= 0 or n == 0:
        return keep
    # a count at least ``dead`` after the previous count is live whatever
    # happened before; runs of closer counts are resolved sequentially
    keep = np.diff(times, prepend=last_kept) >= dead
    close = np.flatnonzero(~keep)
    if close.size == 0:
        return keep
    breaks = np.flatnonzero(np.diff(close) > 1)
    starts = close[np.r_[0, breaks + 1]]
    ends = close[np.r_[breaks, close.size - 1]] + 1
    for s, e in zip(starts[ends - starts > 1], ends[ends - starts > 1]):
        last = times[s - 1] if s > 0 else last_kept
        for i in range(s, e):
            if times[i] - last >= dead:
                keep[i] = True
                last = times[i]
    return keep


def _poisson_times(rng: np.random.Generator, rate: float, t0: float, t1: float) -> np.ndarray:
    """Arrival times in ``[t0, t1)`` from exponential inter-arrival sampling."""
    if rate <= 0 or t1 <= t0:
        return np.empty(0)
    span = t1 - t0
    expected = rate * span
    out = []
    start = t0
    while True:
        n = int(expected + 6 * math.sqrt(expected) + 16)
        arr = start + np.cumsum(rng.exponential(1.0 / rate, size=n))
        if arr[-1] >= t1:
            out.append(arr[arr < t1])
            break
        out.append(arr)
        start = arr[-1]
        expected = rate * (t1 - start)
    return np.concatenate(out)


class _Stream(NamedTuple):
    times: np.ndarray
    det: np.ndarray
    pid: np.ndarray


def _merge(parts: list[_Stream]) -> _Stream:
    times = np.concatenate([p.times for p in parts])
    det = np.concatenate([p.det for p in parts])
    pid = np.concatenate([p.pid for p in parts])
    order = np.argsort(times, kind="stable")
    return _Stream(times[order], det[order], pid[order])


def simulate(
    config: ExperimentConfig,
    setting=None,
    duration: float | None = None,
    seed: int = 0,
) -> EventTally:
    """Simulate one acquisition of ``duration`` seconds at one analyzer setting."""
    if setting is None:
        setting = (config.theta_a, config.theta_a)
    theta_a, theta_b = (setting.theta_a, setting.theta_b) if hasattr(setting, "theta_a") else setting
    duration = config.timing.duration if duration is None else float(duration)
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))

    p = _probabilities(config, (theta_a, theta_b)).p
    det = config.detectors
    eff_a = np.array([det[d].efficiency for d in ALICE])
    eff_b = np.array([det[d].efficiency for d in BOB])
    lp = config.source.lambda_p

    # pair outcome categories: (x, y, alice_seen, bob_seen)
    cats, weights = [], []
    for x in range(2):
        for y in range(2):
            for sa, sb in ((1, 1), (1, 0), (0, 1)):
                wa = eff_a[x] if sa else 1 - eff_a[x]
                wb = eff_b[y] if sb else 1 - eff_b[y]
                cats.append((x, y, sa, sb))
                weights.append(p[x, y] * wa * wb)
    cats = np.array(cats)
    weights = np.array(weights)
    pair_rate = lp * weights.sum()
    cum = np.cumsum(weights) / weights.sum() if weights.sum() > 0 else None

    noise = {d: (det[d].efficiency * det[d].lambda_u, det[d].lambda_d) for d in ALICE + BOB}
    total_rate = 2 * pair_rate + sum(u + d for u, d in noise.values())
    n_chunks = max(1, int(math.ceil(total_rate * duration / _CHUNK_EVENTS)))
    edges = np.linspace(0.0, duration, n_chunks + 1)

    dead_a = config.channels["a"].dead_time
    dead_b = config.channels["b"].dead_time
    w = config.timing.window
    half = w / 2

    singles = np.zeros(4, dtype=np.int64)
    raw = np.zeros(4, dtype=np.int64)
    coinc = np.zeros((2, 2), dtype=np.int64)
    true_c = np.zeros((2, 2), dtype=np.int64)
    dead_sum = {"a": 0.0, "b": 0.0}
    last_a = last_b = -np.inf
    pending = _Stream(np.empty(0), np.empty(0, np.int8), np.empty(0, np.int64))
    bob_tail = _Stream(np.empty(0), np.empty(0, np.int8), np.empty(0, np.int64))
    next_pid = 0

    for k in range(n_chunks):
        t0, t1 = edges[k], edges[k + 1]
        final = k == n_chunks - 1
        alice_parts, bob_parts = [], []

        pt = _poisson_times(rng, pair_rate, t0, t1)
        if len(pt):
            c = cats[np.searchsorted(cum, rng.random(len(pt)), side="right").clip(max=len(cats) - 1)]
            pid = np.arange(next_pid, next_pid + len(pt), dtype=np.int64)
            next_pid += len(pt)
            sa, sb = c[:, 2].astype(bool), c[:, 3].astype(bool)
            alice_parts.append(_Stream(pt[sa], c[sa, 0].astype(np.int8), pid[sa]))
            bob_parts.append(_Stream(pt[sb], c[sb, 1].astype(np.int8), pid[sb]))
        for i, d in enumerate(ALICE + BOB):
            for rate in noise[d]:
                ts = _poisson_times(rng, rate, t0, t1)
                s = _Stream(ts, np.full(len(ts), i % 2, np.int8), np.full(len(ts), -1, np.int64))
                (alice_parts if i < 2 else bob_parts).append(s)

        alice = _merge(alice_parts) if alice_parts else pending[:0]
        bob = _merge(bob_parts) if bob_parts else bob_tail[:0]
        raw[:2] += np.bincount(alice.det, minlength=2)
        raw[2:] += np.bincount(bob.det, minlength=2)

        keep_a = apply_dead_time(alice.times, dead_a, last_a)
        keep_b = apply_dead_time(bob.times, dead_b, last_b)
        alice = _Stream(*(a[keep_a] for a in alice))
        bob = _Stream(*(b[keep_b] for b in bob))
        if len(alice.times):
            last_a = alice.times[-1]
        if len(bob.times):
            last_b = bob.times[-1]
        singles[:2] += np.bincount(alice.det, minlength=2)
        singles[2:] += np.bincount(bob.det, minlength=2)
        dead_sum["a"] += np.minimum(dead_a, duration - alice.times).sum()
        dead_sum["b"] += np.minimum(dead_b, duration - bob.times).sum()

        # triggers near the chunk end wait for the next chunk's Bob counts
        trig = _Stream(*(np.concatenate((p_, a_)) for p_, a_ in zip(pending, alice)))
        stops = _Stream(*(np.concatenate((t_, b_)) for t_, b_ in zip(bob_tail, bob)))
        if final:
            ready = np.ones(len(trig.times), dtype=bool)
        else:
            ready = trig.times <= t1 - half
        pending = _Stream(*(a[~ready] for a in trig))
        trig = _Stream(*(a[ready] for a in trig))
        tail = stops.times >= t1 - w
        bob_tail = _Stream(*(b[tail] for b in stops))

        _tally_windows(rng, trig, stops, half, coinc, true_c)

    tally = EventTally(
        singles=dict(zip(ALICE + BOB, (int(v) for v in singles))),
        coincidences=coinc,
        true_coincidences=true_c,
        accidental_coincidences=coinc - true_c,
        live_time={"a": duration - dead_sum["a"], "b": duration - dead_sum["b"]},
        duration=duration,
        seed=seed,
        setting=(float(theta_a), float(theta_b)),
        raw_singles=dict(zip(ALICE + BOB, (int(v) for v in raw))),
    )
    return tally


def _tally_windows(rng, trig: _Stream, stops: _Stream, half: float, coinc: np.ndarray, true_c: np.ndarray) -> None:
    if not len(trig.times) or not len(stops.times):
        return
    lo = np.searchsorted(stops.times, trig.times - half, side="left")
    hi = np.searchsorted(stops.times, trig.times + half, side="right")
    c0 = np.concatenate(([0], np.cumsum(stops.det == 0)))
    n0 = c0[hi] - c0[lo]
    n1 = (hi - lo) - n0
    has0, has1 = n0 > 0, n1 > 0
    hit = has0 | has1
    if not hit.any():
        return
    both = has0 & has1
    y = np.where(has0, 0, 1)
    y[both] = (rng.random(both.sum()) < 0.5).astype(int)
    x = trig.det.astype(int)

    # partner photon of a pair trigger, if it survived on Bob's side
    bob_pairs = stops.pid >= 0
    bpid = stops.pid[bob_pairs]
    bdet = stops.det[bob_pairs]
    order = np.argsort(bpid)
    bpid, bdet = bpid[order], bdet[order]
    is_true = np.zeros(len(trig.times), dtype=bool)
    cand = (trig.pid >= 0) & hit
    if len(bpid) and cand.any():
        idx = np.searchsorted(bpid, trig.pid[cand]).clip(max=len(bpid) - 1)
        found = bpid[idx] == trig.pid[cand]
        is_true[np.flatnonzero(cand)[found]] = bdet[idx[found]] == y[cand][found]

    np.add.at(coinc, (x[hit], y[hit]), 1)
    np.add.at(true_c, (x[is_true], y[is_true]), 1)


# ---------------------------------------------------------------------------
# comparison with the analytic chain


class ComparisonRow(NamedTuple):
    quantity: str
    observed: float
    expected: float
    z: float


def compare(tally: EventTally, analytic: CoincidenceRates) -> dict[str, ComparisonRow]:
    """z-scores of tallied counts against the analytic rates over the same duration.

    Analytic rates already include the dead-time factor, so the expected
    count is ``rate * duration``. Normalized fractions ``M`` use a binomial
    standard error.
    """
    t = tally.duration
    rows = {}

    def add(name, obs, exp, sigma):
        z = (obs - exp) / sigma if sigma > 0 else (0.0 if obs == exp else math.inf)
        rows[name] = ComparisonRow(name, float(obs), float(exp), float(z))

    for d in ALICE + BOB:
        exp = analytic.singles.lambda_tot[d] * t
        add(f"singles_{d}", tally.singles[d], exp, math.sqrt(exp))
    total_rate = analytic.total_rate
    n_total = tally.coincidences.sum()
    m_exp = total_rate / total_rate.sum() if total_rate.sum() > 0 else np.zeros((2, 2))
    for label in PAIR_LABELS:
        i = pair_index(label)
        exp = total_rate[i] * t
        add(f"coinc_{label}", tally.coincidences[i], exp, math.sqrt(exp))
        exp = analytic.accidental_rate[i] * t
        add(f"acc_{label}", tally.accidental_coincidences[i], exp, math.sqrt(exp))
        m_obs = tally.coincidences[i] / n_total if n_total else 0.0
        add(f"M_{label}", m_obs, m_exp[i], math.sqrt(m_exp[i] * (1 - m_exp[i]) / n_total) if n_total else 0.0)
    return rows


def flagged(rows: dict[str, ComparisonRow], threshold: float = 3.0) -> list[str]:
    return [name for name, r in rows.items() if not abs(r.z) <= threshold]


def write_comparison_csv(rows: dict[str, ComparisonRow], path, meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k} = {v}\n")
        writer = csv.writer(fh)
        writer.writerow(["quantity", "observed", "expected", "z"])
        for r in rows.values():
            writer.writerow([r.quantity, repr(r.observed), repr(r.expected), repr(r.z)])


def montecarlo_rates(config: ExperimentConfig, duration: float | None = None, seed: int = 0):
    """Rate callable for the protocol/security functions backed by simulations.

    Each setting gets its own stream derived from ``seed`` and the angles.
    """
    cache: dict = {}

    def rates(theta_a: float, theta_b: float) -> EventTally:
        key = (round(theta_a, 12), round(theta_b, 12))
        if key not in cache:
            words = [int(round((a % (2 * math.pi)) * 1e9)) for a in key]
            sub = np.random.SeedSequence(seed, spawn_key=tuple(words)).generate_state(1, np.uint64)[0]
            cache[key] = simulate(config, key, duration, int(sub))
        return cache[key]

    return rates


# ---------------------------------------------------------------------------
# bit-string oracle for the parity-pass correction model


def simulate_bitstring_correction(n_bits: int, qber: float, qabr: float, passes: int, seed: int = 0):
    """Run pair-parity passes on an explicit random key.

    Returns a list of ``(key_length, qber, qabr)`` before each pass and after
    the last one.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    # 0 = true-origin correct, 1 = accidental-origin correct, 2 = wrong
    acc_correct = max(qabr - qber, 0.0)
    u = rng.random(n_bits)
    cls = np.where(u < qber, 2, np.where(u < qber + acc_correct, 1, 0)).astype(np.int8)

    def summary(c):
        n = len(c)
        if n == 0:
            return (0, float("nan"), float("nan"))
        return (n, float(np.mean(c == 2)), float(np.mean(c >= 1)))

    history = [summary(cls)]
    for _ in range(passes):
        perm = rng.permutation(len(cls))
        m = len(perm) // 2
        first, second = cls[perm[:m]], cls[perm[m : 2 * m]]
        agree = (first == 2) == (second == 2)
        cls = first[agree]
        history.append(summary(cls))
    return history


def write_tally(path: str | Path, tally: EventTally) -> None:
    """Flat CSV dump of one tally (quantity, value)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed = {tally.seed}\n# rng = {tally.rng}\n# duration = {tally.duration!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["quantity", "value"])
        for d, v in tally.singles.items():
            writer.writerow([f"singles_{d}", v])
        for label in PAIR_LABELS:
            i = pair_index(label)
            writer.writerow([f"coinc_{label}", int(tally.coincidences[i])])
            writer.writerow([f"true_{label}", int(tally.true_coincidences[i])])
        for ch, v in tally.live_time.items():
            writer.writerow([f"live_time_{ch}", repr(v)])
