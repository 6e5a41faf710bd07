import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entqkd.coincidence import total_coincidence_rates
from entqkd.config import load_config
from entqkd.montecarlo import (
    _poisson_times,
    apply_dead_time,
    compare,
    flagged,
    montecarlo_rates,
    simulate,
    write_comparison_csv,
    write_tally,
)
from entqkd.protocols import bb84

from conftest import ideal_config


def _sequential(times, dead, last=-np.inf):
    keep = []
    for t in times:
        ok = t - last >= dead
        keep.append(ok)
        if ok:
            last = t
    return np.array(keep, dtype=bool)


@settings(max_examples=300)
@given(
    st.lists(st.floats(0.0, 10.0), max_size=60),
    st.floats(1e-3, 2.0),
    st.one_of(st.none(), st.floats(-3.0, 0.0)),
)
def test_dead_time_matches_sequential(times, dead, last):
    t = np.sort(np.array(times, dtype=float))
    last = -np.inf if last is None else min(last, t[0] if len(t) else 0.0)
    assert np.array_equal(apply_dead_time(t, dead, last), _sequential(t, dead, last))


def test_dead_time_zero_keeps_all():
    assert apply_dead_time(np.array([0.0, 0.0, 1.0]), 0.0).all()


def test_poisson_times_rate():
    rng = np.random.default_rng(3)
    ts = _poisson_times(rng, 1e4, 0.0, 10.0)
    assert np.all(np.diff(ts) >= 0)
    assert ts.min() >= 0 and ts.max() < 10.0
    assert abs(len(ts) - 1e5) < 5 * math.sqrt(1e5)


def test_seed_determinism():
    c = load_config("fig5")
    a = simulate(c, (0.0, 0.0), duration=0.5, seed=11)
    b = simulate(c, (0.0, 0.0), duration=0.5, seed=11)
    d = simulate(c, (0.0, 0.0), duration=0.5, seed=12)
    assert a.singles == b.singles
    assert np.array_equal(a.coincidences, b.coincidences)
    assert a.singles != d.singles


def test_ideal_source_only_true_coincidences():
    c = ideal_config(lambda_p=2e4, duration=5.0)
    t = simulate(c, (0.0, 0.3), seed=2)
    assert t.accidental_coincidences.sum() == 0
    rows = compare(t, total_coincidence_rates(c, (0.0, 0.3)))
    assert not flagged(rows, 5.0)


def test_fig5_agrees_with_analytic():
    c = load_config("fig5")
    t = simulate(c, (0.0, 0.0), duration=10.0, seed=4)
    rows = compare(t, total_coincidence_rates(c, (0.0, 0.0)))
    assert len(flagged(rows, 4.0)) == 0
    assert (t.true_coincidences + t.accidental_coincidences == t.coincidences).all()


def test_chunking_matches_statistics(monkeypatch):
    import entqkd.montecarlo as mc

    c = load_config("fig5")
    monkeypatch.setattr(mc, "_CHUNK_EVENTS", 20_000)
    t = simulate(c, (0.0, 0.0), duration=3.0, seed=8)
    rows = compare(t, total_coincidence_rates(c, (0.0, 0.0)))
    assert len(flagged(rows, 4.0)) == 0


def test_live_fraction_close_to_dead_time_factor():
    c = load_config("fig5")
    t = simulate(c, (0.0, 0.0), duration=1.0, seed=1)
    pi_a, pi_b = total_coincidence_rates(c, (0.0, 0.0)).dead_time
    assert t.live_fraction("a") == pytest.approx(pi_a, rel=2e-3)
    assert t.live_fraction("b") == pytest.approx(pi_b, rel=2e-3)


def test_rates_callable_feeds_protocols():
    c = load_config("fig5")
    mc = bb84(c, rates=montecarlo_rates(c, duration=2.0, seed=0))
    an = bb84(c)
    assert mc.qber == pytest.approx(an.qber, abs=0.02)


def test_csv_writers(tmp_path):
    c = load_config("fig5")
    t = simulate(c, (0.0, 0.0), duration=0.2, seed=0)
    rows = compare(t, total_coincidence_rates(c, (0.0, 0.0)))
    write_comparison_csv(rows, tmp_path / "cmp.csv", {"seed": 0})
    write_tally(tmp_path / "tally.csv", t)
    text = (tmp_path / "cmp.csv").read_text()
    assert text.startswith("# seed = 0")
    assert "quantity,observed,expected,z" in text
    assert "singles_1a" in (tmp_path / "tally.csv").read_text()


def test_bad_duration():
    with pytest.raises(ValueError):
        simulate(load_config("fig5"), duration=0.0)
