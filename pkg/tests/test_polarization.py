import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entqkd.polarization import (
    EntanglementParams,
    PbsParams,
    joint_probabilities,
    joint_probabilities_closed_form,
    joint_probabilities_trace,
    make_state,
    pair_index,
    pas_rotation,
    pbs_unitary,
)

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
mags = st.floats(0.0, 1.0)
eps_s = st.complex_numbers(max_magnitude=3.0)
zeta_s = st.complex_numbers(max_magnitude=1.0)


def _ideal_table(d):
    s, c = math.sin(d) ** 2 / 2, math.cos(d) ** 2 / 2
    return np.array([[s, c], [c, s]])


def test_pair_index_labels():
    assert pair_index("1a1b") == (0, 0)
    assert pair_index(("2a", "1b")) == (1, 0)
    with pytest.raises(KeyError):
        pair_index("1b1a")


def test_state_is_a_density_matrix():
    rho = make_state(EntanglementParams(0.9 + 0.2j, 0.7))
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_zeta_above_one_rejected():
    with pytest.raises(ValueError):
        EntanglementParams(1.0, 1.5)


def test_large_epsilon_warns():
    with pytest.warns(UserWarning):
        EntanglementParams(50.0, 1.0)


def test_analyzer_is_orthogonal_involution():
    t = pas_rotation(0.37)
    assert np.allclose(t @ t, np.eye(2))


@given(mags, mags, mags, mags)
def test_pbs_unitary(ta, tpa, tb, tpb):
    u = pbs_unitary(PbsParams(ta, tpa), PbsParams(tb, tpb))
    assert np.allclose(u @ u.conj().T, np.eye(16), atol=1e-12)


def test_ideal_singlet_matches_textbook_pattern(rng):
    for d in rng.uniform(-math.pi, math.pi, 50):
        ta = rng.uniform(-math.pi, math.pi)
        for method in ("closed", "trace"):
            p = joint_probabilities(EntanglementParams(), PbsParams.ideal(), PbsParams.ideal(), (ta, ta - d), method).p
            assert np.allclose(p, _ideal_table(d), atol=1e-12)


@settings(max_examples=200)
@given(eps_s, zeta_s, angles, angles, mags, mags, mags, mags)
def test_two_paths_agree_and_normalize(eps, zeta, ta, tb, m1, m2, m3, m4):
    ent = EntanglementParams(eps, zeta)
    pa, pb = PbsParams(m1, m2), PbsParams(m3, m4)
    closed = joint_probabilities_closed_form(ent, pa, pb, (ta, tb)).p
    trace = joint_probabilities_trace(make_state(ent), pa, pb, (ta, tb)).p
    assert np.allclose(closed, trace, atol=1e-12)
    assert closed.sum() == pytest.approx(1.0, abs=1e-12)
    assert closed.min() > -1e-12


@given(eps_s, zeta_s, angles, angles)
def test_pi_periodic_in_each_angle(eps, zeta, ta, tb):
    ent = EntanglementParams(eps, zeta)
    pbs = PbsParams(0.99, 0.16)
    p = joint_probabilities(ent, pbs, pbs, (ta, tb)).p
    assert np.allclose(p, joint_probabilities(ent, pbs, pbs, (ta + math.pi, tb)).p, atol=1e-12)
    assert np.allclose(p, joint_probabilities(ent, pbs, pbs, (ta, tb - math.pi)).p, atol=1e-12)


def test_mixed_state_has_no_interference():
    # zeta = 0: no dependence on the sin(2a)sin(2b) term
    ent = EntanglementParams(1.0, 0.0)
    p = joint_probabilities(ent, PbsParams.ideal(), PbsParams.ideal(), (math.pi / 4, math.pi / 4)).p
    assert np.allclose(p, 0.25)


def test_unknown_method():
    with pytest.raises(ValueError):
        joint_probabilities(EntanglementParams(), PbsParams.ideal(), PbsParams.ideal(), (0, 0), "magic")


def test_detector_weights_conserve_probability():
    w = PbsParams.from_intensity(0.98, 0.05).detector_weights()
    assert np.allclose(w.sum(axis=0), 1.0)
    assert w[0, 0] == pytest.approx(0.98)
    assert w[0, 1] == pytest.approx(0.05)
