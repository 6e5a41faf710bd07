import math

import numpy as np
import pytest

from entqkd.config import ChannelParams, DetectorParams, ExperimentConfig, SourceParams, TimingParams
from entqkd.polarization import DETECTORS, EntanglementParams, PbsParams


def ideal_config(lambda_p=1e5, duration=1.0, epsilon=1.0, zeta=1.0, theta_a=0.0, pbs=None):
    """Perfect detectors, ideal PBS, no noise, no dead time and a zero-width window."""
    pbs = pbs or PbsParams.ideal()
    return ExperimentConfig(
        source=SourceParams(lambda_p),
        entanglement=EntanglementParams(epsilon, zeta),
        pbs_a=pbs,
        pbs_b=pbs,
        detectors={d: DetectorParams() for d in DETECTORS},
        channels={"a": ChannelParams(0.0), "b": ChannelParams(0.0)},
        timing=TimingParams(window=0.0, duration=duration),
        theta_a=theta_a,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ideal():
    return ideal_config()


SQRT2 = math.sqrt(2)
