"""Joint detection probabilities for an ideal and a leaky PBS.

With an ideal PBS a near-singlet source gives close to the sin^2 / cos^2
pattern in the angle difference. Leakage of the wrong polarization into each port
fills in the zeros, which is where the QBER floor comes from.
"""
import math

import numpy as np

from entqkd.polarization import EntanglementParams, PbsParams, joint_probabilities

ent = EntanglementParams(epsilon=0.95, zeta=1.0)
ideal = PbsParams.ideal()
leaky = PbsParams.from_intensity(0.98, 0.05)

print("theta_b   p(1a1b) ideal   p(1a1b) leaky   trace-vs-closed")
for deg in range(0, 91, 15):
    tb = math.radians(deg)
    p_ideal = joint_probabilities(ent, ideal, ideal, (0.0, tb))
    p_leaky = joint_probabilities(ent, leaky, leaky, (0.0, tb))
    trace = joint_probabilities(ent, leaky, leaky, (0.0, tb), method="trace")
    diff = np.abs(p_leaky.p - trace.p).max()
    print(f"{deg:6d}    {p_ideal['1a1b']:.6f}        {p_leaky['1a1b']:.6f}        {diff:.1e}")
