"""
Restricted color-state density matrices and their metrics
==========================================================

Energy conservation confines the two-photon color state to the span of
|w1w2> and |w2w1>, so three numbers describe it: the population p of
|w1w2>, the fringe visibility V and the relative phase phi.
"""

import math

import numpy as np

from colorent import qstate

# a nearly balanced, nearly antisymmetric state with imperfect coherence
s = qstate.RestrictedColorState(p=0.546, V=0.782, phi=math.radians(179.2))
rho = qstate.restricted_density_matrix(s)
np.set_printoptions(precision=4, suppress=True)
print("rho (basis w1w1, w1w2, w2w1, w2w2):")
print(rho.data)

target = qstate.target_state(math.pi)  # (|w1w2> - |w2w1>)/sqrt 2
print("fidelity", qstate.fidelity_with_pure(rho, target))
print("tangle  ", qstate.tangle(rho))
print("purity  ", qstate.purity(rho))

# the tangle of any state in this family is V^2; Wootters' formula agrees
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(200):
    p = rng.uniform()
    V = rng.uniform() * 2 * math.sqrt(p * (1 - p))
    st = qstate.RestrictedColorState(p, V, rng.uniform(0, 2 * math.pi))
    worst = max(worst, abs(qstate.tangle(qstate.restricted_density_matrix(st)) - V**2))
print("largest |tangle - V^2| over 200 random states:", worst)

# V above 2 sqrt(p(1-p)) would make rho non-positive
try:
    qstate.RestrictedColorState(p=0.9, V=0.9, phi=0.0)
except qstate.PhysicalityError as exc:
    print("rejected:", exc)
