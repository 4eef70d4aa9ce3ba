"""
Presets, sweeps and mutually unbiased bases
===========================================

Scenario presets bundle the source, measurement and model settings. Running a
preset through simulate and analyze mirrors what the command-line tool does.
"""

import math

import numpy as np

from colorent import estimate, qstate, scenario

for name in ("fig3a", "fig3b", "fig3c"):
    sc = scenario.load_scenario(scenario.preset(name))
    sim = scenario.simulate(sc)
    an = scenario.analyze(sim.trace, sim.basis_counts, sc.target_phi, resamples=0, hold_tau0_ps=0.0)
    print(f"{name}: {sc.temperature_c} C  true {sc.detuning_thz:.3f} THz  fitted {an.fit.params.detuning_thz:.3f} THz")

fid = []
for phase in scenario.PHASE_SWEEP_DEG:
    doc = scenario.preset("fig4")
    doc["source"]["phi_deg"] = phase
    sc = scenario.load_scenario(doc)
    an = scenario.analyze(scenario.simulate(sc).trace, None, sc.target_phi, resamples=0, hold_tau0_ps=0.0)
    fid.append(an.report.fidelity)
    print(f"set {phase:5.1f} deg  fitted {math.degrees(an.fit.params.phi):6.1f} deg  fidelity {an.report.fidelity:.3f}")
print("mean fidelity over the phase sweep:", np.mean(fid))

# three bases of the anticorrelated subspace, pairwise unbiased
table = qstate.mub_overlap_check(estimate.mub_set())
np.set_printoptions(precision=3, suppress=True)
print(table)
