"""
From a coincidence trace to a density matrix
============================================

Fit the beating model, estimate the population balance from the
computational-basis counts, assemble the restricted density matrix and attach
parametric-bootstrap error bars.
"""

import math

from colorent import estimate, interference

truth = interference.BeatingModelParams(V=0.782, phi=math.radians(179.2), detuning_thz=2.1, tau_c_ps=2.95)
trace = interference.simulate_trace(truth, 200, 5.0, 2000.0, 10.0, seed=7)

# zero delay is usually calibrated separately; holding it removes the
# trade-off between the phase and the envelope position
fit = estimate.fit_beating(trace, fixed={"tau0_ps": 0.0})
p = fit.params
e = fit.param_errors
print(f"V   = {p.V:.4f} +- {e['V']:.4f}")
print(f"phi = {math.degrees(p.phi):.2f} +- {math.degrees(e['phi']):.2f} deg")
print(f"df  = {p.detuning_thz:.4f} +- {e['detuning_thz']:.4f} THz")
print(f"reduced chi2 {fit.chi2_reduced:.3f}")

free = estimate.fit_beating(trace)
print(f"with tau0 free the phase error grows to {math.degrees(free.param_errors['phi']):.2f} deg")

balance = estimate.balance_from_counts(10882, 9068)
print(f"p = {balance.p:.4f} +- {balance.sigma_p:.4f}")

report = estimate.bootstrap_uncertainty(trace, fit, balance, n_resamples=200, seed=1)
err = report.errors
print(f"fidelity {report.fidelity:.3f} +- {err['fidelity']:.3f}")
print(f"tangle   {report.tangle:.3f} +- {err['tangle']:.3f}")
print(f"purity   {report.purity:.3f} +- {err['purity']:.3f}")
