"""
The polarization-to-color hybrid gate
=====================================

A polarizing beamsplitter maps the polarization-entangled input onto a
hyperentangled state, and diagonal polarizers in both output arms erase the
polarization. What is left is the color qubit, with success probability 1/4.
"""

import math

import numpy as np

from colorent import gate, source

pol = source.make_pol_state(0.6, 0.8, math.pi / 3, 811.9, 807.3)
ket_in = gate.input_ket(pol)
print("input:")
for labels, amp in ket_in.terms.items():
    print("  ", labels, np.round(amp, 4))

after_pbs = gate.pbs_map(ket_in)
print("after the PBS (paths 3, 4):")
for labels, amp in after_pbs.terms.items():
    print("  ", labels, np.round(amp, 4))

out = gate.project_diagonal(after_pbs)
print("success probability", out.success_probability)
print("color amplitudes (w1w1, w1w2, w2w1, w2w2):", np.round(out.state.color_vector(), 4))

# the encoded qubit survives: p = alpha^2, V = 2 alpha beta, same phase
s = gate.restricted_params_from_ket(out)
print(f"p={s.p:.4f} V={s.V:.4f} phi={math.degrees(s.phi):.2f} deg")
