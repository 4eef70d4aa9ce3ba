"""Acceptance criteria, one verdict line each (see the 'acceptance criteria' summary section)."""

import json
import math
import time

import numpy as np
import pytest

from colorent import gate, qstate, scenario, source
from colorent.cli import main
from colorent.estimate import (
    assumed_balance,
    balance_from_counts,
    fit_beating,
    mub_set,
    reconstruct,
)
from colorent.interference import BeatingModelParams, simulate_trace, synth_spectra

FIG2_STATE = dict(p=0.546, V=0.782, phi=math.radians(179.2))
FIG2_BEATING = BeatingModelParams(V=0.782, phi=math.radians(179.2), detuning_thz=2.1, tau_c_ps=2.95)


def phase_err_deg(a, b):
    return abs(math.degrees(math.remainder(a - b, 2 * math.pi)))


def test_c1_metric_consistency(report_line):
    t0 = time.perf_counter()
    rho = qstate.restricted_density_matrix(qstate.RestrictedColorState(**FIG2_STATE))
    f = qstate.fidelity_with_pure(rho, qstate.target_state(math.pi))
    tg = qstate.tangle(rho)
    pu = qstate.purity(rho)
    dt = time.perf_counter() - t0
    ok = abs(f - 0.891) <= 0.002 and abs(tg - 0.611) <= 0.002 and abs(pu - 0.810) <= 0.001 and dt < 1
    report_line("C1 metrics", ok, f"fidelity={f:.4f} tangle={tg:.4f} purity={pu:.4f} ({dt:.3f} s)")
    assert ok


def test_c2_oracle_equivalence(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        p = rng.uniform()
        V = rng.uniform() * 2 * math.sqrt(p * (1 - p))
        s = qstate.RestrictedColorState(p, V, rng.uniform(0, 2 * math.pi))
        c = qstate.concurrence_wootters(qstate.restricted_density_matrix(s))
        worst = max(worst, abs(qstate.restricted_tangle(s) - c**2))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and dt < 10
    report_line("C2 oracle equivalence", ok, f"max |V^2 - C^2| = {worst:.1e} over 1000 states ({dt:.2f} s)")
    assert ok


def test_c3_gate_correctness(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    amp_err = prob_err = 0.0
    for _ in range(1000):
        a = rng.uniform()
        b = math.sqrt(1 - a * a)
        phi = rng.uniform(0, 2 * math.pi)
        out = gate.hybrid_gate(source.make_pol_state(a, b, phi, 811.9, 807.3))
        got = gate.strip_global_phase(out.state.color_vector())
        want = gate.strip_global_phase(np.array([0, a, np.exp(1j * phi) * b, 0]))
        amp_err = max(amp_err, float(np.max(np.abs(got - want))))
        prob_err = max(prob_err, abs(out.success_probability - 0.25))
    dt = time.perf_counter() - t0
    ok = amp_err <= 1e-12 and prob_err <= 1e-12 and dt < 5
    report_line("C3 gate", ok, f"max amplitude error {amp_err:.1e}, max |P - 1/4| {prob_err:.1e} ({dt:.2f} s)")
    assert ok


def test_c4_balance(report_line):
    b = balance_from_counts(10882, 9068)
    ok = abs(b.p - 0.5455) <= 5e-4 and abs(b.sigma_p - 0.0035) <= 5e-4
    report_line("C4 balance", ok, f"p={b.p:.4f} sigma_p={b.sigma_p:.4f}")
    assert ok


def _round_trip(fixed):
    t0 = time.perf_counter()
    hits = 0
    worst = [0.0, 0.0, 0.0]
    for seed in range(100):
        tr = simulate_trace(FIG2_BEATING, 200, 5.0, 2000.0, 10.0, seed=seed)
        fit = fit_beating(tr, fixed=fixed)
        dv = abs(fit.params.V - 0.782)
        dp = phase_err_deg(fit.params.phi, FIG2_BEATING.phi)
        dd = abs(fit.params.detuning_thz / 2.1 - 1)
        worst = [max(w, e) for w, e in zip(worst, (dv, dp, dd))]
        hits += dv <= 0.02 and dp <= 2.0 and dd <= 0.005
    return hits, worst, time.perf_counter() - t0


@pytest.mark.xfail(strict=True, reason="with tau0 free the phase standard error is ~1.7 deg, so +-2 deg "
                                       "holds in ~80% of runs (Cramer-Rao bound for this design)")
def test_c5_round_trip_all_parameters_free(report_line):
    hits, worst, dt = _round_trip(None)
    ok = hits >= 95 and dt < 120
    report_line("C5 round-trip fit, all six parameters free", ok,
                f"{hits}/100 within bands; worst dV={worst[0]:.4f} dphi={worst[1]:.2f} deg "
                f"ddf={100 * worst[2]:.3f}% ({dt:.1f} s)")
    assert ok


def test_c5_round_trip_zero_delay_calibrated(report_line):
    hits, worst, dt = _round_trip({"tau0_ps": 0.0})
    ok = hits >= 95 and dt < 120
    report_line("C5 round-trip fit, zero delay held at calibration", ok,
                f"{hits}/100 within bands; worst dV={worst[0]:.4f} dphi={worst[1]:.2f} deg "
                f"ddf={100 * worst[2]:.3f}% ({dt:.1f} s)")
    assert ok


def test_c6_detuning_sweep(report_line):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, expected in (("fig3a", 1.7), ("fig3b", 3.6), ("fig3c", 8.4)):
        sc = scenario.load_scenario(scenario.preset(name))
        sim = scenario.simulate(sc)
        fit = fit_beating(sim.trace, fixed={"tau0_ps": sc.hold_tau0_ps})
        rel = abs(fit.params.detuning_thz / expected - 1)
        l1, l2 = source.wavelengths_from_detuning(sc.detuning_thz)
        hi, lo = sim.spectrum.peak_wavelengths(split_nm=0.5 * (l1 + l2))
        sep_err = abs((hi - lo) - (l1 - l2))
        ok &= rel <= 0.05 and sep_err <= 0.1
        parts.append(f"{name} df={fit.params.detuning_thz:.3f} ({100 * rel:.1f}%) sep err {sep_err:.3f} nm")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    report_line("C6 detuning sweep", ok, "; ".join(parts) + f" ({dt:.1f} s)")
    assert ok


def test_c7_phase_sweep(report_line):
    t0 = time.perf_counter()
    worst = 0.0
    fids = []
    for i, phase in enumerate(scenario.PHASE_SWEEP_DEG):
        doc = scenario.preset("fig4")
        doc["source"]["phi_deg"] = phase
        for noise in ("none", "poisson"):
            doc["measurement"]["noise"] = noise
            sc = scenario.load_scenario(doc, seed=40000 + i)
            sim = scenario.simulate(sc)
            an = scenario.analyze(sim.trace, sim.basis_counts, sc.target_phi, resamples=0,
                                  hold_tau0_ps=sc.hold_tau0_ps)
            if noise == "none":
                worst = max(worst, phase_err_deg(an.fit.params.phi, sc.pol_state.phi))
            else:
                fids.append(an.report.fidelity)
    mean_f = float(np.mean(fids))
    dt = time.perf_counter() - t0
    ok = len(fids) == 13 and worst <= 0.1 and 0.85 <= mean_f <= 0.93 and dt < 120
    report_line("C7 phase sweep", ok, f"13 phases; noiseless max phase error {worst:.1e} deg; "
                                      f"noisy mean fidelity {mean_f:.4f} ({dt:.1f} s)")
    assert ok


def test_c8_mub(report_line):
    table = qstate.mub_overlap_check(mub_set())
    basis = np.repeat(np.arange(3), 2)
    cross = table[basis[:, None] != basis[None, :]]
    dev = float(np.max(np.abs(cross - 0.5)))
    ok = dev <= 1e-12 and cross.size == 24
    report_line("C8 MUB", ok, f"24 cross-basis overlaps, max |x - 0.5| = {dev:.1e}")
    assert ok


def test_c9_no_same_color_population(report_line):
    worst = 0.0
    rng = np.random.default_rng(9)
    for _ in range(1000):
        a = rng.uniform()
        out = gate.hybrid_gate(source.make_pol_state(a, math.sqrt(1 - a * a), rng.uniform(0, 6.3), 811.9, 807.3))
        vec = out.state.color_vector()
        worst = max(worst, abs(vec[0]) ** 2, abs(vec[3]) ** 2)
    for name in scenario.PRESETS:
        sim = scenario.simulate(scenario.load_scenario(scenario.preset(name)))
        rho = sim.truth()["density_matrix"]
        for k in (0, 3):
            worst = max(worst, abs(rho["re"][k][k]), abs(rho["im"][k][k]))
    ok = worst == 0.0
    report_line("C9 anticorrelation (gate outputs, simulated states)", ok,
                f"max |w1w1>/|w2w2> population {worst:.1e} over 1000 gate outputs and all presets")
    assert ok


def _midpoint_fraction(spectrum, mid_nm):
    k = int(np.argmin(np.abs(spectrum.wavelength_nm - mid_nm)))
    return max(spectrum.mode3[k] / spectrum.mode3.max(), spectrum.mode4[k] / spectrum.mode4.max())


def test_c9_intrinsic_spectrum_midpoint(report_line):
    frac = _midpoint_fraction(synth_spectra(811.9, 807.3, 0.66, 0.0), 809.6)
    ok = frac < 0.01
    report_line("C9 fig2 emitted spectrum (no spectrometer blur) at midpoint", ok, f"{100 * frac:.2f}% of peak")
    assert ok


@pytest.mark.xfail(strict=True, reason="a 1.0 nm Gaussian spectrometer spreads the two lines to ~2.2% of "
                                       "peak at the midpoint; any resolution wider than the 0.66 nm bin exceeds 1%")
def test_c9_preset_spectrum_midpoint(report_line):
    sc = scenario.load_scenario(scenario.preset("fig2"))
    sim = scenario.simulate(sc)
    frac = _midpoint_fraction(sim.spectrum, 0.5 * (sc.pol_state.lambda1_nm + sc.pol_state.lambda2_nm))
    ok = frac < 0.01
    report_line("C9 fig2 preset spectrum (1.0 nm spectrometer) at midpoint", ok, f"{100 * frac:.2f}% of peak")
    assert ok


def test_c10_determinism(report_line, tmp_path):
    runs = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        assert main(["simulate", "--preset", "fig2", "--out", str(d / "sim")]) == 0
        assert main(["fit", str(d / "sim" / "trace.csv"), "--counts", "10882", "9068", "--tau0", "0",
                     "--resamples", "100", "--seed", "1", "--out", str(d / "report.json")]) == 0
        assert main(["sweep", "detuning", "--preset", "fig3a", "--resamples", "100",
                     "--out", str(d / "sweep")]) == 0
        assert main(["mub", "--out", str(d / "mub.csv")]) == 0
        runs.append({p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()})
    same = runs[0].keys() == runs[1].keys() and all(runs[0][k] == runs[1][k] for k in runs[0])
    report_line("C10 determinism", same, f"{len(runs[0])} output files byte-identical across two runs"
                if same else "outputs differ")
    json.loads(runs[0]["report.json"])
    assert same
