"""Scenario configs, shipped presets and the simulate/analyze pipeline.

A scenario is one JSON document with ``source``, ``measurement``, ``model``
and ``analysis`` blocks. Angles are degrees, frequencies THz, delays ps.

The detuning (fig3a/b/c) and phase (fig4) presets reuse the counting
statistics of the fig2 preset and a visibility of 0.78. Per-point
integration times and delay grids for those series are assumptions.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import __version__, estimate, gate, interference, qstate, source

PHASE_SWEEP_DEG = [30.0 * k for k in range(13)]
DETUNING_SWEEP_C = [33.7, 43.7, 68.1]


class ConfigError(ValueError):
    """Invalid scenario; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


_FIG2 = {
    "name": "fig2",
    "source": {
        "alpha": math.sqrt(0.546),
        "beta": math.sqrt(0.454),
        "phi_deg": 179.2,
        "wavelengths_nm": [811.9, 807.3],
    },
    "measurement": {
        "n_points": 200,
        "delay_span_ps": 5.0,
        "pair_rate_hz": 2000.0,
        "integration_s": 10.0,
        "singles_rate_hz": 20000.0,
        "basis_counts_total": 19950.0,
        "noise": "poisson",
        "seed": 20100,
    },
    "model": {
        "visibility": 0.782,
        "bandwidth_thz": 0.30,
        "bin_fwhm_nm": 0.66,
        "spectrometer_fwhm_nm": 1.0,
        "baseline": 0.5,
        "tau0_ps": 0.0,
    },
    "analysis": {"target_phi_deg": 180.0, "hold_tau0_ps": 0.0},
}


def _fig3(name, temperature, seed):
    cfg = copy.deepcopy(_FIG2)
    cfg["name"] = name
    cfg["source"] = {
        "alpha": 1 / math.sqrt(2), "beta": 1 / math.sqrt(2), "phi_deg": 180.0,
        "temperature_c": temperature,
    }
    cfg["model"]["visibility"] = 0.78
    cfg["measurement"]["seed"] = seed
    return cfg


def _fig4():
    cfg = copy.deepcopy(_FIG2)
    cfg["name"] = "fig4"
    cfg["source"] = {
        "alpha": 1 / math.sqrt(2), "beta": 1 / math.sqrt(2), "phi_deg": 0.0,
        "wavelengths_nm": [811.9, 807.3],
    }
    cfg["model"]["visibility"] = 0.78
    cfg["measurement"]["seed"] = 40000
    cfg["analysis"]["target_phi_deg"] = None
    cfg["sweep"] = {"kind": "phase", "phases_deg": PHASE_SWEEP_DEG}
    return cfg


PRESETS = {
    "fig2": _FIG2,
    "fig3a": _fig3("fig3a", 33.7, 30001),
    "fig3b": _fig3("fig3b", 43.7, 30002),
    "fig3c": _fig3("fig3c", 68.1, 30003),
    "fig4": _fig4(),
}
PRESETS["fig3a"]["sweep"] = {"kind": "detuning", "temperatures_c": DETUNING_SWEEP_C}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


def config_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Scenario:
    """Validated scenario (ScenarioConfig) with all derived physical quantities."""

    name: str
    pol_state: source.PolPairState
    temperature_c: float | None
    detuning_thz: float
    n_points: int
    delay_span_ps: float
    pair_rate_hz: float
    integration_s: float
    singles_rate_hz: float
    basis_counts_total: float
    noise: bool
    seed: int
    visibility: float
    tau_c_ps: float
    bin_fwhm_nm: float
    spectrometer_fwhm_nm: float
    baseline: float
    tau0_ps: float
    target_phi: float
    hold_tau0_ps: float | None
    doc: dict

    @property
    def restricted_state(self) -> qstate.RestrictedColorState:
        p = self.pol_state.alpha**2
        return qstate.RestrictedColorState(p, self.visibility, self.pol_state.phi, self.detuning_thz)

    @property
    def beating_params(self) -> interference.BeatingModelParams:
        return interference.BeatingModelParams(
            V=self.visibility, phi=self.pol_state.phi, detuning_thz=self.detuning_thz,
            tau_c_ps=self.tau_c_ps, tau0_ps=self.tau0_ps, baseline=self.baseline,
        )


def _get(block, name, path, kind=float, default=None, required=True):
    if name not in block or block[name] is None:
        if required and default is None:
            raise ConfigError(f"{path}.{name}", "missing")
        return default
    value = block[name]
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{name}", f"expected {kind.__name__}, got {value!r}") from None


def _block(doc, name):
    block = doc.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(name, "expected an object")
    return block


def load_scenario(doc: dict, seed: int | None = None, curve: source.TuningCurve | None = None) -> Scenario:
    """Validate a scenario document. ``seed`` overrides ``measurement.seed``."""
    if not isinstance(doc, dict):
        raise ConfigError("config", "expected a JSON object")
    doc = copy.deepcopy(doc)
    curve = curve or source.default_tuning_curve()
    src = _block(doc, "source")
    meas = _block(doc, "measurement")
    model = _block(doc, "model")
    analysis = _block(doc, "analysis")

    alpha = _get(src, "alpha", "source")
    beta = _get(src, "beta", "source")
    phi = math.radians(_get(src, "phi_deg", "source"))
    has_t = src.get("temperature_c") is not None
    has_w = src.get("wavelengths_nm") is not None
    if has_t == has_w:
        raise ConfigError("source", "give exactly one of temperature_c or wavelengths_nm")
    if has_t:
        temperature = _get(src, "temperature_c", "source")
        try:
            detuning = source.detuning_from_temperature(temperature, curve)
        except ValueError as exc:
            raise ConfigError("source.temperature_c", str(exc)) from None
        lam1, lam2 = source.wavelengths_from_detuning(detuning, curve.degenerate_wavelength_nm)
    else:
        temperature = None
        w = src["wavelengths_nm"]
        if not (isinstance(w, (list, tuple)) and len(w) == 2):
            raise ConfigError("source.wavelengths_nm", "expected two wavelengths")
        try:
            lam1, lam2 = float(w[0]), float(w[1])
        except (TypeError, ValueError):
            raise ConfigError("source.wavelengths_nm", f"non-numeric entry in {w!r}") from None
        if lam1 <= 0 or lam2 <= 0:
            raise ConfigError("source.wavelengths_nm", "wavelengths must be positive")
        detuning = source.detuning_from_wavelengths(lam1, lam2)
    try:
        pol = source.make_pol_state(alpha, beta, phi, lam1, lam2)
    except ValueError as exc:
        raise ConfigError("source.alpha", str(exc)) from None

    n_points = _get(meas, "n_points", "measurement", int)
    if n_points < estimate.MIN_POINTS:
        raise ConfigError("measurement.n_points", f"need at least {estimate.MIN_POINTS}")
    span = _get(meas, "delay_span_ps", "measurement")
    rate = _get(meas, "pair_rate_hz", "measurement")
    integ = _get(meas, "integration_s", "measurement")
    singles = _get(meas, "singles_rate_hz", "measurement", default=10.0 * rate)
    basis_total = _get(meas, "basis_counts_total", "measurement", default=0.0)
    for name, value in (("delay_span_ps", span), ("pair_rate_hz", rate), ("integration_s", integ)):
        if value <= 0:
            raise ConfigError(f"measurement.{name}", "must be positive")
    if basis_total < 0:
        raise ConfigError("measurement.basis_counts_total", "must be nonnegative")
    noise = meas.get("noise", "poisson")
    if noise not in ("poisson", "none"):
        raise ConfigError("measurement.noise", "expected 'poisson' or 'none'")
    if seed is None:
        seed = _get(meas, "seed", "measurement", int, default=0)

    p = pol.alpha**2
    v_max = 2.0 * pol.alpha * pol.beta
    V = _get(model, "visibility", "model", default=v_max)
    if V < 0 or V > v_max + 1e-12:
        raise ConfigError("model.visibility", f"{V} violates 0 <= V <= 2 sqrt(p(1-p)) = {v_max:.6g}")
    V = min(V, v_max, 2.0 * math.sqrt(p * (1.0 - p)))
    if "tau_c_ps" in model:
        tau_c = _get(model, "tau_c_ps", "model")
    else:
        bw = _get(model, "bandwidth_thz", "model", default=0.30)
        if bw <= 0:
            raise ConfigError("model.bandwidth_thz", "must be positive")
        tau_c = source.coherence_time_from_bandwidth(bw)
    if tau_c <= 0:
        raise ConfigError("model.tau_c_ps", "must be positive")
    bin_fwhm = _get(model, "bin_fwhm_nm", "model", default=0.66)
    spec_fwhm = _get(model, "spectrometer_fwhm_nm", "model", default=1.0)
    if bin_fwhm <= 0 or spec_fwhm < 0:
        raise ConfigError("model.bin_fwhm_nm", "widths must be positive")
    baseline = _get(model, "baseline", "model", default=0.5)
    if not 0 < baseline < 1:
        raise ConfigError("model.baseline", "must lie in (0, 1)")
    tau0 = _get(model, "tau0_ps", "model", default=0.0, required=False)

    target = analysis.get("target_phi_deg")
    target_phi = pol.phi if target is None else math.radians(_get(analysis, "target_phi_deg", "analysis"))
    hold = analysis.get("hold_tau0_ps")
    hold = None if hold is None else _get(analysis, "hold_tau0_ps", "analysis")

    return Scenario(
        name=str(doc.get("name", "custom")), pol_state=pol, temperature_c=temperature,
        detuning_thz=detuning, n_points=n_points, delay_span_ps=span, pair_rate_hz=rate,
        integration_s=integ, singles_rate_hz=singles, basis_counts_total=basis_total,
        noise=(noise == "poisson"), seed=seed, visibility=V, tau_c_ps=tau_c,
        bin_fwhm_nm=bin_fwhm, spectrometer_fwhm_nm=spec_fwhm, baseline=baseline,
        tau0_ps=tau0, target_phi=target_phi, hold_tau0_ps=hold, doc=doc,
    )


@dataclass
class Simulation:
    scenario: Scenario
    gate_output: gate.GateOutput
    trace: interference.BeatingTrace
    spectrum: interference.Spectrum
    basis_counts: tuple

    def truth(self) -> dict:
        sc = self.scenario
        s = sc.restricted_state
        rho = qstate.restricted_density_matrix(s)
        target = qstate.target_state(sc.target_phi)
        return {
            "tool": "colorent",
            "version": __version__,
            "config_sha256": config_hash(sc.doc),
            "seed": sc.seed,
            "rng": interference.RNG_ALGORITHM,
            "scenario": sc.name,
            "source": {
                "alpha": sc.pol_state.alpha, "beta": sc.pol_state.beta,
                "phi_deg": math.degrees(sc.pol_state.phi),
                "lambda1_nm": sc.pol_state.lambda1_nm, "lambda2_nm": sc.pol_state.lambda2_nm,
                "temperature_c": sc.temperature_c,
            },
            "gate_output": {
                "ket": self.gate_output.state.to_json(),
                "success_probability": self.gate_output.success_probability,
            },
            "state": {"p": s.p, "V": s.V, "phi_deg": math.degrees(s.phi), "detuning_thz": s.detuning_thz},
            "beating": {
                "V": sc.visibility, "phi_deg": math.degrees(sc.pol_state.phi),
                "detuning_thz": sc.detuning_thz, "tau_c_ps": sc.tau_c_ps,
                "tau0_ps": sc.tau0_ps, "baseline": sc.baseline,
            },
            "basis_counts": {"n12": self.basis_counts[0], "n21": self.basis_counts[1]},
            "target_phi_deg": math.degrees(sc.target_phi),
            "metrics": {
                "fidelity": qstate.fidelity_with_pure(rho, target),
                "tangle": qstate.tangle(rho),
                "purity": qstate.purity(rho),
            },
            "density_matrix": rho.to_json(),
        }


def simulate(sc: Scenario) -> Simulation:
    """Source -> gate -> interference for one scenario."""
    out = gate.hybrid_gate(sc.pol_state)
    trace = interference.simulate_trace(
        sc.beating_params, sc.n_points, sc.delay_span_ps, sc.pair_rate_hz,
        sc.integration_s, sc.seed, singles_rate_hz=sc.singles_rate_hz, noise=sc.noise,
    )
    trace.metadata["scenario"] = sc.name
    trace.metadata["config_sha256"] = config_hash(sc.doc)
    spectrum = interference.synth_spectra(
        sc.pol_state.lambda1_nm, sc.pol_state.lambda2_nm, sc.bin_fwhm_nm, sc.spectrometer_fwhm_nm,
    )
    p = qstate.restricted_density_matrix(sc.restricted_state).data[1, 1].real
    means = np.array([p, 1.0 - p]) * sc.basis_counts_total
    if sc.noise:
        rng = np.random.Generator(np.random.PCG64([sc.seed, 1]))
        counts = tuple(int(n) for n in rng.poisson(means))
    else:
        counts = tuple(float(m) for m in means)
    return Simulation(sc, out, trace, spectrum, counts)


@dataclass
class Analysis:
    fit: estimate.FitResult
    balance: estimate.BalanceEstimate
    report: estimate.ReconstructionReport


def analyze(trace, basis_counts=None, target_phi=math.pi, resamples=500, seed=0,
            hold_tau0_ps=None) -> Analysis:
    """Fit, balance, reconstruction and (if ``resamples`` > 0) bootstrap errors."""
    fixed = None if hold_tau0_ps is None else {"tau0_ps": hold_tau0_ps}
    fit = estimate.fit_beating(trace, fixed=fixed)
    if basis_counts is None:
        balance = estimate.assumed_balance()
    else:
        balance = estimate.balance_from_counts(*basis_counts)
    if resamples:
        report = estimate.bootstrap_uncertainty(trace, fit, balance, resamples, seed, target_phi)
    else:
        report = estimate.reconstruct(fit, balance, target_phi)
    return Analysis(fit, balance, report)
