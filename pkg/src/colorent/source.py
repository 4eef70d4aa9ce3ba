"""Polarization-entangled pair source: input state, tuning curve, unit conversions.

Detuning is handled as an ordinary frequency in THz throughout; wavelengths
are vacuum wavelengths in nm and coherence times are in ps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

C_NM_THZ = 299792.458  # speed of light in nm * THz
SINC2_ENVELOPE_CONSTANT = 0.885  # Delta f_FWHM * tau_c for the triangular envelope


@dataclass(frozen=True)
class PolPairState:
    """alpha|HH> + e^{i phi} beta|VV>, photon 1 at lambda1_nm and photon 2 at lambda2_nm."""

    alpha: float
    beta: float
    phi: float
    lambda1_nm: float
    lambda2_nm: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if abs(self.alpha**2 + self.beta**2 - 1.0) > 1e-12:
            raise ValueError("alpha^2 + beta^2 must equal 1")
        if self.lambda1_nm <= 0 or self.lambda2_nm <= 0:
            raise ValueError("wavelengths must be positive")

    @property
    def detuning_thz(self) -> float:
        return abs(C_NM_THZ / self.lambda2_nm - C_NM_THZ / self.lambda1_nm)


def make_pol_state(alpha, beta, phi, lambda1_nm, lambda2_nm, tol=1e-9) -> PolPairState:
    """Validate and renormalize the amplitudes of the input polarization state.

    Amplitudes within ``tol`` of unit norm are rescaled to exactly unit norm;
    anything further off is rejected, as is the all-zero input.
    """
    alpha, beta = float(alpha), float(beta)
    norm2 = alpha**2 + beta**2
    if norm2 == 0:
        raise ValueError("alpha and beta are both zero")
    if abs(norm2 - 1.0) > tol:
        raise ValueError(f"alpha^2 + beta^2 = {norm2:.12g}, expected 1")
    norm = math.sqrt(norm2)
    return PolPairState(alpha / norm, beta / norm, float(phi), float(lambda1_nm), float(lambda2_nm))


@dataclass(frozen=True)
class TuningCurve:
    """Crystal temperature -> detuning, linear through the degeneracy point.

    The slope is the least-squares fit of ``detuning = k (T - T_deg)`` over the
    anchor points, so the degeneracy anchor is reproduced exactly.
    """

    anchors: tuple
    degenerate_wavelength_nm: float
    degenerate_temperature_c: float

    def __post_init__(self):
        anchors = tuple((float(t), float(d)) for t, d in self.anchors)
        if len(anchors) < 2:
            raise ValueError("need at least two anchor points")
        temps = np.array([a[0] for a in anchors])
        dets = np.array([a[1] for a in anchors])
        order = np.argsort(temps)
        if np.any(np.diff(dets[order]) <= 0) or np.any(np.diff(temps[order]) <= 0):
            raise ValueError("detuning must increase strictly with temperature")
        at_deg = dets[np.isclose(temps, self.degenerate_temperature_c)]
        if at_deg.size and abs(at_deg[0]) > 1e-12:
            raise ValueError("detuning at the degeneracy temperature must be 0")
        object.__setattr__(self, "anchors", anchors)

    @property
    def slope_thz_per_c(self) -> float:
        x = np.array([a[0] for a in self.anchors]) - self.degenerate_temperature_c
        y = np.array([a[1] for a in self.anchors])
        return float(np.dot(x, y) / np.dot(x, x))

    def residuals(self) -> np.ndarray:
        """Anchor detuning minus model detuning, THz."""
        k = self.slope_thz_per_c
        return np.array([d - k * (t - self.degenerate_temperature_c) for t, d in self.anchors])

    @classmethod
    def from_json(cls, doc) -> "TuningCurve":
        if isinstance(doc, (str, Path)):
            doc = json.loads(Path(doc).read_text())
        return cls(
            anchors=tuple(tuple(a) for a in doc["anchors"]),
            degenerate_wavelength_nm=float(doc["degenerate_wavelength_nm"]),
            degenerate_temperature_c=float(doc["degenerate_temperature_c"]),
        )

    def to_json(self) -> dict:
        return {
            "degenerate_wavelength_nm": self.degenerate_wavelength_nm,
            "degenerate_temperature_c": self.degenerate_temperature_c,
            "anchors": [list(a) for a in self.anchors],
        }


def default_tuning_curve() -> TuningCurve:
    text = resources.files("colorent").joinpath("data/tuning_anchors.json").read_text()
    return TuningCurve.from_json(json.loads(text))


def detuning_from_temperature(temperature_c: float, curve: TuningCurve | None = None) -> float:
    curve = curve or default_tuning_curve()
    dt = float(temperature_c) - curve.degenerate_temperature_c
    if dt < -1e-12:
        raise ValueError(
            f"temperature {temperature_c} C is below degeneracy "
            f"({curve.degenerate_temperature_c} C)"
        )
    return curve.slope_thz_per_c * max(dt, 0.0)


def wavelengths_from_detuning(detuning_thz: float, lambda_deg_nm: float = 809.6):
    """Signal/idler wavelengths for a given detuning at fixed pump.

    Energy conservation keeps f1 + f2 = 2 f_deg, so f1 = f_deg - df/2 and
    f2 = f_deg + df/2. Returns ``(lambda1_nm, lambda2_nm)`` with lambda1 the
    longer wavelength.
    """
    if detuning_thz < 0:
        raise ValueError("detuning must be nonnegative")
    f_deg = C_NM_THZ / lambda_deg_nm
    f1 = f_deg - detuning_thz / 2.0
    f2 = f_deg + detuning_thz / 2.0
    if f1 <= 0:
        raise ValueError("detuning exceeds twice the degenerate frequency")
    return C_NM_THZ / f1, C_NM_THZ / f2


def detuning_from_wavelengths(lambda1_nm: float, lambda2_nm: float) -> float:
    return abs(C_NM_THZ / lambda2_nm - C_NM_THZ / lambda1_nm)


def coherence_time_from_bandwidth(df_fwhm_thz: float) -> float:
    """Base-to-base width (ps) of the triangular envelope for a bandwidth in THz."""
    if df_fwhm_thz <= 0:
        raise ValueError("bandwidth must be positive")
    return SINC2_ENVELOPE_CONSTANT / df_fwhm_thz


def bandwidth_from_coherence_time(tau_c_ps: float) -> float:
    if tau_c_ps <= 0:
        raise ValueError("coherence time must be positive")
    return SINC2_ENVELOPE_CONSTANT / tau_c_ps


def bandwidth_nm_to_thz(fwhm_nm: float, center_nm: float) -> float:
    """Small-width conversion of a wavelength FWHM to frequency."""
    return C_NM_THZ * fwhm_nm / center_nm**2
