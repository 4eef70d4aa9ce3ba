"""Forward model of the fiber-beamsplitter measurement.

Coincidence probability versus delay for a restricted color state, Poisson
count traces built from it, and single-photon spectra of the two output modes.
Delays are in ps, detunings in THz, wavelengths in nm.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter1d

RNG_ALGORITHM = "numpy.random.PCG64"
TRACE_COLUMNS = ("delay_ps", "coincidences", "singles3", "singles4", "integration_s")
SPECTRUM_COLUMNS = ("wavelength_nm", "mode3", "mode4")
SINC2_FWHM = 0.885893  # FWHM of np.sinc(x)**2 in units of its first-zero distance


@dataclass(frozen=True)
class BeatingModelParams:
    V: float
    phi: float
    detuning_thz: float
    tau_c_ps: float
    tau0_ps: float = 0.0
    baseline: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.V <= 1.0:
            raise ValueError(f"visibility {self.V} outside [0, 1]")
        if self.tau_c_ps <= 0:
            raise ValueError("tau_c_ps must be positive")
        if not 0.0 < self.baseline < 1.0:
            raise ValueError("baseline must lie in (0, 1)")
        if self.detuning_thz < 0:
            raise ValueError("detuning must be nonnegative")

    def as_vector(self) -> np.ndarray:
        return np.array([self.V, self.phi, self.detuning_thz, self.tau_c_ps, self.tau0_ps, self.baseline])


def triangle_envelope(t, tau_c):
    """1 - |2t/tau_c| inside |t| < tau_c/2, zero outside."""
    return np.clip(1.0 - np.abs(2.0 * np.asarray(t, float) / tau_c), 0.0, None)


def beating_curve(tau, V, phi, detuning_thz, tau_c_ps, tau0_ps=0.0, baseline=0.5):
    """Unclamped coincidence probability; vectorized over ``tau``."""
    t = np.asarray(tau, float) - tau0_ps
    return baseline - 0.5 * V * np.cos(2.0 * np.pi * detuning_thz * t + phi) * triangle_envelope(t, tau_c_ps)


def beating_probability(tau_ps, params: BeatingModelParams):
    """Coincidence probability behind the 50:50 beamsplitter at delay ``tau_ps``.

    Returns a float for scalar input and an array otherwise.
    """
    p = beating_curve(tau_ps, *params.as_vector())
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


@dataclass
class BeatingTrace:
    """Coincidence and singles counts versus delay.

    Count columns are float arrays so that noiseless traces can carry exact
    expectation values; Poisson traces hold integral values.
    """

    delay_ps: np.ndarray
    coincidences: np.ndarray
    singles3: np.ndarray
    singles4: np.ndarray
    integration_s: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delay_ps = np.asarray(self.delay_ps, float)
        n = self.delay_ps.size
        for name in TRACE_COLUMNS[1:]:
            arr = np.asarray(getattr(self, name), float)
            if arr.ndim == 0:
                arr = np.full(n, float(arr))
            if arr.shape != (n,):
                raise ValueError(f"column {name} has length {arr.size}, expected {n}")
            setattr(self, name, arr)
        if np.any(np.diff(self.delay_ps) <= 0):
            raise ValueError("delays must be strictly increasing")
        for name in ("coincidences", "singles3", "singles4"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"negative values in {name}")
        if np.any(self.integration_s <= 0):
            raise ValueError("integration times must be positive")

    def __len__(self):
        return self.delay_ps.size

    @property
    def pair_rate_hz(self) -> float | None:
        rate = self.metadata.get("pair_rate_hz")
        return None if rate is None else float(rate)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}={self.metadata[key]}\n")
        buf.write(",".join(TRACE_COLUMNS) + "\n")
        for row in zip(self.delay_ps, self.coincidences, self.singles3, self.singles4, self.integration_s):
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "BeatingTrace":
        metadata = {}
        header = None
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                key, sep, value = stripped[1:].strip().partition("=")
                if sep:
                    metadata[key.strip()] = _parse_meta(value.strip())
                continue
            if header is None:
                header = [h.strip() for h in stripped.split(",")]
                if tuple(header) != TRACE_COLUMNS:
                    raise ValueError(f"line {lineno}: expected header {','.join(TRACE_COLUMNS)}")
                continue
            fields = stripped.split(",")
            if len(fields) != len(TRACE_COLUMNS):
                raise ValueError(f"line {lineno}: expected {len(TRACE_COLUMNS)} fields, got {len(fields)}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric field in {stripped!r}") from None
        if header is None:
            raise ValueError("missing CSV header")
        if not rows:
            raise ValueError("trace has no data rows")
        cols = np.array(rows).T
        try:
            return cls(*cols, metadata=metadata)
        except ValueError as exc:
            raise ValueError(f"invalid trace: {exc}") from None

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())

    @classmethod
    def load(cls, path) -> "BeatingTrace":
        return cls.from_csv(Path(path).read_text())


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


def _parse_meta(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


def delay_grid(n_points: int, delay_span_ps: float, center_ps: float = 0.0) -> np.ndarray:
    """Uniform grid of ``n_points`` delays covering ``center +- span/2``."""
    if n_points < 2:
        raise ValueError("need at least 2 delay points")
    if delay_span_ps <= 0:
        raise ValueError("delay span must be positive")
    return center_ps + np.linspace(-delay_span_ps / 2.0, delay_span_ps / 2.0, n_points)


def simulate_trace(
    params: BeatingModelParams,
    n_points: int,
    delay_span_ps: float,
    pair_rate_hz: float,
    integration_s: float,
    seed: int,
    singles_rate_hz: float | None = None,
    noise: bool = True,
) -> BeatingTrace:
    """Draw a seeded Poisson coincidence trace from the beating model.

    Mean coincidences per point are ``pair_rate_hz * integration_s * p_c(tau)``.
    Singles have a delay-independent mean (``singles_rate_hz``, default ten
    times the pair rate). With ``noise=False`` the expectation values are
    returned instead of draws.
    """
    if pair_rate_hz <= 0 or integration_s <= 0:
        raise ValueError("pair rate and integration time must be positive")
    if singles_rate_hz is None:
        singles_rate_hz = 10.0 * pair_rate_hz
    delays = delay_grid(n_points, delay_span_ps)
    mean_cc = pair_rate_hz * integration_s * beating_probability(delays, params)
    mean_singles = np.full(n_points, singles_rate_hz * integration_s)
    if noise:
        rng = np.random.Generator(np.random.PCG64(seed))
        cc = rng.poisson(mean_cc).astype(float)
        s3 = rng.poisson(mean_singles).astype(float)
        s4 = rng.poisson(mean_singles).astype(float)
    else:
        cc, s3, s4 = mean_cc, mean_singles.copy(), mean_singles.copy()
    metadata = {
        "seed": int(seed),
        "rng": RNG_ALGORITHM,
        "noise": "poisson" if noise else "none",
        "pair_rate_hz": float(pair_rate_hz),
        "singles_rate_hz": float(singles_rate_hz),
        "V": params.V,
        "phi_deg": math.degrees(params.phi),
        "detuning_thz": params.detuning_thz,
        "tau_c_ps": params.tau_c_ps,
        "tau0_ps": params.tau0_ps,
        "baseline": params.baseline,
    }
    return BeatingTrace(delays, cc, s3, s4, np.full(n_points, float(integration_s)), metadata)


@dataclass
class Spectrum:
    wavelength_nm: np.ndarray
    mode3: np.ndarray
    mode4: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(SPECTRUM_COLUMNS) + "\n")
        for row in zip(self.wavelength_nm, self.mode3, self.mode4):
            buf.write(",".join(f"{v:.10g}" for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        rows = []
        header_seen = False
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if not header_seen:
                if tuple(fields) != SPECTRUM_COLUMNS:
                    raise ValueError(f"line {lineno}: expected header {','.join(SPECTRUM_COLUMNS)}")
                header_seen = True
                continue
            if len(fields) != len(SPECTRUM_COLUMNS):
                raise ValueError(f"line {lineno}: expected {len(SPECTRUM_COLUMNS)} fields, got {len(fields)}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric field in {line!r}") from None
        if not rows:
            raise ValueError("spectrum has no data rows")
        return cls(*np.array(rows).T)

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())

    @classmethod
    def load(cls, path) -> "Spectrum":
        return cls.from_csv(Path(path).read_text())

    def peak_wavelengths(self, mode: str = "mode3", split_nm: float | None = None) -> tuple:
        """Peak positions on either side of ``split_nm`` (default: grid center).

        Each peak is refined by a parabola through the maximum sample and its
        neighbours.
        """
        y = getattr(self, mode)
        x = self.wavelength_nm
        if split_nm is None:
            split_nm = 0.5 * (x[0] + x[-1])
        peaks = []
        for mask in (x >= split_nm, x < split_nm):
            idx = np.flatnonzero(mask)
            i = idx[np.argmax(y[idx])]
            if 0 < i < x.size - 1:
                y0, y1, y2 = y[i - 1], y[i], y[i + 1]
                denom = y0 - 2 * y1 + y2
                shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
                peaks.append(x[i] + shift * (x[1] - x[0]))
            else:
                peaks.append(x[i])
        return tuple(float(p) for p in peaks)


def sinc2_line(wavelength_nm, center_nm, fwhm_nm):
    """Unit-height sinc^2 line with the given full width at half maximum."""
    zero_spacing = fwhm_nm / SINC2_FWHM
    return np.sinc((np.asarray(wavelength_nm, float) - center_nm) / zero_spacing) ** 2


def default_spectrum_grid(lambda1_nm, lambda2_nm, margin_nm=5.0, step_nm=0.005):
    lo = min(lambda1_nm, lambda2_nm) - margin_nm
    hi = max(lambda1_nm, lambda2_nm) + margin_nm
    n = int(round((hi - lo) / step_nm)) + 1
    return np.linspace(lo, hi, n)


def synth_spectra(lambda1_nm, lambda2_nm, bin_fwhm_nm, spectrometer_fwhm_nm, grid=None) -> Spectrum:
    """Single-photon spectra of output modes 3 and 4.

    Each mode holds an equal mixture of sinc^2 lines at both bin wavelengths,
    blurred by a Gaussian instrument response of ``spectrometer_fwhm_nm``
    (0 disables the blur). Both modes are identical. ``grid`` must be uniform.
    """
    if bin_fwhm_nm <= 0 or spectrometer_fwhm_nm < 0:
        raise ValueError("bin width must be positive and spectrometer width nonnegative")
    x = default_spectrum_grid(lambda1_nm, lambda2_nm) if grid is None else np.asarray(grid, float)
    if x.size < 3 or not np.allclose(np.diff(x), x[1] - x[0], rtol=1e-6, atol=0):
        raise ValueError("spectrum grid must be uniform with at least 3 points")
    y = 0.5 * sinc2_line(x, lambda1_nm, bin_fwhm_nm) + 0.5 * sinc2_line(x, lambda2_nm, bin_fwhm_nm)
    if spectrometer_fwhm_nm > 0:
        sigma_samples = spectrometer_fwhm_nm / (2.0 * math.sqrt(2.0 * math.log(2.0))) / (x[1] - x[0])
        y = gaussian_filter1d(y, sigma_samples, mode="constant", truncate=8.0)
    return Spectrum(x, y.copy(), y.copy())
