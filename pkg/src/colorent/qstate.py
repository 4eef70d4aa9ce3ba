"""Two-qubit color states, the restricted density matrix and entanglement metrics.

All 4-dimensional objects use the computational basis order

    |w1 w1>, |w1 w2>, |w2 w1>, |w2 w2>

where the first label is the frequency bin of the photon in output path 3 and
the second the bin of the photon in path 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BASIS_LABELS = ("w1w1", "w1w2", "w2w1", "w2w2")
BASIS_NAME = ",".join(BASIS_LABELS)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-12

# sigma_y (x) sigma_y, used for the spin flip rho -> Y rho* Y
_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


class PhysicalityError(ValueError):
    """Raised when (p, V) violate 0 <= V/2 <= sqrt(p(1-p))."""


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class StateVector4:
    """Normalized pure two-qubit color state."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got shape {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state vector is not normalized (norm^2 = {norm2!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector4":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """4x4 Hermitian, unit-trace, positive semidefinite matrix."""

    data: np.ndarray

    def __post_init__(self):
        rho = np.array(self.data, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr.real:.15g}, expected 1")
        evals = np.linalg.eigvalsh(rho)
        if evals.min() < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "data", rho)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues with tiny negatives clamped to zero."""
        evals = np.linalg.eigvalsh(self.data)
        return np.where(evals < 0, 0.0, evals)

    def to_json(self) -> dict:
        return {
            "basis": BASIS_NAME,
            "re": self.data.real.tolist(),
            "im": self.data.imag.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DensityMatrix":
        if doc.get("basis", BASIS_NAME) != BASIS_NAME:
            raise ValueError(f"unsupported basis order {doc['basis']!r}")
        return cls(np.asarray(doc["re"], float) + 1j * np.asarray(doc["im"], float))


@dataclass(frozen=True)
class RestrictedColorState:
    """Parameters of the density matrix confined to span{|w1w2>, |w2w1>}.

    ``p`` is the population of |w1>_3|w2>_4, ``V`` twice the modulus of the
    coherence, ``phi`` its phase in radians (stored in [0, 2pi)) and
    ``detuning_thz`` the bin separation as an ordinary frequency.
    """

    p: float
    V: float
    phi: float
    detuning_thz: float = 0.0

    def __post_init__(self):
        p, V = float(self.p), float(self.V)
        if not (0.0 <= p <= 1.0) or math.isnan(p):
            raise PhysicalityError(f"p = {p!r} outside [0, 1]")
        if V < 0 or math.isnan(V):
            raise PhysicalityError(f"V = {V!r} is negative")
        bound = math.sqrt(p * (1.0 - p))
        # a few ulps of slack so that V = 2 sqrt(p(1-p)) computed elsewhere passes
        if V / 2.0 > bound * (1 + 1e-14) + 1e-15:
            raise PhysicalityError(
                f"V/2 = {V / 2:.6g} exceeds sqrt(p(1-p)) = {bound:.6g}"
            )
        if self.detuning_thz < 0:
            raise ValueError("detuning_thz must be nonnegative")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))
        object.__setattr__(self, "detuning_thz", float(self.detuning_thz))

    @property
    def max_visibility(self) -> float:
        return 2.0 * math.sqrt(self.p * (1.0 - self.p))


def restricted_density_matrix(s: RestrictedColorState) -> DensityMatrix:
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = s.p
    rho[2, 2] = 1.0 - s.p
    rho[1, 2] = 0.5 * s.V * np.exp(-1j * s.phi)
    rho[2, 1] = 0.5 * s.V * np.exp(1j * s.phi)
    return DensityMatrix(rho)


def purity(rho) -> float:
    """Tr(rho^2)."""
    m = np.asarray(rho, dtype=complex)
    # Tr(rho rho) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(m) ** 2))


def fidelity_with_pure(rho, target) -> float:
    """Overlap <psi|rho|psi> of a density matrix with a pure target state."""
    m = np.asarray(rho, dtype=complex)
    psi = np.asarray(target, dtype=complex)
    return float(np.vdot(psi, m @ psi).real)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(m)
    # clamped negatives and eigenvalues at rounding level are exact zeros;
    # sqrt would otherwise lift 1e-17 noise to 3e-9
    zero_tol = 64 * np.finfo(float).eps * max(1.0, abs(evals).max())
    evals = np.where(evals < zero_tol, 0.0, evals)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def concurrence_wootters(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    The lambda_i are the square roots of the eigenvalues of rho * rho_tilde.
    They are obtained as the singular values of A = sqrt(rho) Y sqrt(rho)*,
    which satisfies A A^dagger = sqrt(rho) rho_tilde sqrt(rho).
    """
    m = np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError("concurrence needs a 4x4 matrix")
    try:
        root = _psd_sqrt(m)
        a = root @ _YY @ root.conj()
        lam = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-decomposition failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise NumericalError("non-finite singular values in concurrence")
    lam = np.sort(lam)[::-1]
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def tangle(rho) -> float:
    return concurrence_wootters(rho) ** 2


def restricted_tangle(s: RestrictedColorState) -> float:
    """Closed form of the tangle for a restricted state: V^2."""
    return s.V**2


def restricted_purity(s: RestrictedColorState) -> float:
    return s.p**2 + (1.0 - s.p) ** 2 + s.V**2 / 2.0


def restricted_fidelity(s: RestrictedColorState, phi_t: float) -> float:
    """Closed form fidelity with (|w1w2> + e^{i phi_t}|w2w1>)/sqrt(2).

    With the coherence written as (V/2) e^{-i phi} above the diagonal and the
    target phase on the |w2w1> amplitude, F = 1/2 + (V/2) cos(phi - phi_t).
    """
    return 0.5 + 0.5 * s.V * math.cos(s.phi - phi_t)


def target_state(phi_t: float) -> StateVector4:
    r = 1.0 / math.sqrt(2.0)
    return StateVector4([0.0, r, r * np.exp(1j * phi_t), 0.0])


def product_state(first: str, second: str) -> StateVector4:
    """Computational basis state, e.g. ``product_state("w1", "w2")``."""
    label = first + second
    if label not in BASIS_LABELS:
        raise ValueError(f"unknown basis label {label!r}")
    amps = np.zeros(4, dtype=complex)
    amps[BASIS_LABELS.index(label)] = 1.0
    return StateVector4(amps)


def mub_overlap_check(bases: Sequence[Sequence[StateVector4]]) -> np.ndarray:
    """Pairwise |<psi_i|psi_j>|^2 over all states of the given bases.

    States are flattened in input order. For a qubit MUB set the table is the
    identity inside each basis block and 1/2 everywhere else; use
    :func:`mub_deviation` to measure how far a table is from that.
    """
    states = []
    for b, basis in enumerate(bases):
        for s in basis:
            amps = np.asarray(s, dtype=complex).reshape(-1)
            if amps.shape != (4,):
                raise ValueError(f"state in basis {b} does not have 4 amplitudes")
            if abs(np.vdot(amps, amps).real - 1.0) > NORM_TOL:
                raise ValueError(f"state in basis {b} is not normalized")
            states.append(amps)
    mat = np.array(states)
    return np.abs(mat.conj() @ mat.T) ** 2


def mub_deviation(overlaps: np.ndarray, basis_sizes: Sequence[int]) -> float:
    """Largest |overlap - ideal| for a table from :func:`mub_overlap_check`."""
    owner = np.repeat(np.arange(len(basis_sizes)), basis_sizes)
    n = len(owner)
    same = owner[:, None] == owner[None, :]
    ideal = np.where(same, np.eye(n), 1.0 / basis_sizes[0])
    return float(np.max(np.abs(np.asarray(overlaps) - ideal)))
