"""Hybrid polarization-to-color gate acting on labeled two-photon kets.

A single photon is labeled by (polarization, frequency bin, spatial path).
Input paths are 1 and 2, output paths of the polarizing beam splitter are 3
and 4. Routing convention: H on path 1 -> 3, V on path 1 -> 4,
H on path 2 -> 4, V on path 2 -> 3. With this choice the input
alpha|HH> + e^{i phi} beta|VV> becomes
alpha|H w1>_3|H w2>_4 + e^{i phi} beta|V w2>_3|V w1>_4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .qstate import BASIS_LABELS, RestrictedColorState, StateVector4
from .source import PolPairState

POLARIZATIONS = ("H", "V", "D")
BINS = ("w1", "w2")
PATHS = (1, 2, 3, 4)

_PBS_ROUTE = {(1, "H"): 3, (1, "V"): 4, (2, "H"): 4, (2, "V"): 3}
_AMP_TOL = 1e-15


class Photon(NamedTuple):
    pol: str
    bin: str
    path: int


def _check_photon(ph: Photon) -> Photon:
    ph = Photon(*ph)
    if ph.pol not in POLARIZATIONS:
        raise ValueError(f"unknown polarization {ph.pol!r}")
    if ph.bin not in BINS:
        raise ValueError(f"unknown frequency bin {ph.bin!r}")
    if ph.path not in PATHS:
        raise ValueError(f"unknown path {ph.path!r}")
    return ph


def _canonical(a: Photon, b: Photon) -> tuple:
    # photons are bosons in distinct modes: order labels by (path, bin, pol)
    return (a, b) if (a.path, a.bin, a.pol) <= (b.path, b.bin, b.pol) else (b, a)


class PhotonPairKet:
    """Sparse two-photon ket: {(photon, photon): amplitude}.

    The squared norm may be below one; it then carries the probability of the
    post-selected branch the ket describes.
    """

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for (a, b), amp in items:
            key = _canonical(_check_photon(a), _check_photon(b))
            acc[key] = acc.get(key, 0.0) + complex(amp)
        self._terms = {k: v for k, v in acc.items() if abs(v) > _AMP_TOL}
        n2 = self.norm2()
        if n2 > 1.0 + 1e-12:
            raise ValueError(f"ket norm^2 = {n2:.15g} exceeds 1")

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def norm2(self) -> float:
        return float(sum(abs(v) ** 2 for v in self._terms.values()))

    def paths(self) -> set:
        return {ph.path for key in self._terms for ph in key}

    def scaled(self, factor: complex) -> "PhotonPairKet":
        return PhotonPairKet({k: v * factor for k, v in self._terms.items()})

    def color_vector(self) -> np.ndarray:
        """Amplitudes in the |bin_3 bin_4> basis, polarization ignored.

        Only valid once polarization is erased (all photons 'D') and one photon
        sits in each of paths 3 and 4.
        """
        vec = np.zeros(4, dtype=complex)
        for (a, b), amp in self._terms.items():
            if a.pol != "D" or b.pol != "D":
                raise ValueError("polarization is still entangled with color")
            if (a.path, b.path) != (3, 4):
                raise ValueError("color vector needs one photon in each of paths 3 and 4")
            vec[BASIS_LABELS.index(a.bin + b.bin)] += amp
        return vec

    def to_json(self) -> list:
        out = []
        for (a, b), amp in sorted(self._terms.items()):
            out.append({
                "labels": [list(a), list(b)],
                "re": amp.real,
                "im": amp.imag,
            })
        return out

    @classmethod
    def from_json(cls, records: list) -> "PhotonPairKet":
        return cls(
            ((Photon(*r["labels"][0]), Photon(*r["labels"][1])), complex(r["re"], r["im"]))
            for r in records
        )

    def __repr__(self):
        parts = [f"({amp:.4g})|{a.pol}{a.bin}>_{a.path}|{b.pol}{b.bin}>_{b.path}"
                 for (a, b), amp in sorted(self._terms.items())]
        return "PhotonPairKet(" + " + ".join(parts) + ")"


@dataclass(frozen=True)
class GateOutput:
    state: PhotonPairKet
    success_probability: float


def input_ket(src: PolPairState) -> PhotonPairKet:
    """Ket of the polarization-entangled source on input paths 1 and 2."""
    return PhotonPairKet({
        (Photon("H", "w1", 1), Photon("H", "w2", 2)): src.alpha,
        (Photon("V", "w1", 1), Photon("V", "w2", 2)): np.exp(1j * src.phi) * src.beta,
    })


def pbs_map(ket: PhotonPairKet) -> PhotonPairKet:
    """Route both photons through the polarizing beam splitter."""
    out = []
    for (a, b), amp in ket:
        routed = []
        for ph in (a, b):
            if ph.path not in (1, 2):
                raise ValueError(f"photon on path {ph.path} is not a PBS input")
            if ph.pol not in ("H", "V"):
                raise ValueError("PBS input must be written in the H/V basis")
            routed.append(Photon(ph.pol, ph.bin, _PBS_ROUTE[(ph.path, ph.pol)]))
        out.append(((routed[0], routed[1]), amp))
    return PhotonPairKet(out)


def project_diagonal(ket: PhotonPairKet) -> GateOutput:
    """Project each photon on |D> = (|H> + |V>)/sqrt(2) and drop polarization.

    Only terms with one photon in each output path are kept, since only those
    give a coincidence between the two output arms. The returned state is
    renormalized; ``success_probability`` is the squared norm before that.
    A fully blocked input gives probability 0 and an empty ket.
    """
    projected = []
    for (a, b), amp in ket:
        for ph in (a, b):
            if ph.path not in (3, 4):
                raise ValueError(f"photon on path {ph.path} is not a gate output")
        if a.path == b.path:
            continue
        # <D|H> = <D|V> = 1/sqrt(2) for each photon
        projected.append(((Photon("D", a.bin, a.path), Photon("D", b.bin, b.path)), amp / 2.0))
    raw = PhotonPairKet(projected)
    prob = raw.norm2()
    if prob <= 1e-30:
        return GateOutput(PhotonPairKet(), 0.0)
    return GateOutput(raw.scaled(1.0 / math.sqrt(prob)), prob)


def hybrid_gate(src: PolPairState) -> GateOutput:
    return project_diagonal(pbs_map(input_ket(src)))


def strip_global_phase(vec) -> np.ndarray:
    """Rotate so that the first nonzero amplitude is real and positive."""
    vec = np.asarray(vec, dtype=complex)
    nz = np.flatnonzero(np.abs(vec) > 1e-14)
    if nz.size == 0:
        return vec.copy()
    lead = vec[nz[0]]
    return vec * (abs(lead) / lead)


def restricted_params_from_ket(state, detuning_thz: float = 0.0) -> RestrictedColorState:
    """(p, V, phi) of a pure color state supported on {|w1w2>, |w2w1>}.

    Accepts a :class:`PhotonPairKet` with erased polarization, a
    :class:`StateVector4`, or four raw amplitudes. The phase of an amplitude
    that vanishes is taken as 0.
    """
    if isinstance(state, GateOutput):
        state = state.state
    vec = state.color_vector() if isinstance(state, PhotonPairKet) else np.asarray(state, complex)
    norm2 = float(np.vdot(vec, vec).real)
    if norm2 == 0:
        raise ValueError("zero ket")
    if (abs(vec[0]) ** 2 + abs(vec[3]) ** 2) / norm2 > 1e-24:
        raise ValueError("state has weight outside the anticorrelated subspace")
    a12, a21 = vec[1] / math.sqrt(norm2), vec[2] / math.sqrt(norm2)
    p = min(1.0, abs(a12) ** 2)
    V = 2.0 * abs(a12) * abs(a21)
    if abs(a12) > _AMP_TOL and abs(a21) > _AMP_TOL:
        phi = float(np.angle(a21) - np.angle(a12))
    else:
        phi = 0.0
    # saturate physicality exactly: a pure state has V/2 = sqrt(p(1-p))
    V = min(V, 2.0 * math.sqrt(p * (1.0 - p)))
    return RestrictedColorState(p=p, V=V, phi=phi, detuning_thz=detuning_thz)


def color_state(out: GateOutput) -> StateVector4:
    return StateVector4.normalized(out.state.color_vector())
