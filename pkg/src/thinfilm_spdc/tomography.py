"""Two-photon polarization state: 16-projection tomography and Schmidt number.

Two-qubit basis order is HH, HV, VH, VV (signal first).  H and V are the
detector-frame analyzers x' and y' built at each detection direction, so a
state is described in the frame that becomes the lab x/y after collimation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .analysis import Axis, ScanGrid, evaluate_chunked
from .errors import ReconstructionError, UndefinedStateError
from .spdc import (
    STATE_AMPLITUDES,
    JointSetting,
    amplitude_matrix,
    amplitude_matrix_from_tensor,
    analyzer_basis,
    farfield_rate,
    farfield_tensor,
    make_setting,
    unpolarized_rate_from_tensor,
)

TOMOGRAPHY_PAIRS = tuple(
    (p[0], p[1])
    for p in "HH HV VV VH RH RV DV DD RD HD VD VL HL RL DR DH".split()
)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(frozen=True)
class PolarizationState2:
    label: str
    vector: np.ndarray

    @classmethod
    def from_label(cls, label):
        key = label.upper()
        if key not in STATE_AMPLITUDES:
            raise ValueError(f"unknown polarization state {label!r}")
        return cls(key, np.array(STATE_AMPLITUDES[key], dtype=complex))


def tomographic_states():
    """The 16 (signal, idler) state pairs in measurement order."""
    return [(PolarizationState2.from_label(s), PolarizationState2.from_label(i)) for s, i in TOMOGRAPHY_PAIRS]


def _pair_vector(label_s, label_i):
    return np.kron(STATE_AMPLITUDES[label_s], STATE_AMPLITUDES[label_i]).astype(complex)


def _hermitian_basis():
    pauli = [
        np.eye(2, dtype=complex),
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    return np.array([np.kron(a, b) / 2 for a in pauli for b in pauli])


def _dual_matrices():
    """M_nu with rho = sum_nu rate_nu M_nu for noiseless projections."""
    basis = _hermitian_basis()
    vecs = np.array([_pair_vector(s, i) for s, i in TOMOGRAPHY_PAIRS])
    overlap = np.einsum("na,mab,nb->nm", vecs.conj(), basis, vecs).real
    inverse = np.linalg.inv(overlap)
    return np.einsum("mn,mab->nab", inverse, basis)


_DUALS = _dual_matrices()


@dataclass(frozen=True)
class DensityMatrix4:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ReconstructionError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise ReconstructionError(f"density matrix trace is {np.trace(rho):.12g}, expected 1")
        low = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if low < -PSD_TOL:
            raise ReconstructionError(f"density matrix has negative eigenvalue {low:.3g}")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    def reduced(self, keep):
        """Reduced 2x2 state of 'signal' or 'idler'."""
        t = self.entries.reshape(2, 2, 2, 2)
        if keep == "signal":
            return np.einsum("ajbj->ab", t)
        if keep == "idler":
            return np.einsum("jajb->ab", t)
        raise ValueError("keep must be 'signal' or 'idler'")

    def purity(self):
        return float(np.trace(self.entries @ self.entries).real)

    def fidelity(self, psi):
        """<psi|rho|psi> for a normalized 4-vector."""
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return float((psi.conj() @ self.entries @ psi).real)

    def to_pairs(self):
        """Row-major [re, im] pairs, the JSON layout."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.entries]

    @classmethod
    def from_pairs(cls, pairs):
        arr = np.asarray(pairs, dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])

    @classmethod
    def pure(cls, psi):
        psi = np.asarray(psi, dtype=complex).reshape(4)
        norm = np.linalg.norm(psi)
        if norm == 0 or not np.isfinite(norm):
            raise UndefinedStateError("zero two-photon amplitude: the polarization state is undefined")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class TomographyRecord:
    pairs: tuple
    rates: np.ndarray

    def __post_init__(self):
        pairs = tuple(tuple(p) for p in self.pairs)
        rates = np.asarray(self.rates, dtype=float)
        if pairs != TOMOGRAPHY_PAIRS:
            raise ValueError("record must hold the 16 tomographic pairs in measurement order")
        if rates.shape != (16,) or np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise ValueError("record needs 16 finite non-negative rates")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "rates", rates)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["state_s", "state_i", "rate"])
            for (s, i), rate in zip(self.pairs, self.rates):
                out.writerow([s, i, f"{rate:.17g}"])

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(tuple((r["state_s"], r["state_i"]) for r in rows), [float(r["rate"]) for r in rows])


def projection_rate(setting: JointSetting, pair) -> float:
    """Coincidence rate with the analyzers set to the given (signal, idler) state labels."""
    s, i = (p.label if isinstance(p, PolarizationState2) else p for p in pair)
    return farfield_rate(setting.with_polarizations(s, i))


def synthetic_record(rho) -> TomographyRecord:
    """Noiseless projection rates <v|rho|v> for a given 4x4 matrix."""
    rho = rho.entries if isinstance(rho, DensityMatrix4) else np.asarray(rho, dtype=complex)
    vecs = np.array([_pair_vector(s, i) for s, i in TOMOGRAPHY_PAIRS])
    rates = np.einsum("na,ab,nb->n", vecs.conj(), rho, vecs).real
    return TomographyRecord(TOMOGRAPHY_PAIRS, np.clip(rates, 0, None))


def record_from_amplitudes(amplitudes) -> TomographyRecord:
    """Projection rates |<v|psi>|^2 from a 2x2 (H, V) amplitude matrix."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(4)
    vecs = np.array([_pair_vector(s, i) for s, i in TOMOGRAPHY_PAIRS])
    return TomographyRecord(TOMOGRAPHY_PAIRS, np.abs(vecs.conj() @ psi) ** 2)


def measure(setting: JointSetting) -> TomographyRecord:
    """All 16 projection rates, each from :func:`projection_rate`."""
    return TomographyRecord(TOMOGRAPHY_PAIRS, [projection_rate(setting, p) for p in TOMOGRAPHY_PAIRS])


def reconstruct_rho(record: TomographyRecord) -> DensityMatrix4:
    """Linear inversion of the 16 projections, normalized to unit trace."""
    rates = record.rates
    scale = rates.max()
    if not scale > 0:
        raise UndefinedStateError("all projection rates are zero")
    rho = np.einsum("n,nab->ab", rates / scale, _DUALS)
    trace = np.trace(rho).real
    if not trace > 0:
        raise UndefinedStateError("reconstructed state has zero trace")
    rho = rho / trace
    rho = 0.5 * (rho + rho.conj().T)
    low = np.linalg.eigvalsh(rho).min()
    if low < -PSD_TOL:
        raise ReconstructionError(
            f"projection data are inconsistent with a physical state (eigenvalue {low:.3g})"
        )
    return DensityMatrix4(rho)


def rho_direct(setting: JointSetting) -> DensityMatrix4:
    """Pure state built from the far-field amplitude matrix."""
    return DensityMatrix4.pure(amplitude_matrix(setting))


def schmidt_number(rho: DensityMatrix4) -> float:
    """K = 1 / Tr(rho_s^2); both partial traces must agree for a pure state."""
    if not isinstance(rho, DensityMatrix4):
        rho = DensityMatrix4(rho)
    rs, ri = rho.reduced("signal"), rho.reduced("idler")
    k_s = 1.0 / np.trace(rs @ rs).real
    k_i = 1.0 / np.trace(ri @ ri).real
    if abs(rho.purity() - 1) < 1e-10 and abs(k_s - k_i) > 1e-8:
        raise ReconstructionError(f"pure state with unequal reduced purities: K_s={k_s}, K_i={k_i}")
    return float(k_s)


def schmidt_from_amplitudes(amplitudes):
    """K for pure states given (..., 2, 2) amplitude matrices; NaN where the amplitude is zero."""
    a = np.asarray(amplitudes, dtype=complex)
    # rescale per point so the fourth powers below neither underflow nor overflow
    peak = np.max(np.abs(a), axis=(-2, -1), keepdims=True)
    a = a / np.where(peak > 0, peak, 1.0)
    norm2 = np.sum(np.abs(a) ** 2, axis=(-2, -1))
    reduced = np.einsum("...ij,...kj->...ik", a, a.conj())
    purity_num = np.sum(np.abs(reduced) ** 2, axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        k = norm2**2 / purity_num
    return np.where(norm2 > 0, k, np.nan)


def schmidt_map(setting: JointSetting, theta_i_axis: Axis, phi_i_axis: Axis, threads=1) -> ScanGrid:
    """Schmidt number over idler directions with the signal detector fixed.

    ``extra['rate']`` holds the unpolarized rate on the same grid and
    ``markers`` the argmax locations of K and of the rate.  Points with zero
    amplitude are NaN in the K map; an all-NaN map carries no markers.
    """
    sig = setting.signal
    ti, pi = np.meshgrid(theta_i_axis.values, phi_i_axis.values, indexing="ij")
    basis_s = analyzer_basis(sig.theta, sig.phi, sig.medium)

    def func(theta_i, phi_i):
        n = theta_i.size
        tensor = farfield_tensor(setting, np.full(n, sig.theta), np.full(n, sig.phi), theta_i, phi_i)
        basis_i = analyzer_basis(theta_i, phi_i, setting.idler.medium)
        amps = amplitude_matrix_from_tensor(tensor, tuple(np.broadcast_to(b, (n, 3)) for b in basis_s), basis_i)
        return np.stack([schmidt_from_amplitudes(amps), unpolarized_rate_from_tensor(tensor)], axis=-1)

    out = evaluate_chunked(func, (ti, pi), threads)
    grid = ScanGrid((theta_i_axis, phi_i_axis), out[..., 0], quantity="schmidt_number", extra={"rate": out[..., 1]})
    if np.any(np.isfinite(grid.values)):
        grid.markers["argmax_K"] = grid.argmax()
        grid.markers["argmax_rate"] = grid.argmax("rate")
    return grid


def wavelength_sweep(r_values, setting_for, threads=1):
    """Schmidt number and rate versus degeneracy r.

    ``setting_for(r)`` builds the :class:`JointSetting` for one r (see
    :func:`phi_symmetric_factory`).  Returns a one-axis :class:`ScanGrid` of K
    with the unpolarized rate in ``extra['rate']``.
    """
    axis = Axis("r", r_values, unit="1")

    def func(rs):
        rows = []
        for r in rs:
            s = setting_for(float(r))
            amps = amplitude_matrix(s)
            rows.append((schmidt_from_amplitudes(amps), unpolarized_rate_from_tensor(farfield_tensor(s))))
        return np.array(rows, dtype=float)

    out = evaluate_chunked(func, (axis.values,), threads, chunk=8)
    return ScanGrid((axis,), out[:, 0], quantity="schmidt_number", extra={"rate": out[:, 1]})


def phi_symmetric_factory(theta_s, phi_s=0.0, **kwargs):
    """r -> setting with the idler at theta_s, phi_s + pi; kwargs go to :func:`make_setting`."""

    def build(r):
        return make_setting(theta_s, phi_s, r=r, **kwargs)

    return build


def singlet():
    """(|HV> - |VH>)/sqrt(2) in the HH, HV, VH, VV order."""
    return np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
