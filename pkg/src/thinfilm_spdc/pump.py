"""Classical pump inside the slab.

The pump arrives from the substrate (medium 3) with a truncated Gaussian
angular spectrum, x-polarized plus the longitudinal component that
transversality requires.  Inside the slab it is a superposition of an upward
and a downward wave per plane-wave component, each resummed over all
Fabry-Perot bounces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .greens import fabry_perot_denominator
from .optics import angular_frequency, fresnel, kz, polarization_triad, transverse_direction
from .series import ExponentialSeries


@dataclass(frozen=True)
class PumpSpec:
    """Monochromatic pump: ``wavelength`` (m, vacuum), Gaussian width ``width`` (1/m)."""

    wavelength: float = 500e-9
    width: float = 6.6e5
    amplitude: complex = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"pump spectral width must be positive, got {self.width}")
        if not self.wavelength > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.wavelength}")

    @property
    def omega(self):
        return angular_frequency(self.wavelength)

    @classmethod
    def from_waist(cls, wavelength, waist, amplitude=1.0):
        """Width of the angular spectrum of exp(-r^2/W^2) is w = 2/W."""
        return cls(wavelength, 2.0 / waist, amplitude)


class QCoefficients(NamedTuple):
    """Q(z) = up * exp(i kz2 z) + down * exp(-i kz2 z) for each polarization."""

    s_up: np.ndarray
    s_down: np.ndarray
    p_up: np.ndarray
    p_down: np.ndarray
    kz2: np.ndarray


def _k3(spec, stack):
    return stack.pump[2].k(spec.omega).real


def pump_spectrum(kx, ky, spec: PumpSpec, stack):
    """A exp(-q^2/w^2) inside |q| <= k3p, exactly zero outside."""
    q2 = np.asarray(kx, dtype=float) ** 2 + np.asarray(ky, dtype=float) ** 2
    k3 = _k3(spec, stack)
    inside = q2 <= k3**2
    return np.where(inside, spec.amplitude * np.exp(-q2 / spec.width**2), 0.0)


def _normalizer(kx, ky, spec, stack):
    m3 = stack.pump[2]
    k3 = _k3(spec, stack)
    kz3 = kz(kx, ky, m3, spec.omega)
    norm = np.sqrt((k3**2 - np.asarray(ky, dtype=float) ** 2).astype(complex))
    valid = np.abs(norm) > 0
    return kz3, np.where(valid, norm, 1.0), valid


def interface_field(kx, ky, spec: PumpSpec, stack, return_mask=False):
    """Cartesian pump field just below the slab (z = -a).

    Points with |ky| = k3p, where the polarization normalizer vanishes, are set
    to zero; ``return_mask=True`` also returns the boolean mask of valid points.
    """
    u = pump_spectrum(kx, ky, spec, stack)
    kz3, norm, valid = _normalizer(kx, ky, spec, stack)
    amp = np.where(valid, u / norm, 0.0)
    kx_arr = np.asarray(kx, dtype=float)
    field = np.stack([amp * kz3, np.zeros_like(amp), -amp * kx_arr], axis=-1)
    return (field, valid) if return_mask else field


def sp_decompose(kx, ky, spec: PumpSpec, stack):
    """(E_s, E_p) amplitudes of the interface field along s and p_3+ of medium 3.

    The kx in the denominator of E_s cancels against E_z ~ kx, so the amplitudes
    are coded as -kz3 uy U/N and -k3 ux U/N with u = q/|q| (u = x at q = 0).
    """
    u = pump_spectrum(kx, ky, spec, stack)
    kz3, norm, valid = _normalizer(kx, ky, spec, stack)
    ux, uy, _ = transverse_direction(kx, ky)
    k3 = stack.pump[2].k(spec.omega)
    amp = np.where(valid, u / norm, 0.0)
    return -kz3 * uy * amp, -k3 * ux * amp


def q_coefficients(kx, ky, omega_p, stack) -> QCoefficients:
    """Generalized substrate-to-slab transmission of the pump."""
    media = stack.pump
    m1, m2, m3 = media
    a = stack.thickness
    out = {}
    for pol in ("s", "p"):
        den, r21, r23, kz2 = fabry_perot_denominator(kx, ky, omega_p, media, a, pol)
        c32 = fresnel(m3, m2, kx, ky, omega_p)
        t32 = c32.t_s if pol == "s" else c32.t_p
        entry = t32 * np.exp(1j * kz2 * a) / den
        out[pol] = (entry, entry * r21)
    return QCoefficients(out["s"][0], out["s"][1], out["p"][0], out["p"][1], kz2)


def q_direct(kx, ky, omega_p, stack, pol, z):
    """(Q+, Q-) at depth ``z`` straight from the closed form."""
    m1, m2, m3 = stack.pump
    a = stack.thickness
    kz2 = kz(kx, ky, m2, omega_p)
    c21 = fresnel(m2, m1, kx, ky, omega_p)
    c23 = fresnel(m2, m3, kx, ky, omega_p)
    c32 = fresnel(m3, m2, kx, ky, omega_p)
    if pol == "s":
        r21, r23, t32 = c21.r_s, c23.r_s, c32.t_s
    else:
        r21, r23, t32 = c21.r_p, c23.r_p, c32.t_p
    den = 1 - r23 * r21 * np.exp(1j * kz2 * (2 * a))
    up = np.exp(1j * kz2 * (a + z)) / den * t32
    down = r21 * np.exp(1j * kz2 * (a - z)) / den * t32
    return up, down


def pump_in_slab(kx, ky, spec: PumpSpec, stack) -> ExponentialSeries:
    """E_p(q, z) for -a <= z <= 0 as a two-term vector series (kappa = +kz2p, -kz2p)."""
    omega = spec.omega
    e_s, e_p = sp_decompose(kx, ky, spec, stack)
    qc = q_coefficients(kx, ky, omega, stack)
    tri = polarization_triad(kx, ky, stack.pump[1], omega)
    up = (qc.s_up * e_s)[..., None] * tri.s + (qc.p_up * e_p)[..., None] * tri.p_up
    down = (qc.s_down * e_s)[..., None] * tri.s + (qc.p_down * e_p)[..., None] * tri.p_down
    return ExponentialSeries(np.stack([up, down]), np.stack([qc.kz2, -qc.kz2]), 1)


def pump_direct(kx, ky, spec: PumpSpec, stack, z):
    """Cartesian pump field at depth ``z`` without the series representation."""
    omega = spec.omega
    e_s, e_p = sp_decompose(kx, ky, spec, stack)
    tri = polarization_triad(kx, ky, stack.pump[1], omega)
    qs_up, qs_down = q_direct(kx, ky, omega, stack, "s", z)
    qp_up, qp_down = q_direct(kx, ky, omega, stack, "p", z)
    return (
        ((qs_up + qs_down) * e_s)[..., None] * tri.s
        + (e_p * qp_up)[..., None] * tri.p_up
        + (e_p * qp_down)[..., None] * tri.p_down
    )
