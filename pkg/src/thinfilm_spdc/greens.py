"""Fourier-domain Green's functions from a source inside the slab to media 1 and 3.

The source coordinate z' enters only through exp(+-i kz2 z'), so each Green's
function is returned as a two-term :class:`ExponentialSeries` (one term per
direction of emission inside the slab).  The detector-side phase
exp(+-i kz z) is left out; the far-field limit removes it.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ResonancePoleError
from .optics import fresnel, kz, polarization_triad
from .series import ExponentialSeries

POLE_TOLERANCE = 1e-12


class TransmissionSet(NamedTuple):
    """Generalized transmission split by the direction of emission in the slab.

    The coefficient is ``up * exp(i kappa_up z') + down * exp(i kappa_down z')``
    with ``kappa_up = -kz2`` and ``kappa_down = +kz2``.
    """

    up: np.ndarray
    down: np.ndarray
    kappa_up: np.ndarray
    kappa_down: np.ndarray
    denominator: np.ndarray


def _coefficients(coeffs, pol):
    if pol == "s":
        return coeffs.r_s, coeffs.t_s
    if pol == "p":
        return coeffs.r_p, coeffs.t_p
    raise ValueError(f"polarization must be 's' or 'p', got {pol!r}")


def fabry_perot_denominator(kx, ky, omega, media, thickness, pol):
    """1 - r23 r21 exp(2 i kz2 a), plus the two reflection coefficients.

    Raises :class:`ResonancePoleError` when the denominator is numerically zero.
    """
    m1, m2, m3 = media
    kz2 = kz(kx, ky, m2, omega)
    r21, _ = _coefficients(fresnel(m2, m1, kx, ky, omega), pol)
    r23, _ = _coefficients(fresnel(m2, m3, kx, ky, omega), pol)
    rr = r23 * r21
    den = 1 - rr * np.exp(2j * kz2 * thickness)
    bad = np.abs(den) < POLE_TOLERANCE * np.abs(rr)
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), np.shape(bad)) if np.ndim(bad) else ()
        qx = np.broadcast_to(kx, np.shape(bad))[idx]
        qy = np.broadcast_to(ky, np.shape(bad))[idx]
        raise ResonancePoleError(
            f"Fabry-Perot pole ({pol}) at q=({qx:.6g}, {qy:.6g}) 1/m, omega={omega:.6g} rad/s, "
            f"a={thickness:.6g} m",
            q=(qx, qy),
            omega=omega,
            thickness=thickness,
        )
    return den, r21, r23, kz2


def t21_series(kx, ky, omega, media, thickness, pol) -> TransmissionSet:
    """Slab-to-medium-1 transmission, all multiple reflections included."""
    m1, m2, m3 = media
    den, r21, r23, kz2 = fabry_perot_denominator(kx, ky, omega, media, thickness, pol)
    _, t21 = _coefficients(fresnel(m2, m1, kx, ky, omega), pol)
    up = t21 / den
    down = t21 * r23 * np.exp(2j * kz2 * thickness) / den
    return TransmissionSet(up, down, -kz2, kz2, den)


def t23_series(kx, ky, omega, media, thickness, pol) -> TransmissionSet:
    """Slab-to-medium-3 transmission; the upward emission needs a bounce off the top."""
    m1, m2, m3 = media
    den, r21, r23, kz2 = fabry_perot_denominator(kx, ky, omega, media, thickness, pol)
    _, t23 = _coefficients(fresnel(m2, m3, kx, ky, omega), pol)
    phase = np.exp(1j * kz2 * thickness)
    up = t23 * r21 * phase / den
    down = t23 * phase / den
    return TransmissionSet(up, down, -kz2, kz2, den)


def t21_direct(kx, ky, omega, media, thickness, pol, z):
    """(T+, T-) evaluated at source plane ``z`` straight from the closed form."""
    m1, m2, m3 = media
    kz2 = kz(kx, ky, m2, omega)
    c21 = fresnel(m2, m1, kx, ky, omega)
    c23 = fresnel(m2, m3, kx, ky, omega)
    r21, t21 = _coefficients(c21, pol)
    r23, _ = _coefficients(c23, pol)
    den = 1 - r23 * r21 * np.exp(1j * kz2 * 2 * thickness)
    up = np.exp(-1j * kz2 * z) / den * t21
    down = r23 * np.exp(1j * kz2 * (2 * thickness + z)) / den * t21
    return up, down


def t23_direct(kx, ky, omega, media, thickness, pol, z):
    m1, m2, m3 = media
    kz2 = kz(kx, ky, m2, omega)
    r21, _ = _coefficients(fresnel(m2, m1, kx, ky, omega), pol)
    r23, t23 = _coefficients(fresnel(m2, m3, kx, ky, omega), pol)
    den = 1 - r23 * r21 * np.exp(1j * kz2 * 2 * thickness)
    up = r21 * np.exp(1j * kz2 * (thickness - z)) / den * t23
    down = np.exp(1j * kz2 * (thickness + z)) / den * t23
    return up, down


def _outer(u, v):
    return u[..., :, None] * v[..., None, :]


def g21(kx, ky, omega, media, thickness) -> ExponentialSeries:
    """Green's function from z' in the slab to medium 1, as a series in z'.

    Rows index the field component in medium 1, columns the source dipole.
    """
    m1, m2, m3 = media
    tri1 = polarization_triad(kx, ky, m1, omega)
    tri2 = polarization_triad(kx, ky, m2, omega)
    ts = t21_series(kx, ky, omega, media, thickness, "s")
    tp = t21_series(kx, ky, omega, media, thickness, "p")
    pre = (-0.5j / ts.kappa_down)[..., None, None]
    ss = _outer(tri1.s, tri2.s)
    up = pre * (ts.up[..., None, None] * ss + tp.up[..., None, None] * _outer(tri1.p_up, tri2.p_up))
    down = pre * (ts.down[..., None, None] * ss + tp.down[..., None, None] * _outer(tri1.p_up, tri2.p_down))
    return ExponentialSeries(np.stack([up, down]), np.stack([ts.kappa_up, ts.kappa_down]), 2)


def g23(kx, ky, omega, media, thickness) -> ExponentialSeries:
    """Green's function from z' in the slab to medium 3 (downward detection)."""
    m1, m2, m3 = media
    tri3 = polarization_triad(kx, ky, m3, omega)
    tri2 = polarization_triad(kx, ky, m2, omega)
    ts = t23_series(kx, ky, omega, media, thickness, "s")
    tp = t23_series(kx, ky, omega, media, thickness, "p")
    pre = (-0.5j / ts.kappa_down)[..., None, None]
    ss = _outer(tri3.s, tri2.s)
    up = pre * (ts.up[..., None, None] * ss + tp.up[..., None, None] * _outer(tri3.p_down, tri2.p_up))
    down = pre * (ts.down[..., None, None] * ss + tp.down[..., None, None] * _outer(tri3.p_down, tri2.p_down))
    return ExponentialSeries(np.stack([up, down]), np.stack([ts.kappa_up, ts.kappa_down]), 2)


def green_series(kx, ky, omega, media, thickness, detection_medium):
    if detection_medium == 1:
        return g21(kx, ky, omega, media, thickness)
    if detection_medium == 3:
        return g23(kx, ky, omega, media, thickness)
    raise ValueError(f"detection medium must be 1 or 3, got {detection_medium!r}")


def green_direct(kx, ky, omega, media, thickness, detection_medium, z):
    """Green's function matrix at source plane ``z`` without the series representation."""
    m1, m2, m3 = media
    kz2 = kz(kx, ky, m2, omega)
    tri2 = polarization_triad(kx, ky, m2, omega)
    if detection_medium == 1:
        left = polarization_triad(kx, ky, m1, omega)
        s_up, s_down = t21_direct(kx, ky, omega, media, thickness, "s", z)
        p_up, p_down = t21_direct(kx, ky, omega, media, thickness, "p", z)
        p_left = left.p_up
    elif detection_medium == 3:
        left = polarization_triad(kx, ky, m3, omega)
        s_up, s_down = t23_direct(kx, ky, omega, media, thickness, "s", z)
        p_up, p_down = t23_direct(kx, ky, omega, media, thickness, "p", z)
        p_left = left.p_down
    else:
        raise ValueError(f"detection medium must be 1 or 3, got {detection_medium!r}")
    t_s = (s_up + s_down)[..., None, None]
    mat = (
        t_s * _outer(left.s, tri2.s)
        + p_up[..., None, None] * _outer(p_left, tri2.p_up)
        + p_down[..., None, None] * _outer(p_left, tri2.p_down)
    )
    return (-0.5j / kz2)[..., None, None] * mat
