"""Plane-wave primitives for a three-layer stack.

Geometry: medium 1 occupies z > 0, the nonlinear slab (medium 2) occupies
-a <= z <= 0 and medium 3 (the substrate the pump comes from) z < -a.
Transverse wave vectors are passed around as separate ``kx``, ``ky`` arrays
which broadcast against each other; every function here is vectorized.
All quantities are SI (m, rad/s).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.constants import c as C

ROLES = ("pump", "signal", "idler")
POLE_RTOL = 1e-12


@dataclass(frozen=True)
class Medium:
    """Isotropic, non-magnetic, passive medium with relative permittivity ``epsilon``."""

    epsilon: complex

    def __post_init__(self):
        eps = complex(self.epsilon)
        if eps.imag < 0:
            raise ValueError(f"gain media are not supported (Im eps = {eps.imag} < 0)")
        object.__setattr__(self, "epsilon", eps)

    @property
    def n(self) -> complex:
        """Complex refractive index, principal root (Im n >= 0)."""
        return complex(np.sqrt(self.epsilon))

    def k(self, omega):
        return omega / C * self.n


@dataclass(frozen=True)
class LayerStack:
    """Permittivities of media 1/2/3 at the pump, signal and idler frequencies.

    ``pump``, ``signal`` and ``idler`` are each a ``(medium1, medium2, medium3)``
    tuple; ``thickness`` is the slab thickness ``a`` in meters.
    """

    thickness: float
    pump: tuple
    signal: tuple
    idler: tuple

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"slab thickness must be positive, got {self.thickness}")
        for role in ROLES:
            media = tuple(m if isinstance(m, Medium) else Medium(m) for m in getattr(self, role))
            if len(media) != 3:
                raise ValueError(f"{role}: exactly three media are required")
            object.__setattr__(self, role, media)

    def media(self, role: str) -> tuple:
        if role not in ROLES:
            raise ValueError(f"unknown spectral role {role!r}")
        return getattr(self, role)

    def with_thickness(self, thickness: float) -> "LayerStack":
        return replace(self, thickness=thickness)

    def with_role(self, role: str, media) -> "LayerStack":
        return replace(self, **{role: tuple(media)})


class PolarizationTriad(NamedTuple):
    s: np.ndarray
    p_up: np.ndarray
    p_down: np.ndarray


class FresnelCoefficients(NamedTuple):
    r_s: np.ndarray
    r_p: np.ndarray
    t_s: np.ndarray
    t_p: np.ndarray
    pole: np.ndarray


def _eps(medium) -> complex:
    return medium.epsilon if isinstance(medium, Medium) else complex(medium)


def kz(kx, ky, medium, omega):
    """Longitudinal wavenumber sqrt(k^2 - kx^2 - ky^2).

    The returned root always has Im(kz) >= 0 (decaying evanescent waves); on
    the real axis the root with Re(kz) >= 0 is chosen.
    """
    k2 = _eps(medium) * (omega / C) ** 2
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    root = np.sqrt(np.asarray(k2 - kx**2 - ky**2, dtype=complex))
    return np.where(root.imag < 0, -root, root)


def transverse_direction(kx, ky):
    """Unit vector along q and |q|; q = 0 maps to the +kx axis."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    q = np.hypot(kx, ky)
    # divide by the larger component first so subnormal q still gives a unit vector
    big = np.maximum(np.abs(kx), np.abs(ky))
    zero = big == 0
    safe = np.where(zero, 1.0, big)
    xs, ys = kx / safe, ky / safe
    norm = np.hypot(xs, ys)
    ux = np.where(zero, 1.0, xs / np.where(zero, 1.0, norm))
    uy = np.where(zero, 0.0, ys / np.where(zero, 1.0, norm))
    return ux, uy, q


def polarization_triad(kx, ky, medium, omega) -> PolarizationTriad:
    """s and p unit vectors for upward and downward waves at transverse wave vector q.

    The p vectors are normalized with the unconjugated product p.p = 1 and are
    complex for lossy or evanescent waves.  At q = 0 the limit along +kx is used.
    """
    ux, uy, q = transverse_direction(kx, ky)
    k = _eps(medium) ** 0.5 * omega / C
    kzv = kz(kx, ky, medium, omega)
    zero = np.zeros(np.broadcast(ux, kzv).shape)
    s = np.stack([-uy + zero, ux + zero, zero], axis=-1)
    a = kzv / k
    b = q / k + 0 * a
    p_up = np.stack([-a * ux, -a * uy, b], axis=-1)
    p_down = np.stack([a * ux, a * uy, b], axis=-1)
    return PolarizationTriad(s, p_up, p_down)


def wave_vector(kx, ky, medium, omega, upward=True):
    """Full complex wave vector q +/- kz z_hat."""
    kzv = kz(kx, ky, medium, omega)
    kx = np.asarray(kx, dtype=float) + 0 * kzv.real
    ky = np.asarray(ky, dtype=float) + 0 * kzv.real
    return np.stack([kx, ky, kzv if upward else -kzv], axis=-1)


def fresnel(medium_i, medium_j, kx, ky, omega) -> FresnelCoefficients:
    """Interface coefficients for a wave going from medium i into medium j.

    The p coefficients refer to amplitudes along the p unit vectors of
    :func:`polarization_triad`.  ``pole`` marks points where the p-denominator
    vanishes to relative precision ``POLE_RTOL`` (surface-plasmon condition);
    the coefficients there are huge or inf/nan and must not be used.
    """
    ei, ej = _eps(medium_i), _eps(medium_j)
    kzi = kz(kx, ky, ei, omega)
    kzj = kz(kx, ky, ej, omega)
    ni, nj = np.sqrt(complex(ei)), np.sqrt(complex(ej))
    den_s = kzi + kzj
    den_p = kzi * ej + kzj * ei
    pole = (np.abs(den_p) <= POLE_RTOL * (np.abs(kzi * ej) + np.abs(kzj * ei))) | (
        np.abs(den_s) <= POLE_RTOL * (np.abs(kzi) + np.abs(kzj))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        r_s = (kzi - kzj) / den_s
        t_s = 2 * kzi / den_s
        r_p = (kzi * ej - kzj * ei) / den_p
        t_p = 2 * ni * nj * kzi / den_p
    return FresnelCoefficients(r_s, r_p, t_s, t_p, pole)


def angular_frequency(wavelength):
    return 2 * np.pi * C / wavelength


def wavelength_from_omega(omega):
    return 2 * np.pi * C / omega
