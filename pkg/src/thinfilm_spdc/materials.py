"""Tabulated permittivities.

The built-in table only knows the handful of values needed for a GaAs film on
fused silica in air: GaAs at 500 nm is 17.63+3.83i and 12.06 at 1 um, SiO2 is
2.14 and 2.10 at the same wavelengths.  Anything broader has to come from a
user dispersion file (``wavelength_m eps_real [eps_imag]`` per line).
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .errors import MaterialLookupError
from .optics import LayerStack, Medium


class ExtrapolationWarning(UserWarning):
    """A wavelength outside the tabulated range was clamped to the nearest endpoint."""


class DispersionTable:
    def __init__(self, wavelengths, eps_real, eps_imag=None, name=""):
        wl = np.asarray(wavelengths, dtype=float)
        if wl.ndim != 1 or wl.size == 0:
            raise ValueError("dispersion table needs at least one wavelength")
        if np.any(np.diff(wl) <= 0):
            raise ValueError(f"{name or 'dispersion table'}: wavelengths must be strictly increasing")
        er = np.asarray(eps_real, dtype=float)
        ei = np.zeros_like(er) if eps_imag is None else np.asarray(eps_imag, dtype=float)
        if er.shape != wl.shape or ei.shape != wl.shape:
            raise ValueError("column lengths differ")
        if np.any(ei < 0):
            raise ValueError(f"{name or 'dispersion table'}: negative Im(eps) (gain) is not supported")
        self.name = name
        self.wavelengths = wl
        self.eps = er + 1j * ei

    @classmethod
    def from_file(cls, path, name=None):
        path = Path(path)
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] not in (2, 3):
            raise ValueError(f"{path}: expected 2 or 3 columns, found {data.shape[1]}")
        imag = data[:, 2] if data.shape[1] == 3 else None
        return cls(data[:, 0], data[:, 1], imag, name=name or path.stem)

    def __call__(self, wavelength):
        """Return (epsilon, extrapolated) at ``wavelength``."""
        wl = self.wavelengths
        outside = wavelength < wl[0] or wavelength > wl[-1]
        re = np.interp(wavelength, wl, self.eps.real)
        im = np.interp(wavelength, wl, self.eps.imag)
        return complex(re, im), bool(outside)


_BUILTIN = {
    "air": DispersionTable([500e-9], [1.0], name="air"),
    "vacuum": DispersionTable([500e-9], [1.0], name="vacuum"),
    "gaas": DispersionTable([500e-9, 1000e-9], [17.63, 12.06], [3.83, 0.0], name="GaAs"),
    "sio2": DispersionTable([500e-9, 1000e-9], [2.14, 2.10], name="SiO2"),
}
# constants used when dispersion is held flat: index 0 is the pump value, 1 the pair value
_FLAT = {
    "air": (1.0, 1.0),
    "vacuum": (1.0, 1.0),
    "gaas": (17.63 + 3.83j, 12.06),
    "sio2": (2.14, 2.10),
}

_user_tables: dict[str, DispersionTable] = {}


def register_dispersion_file(name: str, path) -> DispersionTable:
    table = DispersionTable.from_file(path, name=name)
    _user_tables[name.lower()] = table
    return table


def known_materials():
    return sorted(set(_BUILTIN) | set(_user_tables))


def material_lookup(name: str, wavelength: float) -> Medium:
    """Permittivity of ``name`` at ``wavelength`` (m), linearly interpolated.

    Outside the tabulated range the nearest endpoint is returned and an
    :class:`ExtrapolationWarning` is issued.  Vacuum/air is 1 everywhere.
    """
    key = name.lower()
    table = _user_tables.get(key) or _BUILTIN.get(key)
    if table is None:
        raise MaterialLookupError(f"unknown material {name!r}; known: {', '.join(known_materials())}")
    eps, extrapolated = table(wavelength)
    if extrapolated and table.wavelengths.size > 1:
        warnings.warn(
            f"{table.name}: {wavelength:.4g} m is outside [{table.wavelengths[0]:.4g}, "
            f"{table.wavelengths[-1]:.4g}] m, using the endpoint value",
            ExtrapolationWarning,
            stacklevel=2,
        )
    return Medium(eps)


def flat_medium(name: str, role: str) -> Medium:
    """Fixed reference permittivity for ``role`` with dispersion switched off."""
    key = name.lower()
    if key in _user_tables:
        raise MaterialLookupError(f"{name!r} is a user table; flat constants only exist for built-ins")
    if key not in _FLAT:
        raise MaterialLookupError(f"unknown material {name!r}; known: {', '.join(known_materials())}")
    pump, pair = _FLAT[key]
    return Medium(pump if role == "pump" else pair)


def build_stack(
    thickness,
    materials=("air", "GaAs", "SiO2"),
    wavelengths=None,
    dispersion="flat",
):
    """LayerStack from material names.

    ``dispersion="flat"`` uses the 500 nm value for the pump and the 1 um value
    for signal and idler, regardless of the actual wavelengths.  ``"table"``
    interpolates each material at ``wavelengths = (pump, signal, idler)``.
    """
    roles = ("pump", "signal", "idler")
    if dispersion == "flat":
        per_role = {role: tuple(flat_medium(m, role) for m in materials) for role in roles}
    elif dispersion == "table":
        if wavelengths is None:
            raise ValueError("table dispersion needs the pump/signal/idler wavelengths")
        per_role = {
            role: tuple(material_lookup(m, wl) for m in materials)
            for role, wl in zip(roles, wavelengths)
        }
    else:
        raise ValueError(f"dispersion must be 'flat' or 'table', got {dispersion!r}")
    return LayerStack(thickness, **per_role)
