"""Scan drivers, profile post-processing and closed-form slab diagnostics.

Angles are radians and lengths meters throughout; the CLI converts angles to
degrees on output.  Rates are the unpolarized coincidence rate (sum over the
nine Cartesian analyzer pairs) unless stated otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import IncompleteProfileError, NoPropagatingIdlerError
from .pump import pump_in_slab
from .spdc import JointSetting, farfield_tensor, unpolarized_rate_from_tensor

# grid points per work unit; fixed so results do not depend on the thread count
CHUNK = 2048


@dataclass(frozen=True)
class Axis:
    """One scan axis in internal units (``unit`` is 'rad', 'm' or '1')."""

    name: str
    values: np.ndarray
    unit: str = "rad"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 points")
        steps = np.diff(vals)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError(f"axis {self.name!r} must be strictly monotone")
        object.__setattr__(self, "values", vals)

    @classmethod
    def linspace(cls, name, start, stop, count, unit="rad"):
        return cls(name, np.linspace(start, stop, int(count)), unit)

    @classmethod
    def degrees(cls, name, start, stop, count):
        """Angle axis given in degrees, stored in radians."""
        return cls(name, np.radians(np.linspace(start, stop, int(count))), "rad")

    def __len__(self):
        return self.values.size


@dataclass
class ScanGrid:
    """Values on a 1- or 2-axis grid; ``values[i, j]`` belongs to (axes[0][i], axes[1][j]).

    ``extra`` holds further quantities on the same grid (e.g. the rate next to
    a Schmidt-number map) and ``markers`` named grid locations such as argmax
    points, keyed by name and given as axis-value tuples.
    """

    axes: tuple
    values: np.ndarray
    quantity: str = "rate"
    extra: dict = field(default_factory=dict)
    markers: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(self.axes)
        if not 1 <= len(self.axes) <= 2:
            raise ValueError("a scan grid has one or two axes")
        shape = tuple(len(ax) for ax in self.axes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} does not match axes {shape}")
        for name, arr in self.extra.items():
            if np.shape(arr) != shape:
                raise ValueError(f"extra quantity {name!r} has shape {np.shape(arr)}, expected {shape}")

    @property
    def shape(self):
        return self.values.shape

    def argmax(self, quantity=None):
        """Axis values at the largest finite entry of ``values`` (or of ``extra[quantity]``)."""
        data = self.values if quantity is None else np.asarray(self.extra[quantity], dtype=float)
        masked = np.where(np.isfinite(data), data, -np.inf)
        if not np.any(np.isfinite(masked)):
            raise ValueError("grid holds no finite values")
        idx = np.unravel_index(int(np.argmax(masked)), masked.shape)
        return tuple(ax.values[i] for ax, i in zip(self.axes, idx))


@dataclass(frozen=True)
class ScanSummary:
    peak_location: float | None = None
    peak_value: float | None = None
    fwhm: float | None = None
    oscillation_period: float | None = None

    def __post_init__(self):
        if self.fwhm is not None and not self.fwhm > 0:
            raise ValueError("fwhm must be positive")
        if self.oscillation_period is not None and not self.oscillation_period > 0:
            raise ValueError("period must be positive")


def evaluate_chunked(func, arrays, threads=1, chunk=CHUNK):
    """Apply ``func`` to flat slices of equally shaped ``arrays`` and reassemble.

    ``func`` maps 1-D arrays of length n to an array with leading dimension n.
    Work is split into fixed-size chunks, so the output is bitwise the same for
    any ``threads``.
    """
    arrays = np.broadcast_arrays(*(np.asarray(a) for a in arrays))
    shape = arrays[0].shape
    flat = [a.reshape(-1) for a in arrays]
    n = flat[0].size
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]

    def work(b):
        lo, hi = b
        return np.asarray(func(*(f[lo:hi] for f in flat)))

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    out = np.concatenate(parts, axis=0)
    return out.reshape(shape + out.shape[1:])


def _rate_at(setting):
    def func(theta_s, phi_s, theta_i, phi_i):
        tensor = farfield_tensor(setting, theta_s, phi_s, theta_i, phi_i)
        return unpolarized_rate_from_tensor(tensor)

    return func


def phi_symmetric_scan(setting: JointSetting, theta_axis: Axis, phi_axis: Axis, threads=1) -> ScanGrid:
    """Rate over (theta_s, phi_s) with the idler at theta_i = theta_s, phi_i = phi_s + pi."""
    th, ph = np.meshgrid(theta_axis.values, phi_axis.values, indexing="ij")
    rate = evaluate_chunked(_rate_at(setting), (th, ph, th, ph + math.pi), threads)
    return ScanGrid((theta_axis, phi_axis), rate)


def theta_map(setting: JointSetting, theta_s_axis: Axis, theta_i_axis: Axis, threads=1) -> ScanGrid:
    """Rate over (theta_s, theta_i) in the plane phi_s, with phi_i = phi_s + pi."""
    ts, ti = np.meshgrid(theta_s_axis.values, theta_i_axis.values, indexing="ij")
    phi_s = setting.signal.phi
    rate = evaluate_chunked(
        _rate_at(setting), (ts, np.full_like(ts, phi_s), ti, np.full_like(ts, phi_s + math.pi)), threads
    )
    return ScanGrid((theta_s_axis, theta_i_axis), rate)


def idler_scan(setting: JointSetting, theta_i_axis: Axis, threads=1) -> ScanGrid:
    """Rate versus theta_i with the signal detector and phi_i held at the setting's values."""
    ti = theta_i_axis.values
    sig, idl = setting.signal, setting.idler
    n = ti.size
    rate = evaluate_chunked(
        _rate_at(setting),
        (np.full(n, sig.theta), np.full(n, sig.phi), ti, np.full(n, idl.phi)),
        threads,
    )
    return ScanGrid((theta_i_axis,), rate)


def thickness_scan(setting: JointSetting, a_axis: Axis, threads=1) -> ScanGrid:
    """Rate at the setting's detector angles versus slab thickness."""

    def func(thicknesses):
        return np.array(
            [float(unpolarized_rate_from_tensor(farfield_tensor(setting.with_thickness(a)))) for a in thicknesses]
        )

    rate = evaluate_chunked(func, (a_axis.values,), threads, chunk=16)
    return ScanGrid((a_axis,), rate)


def _profile(grid):
    if len(grid.axes) != 1:
        raise ValueError("profile operations need a one-axis grid")
    return grid.axes[0].values, grid.values


def peak(grid: ScanGrid) -> ScanSummary:
    x, y = _profile(grid)
    i = int(np.argmax(y))
    return ScanSummary(peak_location=float(x[i]), peak_value=float(y[i]))


def fwhm(grid: ScanGrid) -> ScanSummary:
    """Full width at half maximum by linear interpolation of the nearest crossings."""
    x, y = _profile(grid)
    i = int(np.argmax(y))
    half = 0.5 * y[i]

    def crossing(indices):
        prev = i
        for j in indices:
            if y[j] <= half:
                frac = (y[prev] - half) / (y[prev] - y[j])
                return x[prev] + frac * (x[j] - x[prev])
            prev = j
        return None

    left = crossing(range(i - 1, -1, -1))
    right = crossing(range(i + 1, x.size))
    if left is None or right is None:
        side = "left" if left is None else "right"
        raise IncompleteProfileError(f"half maximum not reached on the {side} of the peak at {x[i]:.6g}")
    return ScanSummary(
        peak_location=float(x[i]), peak_value=float(y[i]), fwhm=float(abs(right - left))
    )


def local_maxima(values):
    """Indices of strict interior local maxima (plateaus count once, at their first point)."""
    v = np.asarray(values, dtype=float)
    idx = []
    for j in range(1, v.size - 1):
        if v[j] > v[j - 1]:
            k = j
            while k + 1 < v.size and v[k + 1] == v[j]:
                k += 1
            if k + 1 < v.size and v[k + 1] < v[j]:
                idx.append(j)
    return np.array(idx, dtype=int)


def thickness_period(grid: ScanGrid, skip, threshold=0.2) -> ScanSummary:
    """Mean spacing of the local maxima above ``threshold`` * max, ignoring a < start + ``skip``.

    The skipped stretch removes the transient near the thinnest films where
    the first peaks still differ in height.
    """
    x, y = _profile(grid)
    keep = x >= x[0] + skip
    xs, ys = x[keep], y[keep]
    if xs.size < 3:
        raise IncompleteProfileError("too few samples after the skipped transient")
    peaks = local_maxima(ys)
    peaks = peaks[ys[peaks] >= threshold * ys.max()]
    if peaks.size < 2:
        raise IncompleteProfileError("fewer than two oscillation peaks found")
    spacing = np.diff(xs[peaks])
    return ScanSummary(oscillation_period=float(np.mean(spacing)))


def snell_angle(n1, n2, theta1):
    """Refraction angle for real indices; raises ValueError past the critical angle."""
    s = n1 * math.sin(theta1) / n2
    if abs(s) > 1:
        raise ValueError(f"no propagating wave: sin(theta2) = {s:.6g}")
    return math.asin(s)


def _pair_index(stack, role):
    return stack.media(role)[1].n.real, stack.media(role)[0].n.real


def opd_period(stack, theta_1s, lambda_s):
    """Thickness step between constructive round trips: lambda_s / (2 n2s cos theta2s)."""
    n2, n1 = _pair_index(stack, "signal")
    theta2 = snell_angle(n1, n2, theta_1s)
    return lambda_s / (2 * n2 * math.cos(theta2))


def decay_length(eps2_pump, lambda_p):
    """1 / Im k of the pump in the slab; ``inf`` for a lossless slab."""
    k_im = (2 * math.pi / lambda_p) * np.sqrt(complex(eps2_pump)).imag
    return math.inf if k_im <= 0 else 1.0 / k_im


def coherence_length(stack, theta_1s, theta_1i, omega_s, omega_i):
    """pi / (Re k2p - k2s cos theta2s - k2i cos theta2i) for detection angles in medium 1.

    Returns ``inf`` when the longitudinal mismatch vanishes.
    """
    n2s, n1s = _pair_index(stack, "signal")
    n2i, n1i = _pair_index(stack, "idler")
    t2s = snell_angle(n1s, n2s, theta_1s)
    t2i = snell_angle(n1i, n2i, theta_1i)
    wp = omega_s + omega_i
    k2p = stack.pump[1].k(wp).real
    k2s = stack.signal[1].k(omega_s).real
    k2i = stack.idler[1].k(omega_i).real
    dk = k2p - k2s * math.cos(t2s) - k2i * math.cos(t2i)
    if abs(dk) <= 1e-12 * k2p:
        return math.inf
    return math.pi / abs(dk)


def idler_angle(r, theta_s, n_s=1.0, n_i=1.0):
    """Idler angle from transverse momentum balance: sin(theta_i) = n_s sin(theta_s) / (r n_i)."""
    if not r > 0:
        raise ValueError("degeneracy factor must be positive")
    s = abs(n_s * math.sin(theta_s) / (r * n_i))
    if s > 1:
        raise NoPropagatingIdlerError(
            f"sin(theta_i) = {s:.6g} > 1 for r={r}, theta_s={math.degrees(theta_s):.4g} deg"
        )
    return math.asin(s)


def pump_intensity_profile(setting: JointSetting, z):
    """|E_pump|^2 on the slab axis (q = 0 plane-wave component) at depths ``z``."""
    field_series = pump_in_slab(np.zeros(1), np.zeros(1), setting.pump, setting.stack)
    z = np.asarray(z, dtype=float)
    values = np.array([field_series(zz)[0] for zz in z.reshape(-1)])
    return np.sum(np.abs(values) ** 2, axis=-1).reshape(z.shape)


def default_thickness_axis(lambda_p, start=2.0, stop=5.0, count=600):
    return Axis.linspace("a", start * lambda_p, stop * lambda_p, count, unit="m")
