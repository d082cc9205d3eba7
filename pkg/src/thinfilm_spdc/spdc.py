"""Two-photon amplitudes and far-field coincidence rates.

The joint angular amplitude at fixed transverse wave vectors is the overlap
over the slab of chi2 : E_pump(q_s + q_i, z) with the signal and idler Green's
functions.  All three factors are exponential series in z, so the overlap is a
sum of closed-form integrals.  Rates are in arbitrary units: the overall
proportionality constant is 1 and detector distances are dropped (rates are
per solid angle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as C

from .errors import OracleDivergenceError
from .greens import green_direct, green_series
from .materials import build_stack
from .optics import LayerStack, kz
from .pump import PumpSpec, pump_direct, pump_in_slab
from .series import integrate_exp

SQRT_HALF = math.sqrt(0.5)

# polarization states as (H, V) amplitudes
STATE_AMPLITUDES = {
    "H": (1.0, 0.0),
    "V": (0.0, 1.0),
    "D": (SQRT_HALF, SQRT_HALF),
    "A": (SQRT_HALF, -SQRT_HALF),
    "R": (SQRT_HALF, -1j * SQRT_HALF),
    "L": (SQRT_HALF, 1j * SQRT_HALF),
}


@dataclass(frozen=True)
class Chi2Tensor:
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        if comp.shape != (3, 3, 3):
            raise ValueError(f"chi2 must be 3x3x3, got {comp.shape}")
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    @classmethod
    def zinc_blende(cls, chi0=1.0):
        """Point group -43m with crystal axes along x, y, z: only chi_xyz and its permutations."""
        comp = np.zeros((3, 3, 3))
        for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
            comp[i, j, k] = chi0
        return cls(comp)


def analyzer_basis(theta, phi, medium=1):
    """(x', y', n) at the detector direction.

    x' = cos(phi) theta_hat - sin(phi) phi_hat and y' = sin(phi) theta_hat +
    cos(phi) phi_hat reduce to the lab x and y once the beam is collimated.
    For detection in medium 3 the polar angle is measured from -z.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    sign = 1.0 if medium == 1 else -1.0
    n_hat = np.stack([st * cp, st * sp, sign * ct], axis=-1)
    theta_hat = np.stack([ct * cp, ct * sp, -sign * st], axis=-1)
    phi_hat = np.stack([-sp, cp, 0 * sp], axis=-1)
    x_p = cp[..., None] * theta_hat - sp[..., None] * phi_hat
    y_p = sp[..., None] * theta_hat + cp[..., None] * phi_hat
    return x_p, y_p, n_hat


@dataclass(frozen=True)
class DetectorSetting:
    """One detector: direction, angular frequency, medium (1 or 3) and analyzer.

    ``polarization`` is a complex 3-vector, one of the tags H/V/D/A/R/L
    (relative to the detector's x'/y' basis) or None for unpolarized detection.
    """

    theta: float
    phi: float
    omega: float
    medium: int = 1
    polarization: object = None

    def __post_init__(self):
        if not 0 <= self.theta < math.pi / 2:
            raise ValueError(f"detection angle theta must lie in [0, pi/2), got {self.theta}")
        if self.medium not in (1, 3):
            raise ValueError(f"detection medium must be 1 or 3, got {self.medium}")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        pol = self.polarization
        if pol is not None and not isinstance(pol, str):
            vec = np.asarray(pol, dtype=complex)
            if vec.shape != (3,):
                raise ValueError("polarization vector must have 3 components")
            norm = np.linalg.norm(vec)
            if abs(norm - 1) > 1e-9:
                raise ValueError(f"polarization vector must be unit norm, got {norm}")
        elif isinstance(pol, str) and pol.upper() not in STATE_AMPLITUDES:
            raise ValueError(f"unknown polarization tag {pol!r}")

    def basis(self):
        return analyzer_basis(self.theta, self.phi, self.medium)

    def polarization_vector(self):
        if self.polarization is None:
            return None
        if isinstance(self.polarization, str):
            a_h, a_v = STATE_AMPLITUDES[self.polarization.upper()]
            x_p, y_p, _ = self.basis()
            return a_h * x_p + a_v * y_p
        return np.asarray(self.polarization, dtype=complex)


@dataclass(frozen=True)
class JointSetting:
    signal: DetectorSetting
    idler: DetectorSetting
    pump: PumpSpec = field(default_factory=PumpSpec)
    stack: LayerStack = None
    chi2: Chi2Tensor = field(default_factory=Chi2Tensor.zinc_blende)

    def __post_init__(self):
        if self.stack is None:
            object.__setattr__(self, "stack", build_stack(0.01 * self.pump.wavelength))
        wp = self.pump.omega
        if abs(self.signal.omega + self.idler.omega - wp) > 1e-9 * wp:
            raise ValueError("energy conservation violated: omega_s + omega_i != omega_p")

    @property
    def degeneracy(self):
        """r = lambda_s / lambda_i."""
        return self.idler.omega / self.signal.omega

    def with_angles(self, theta_s=None, phi_s=None, theta_i=None, phi_i=None):
        sig = replace(
            self.signal,
            theta=self.signal.theta if theta_s is None else theta_s,
            phi=self.signal.phi if phi_s is None else phi_s,
        )
        idl = replace(
            self.idler,
            theta=self.idler.theta if theta_i is None else theta_i,
            phi=self.idler.phi if phi_i is None else phi_i,
        )
        return replace(self, signal=sig, idler=idl)

    def with_polarizations(self, e_s, e_i):
        return replace(
            self, signal=replace(self.signal, polarization=e_s), idler=replace(self.idler, polarization=e_i)
        )

    def with_thickness(self, thickness):
        return replace(self, stack=self.stack.with_thickness(thickness))

    def with_chi2(self, chi2):
        return replace(self, chi2=chi2)


def make_setting(
    theta_s,
    phi_s=0.0,
    theta_i=None,
    phi_i=None,
    r=1.0,
    pump=None,
    stack=None,
    thickness=None,
    chi2=None,
    medium_s=1,
    medium_i=1,
    dispersion="flat",
    materials=("air", "GaAs", "SiO2"),
):
    """Convenience constructor; angles in radians, idler phi-symmetric unless given.

    The signal and idler frequencies follow from the degeneracy factor
    r = lambda_s / lambda_i and energy conservation.
    """
    pump = pump or PumpSpec()
    wp = pump.omega
    omega_s = wp / (1 + r)
    omega_i = wp - omega_s
    if stack is None:
        a = 0.01 * pump.wavelength if thickness is None else thickness
        lam_s = (1 + r) * pump.wavelength
        stack = build_stack(a, materials, (pump.wavelength, lam_s, lam_s / r), dispersion)
    elif thickness is not None:
        stack = stack.with_thickness(thickness)
    theta_i = theta_s if theta_i is None else theta_i
    phi_i = phi_s + math.pi if phi_i is None else phi_i
    return JointSetting(
        DetectorSetting(theta_s, phi_s, omega_s, medium_s),
        DetectorSetting(theta_i, phi_i, omega_i, medium_i),
        pump,
        stack,
        chi2 or Chi2Tensor.zinc_blende(),
    )


def detection_q(theta, phi, omega, media, medium):
    """Transverse wave vector of a plane wave leaving towards (theta, phi)."""
    k = media[medium - 1].k(omega).real
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return k * np.sin(theta) * np.cos(phi), k * np.sin(theta) * np.sin(phi)


def _series_product_integral(gs, gi, ep, chi, thickness):
    """Closed-form slab integral of gs[σs,α] gi[σi,β] chi[αβγ] ep[γ]."""
    coupling = np.einsum("abg,v...g->v...ab", chi, ep.amplitudes)
    kap = (
        gs.kappas[:, None, None]
        + gi.kappas[None, :, None]
        + ep.kappas[None, None, :]
    )
    weights = integrate_exp(kap, thickness)
    left = np.einsum("t...sa,v...ab->tv...sb", gs.amplitudes, coupling)
    return np.einsum("tv...sb,u...ib,tuv...->...si", left, gi.amplitudes, weights)


def jap_tensor(kx_s, ky_s, kx_i, ky_i, setting: JointSetting):
    """Joint angular amplitude for all 3x3 detector polarization pairs.

    Entry [σs, σi] is the amplitude for e_s = unit vector σs and e_i = σi.
    Broadcasts over the wave-vector arrays.
    """
    kx_s, ky_s, kx_i, ky_i = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (kx_s, ky_s, kx_i, ky_i))
    )
    stack = setting.stack
    a = stack.thickness
    gs = green_series(kx_s, ky_s, setting.signal.omega, stack.signal, a, setting.signal.medium)
    gi = green_series(kx_i, ky_i, setting.idler.omega, stack.idler, a, setting.idler.medium)
    ep = pump_in_slab(kx_s + kx_i, ky_s + ky_i, setting.pump, stack)
    return _series_product_integral(gs, gi, ep, setting.chi2.components, a)


def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def jap_tensor_quadrature(kx_s, ky_s, kx_i, ky_i, setting: JointSetting, order=64, rtol=1e-6):
    """Independent check of :func:`jap_tensor` for scalar wave vectors.

    Composite Gauss-Legendre over the slab using the closed-form field
    expressions at each node; panels are sized so each holds at most ~10 rad of
    the fastest phase.  The result at ``2*order`` nodes per panel is returned
    after checking it agrees with ``order`` nodes to ``rtol``.
    """
    stack = setting.stack
    a = stack.thickness
    ws, wi, wp = setting.signal.omega, setting.idler.omega, setting.pump.omega
    kx_p, ky_p = kx_s + kx_i, ky_s + ky_i
    kmax = (
        abs(kz(kx_s, ky_s, stack.signal[1], ws))
        + abs(kz(kx_i, ky_i, stack.idler[1], wi))
        + abs(kz(kx_p, ky_p, stack.pump[1], wp))
    )
    panels = max(1, int(math.ceil(float(kmax) * a / 10.0)))
    edges = np.linspace(-a, 0.0, panels + 1)
    chi = setting.chi2.components

    def integrate(n):
        x, w = _gauss_legendre(n)
        total = np.zeros((3, 3), dtype=complex)
        for lo, hi in zip(edges[:-1], edges[1:]):
            z = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            gs = green_direct(kx_s, ky_s, ws, stack.signal, a, setting.signal.medium, z)
            gi = green_direct(kx_i, ky_i, wi, stack.idler, a, setting.idler.medium, z)
            ep = pump_direct(kx_p, ky_p, setting.pump, stack, z)
            vals = np.einsum("nsa,nib,abg,ng->nsi", gs, gi, chi, ep)
            total += 0.5 * (hi - lo) * np.einsum("n,nsi->si", w, vals)
        return total

    coarse = integrate(order)
    fine = integrate(2 * order)
    scale = np.linalg.norm(fine)
    if scale > 0 and np.linalg.norm(fine - coarse) > rtol * scale:
        raise OracleDivergenceError(
            f"quadrature refinement {order}->{2 * order} changed the result by "
            f"{np.linalg.norm(fine - coarse) / scale:.3g} (relative)"
        )
    return fine


def _contract(tensor, e_s, e_i):
    return np.einsum("...s,...si,...i->...", np.conj(e_s), tensor, np.conj(e_i))


def _require_polarizations(setting):
    e_s = setting.signal.polarization_vector()
    e_i = setting.idler.polarization_vector()
    if e_s is None or e_i is None:
        raise ValueError("both detectors need a polarization; use unpolarized_rate otherwise")
    return e_s, e_i


def jap(q_s, q_i, setting: JointSetting):
    """Joint angular amplitude projected on the detectors' analyzers.

    The analyzer vectors enter complex-conjugated (projection onto the
    analyzer mode), which only matters for circular analyzers.
    """
    e_s, e_i = _require_polarizations(setting)
    tensor = jap_tensor(q_s[0], q_s[1], q_i[0], q_i[1], setting)
    return complex(_contract(tensor, e_s, e_i))


def jap_quadrature(q_s, q_i, setting: JointSetting, order=64):
    e_s, e_i = _require_polarizations(setting)
    tensor = jap_tensor_quadrature(q_s[0], q_s[1], q_i[0], q_i[1], setting, order=order)
    return complex(_contract(tensor, e_s, e_i))


def rate_prefactor(setting: JointSetting):
    """n_i n_s omega_i^3 omega_s^3 / c^6 with n of each photon's detection medium."""
    ws, wi = setting.signal.omega, setting.idler.omega
    n_s = setting.stack.signal[setting.signal.medium - 1].n.real
    n_i = setting.stack.idler[setting.idler.medium - 1].n.real
    return n_s * n_i * ws**3 * wi**3 / C**6


def farfield_tensor(setting: JointSetting, theta_s=None, phi_s=None, theta_i=None, phi_i=None):
    """Far-field amplitude tensor F with rate(e_s, e_i) = |e_s* . F . e_i*|^2.

    Angles default to the setting's and may be arrays (radians); the result
    has shape broadcast(angles) + (3, 3).  Grazing detection (theta = pi/2,
    kz = 0 in the detection medium) is rejected: the kz factors send the rate
    to zero there and the analyzer frame degenerates.
    """
    sig, idl = setting.signal, setting.idler
    theta_s = sig.theta if theta_s is None else theta_s
    phi_s = sig.phi if phi_s is None else phi_s
    theta_i = idl.theta if theta_i is None else theta_i
    phi_i = idl.phi if phi_i is None else phi_i
    for th in (theta_s, theta_i):
        th = np.asarray(th)
        if np.any(th >= math.pi / 2) or np.any(th < 0):
            raise ValueError("detection angles must lie in [0, pi/2)")
    stack = setting.stack
    kx_s, ky_s = detection_q(theta_s, phi_s, sig.omega, stack.signal, sig.medium)
    kx_i, ky_i = detection_q(theta_i, phi_i, idl.omega, stack.idler, idl.medium)
    tensor = jap_tensor(kx_s, ky_s, kx_i, ky_i, setting)
    kz_s = kz(kx_s, ky_s, stack.signal[sig.medium - 1], sig.omega)
    kz_i = kz(kx_i, ky_i, stack.idler[idl.medium - 1], idl.omega)
    scale = math.sqrt(rate_prefactor(setting)) * kz_s * kz_i
    return tensor * np.asarray(scale)[..., None, None]


def farfield_rate(setting: JointSetting):
    """Coincidence rate (arbitrary units) for the analyzers stored in ``setting``."""
    e_s, e_i = _require_polarizations(setting)
    return float(np.abs(_contract(farfield_tensor(setting), e_s, e_i)) ** 2)


def unpolarized_rate(setting: JointSetting):
    """Sum of the rates over the nine Cartesian analyzer pairs."""
    return float(unpolarized_rate_from_tensor(farfield_tensor(setting)))


def unpolarized_rate_from_tensor(tensor):
    return np.sum(np.abs(tensor) ** 2, axis=(-2, -1))


def amplitude_matrix_from_tensor(tensor, basis_s, basis_i):
    """2x2 amplitudes over {H, V}_s x {H, V}_i from a far-field tensor."""
    hv_s = np.stack(basis_s[:2], axis=-2)
    hv_i = np.stack(basis_i[:2], axis=-2)
    return np.einsum("...js,...si,...ki->...jk", hv_s, tensor, hv_i)


def amplitude_matrix(setting: JointSetting):
    """Far-field amplitudes A[j, k] for analyzers j in {x', y'}_s, k in {x', y'}_i."""
    tensor = farfield_tensor(setting)
    return amplitude_matrix_from_tensor(tensor, setting.signal.basis(), setting.idler.basis())
