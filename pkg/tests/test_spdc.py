import math

import numpy as np
import pytest

from conftest import LAMBDA_P, deg
from thinfilm_spdc.greens import g21
from thinfilm_spdc.optics import angular_frequency, kz
from thinfilm_spdc.spdc import (
    Chi2Tensor,
    DetectorSetting,
    JointSetting,
    amplitude_matrix,
    analyzer_basis,
    detection_q,
    farfield_rate,
    farfield_tensor,
    jap,
    jap_quadrature,
    jap_tensor,
    jap_tensor_quadrature,
    make_setting,
    rate_prefactor,
    unpolarized_rate,
)
from thinfilm_spdc.pump import PumpSpec


def _random_setting(rng, thickness_lp, spread=2.0):
    """Random detector pair whose pump wave vector q_s + q_i lies within ``spread`` widths of 0.

    Far outside the pump's angular spectrum the amplitudes underflow to zero,
    so random angles are drawn where the pair is actually emitted.
    """
    r = rng.uniform(0.8, 1.5)
    base = make_setting(0.1, r=r, thickness=thickness_lp * LAMBDA_P)
    k_s = base.stack.signal[0].k(base.signal.omega).real
    k_i = base.stack.idler[0].k(base.idler.omega).real
    w = base.pump.width
    while True:
        theta_s = rng.uniform(0, deg(80))
        phi_s = rng.uniform(0, 2 * math.pi)
        qs = k_s * math.sin(theta_s) * np.array([math.cos(phi_s), math.sin(phi_s)])
        qi = -qs + rng.uniform(-spread, spread, 2) * w
        sin_i = np.hypot(*qi) / k_i
        if sin_i < math.sin(deg(85)):
            break
    theta_i = math.asin(sin_i)
    phi_i = math.atan2(qi[1], qi[0])
    return base.with_angles(theta_s, phi_s, theta_i, phi_i)


@pytest.mark.parametrize("thickness_lp", [0.01, 0.5, 3.7])
def test_closed_form_overlap_matches_quadrature(thickness_lp, rng):
    for _ in range(10):
        s = _random_setting(rng, thickness_lp)
        qs = detection_q(s.signal.theta, s.signal.phi, s.signal.omega, s.stack.signal, 1)
        qi = detection_q(s.idler.theta, s.idler.phi, s.idler.omega, s.stack.idler, 1)
        closed = jap_tensor(qs[0], qs[1], qi[0], qi[1], s)
        quad = jap_tensor_quadrature(qs[0], qs[1], qi[0], qi[1], s)
        assert np.linalg.norm(closed - quad) <= 1e-8 * np.linalg.norm(quad)


def test_scalar_jap_with_analyzers(bell_setting):
    s = bell_setting.with_polarizations("H", "V")
    qs = detection_q(s.signal.theta, s.signal.phi, s.signal.omega, s.stack.signal, 1)
    qi = detection_q(s.idler.theta, s.idler.phi, s.idler.omega, s.stack.idler, 1)
    assert jap(qs, qi, s) == pytest.approx(jap_quadrature(qs, qi, s), rel=1e-8)
    with pytest.raises(ValueError):
        jap(qs, qi, bell_setting)


def test_analyzer_is_conjugated(bell_setting):
    """The amplitude for analyzer e is e* . F . e*; R and L differ only by that conjugation."""
    tensor = farfield_tensor(bell_setting)
    x_s, y_s, _ = bell_setting.signal.basis()
    x_i, y_i, _ = bell_setting.idler.basis()
    r_s = (x_s - 1j * y_s) / math.sqrt(2)
    h_i = x_i
    expected = abs(np.conj(r_s) @ tensor @ np.conj(h_i)) ** 2
    got = farfield_rate(bell_setting.with_polarizations("R", "H"))
    assert got == pytest.approx(expected, rel=1e-12)
    explicit = farfield_rate(bell_setting.with_polarizations(r_s, h_i))
    assert explicit == pytest.approx(got, rel=1e-12)


def test_zero_chi_gives_zero(bell_setting):
    s = bell_setting.with_chi2(Chi2Tensor.zinc_blende(0.0))
    assert unpolarized_rate(s) == 0.0


def test_rate_scales_with_chi_and_pump(bell_setting):
    base = unpolarized_rate(bell_setting)
    assert unpolarized_rate(bell_setting.with_chi2(Chi2Tensor.zinc_blende(3.0))) == pytest.approx(9 * base, rel=1e-12)
    loud = JointSetting(bell_setting.signal, bell_setting.idler, PumpSpec(amplitude=2.0), bell_setting.stack)
    assert unpolarized_rate(loud) == pytest.approx(4 * base, rel=1e-12)


def test_far_field_is_transverse(rng):
    for _ in range(20):
        s = _random_setting(rng, rng.choice([0.01, 0.3, 1.0]))
        for medium in (1, 3):
            s2 = make_setting(s.signal.theta, s.signal.phi, s.idler.theta, s.idler.phi, r=s.degeneracy,
                              stack=s.stack, medium_s=medium, medium_i=medium)
            tensor = farfield_tensor(s2)
            _, _, n_s = analyzer_basis(s2.signal.theta, s2.signal.phi, medium)
            _, _, n_i = analyzer_basis(s2.idler.theta, s2.idler.phi, medium)
            scale = np.abs(tensor).max()
            assert np.abs(n_s @ tensor).max() <= 1e-12 * scale
            assert np.abs(tensor @ n_i).max() <= 1e-12 * scale
            # hence the nine-pair sum equals the sum over the four analyzer pairs
            amps = amplitude_matrix(s2)
            assert np.sum(np.abs(amps) ** 2) == pytest.approx(unpolarized_rate(s2), rel=1e-12)


def test_analyzer_basis_orthonormal_and_lab_frame_at_normal_incidence():
    for theta, phi in ((0.0, 0.0), (0.0, 1.1), (0.7, 2.0)):
        for medium in (1, 3):
            x, y, n = analyzer_basis(theta, phi, medium)
            m = np.array([x, y, n])
            np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-15)
    x, y, n = analyzer_basis(0.0, 1.1, 1)
    np.testing.assert_allclose(x, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(y, [0, 1, 0], atol=1e-15)


def test_azimuthal_nulls_and_symmetries():
    s = make_setting(deg(45), 0.0, r=1.0)
    r0 = unpolarized_rate(s)
    for phi in (deg(90), deg(270)):
        assert unpolarized_rate(s.with_angles(phi_s=phi, phi_i=phi + math.pi)) <= 1e-12 * r0
    for phi in (deg(20), deg(63)):
        a = unpolarized_rate(s.with_angles(phi_s=phi, phi_i=phi + math.pi))
        b = unpolarized_rate(s.with_angles(phi_s=phi + math.pi, phi_i=phi))
        c = unpolarized_rate(s.with_angles(phi_s=-phi, phi_i=-phi + math.pi))
        assert b == pytest.approx(a, rel=1e-10)
        assert c == pytest.approx(a, rel=1e-10)


def test_thin_film_amplitude_scales_with_thickness():
    vals = []
    for a in (1e-12, 2e-12, 4e-12):
        s = make_setting(deg(45), thickness=a)
        vals.append(np.abs(amplitude_matrix(s)).max() / a)
    assert vals[1] == pytest.approx(vals[0], rel=1e-3)
    assert vals[2] == pytest.approx(vals[0], rel=1e-3)


def test_thin_film_s_channel_matches_interface_result():
    """A sheet source on an interface radiates s waves with -i / (kz1 + kz3)."""
    s = make_setting(deg(45), thickness=1e-13)
    media = s.stack.signal
    w = s.signal.omega
    for q in (0.0, 3e6, 5.5e6):
        g = g21(q, 0.0, w, media, 1e-13)(0.0)
        ss = g[1, 1]
        kz1, kz3 = kz(q, 0.0, media[0], w), kz(q, 0.0, media[2], w)
        assert ss == pytest.approx(-1j / (kz1 + kz3), rel=1e-6)


def test_make_setting_frequencies():
    for r in (0.8, 1.0, 1.5):
        s = make_setting(deg(30), r=r)
        assert s.degeneracy == pytest.approx(r, rel=1e-12)
        assert s.signal.omega + s.idler.omega == pytest.approx(s.pump.omega, rel=1e-15)
        assert s.idler.phi == pytest.approx(math.pi)
        assert s.idler.theta == s.signal.theta


def test_detector_validation():
    w = angular_frequency(1e-6)
    with pytest.raises(ValueError):
        DetectorSetting(math.pi / 2, 0.0, w)
    with pytest.raises(ValueError):
        DetectorSetting(0.1, 0.0, w, medium=2)
    with pytest.raises(ValueError):
        DetectorSetting(0.1, 0.0, w, polarization=[1, 1, 0])
    with pytest.raises(ValueError):
        DetectorSetting(0.1, 0.0, w, polarization="Q")


def test_energy_conservation_enforced():
    w = angular_frequency(1e-6)
    d = DetectorSetting(0.3, 0.0, w)
    with pytest.raises(ValueError, match="energy"):
        JointSetting(d, d, PumpSpec(wavelength=400e-9))


def test_rate_prefactor_value(bell_setting):
    w = bell_setting.signal.omega
    from scipy.constants import c

    assert rate_prefactor(bell_setting) == pytest.approx(w**6 / c**6, rel=1e-14)


def test_vectorized_tensor_matches_pointwise(rng):
    s = make_setting(deg(40), r=1.2, thickness=0.3 * LAMBDA_P)
    ts = rng.uniform(0, deg(80), 5)
    ti = rng.uniform(0, deg(80), 5)
    ps = rng.uniform(0, 6, 5)
    pi = rng.uniform(0, 6, 5)
    batch = farfield_tensor(s, ts, ps, ti, pi)
    for j in range(5):
        single = farfield_tensor(s.with_angles(ts[j], ps[j], ti[j], pi[j]))
        np.testing.assert_allclose(batch[j], single, rtol=1e-13, atol=1e-13 * np.abs(single).max())
